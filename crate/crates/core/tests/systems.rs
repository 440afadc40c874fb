use polyagent_core::finset::FinSet;
use polyagent_core::random::{random_lens, random_morphism_pair, random_poly, random_system};
use polyagent_core::rng::rng_from_seed;
use polyagent_core::stoch::EPS_LAW;
use polyagent_core::systems::{
    check_priored_morphism, check_system_morphism, closed_unroll_exact, closed_unroll_sample,
    closed_unroll_sample_batch, empirical_marginals, fold_likelihood, forget_prior, gen_parallel,
    gen_rewire, moore_to_gen, EPS_MORPHISM,
};
use polyagent_core::{
    Channel, Dist, Error, GenSystem, Lens, MooreSystem, Polynomial, PrioredGenSystem,
};
use proptest::prelude::*;

/// Entrywise transition tables, indexed `[s][d][s']`.
fn tables(sys: &GenSystem) -> Vec<Vec<Vec<f64>>> {
    (0..sys.num_states())
        .map(|s| {
            (0..sys.iface().arity(sys.out()[s]))
                .map(|d| sys.transition(s, d).to_vec())
                .collect()
        })
        .collect()
}

fn chain(n: usize, rows: Vec<Vec<f64>>, prior: Vec<f64>) -> PrioredGenSystem {
    let states = FinSet::range("S", n);
    let sys = GenSystem::from_rows(
        Polynomial::y(),
        states.clone(),
        vec![0; n],
        rows.into_iter().map(|r| vec![r]).collect(),
    )
    .unwrap();
    PrioredGenSystem::new(sys, Dist::new(states, prior).unwrap()).unwrap()
}

fn two_y() -> Polynomial {
    Polynomial::from_arities(&[1, 1])
}

/// Two blocks `{0,1}` and `{2,3}` with outputs 0 and 1 that quotient to the
/// 2-state system `[[0.3, 0.7], [0.6, 0.4]]` over `2y`.
fn quotient_pair() -> (GenSystem, GenSystem, Channel) {
    let big = GenSystem::from_rows(
        two_y(),
        FinSet::range("S4", 4),
        vec![0, 0, 1, 1],
        vec![
            vec![vec![0.1, 0.2, 0.3, 0.4]],
            vec![vec![0.25, 0.05, 0.5, 0.2]],
            vec![vec![0.6, 0.0, 0.1, 0.3]],
            vec![vec![0.3, 0.3, 0.2, 0.2]],
        ],
    )
    .unwrap();
    let small = GenSystem::from_rows(
        two_y(),
        FinSet::range("S2", 2),
        vec![0, 1],
        vec![vec![vec![0.3, 0.7]], vec![vec![0.6, 0.4]]],
    )
    .unwrap();
    let f = Channel::dirac(big.states(), small.states(), &[0, 0, 1, 1]);
    (big, small, f)
}

#[test]
fn rewire_along_identity_is_identity() {
    let mut rng = rng_from_seed(1);
    let p = Polynomial::from_arities(&[2, 0, 3]);
    let sys = random_system(&mut rng, &p, 4);
    assert_eq!(gen_rewire(&Lens::identity(&p), &sys).unwrap(), sys);
}

#[test]
fn rewire_along_swap_permutes_outputs() {
    let sys = GenSystem::from_rows(
        two_y(),
        FinSet::range("S", 2),
        vec![0, 1],
        vec![vec![vec![0.2, 0.8]], vec![vec![0.5, 0.5]]],
    )
    .unwrap();
    let swap = Lens::new(two_y(), two_y(), vec![1, 0], vec![vec![0], vec![0]]).unwrap();
    let r = gen_rewire(&swap, &sys).unwrap();
    assert_eq!(r.out(), &[1, 0]);
    assert_eq!(tables(&r), tables(&sys));
}

#[test]
fn rewire_rejects_foreign_lens() {
    let sys = random_system(&mut rng_from_seed(2), &two_y(), 2);
    let lens = Lens::identity(&Polynomial::y());
    assert!(matches!(
        gen_rewire(&lens, &sys),
        Err(Error::InterfaceMismatch(_))
    ));
}

#[test]
fn moore_embedding_commutes_with_rewiring() {
    let p = Polynomial::from_arities(&[2, 1]);
    let q = Polynomial::from_arities(&[1, 2, 0]);
    let m = MooreSystem::new(
        p.clone(),
        FinSet::range("S", 3),
        vec![0, 1, 0],
        vec![1, 2, 0, 0, 2],
    )
    .unwrap();
    let mut rng = rng_from_seed(3);
    let mut checked = 0;
    for _ in 0..50 {
        if let Some(phi) = random_lens(&mut rng, &p, &q) {
            let lhs = moore_to_gen(&m.rewire(&phi).unwrap());
            let rhs = gen_rewire(&phi, &moore_to_gen(&m)).unwrap();
            assert_eq!(tables(&lhs), tables(&rhs));
            assert_eq!(lhs.out(), rhs.out());
            checked += 1;
        }
    }
    assert!(checked > 10);
    let one = MooreSystem::new(Polynomial::y(), FinSet::unit(), vec![0], vec![0]).unwrap();
    assert_eq!(moore_to_gen(&one).upd().rows(), vec![vec![1.0]]);
}

#[test]
fn parallel_with_the_unit_system() {
    let mut rng = rng_from_seed(4);
    let p = Polynomial::from_arities(&[2, 1]);
    let a = random_system(&mut rng, &p, 3);
    let unit = GenSystem::from_rows(
        Polynomial::y(),
        FinSet::unit(),
        vec![0],
        vec![vec![vec![1.0]]],
    )
    .unwrap();
    let par = gen_parallel(&a, &unit);
    assert_eq!(par.out(), a.out());
    assert_eq!(tables(&par), tables(&a));
}

#[test]
fn quotient_is_a_morphism_and_its_perturbation_is_not() {
    let (big, small, f) = quotient_pair();
    let check = check_system_morphism(&f, &big, &small).unwrap();
    assert!(check.holds && check.residual < 1e-12, "{check:?}");
    assert!(
        check_system_morphism(&Channel::identity(big.states()), &big, &big)
            .unwrap()
            .holds
    );

    let leaky = Channel::new(
        big.states().clone(),
        small.states().clone(),
        vec![
            vec![1.0, 0.0],
            vec![1.0, 0.0],
            vec![0.0, 1.0],
            vec![0.0, 1.0],
        ],
    )
    .unwrap();
    let mut skewed = tables(&small);
    skewed[0][0] = vec![0.35, 0.65];
    let skewed = GenSystem::from_rows(
        two_y(),
        small.states().clone(),
        small.out().to_vec(),
        skewed,
    )
    .unwrap();
    let bad = check_system_morphism(&leaky, &big, &skewed).unwrap();
    assert!(!bad.holds);
    assert!((bad.residual - 0.05).abs() < 1e-12);

    let crossing = Channel::dirac(big.states(), small.states(), &[1, 0, 1, 1]);
    assert!(matches!(
        check_system_morphism(&crossing, &big, &small),
        Err(Error::IncompatibleOutputs(_))
    ));
}

#[test]
fn priored_morphisms() {
    let (big, small, f) = quotient_pair();
    let a = PrioredGenSystem::new(
        big.clone(),
        Dist::new(big.states().clone(), vec![0.1, 0.3, 0.4, 0.2]).unwrap(),
    )
    .unwrap();
    let b = PrioredGenSystem::new(
        small.clone(),
        Dist::new(small.states().clone(), vec![0.4, 0.6]).unwrap(),
    )
    .unwrap();
    let c = check_priored_morphism(&f, &a, &b).unwrap();
    assert!(c.holds && c.prior_residual.unwrap() < 1e-12);
    assert!(
        check_system_morphism(&f, &forget_prior(&a), &forget_prior(&b))
            .unwrap()
            .holds
    );
    assert_eq!(forget_prior(&a), big);

    let b2 = PrioredGenSystem::new(
        small.clone(),
        Dist::new(small.states().clone(), vec![0.5, 0.5]).unwrap(),
    )
    .unwrap();
    let c2 = check_priored_morphism(&f, &a, &b2).unwrap();
    assert!(!c2.holds);
    assert!((c2.prior_residual.unwrap() - 0.1).abs() < 1e-12);
    assert!(
        check_system_morphism(&f, &forget_prior(&a), &forget_prior(&b2))
            .unwrap()
            .holds
    );
}

#[test]
fn folding_a_likelihood() {
    let states = FinSet::range("S", 3);
    let p = Polynomial::monomial(&FinSet::range("O", 2), &FinSet::range("A", 2));
    let mut rng = rng_from_seed(6);
    let trans_dom = FinSet::range("SxOxA", 3 * 2 * 2);
    let trans = polyagent_core::random::random_channel(&mut rng, &trans_dom, &states);
    let like = Channel::dirac(&states, p.positions(), &[1, 0, 1]);
    let folded = fold_likelihood(&states, &p, &trans, &like).unwrap();
    assert_eq!(folded.num_states(), 6);
    assert_eq!(folded.out(), &[0, 1, 0, 1, 0, 1]);
    for s in 0..3 {
        for i in 0..2 {
            for a in 0..2 {
                let row = folded.transition(s * 2 + i, a);
                let state_marginal: Vec<f64> =
                    (0..3).map(|s2| row[s2 * 2] + row[s2 * 2 + 1]).collect();
                let expected = trans.row((s * 2 + i) * 2 + a);
                for s2 in 0..3 {
                    assert!((state_marginal[s2] - expected[s2]).abs() < 1e-15);
                    assert!(
                        (row[s2 * 2 + like.row(s).iter().position(|&x| x == 1.0).unwrap()]
                            - expected[s2])
                            .abs()
                            < 1e-15
                    );
                }
            }
        }
    }
    let uniform = Channel::new(
        states.clone(),
        p.positions().clone(),
        vec![vec![0.5, 0.5]; 3],
    )
    .unwrap();
    let folded = fold_likelihood(&states, &p, &trans, &uniform).unwrap();
    for x in 0..6 {
        for a in 0..2 {
            let row = folded.transition(x, a);
            let at_zero: f64 = (0..3).map(|s2| row[s2 * 2]).sum();
            assert!((at_zero - 0.5).abs() < 1e-15);
        }
    }
    let short = Channel::identity(&states);
    assert!(matches!(
        fold_likelihood(&states, &p, &short, &like),
        Err(Error::CarrierMismatch(_))
    ));
}

#[test]
fn exact_unroll_examples() {
    let absorbing = chain(2, vec![vec![1.0, 0.0], vec![0.5, 0.5]], vec![0.0, 1.0]);
    let marginals = closed_unroll_exact(&absorbing, 20).unwrap();
    assert_eq!(marginals.len(), 21);
    assert!(marginals[20].prob(1) <= 1e-6);
    assert!((marginals[20].prob(1) - 0.5f64.powi(20)).abs() < 1e-18);

    let flip = chain(2, vec![vec![0.9, 0.1], vec![0.2, 0.8]], vec![1.0, 0.0]);
    let m = closed_unroll_exact(&flip, 1).unwrap();
    assert_eq!(m[1].masses(), &[0.9, 0.1]);

    let still = chain(
        3,
        vec![
            vec![1.0, 0.0, 0.0],
            vec![0.0, 1.0, 0.0],
            vec![0.0, 0.0, 1.0],
        ],
        vec![0.2, 0.3, 0.5],
    );
    assert!(closed_unroll_exact(&still, 5)
        .unwrap()
        .iter()
        .all(|d| d.masses() == [0.2, 0.3, 0.5]));

    let open = PrioredGenSystem::new(
        random_system(&mut rng_from_seed(7), &two_y(), 2),
        Dist::uniform(&FinSet::range("S", 2)),
    )
    .unwrap();
    assert!(matches!(
        closed_unroll_exact(&open, 1),
        Err(Error::InterfaceNotClosed(_))
    ));
    assert!(matches!(
        closed_unroll_sample(&open, 1, 0),
        Err(Error::InterfaceNotClosed(_))
    ));
}

#[test]
fn sampled_unroll_matches_binomial_bounds() {
    let flip = chain(2, vec![vec![0.9, 0.1], vec![0.2, 0.8]], vec![1.0, 0.0]);
    let n = 100_000;
    let trajs = closed_unroll_sample_batch(&flip, 1, 99, n).unwrap();
    let emp = empirical_marginals(flip.system().states(), &trajs);
    let sigma = (0.9f64 * 0.1 / n as f64).sqrt();
    assert!(
        (emp[1].prob(0) - 0.9).abs() <= 3.0 * sigma,
        "{}",
        emp[1].prob(0)
    );
    assert_eq!(trajs, closed_unroll_sample_batch(&flip, 1, 99, n).unwrap());

    let det = chain(
        3,
        vec![
            vec![0.0, 1.0, 0.0],
            vec![0.0, 0.0, 1.0],
            vec![1.0, 0.0, 0.0],
        ],
        vec![0.0, 0.0, 1.0],
    );
    assert_eq!(
        closed_unroll_sample(&det, 4, 12345).unwrap(),
        vec![2, 0, 1, 2, 0]
    );
    assert_eq!(
        closed_unroll_sample(&flip, 30, 8).unwrap(),
        closed_unroll_sample(&flip, 30, 8).unwrap()
    );
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn rewiring_matches_entrywise_oracle(seed: u64, n in 1usize..=4) {
        let mut rng = rng_from_seed(seed);
        let p = random_poly(&mut rng, 3, 3);
        let q = random_poly(&mut rng, 3, 3);
        let sys = random_system(&mut rng, &p, n);
        if let Some(phi) = random_lens(&mut rng, &p, &q) {
            let r = gen_rewire(&phi, &sys).unwrap();
            for s in 0..n {
                let i = sys.out()[s];
                prop_assert_eq!(r.out()[s], phi.forward(i));
                for d in 0..q.arity(phi.forward(i)) {
                    prop_assert_eq!(r.transition(s, d), sys.transition(s, phi.backward(i, d)));
                }
            }
        }
    }

    #[test]
    fn rewiring_is_functorial(seed: u64, n in 1usize..=4) {
        let mut rng = rng_from_seed(seed);
        let ps: Vec<Polynomial> = (0..3).map(|_| random_poly(&mut rng, 3, 3)).collect();
        let sys = random_system(&mut rng, &ps[0], n);
        if let (Some(phi), Some(psi)) = (random_lens(&mut rng, &ps[0], &ps[1]), random_lens(&mut rng, &ps[1], &ps[2])) {
            let once = gen_rewire(&phi.then(&psi).unwrap(), &sys).unwrap();
            let twice = gen_rewire(&psi, &gen_rewire(&phi, &sys).unwrap()).unwrap();
            prop_assert_eq!(once, twice);
        }
    }

    #[test]
    fn rewiring_preserves_morphisms(seed: u64, n in 1usize..=3, k in 1usize..=3) {
        let mut rng = rng_from_seed(seed);
        let p = random_poly(&mut rng, 3, 3);
        let q = random_poly(&mut rng, 3, 3);
        let b = random_system(&mut rng, &p, n);
        let (a, f) = random_morphism_pair(&mut rng, &b, k);
        prop_assert!(check_system_morphism(&f, &a, &b).unwrap().residual <= EPS_MORPHISM);
        if let Some(phi) = random_lens(&mut rng, &p, &q) {
            let c = check_system_morphism(&f, &gen_rewire(&phi, &a).unwrap(), &gen_rewire(&phi, &b).unwrap()).unwrap();
            prop_assert!(c.holds && c.residual <= EPS_MORPHISM);
        }
    }

    #[test]
    fn parallel_rows_factor(seed: u64, n in 1usize..=3, m in 1usize..=3) {
        let mut rng = rng_from_seed(seed);
        let p = random_poly(&mut rng, 2, 2);
        let q = random_poly(&mut rng, 2, 2);
        let a = random_system(&mut rng, &p, n);
        let b = random_system(&mut rng, &q, m);
        let par = gen_parallel(&a, &b);
        for s in 0..n {
            for t in 0..m {
                let st = s * m + t;
                prop_assert_eq!(par.out()[st], p.tensor_position(&q, a.out()[s], b.out()[t]));
                let wb = q.arity(b.out()[t]);
                for d in 0..p.arity(a.out()[s]) {
                    for e in 0..wb {
                        let row = par.transition(st, d * wb + e);
                        let (ra, rb) = (a.transition(s, d), b.transition(t, e));
                        for x in 0..n {
                            let left: f64 = (0..m).map(|y| row[x * m + y]).sum();
                            prop_assert!((left - ra[x]).abs() <= EPS_LAW);
                            for y in 0..m {
                                prop_assert!((row[x * m + y] - ra[x] * rb[y]).abs() <= EPS_LAW);
                            }
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn parallel_is_natural(seed: u64) {
        let mut rng = rng_from_seed(seed);
        let (p, p2, q, q2) = (random_poly(&mut rng, 2, 2), random_poly(&mut rng, 2, 2), random_poly(&mut rng, 2, 2), random_poly(&mut rng, 2, 2));
        let a = random_system(&mut rng, &p, 2);
        let b = random_system(&mut rng, &q, 2);
        if let (Some(phi), Some(psi)) = (random_lens(&mut rng, &p, &p2), random_lens(&mut rng, &q, &q2)) {
            let lhs = gen_rewire(&phi.tensor(&psi), &gen_parallel(&a, &b)).unwrap();
            let rhs = gen_parallel(&gen_rewire(&phi, &a).unwrap(), &gen_rewire(&psi, &b).unwrap());
            prop_assert_eq!(tables(&lhs), tables(&rhs));
            prop_assert_eq!(lhs.out(), rhs.out());
        }
    }
}
