//! Randomized and exhaustive law suites. Each check reports the worst
//! residual it saw; table equalities report 0 or 1.

use rand::Rng;

use crate::agent::{simulate_episode, Agent};
use crate::error::{Error, Result};
use crate::finset::FinSet;
use crate::hom::{
    curry, dual, enumerate_lenses, eval_lens, lens_count, uncurry, HomPolynomial,
    DEFAULT_LENS_GUARD,
};
use crate::lens::Lens;
use crate::poly::Polynomial;
use crate::random::{
    random_channel, random_dist, random_lens, random_morphism_pair, random_poly, random_system,
};
use crate::rng::{derive_seed, rng_from_seed, SimRng};
use crate::stoch::{bayes_posterior, Channel, EPS_LAW};
use crate::systems::{check_system_morphism, gen_rewire, PrioredGenSystem, EPS_MORPHISM};

#[derive(Clone, Debug, PartialEq)]
pub struct LawReport {
    pub name: String,
    pub pass: bool,
    pub residual: f64,
    pub detail: String,
    /// Set when the check could not run, e.g. a size guard tripped.
    pub skipped: Option<String>,
}

impl LawReport {
    pub fn new(
        name: impl Into<String>,
        residual: f64,
        tolerance: f64,
        detail: impl Into<String>,
    ) -> Self {
        LawReport {
            name: name.into(),
            pass: residual <= tolerance,
            residual,
            detail: detail.into(),
            skipped: None,
        }
    }

    pub fn skipped(name: impl Into<String>, reason: impl Into<String>) -> Self {
        LawReport {
            name: name.into(),
            pass: true,
            residual: 0.0,
            detail: String::new(),
            skipped: Some(reason.into()),
        }
    }

    pub fn from_result(name: &str, r: Result<LawReport>) -> LawReport {
        match r {
            Ok(rep) => rep,
            Err(e @ Error::SizeGuardExceeded { .. }) => LawReport::skipped(name, e.to_string()),
            Err(e) => LawReport {
                name: name.to_string(),
                pass: false,
                residual: f64::INFINITY,
                detail: e.to_string(),
                skipped: None,
            },
        }
    }
}

/// Lens composition as a parameter, so that suites can be run against a
/// deliberately broken implementation.
pub type LensCompose = fn(&Lens, &Lens) -> Result<Lens>;

pub fn standard_compose(f: &Lens, g: &Lens) -> Result<Lens> {
    f.then(g)
}

fn mismatch(equal: bool) -> f64 {
    if equal {
        0.0
    } else {
        1.0
    }
}

/// A random chain `p0 -> p1 -> p2 -> p3` of lenses.
pub fn random_lens_chain(
    rng: &mut SimRng,
    max_positions: usize,
    max_directions: usize,
) -> (Lens, Lens, Lens) {
    loop {
        let ps: Vec<Polynomial> = (0..4)
            .map(|_| random_poly(rng, max_positions, max_directions))
            .collect();
        let f = random_lens(rng, &ps[0], &ps[1]);
        let g = random_lens(rng, &ps[1], &ps[2]);
        let h = random_lens(rng, &ps[2], &ps[3]);
        if let (Some(f), Some(g), Some(h)) = (f, g, h) {
            return (f, g, h);
        }
    }
}

/// Associativity and both unit laws on `trials` random composable triples.
pub fn lens_category(rng: &mut SimRng, trials: usize, compose: LensCompose) -> Vec<LawReport> {
    let (mut assoc, mut left, mut right) = (0.0f64, 0.0f64, 0.0f64);
    let mut failure = String::new();
    for _ in 0..trials {
        let (f, g, h) = random_lens_chain(rng, 3, 3);
        let lhs = compose(&f, &g).and_then(|fg| compose(&fg, &h));
        let rhs = compose(&g, &h).and_then(|gh| compose(&f, &gh));
        let bad = match (&lhs, &rhs) {
            (Ok(a), Ok(b)) => mismatch(a == b),
            _ => 1.0,
        };
        if bad > 0.0 && failure.is_empty() {
            failure = format!("{} -> {} -> {} -> {}", f.dom(), f.cod(), g.cod(), h.cod());
        }
        assoc = assoc.max(bad);
        left = left.max(mismatch(
            compose(&Lens::identity(f.dom()), &f).ok().as_ref() == Some(&f),
        ));
        right = right.max(mismatch(
            compose(&f, &Lens::identity(f.cod())).ok().as_ref() == Some(&f),
        ));
    }
    let detail = |base: &str| {
        if failure.is_empty() {
            base.to_string()
        } else {
            format!("{base}; first failure on {failure}")
        }
    };
    vec![
        LawReport::new(
            "lens.associativity",
            assoc,
            0.0,
            detail(&format!("{trials} random triples")),
        ),
        LawReport::new(
            "lens.left_unit",
            left,
            0.0,
            format!("{trials} random lenses"),
        ),
        LawReport::new(
            "lens.right_unit",
            right,
            0.0,
            format!("{trials} random lenses"),
        ),
    ]
}

/// Interchange `(φ;φ')⊗(ψ;ψ') = (φ⊗ψ);(φ'⊗ψ')`, `id⊗id = id`, and the
/// symmetry round trip.
pub fn tensor_laws(rng: &mut SimRng, trials: usize) -> Vec<LawReport> {
    let (mut interchange, mut unit, mut symmetry) = (0.0f64, 0.0f64, 0.0f64);
    for _ in 0..trials {
        let (f, f2, _) = random_lens_chain(rng, 2, 2);
        let (g, g2, _) = random_lens_chain(rng, 2, 2);
        let lhs = f.then(&f2).unwrap().tensor(&g.then(&g2).unwrap());
        let rhs = f.tensor(&g).then(&f2.tensor(&g2)).unwrap();
        interchange = interchange.max(mismatch(lhs == rhs));
        let (p, q) = (f.dom(), g.dom());
        unit = unit.max(mismatch(
            Lens::identity(p).tensor(&Lens::identity(q)) == Lens::identity(&p.tensor(q)),
        ));
        let round = Lens::swap(p, q).then(&Lens::swap(q, p)).unwrap();
        symmetry = symmetry.max(mismatch(round == Lens::identity(&p.tensor(q))));
    }
    vec![
        LawReport::new(
            "tensor.interchange",
            interchange,
            0.0,
            format!("{trials} random pairs"),
        ),
        LawReport::new("tensor.unit", unit, 0.0, format!("{trials} random pairs")),
        LawReport::new(
            "tensor.symmetry",
            symmetry,
            0.0,
            format!("{trials} random pairs"),
        ),
    ]
}

/// The interfaces `y`, `2y` and `y^2+1`.
pub fn small_interfaces() -> Vec<Polynomial> {
    vec![
        Polynomial::y(),
        Polynomial::from_arities(&[1, 1]),
        Polynomial::from_arities(&[2, 0]),
    ]
}

/// `|Lens(p⊗q, r)| = |Lens(p, [q,r])|` with curry/uncurry round trips on
/// every element, and the evaluation triangle `curry(eval) = id`.
pub fn adjunction(interfaces: &[Polynomial], guard: u128) -> Result<LawReport> {
    let mut worst = 0.0f64;
    let mut checked = 0usize;
    for p in interfaces {
        for q in interfaces {
            for r in interfaces {
                let hom_qr = HomPolynomial::new(q, r, guard)?;
                let left = enumerate_lenses(&p.tensor(q), r, guard)?;
                let right = enumerate_lenses(p, hom_qr.polynomial(), guard)?;
                worst = worst.max(mismatch(left.len() == right.len()));
                for phi in &left {
                    let back = uncurry(&curry(phi, p, &hom_qr)?, &hom_qr)?;
                    worst = worst.max(mismatch(&back == phi));
                }
                for psi in &right {
                    let back = curry(&uncurry(psi, &hom_qr)?, p, &hom_qr)?;
                    worst = worst.max(mismatch(&back == psi));
                }
                checked += left.len() + right.len();
            }
            let hom = HomPolynomial::new(p, q, guard)?;
            let triangle = curry(&eval_lens(&hom)?, hom.polynomial(), &hom)?;
            worst = worst.max(mismatch(triangle == Lens::identity(hom.polynomial())));
        }
    }
    Ok(LawReport::new(
        "hom.adjunction",
        worst,
        0.0,
        format!("{checked} round trips"),
    ))
}

/// `dual(Oy^A)` has `|A|^|O|` positions with `|O|` directions each.
pub fn duality_shape(max: usize, guard: u128) -> Result<LawReport> {
    let mut worst = 0.0f64;
    for o in 1..=max {
        for a in 1..=max {
            let p = Polynomial::monomial(&FinSet::range("O", o), &FinSet::range("A", a));
            let d = dual(&p, guard)?;
            let expected = a.pow(o as u32);
            let ok = d.polynomial().num_positions() == expected
                && enumerate_lenses(&p, &Polynomial::y(), guard)?.len() == expected
                && d.polynomial().arities().iter().all(|&n| n == o);
            worst = worst.max(mismatch(ok));
        }
    }
    Ok(LawReport::new(
        "hom.duality_shape",
        worst,
        0.0,
        format!("|O|,|A| <= {max}"),
    ))
}

fn random_set(rng: &mut SimRng, name: &str, max: usize) -> FinSet {
    FinSet::range(name, rng.gen_range(1..=max))
}

/// Associativity, unitality and tensor interchange of channels.
pub fn channel_laws(rng: &mut SimRng, trials: usize, max: usize) -> Vec<LawReport> {
    let (mut assoc, mut unit, mut interchange) = (0.0f64, 0.0f64, 0.0f64);
    for _ in 0..trials {
        let xs: Vec<FinSet> = (0..4)
            .map(|k| random_set(rng, &format!("X{k}"), max))
            .collect();
        let q = random_channel(rng, &xs[0], &xs[1]);
        let r = random_channel(rng, &xs[1], &xs[2]);
        let s = random_channel(rng, &xs[2], &xs[3]);
        let lhs = q.then(&r).unwrap().then(&s).unwrap();
        let rhs = q.then(&r.then(&s).unwrap()).unwrap();
        assoc = assoc.max(lhs.max_abs_diff(&rhs));
        unit = unit
            .max(Channel::identity(&xs[0]).then(&q).unwrap().max_abs_diff(&q))
            .max(q.then(&Channel::identity(&xs[1])).unwrap().max_abs_diff(&q));
        let ys: Vec<FinSet> = (0..3)
            .map(|k| random_set(rng, &format!("Y{k}"), 3))
            .collect();
        let q2 = random_channel(rng, &ys[0], &ys[1]);
        let r2 = random_channel(rng, &ys[1], &ys[2]);
        let small: Vec<FinSet> = (0..3)
            .map(|k| random_set(rng, &format!("Z{k}"), 2))
            .collect();
        let q1 = random_channel(rng, &small[0], &small[1]);
        let r1 = random_channel(rng, &small[1], &small[2]);
        let a = q1.then(&r1).unwrap().tensor(&q2.then(&r2).unwrap());
        let b = q1.tensor(&q2).then(&r1.tensor(&r2)).unwrap();
        interchange = interchange.max(a.max_abs_diff(&b));
    }
    vec![
        LawReport::new(
            "channel.associativity",
            assoc,
            EPS_LAW,
            format!("{trials} random triples, carriers <= {max}"),
        ),
        LawReport::new(
            "channel.unit",
            unit,
            EPS_LAW,
            format!("{trials} random channels"),
        ),
        LawReport::new(
            "channel.interchange",
            interchange,
            EPS_LAW,
            format!("{trials} random quadruples"),
        ),
    ]
}

/// Bayes' rule against conditioning the full joint table.
pub fn bayes_vs_joint(rng: &mut SimRng, trials: usize, max: usize) -> LawReport {
    let mut worst = 0.0f64;
    let mut ran = 0;
    for _ in 0..trials {
        let s = random_set(rng, "S", max);
        let o = random_set(rng, "O", max);
        let prior = random_dist(rng, &s);
        let like = random_channel(rng, &s, &o);
        let obs = rng.gen_range(0..o.len());
        let joint: Vec<Vec<f64>> = (0..s.len())
            .map(|x| {
                (0..o.len())
                    .map(|y| prior.prob(x) * like.get(x, y))
                    .collect()
            })
            .collect();
        let column: Vec<f64> = joint.iter().map(|row| row[obs]).collect();
        let evidence: f64 = column.iter().sum();
        match bayes_posterior(&prior, &like, obs) {
            Ok(post) => {
                ran += 1;
                for (x, c) in column.iter().enumerate() {
                    worst = worst.max((post.prob(x) - c / evidence).abs());
                }
            }
            Err(_) if evidence <= crate::stoch::EPS_NORM => {}
            Err(_) => worst = f64::INFINITY,
        }
    }
    LawReport::new(
        "stoch.bayes_vs_joint",
        worst,
        EPS_LAW,
        format!("{ran} conditioned instances"),
    )
}

/// `Gen(id) = id`, `Gen(φ;ψ) = Gen(ψ)∘Gen(φ)` exactly, and rewiring keeps
/// system morphisms.
pub fn gen_laws(rng: &mut SimRng, trials: usize) -> Vec<LawReport> {
    let (mut unit, mut comp, mut preserve) = (0.0f64, 0.0f64, 0.0f64);
    for _ in 0..trials {
        let (phi, psi, _) = random_lens_chain(rng, 3, 3);
        let n = rng.gen_range(1..=4);
        let sys = random_system(rng, phi.dom(), n);
        let id = gen_rewire(&Lens::identity(phi.dom()), &sys).unwrap();
        unit = unit.max(mismatch(id == sys));
        let once = gen_rewire(&phi.then(&psi).unwrap(), &sys).unwrap();
        let twice = gen_rewire(&psi, &gen_rewire(&phi, &sys).unwrap()).unwrap();
        comp = comp.max(mismatch(once == twice));
        let (a, f) = random_morphism_pair(rng, &sys, 2);
        let check = check_system_morphism(
            &f,
            &gen_rewire(&phi, &a).unwrap(),
            &gen_rewire(&phi, &sys).unwrap(),
        );
        preserve = preserve.max(check.map(|c| c.residual).unwrap_or(f64::INFINITY));
    }
    vec![
        LawReport::new("gen.unit", unit, 0.0, format!("{trials} random systems")),
        LawReport::new(
            "gen.composition",
            comp,
            0.0,
            format!("{trials} random (system, φ, ψ)"),
        ),
        LawReport::new(
            "gen.preserves_morphisms",
            preserve,
            EPS_MORPHISM,
            format!("{trials} random morphisms"),
        ),
    ]
}

/// Exhaustive forward filtering: enumerate every state path consistent with
/// the observed positions and taken directions.
pub fn brute_force_filter(
    ps: &PrioredGenSystem,
    positions: &[usize],
    directions: &[usize],
) -> Vec<f64> {
    let sys = ps.system();
    let n = sys.num_states();
    let t = positions.len() - 1;
    let mut post = vec![0.0; n];
    for path in crate::finset::MixedRadix::new(vec![n; t + 1]) {
        let mut w = ps.prior().prob(path[0]);
        for k in 0..=t {
            if sys.out()[path[k]] != positions[k] {
                w = 0.0;
                break;
            }
            if k < t {
                w *= sys.transition(path[k], directions[k])[path[k + 1]];
            }
        }
        post[path[t]] += w;
    }
    let total: f64 = post.iter().sum();
    post.iter().map(|x| x / total).collect()
}

/// Episode beliefs against exhaustive filtering with the model as environment.
pub fn filtering(seed: u64, models: usize, max_states: usize, steps: usize) -> LawReport {
    let mut worst = 0.0f64;
    for k in 0..models {
        let mut rng = rng_from_seed(derive_seed(seed, k as u64));
        let o = rng.gen_range(1..=3);
        let p = Polynomial::monomial(
            &FinSet::range("O", o),
            &FinSet::range("A", rng.gen_range(1..=3)),
        );
        let n = rng.gen_range(1..=max_states);
        let sys = random_system(&mut rng, &p, n);
        let prior = random_dist(&mut rng, sys.states());
        let model = PrioredGenSystem::new(sys, prior).expect("matching prior");
        let prefs = random_dist(&mut rng, p.positions());
        let agent = Agent::new(model.clone(), prefs, 2).expect("matching preferences");
        let ep = match simulate_episode(&agent, &model, steps, rng.gen()) {
            Ok(ep) => ep,
            Err(_) => {
                return LawReport::new(
                    "agent.filtering",
                    f64::INFINITY,
                    1e-9,
                    format!("model {k} failed"),
                )
            }
        };
        let positions: Vec<usize> = ep.records.iter().map(|r| r.position).collect();
        let directions: Vec<usize> = ep.records.iter().filter_map(|r| r.direction).collect();
        for (t, rec) in ep.records.iter().enumerate() {
            let oracle = brute_force_filter(&model, &positions[..=t], &directions[..t]);
            let tv = 0.5
                * oracle
                    .iter()
                    .zip(&rec.belief)
                    .map(|(a, b)| (a - b).abs())
                    .sum::<f64>();
            worst = worst.max(tv);
        }
    }
    LawReport::new(
        "agent.filtering",
        worst,
        1e-9,
        format!("{models} random models, {steps} steps"),
    )
}

/// Instance counts and carrier bounds for [`random_suite`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SuiteSizes {
    pub lens_trials: usize,
    pub tensor_trials: usize,
    pub channel_trials: usize,
    pub channel_max: usize,
    pub bayes_trials: usize,
    pub bayes_max: usize,
    pub gen_trials: usize,
    pub filter_models: usize,
    pub filter_states: usize,
    pub filter_steps: usize,
}

impl Default for SuiteSizes {
    fn default() -> Self {
        SuiteSizes {
            lens_trials: 200,
            tensor_trials: 50,
            channel_trials: 100,
            channel_max: 6,
            bayes_trials: 100,
            bayes_max: 5,
            gen_trials: 100,
            filter_models: 20,
            filter_states: 6,
            filter_steps: 5,
        }
    }
}

/// Every suite on random instances from `seed`.
pub fn random_suite(seed: u64, sizes: &SuiteSizes, compose: LensCompose) -> Vec<LawReport> {
    let mut rng = rng_from_seed(seed);
    let mut out = lens_category(&mut rng, sizes.lens_trials, compose);
    out.extend(tensor_laws(&mut rng, sizes.tensor_trials));
    out.push(LawReport::from_result(
        "hom.adjunction",
        adjunction(&small_interfaces(), DEFAULT_LENS_GUARD),
    ));
    out.push(LawReport::from_result(
        "hom.duality_shape",
        duality_shape(3, DEFAULT_LENS_GUARD),
    ));
    out.push(LawReport::new(
        "hom.count_closed_form",
        mismatch(
            small_interfaces()
                .iter()
                .flat_map(|p| small_interfaces().into_iter().map(move |q| (p.clone(), q)))
                .all(|(p, q)| {
                    enumerate_lenses(&p, &q, DEFAULT_LENS_GUARD).map(|v| v.len() as u128)
                        == Ok(lens_count(&p, &q))
                }),
        ),
        0.0,
        "closed form vs enumeration",
    ));
    out.extend(channel_laws(
        &mut rng,
        sizes.channel_trials,
        sizes.channel_max,
    ));
    out.push(bayes_vs_joint(
        &mut rng,
        sizes.bayes_trials,
        sizes.bayes_max,
    ));
    out.extend(gen_laws(&mut rng, sizes.gen_trials));
    out.push(filtering(
        rng.gen(),
        sizes.filter_models,
        sizes.filter_states,
        sizes.filter_steps,
    ));
    out
}

/// A deliberately wrong composition that feeds each backward map the next
/// direction (cyclically) of the outer codomain. Used to check that the
/// suites bite: it breaks associativity as well as the unit laws.
pub fn broken_compose(f: &Lens, g: &Lens) -> Result<Lens> {
    let h = f.then(g)?;
    let bwd = (0..f.dom().num_positions())
        .map(|i| {
            let j = f.forward(i);
            let n = g.cod().arity(g.forward(j));
            (0..n)
                .map(|e| f.backward(i, g.backward(j, (e + 1) % n)))
                .collect()
        })
        .collect();
    Lens::new(h.dom().clone(), h.cod().clone(), h.fwd().to_vec(), bwd)
}
