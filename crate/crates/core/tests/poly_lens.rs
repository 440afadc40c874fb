use polyagent_core::finset::FinSet;
use polyagent_core::hom::{enumerate_lenses, DEFAULT_LENS_GUARD};
use polyagent_core::random::random_lens;
use polyagent_core::rng::rng_from_seed;
use polyagent_core::{FinCategory, Lens, Polynomial};
use proptest::prelude::*;

fn arities(max_pos: usize, max_dir: usize) -> impl Strategy<Value = Vec<usize>> {
    prop::collection::vec(0..=max_dir, 1..=max_pos)
}

/// Every lens p -> q by nested enumeration of forward and backward tables.
fn brute_lenses(p: &Polynomial, q: &Polynomial) -> Vec<Lens> {
    fn tables(len: usize, cod: usize) -> Vec<Vec<usize>> {
        if len == 0 {
            return vec![vec![]];
        }
        let mut out = Vec::new();
        for head in 0..cod {
            for mut rest in tables(len - 1, cod) {
                rest.insert(0, head);
                out.push(rest);
            }
        }
        out
    }
    let mut out = Vec::new();
    for fwd in tables(p.num_positions(), q.num_positions()) {
        let per_position: Vec<Vec<Vec<usize>>> = fwd
            .iter()
            .enumerate()
            .map(|(i, &j)| tables(q.arity(j), p.arity(i)))
            .collect();
        let mut partial: Vec<Vec<Vec<usize>>> = vec![vec![]];
        for choices in &per_position {
            partial = partial
                .into_iter()
                .flat_map(|prefix| {
                    choices.iter().map(move |c| {
                        let mut v = prefix.clone();
                        v.push(c.clone());
                        v
                    })
                })
                .collect();
        }
        for bwd in partial {
            out.push(Lens::new(p.clone(), q.clone(), fwd.clone(), bwd).unwrap());
        }
    }
    out
}

#[test]
fn two_y_endomorphisms() {
    let two_y = Polynomial::from_arities(&[1, 1]);
    let all = enumerate_lenses(&two_y, &two_y, DEFAULT_LENS_GUARD).unwrap();
    assert_eq!(all.len(), 4);
    assert!(all.contains(&Lens::identity(&two_y)));
    let swap = Lens::new(
        two_y.clone(),
        two_y.clone(),
        vec![1, 0],
        vec![vec![0], vec![0]],
    )
    .unwrap();
    assert_eq!(swap.then(&swap).unwrap(), Lens::identity(&two_y));
}

#[test]
fn exhaustive_associativity_on_tiny_interfaces() {
    let shapes: Vec<Polynomial> = [vec![1], vec![1, 1], vec![2, 0], vec![0], vec![2]]
        .iter()
        .map(|a| Polynomial::from_arities(a))
        .collect();
    let mut triples = 0;
    for p in &shapes {
        for q in &shapes {
            for r in &shapes {
                for s in &shapes {
                    let pq = enumerate_lenses(p, q, DEFAULT_LENS_GUARD).unwrap();
                    let qr = enumerate_lenses(q, r, DEFAULT_LENS_GUARD).unwrap();
                    let rs = enumerate_lenses(r, s, DEFAULT_LENS_GUARD).unwrap();
                    for f in &pq {
                        for g in &qr {
                            let fg = f.then(g).unwrap();
                            for h in &rs {
                                assert_eq!(
                                    fg.then(h).unwrap(),
                                    f.then(&g.then(h).unwrap()).unwrap()
                                );
                                triples += 1;
                            }
                        }
                    }
                }
            }
        }
    }
    assert!(triples > 1000);
}

#[test]
fn tensor_functoriality_exhaustive() {
    let shapes: Vec<Polynomial> = [vec![1], vec![1, 1], vec![2, 0]]
        .iter()
        .map(|a| Polynomial::from_arities(a))
        .collect();
    for p in &shapes {
        for p2 in &shapes {
            for q in &shapes {
                for q2 in &shapes {
                    for f in enumerate_lenses(p, p2, DEFAULT_LENS_GUARD).unwrap() {
                        for g in enumerate_lenses(q, q2, DEFAULT_LENS_GUARD).unwrap() {
                            let f2 = Lens::identity(p2);
                            let g2 = Lens::identity(q2);
                            assert_eq!(
                                f.then(&f2).unwrap().tensor(&g.then(&g2).unwrap()),
                                f.tensor(&g).then(&f2.tensor(&g2)).unwrap()
                            );
                        }
                    }
                }
            }
        }
    }
}

#[test]
fn tensor_with_unit_is_isomorphic() {
    let p = Polynomial::from_arities(&[2, 0, 1]);
    for q in [p.tensor(&Polynomial::y()), Polynomial::y().tensor(&p)] {
        let iso = q.isomorphism(&p).expect("witness");
        assert!(iso.is_isomorphism());
        assert_eq!(
            iso.then(&iso.inverse().unwrap()).unwrap(),
            Lens::identity(&q)
        );
    }
    let two_y = Polynomial::from_arities(&[1, 1]);
    assert_eq!(two_y.tensor(&two_y).to_string(), "4y");
}

#[test]
fn walking_arrow_directions() {
    let p = FinCategory::walking_arrow().to_polynomial();
    assert_eq!(p.arities(), vec![2, 1]);
}

proptest! {
    #[test]
    fn enumeration_matches_brute_force(a in arities(3, 2), b in arities(3, 2)) {
        let p = Polynomial::from_arities(&a);
        let q = Polynomial::from_arities(&b);
        let lib = enumerate_lenses(&p, &q, DEFAULT_LENS_GUARD).unwrap();
        let brute = brute_lenses(&p, &q);
        prop_assert_eq!(lib.len(), brute.len());
        let set: std::collections::HashSet<_> = lib.iter().collect();
        prop_assert_eq!(set.len(), lib.len());
        prop_assert!(brute.iter().all(|l| set.contains(l)));
    }

    #[test]
    fn monomial_hom_count(o in 1usize..=3, i in 0usize..=2, pp in 1usize..=3, j in 0usize..=2) {
        let p = Polynomial::monomial(&FinSet::range("O", o), &FinSet::range("I", i));
        let q = Polynomial::monomial(&FinSet::range("P", pp), &FinSet::range("J", j));
        let expected = (pp as u64).pow(o as u32) * (i as u64).pow((o * j) as u32);
        prop_assert_eq!(enumerate_lenses(&p, &q, DEFAULT_LENS_GUARD).unwrap().len() as u64, expected);
    }

    #[test]
    fn category_laws(a in arities(3, 3), b in arities(3, 3), c in arities(3, 3), d in arities(3, 3), seed: u64) {
        let ps: Vec<Polynomial> = [a, b, c, d].iter().map(|x| Polynomial::from_arities(x)).collect();
        let mut rng = rng_from_seed(seed);
        let f = random_lens(&mut rng, &ps[0], &ps[1]);
        let g = random_lens(&mut rng, &ps[1], &ps[2]);
        let h = random_lens(&mut rng, &ps[2], &ps[3]);
        if let (Some(f), Some(g), Some(h)) = (f, g, h) {
            prop_assert_eq!(f.then(&g).unwrap().then(&h).unwrap(), f.then(&g.then(&h).unwrap()).unwrap());
            prop_assert_eq!(Lens::identity(&ps[0]).then(&f).unwrap(), f.clone());
            prop_assert_eq!(f.then(&Lens::identity(&ps[1])).unwrap(), f);
        }
    }

    #[test]
    fn swap_round_trip(a in arities(3, 3), b in arities(3, 3)) {
        let p = Polynomial::from_arities(&a);
        let q = Polynomial::from_arities(&b);
        let round = Lens::swap(&p, &q).then(&Lens::swap(&q, &p)).unwrap();
        prop_assert_eq!(round, Lens::identity(&p.tensor(&q)));
    }

    #[test]
    fn apply_is_functorial(a in arities(3, 2), x in 1usize..=3, x2 in 1usize..=3, g_seed in prop::collection::vec(0usize..3, 3)) {
        let p = Polynomial::from_arities(&a);
        let g: Vec<usize> = g_seed.iter().take(x).map(|v| v % x2).collect();
        // relabel via g after applying equals applying to the relabelled arguments
        let xs = FinSet::range("X", x);
        let terms = p.apply(&xs);
        let table = p.apply_map(x, x2, &g);
        prop_assert_eq!(table.len(), terms.len());
        let image = p.apply(&FinSet::range("Y", x2));
        for (k, label) in terms.elements().iter().enumerate() {
            let (head, args) = label.split_once('(').unwrap();
            let args = args.trim_end_matches(')');
            let mapped: Vec<String> = if args.is_empty() {
                vec![]
            } else {
                args.split(',').map(|v| g[v.parse::<usize>().unwrap()].to_string()).collect()
            };
            prop_assert_eq!(image.label(table[k]), format!("{head}({})", mapped.join(",")));
        }
        // identity acts trivially
        let id: Vec<usize> = (0..x).collect();
        prop_assert_eq!(p.apply_map(x, x, &id), (0..terms.len()).collect::<Vec<_>>());
    }
}
