//! Random instances for law checks and property tests.

use rand::Rng;

use crate::finset::FinSet;
use crate::lens::Lens;
use crate::poly::Polynomial;
use crate::stoch::{Channel, Dist};
use crate::systems::GenSystem;

/// A polynomial with `1..=max_positions` positions and `0..=max_directions`
/// directions at each.
pub fn random_poly<R: Rng + ?Sized>(
    rng: &mut R,
    max_positions: usize,
    max_directions: usize,
) -> Polynomial {
    let n = rng.gen_range(1..=max_positions);
    let arities: Vec<usize> = (0..n).map(|_| rng.gen_range(0..=max_directions)).collect();
    Polynomial::from_arities(&arities)
}

/// A uniformly chosen lens `p -> q`, or `None` if there is none.
pub fn random_lens<R: Rng + ?Sized>(rng: &mut R, p: &Polynomial, q: &Polynomial) -> Option<Lens> {
    let mut fwd = Vec::with_capacity(p.num_positions());
    let mut bwd = Vec::with_capacity(p.num_positions());
    for i in 0..p.num_positions() {
        let targets: Vec<usize> = (0..q.num_positions())
            .filter(|&j| p.arity(i) > 0 || q.arity(j) == 0)
            .collect();
        if targets.is_empty() {
            return None;
        }
        let j = targets[rng.gen_range(0..targets.len())];
        fwd.push(j);
        bwd.push(
            (0..q.arity(j))
                .map(|_| rng.gen_range(0..p.arity(i)))
                .collect(),
        );
    }
    Lens::new(p.clone(), q.clone(), fwd, bwd).ok()
}

/// A row of positive weights normalized to 1; with probability
/// `sparsity` each entry is zeroed (at least one survives).
pub fn random_row<R: Rng + ?Sized>(rng: &mut R, n: usize, sparsity: f64) -> Vec<f64> {
    let keep = rng.gen_range(0..n);
    let mut row: Vec<f64> = (0..n)
        .map(|k| {
            if k != keep && rng.gen_bool(sparsity) {
                0.0
            } else {
                rng.gen_range(0.05..1.0)
            }
        })
        .collect();
    let total: f64 = row.iter().sum();
    row.iter_mut().for_each(|x| *x /= total);
    row
}

pub fn random_dist<R: Rng + ?Sized>(rng: &mut R, carrier: &FinSet) -> Dist {
    Dist::new(carrier.clone(), random_row(rng, carrier.len(), 0.0)).expect("normalized row")
}

pub fn random_channel<R: Rng + ?Sized>(rng: &mut R, dom: &FinSet, cod: &FinSet) -> Channel {
    let rows = (0..dom.len())
        .map(|_| random_row(rng, cod.len(), 0.3))
        .collect();
    Channel::new(dom.clone(), cod.clone(), rows).expect("normalized rows")
}

/// A random stochastic system over `iface` with `n_states` states.
pub fn random_system<R: Rng + ?Sized>(
    rng: &mut R,
    iface: &Polynomial,
    n_states: usize,
) -> GenSystem {
    let states = FinSet::range("S", n_states);
    let out: Vec<usize> = (0..n_states)
        .map(|_| rng.gen_range(0..iface.num_positions()))
        .collect();
    let rows = out
        .iter()
        .map(|&i| {
            (0..iface.arity(i))
                .map(|_| random_row(rng, n_states, 0.3))
                .collect()
        })
        .collect();
    GenSystem::from_rows(iface.clone(), states, out, rows).expect("well-formed random system")
}

/// A system `a` over `b.iface()` with states `S_b x K`, together with the
/// projection `f : S_b x K ⇝ S_b`, which is a system morphism `a -> b`.
pub fn random_morphism_pair<R: Rng + ?Sized>(
    rng: &mut R,
    b: &GenSystem,
    k: usize,
) -> (GenSystem, Channel) {
    let fiber = FinSet::range("K", k);
    let states = b.states().product(&fiber);
    let mut out = Vec::with_capacity(states.len());
    let mut rows = Vec::with_capacity(states.len());
    for s in 0..b.num_states() {
        for _ in 0..k {
            let i = b.out()[s];
            out.push(i);
            rows.push(
                (0..b.iface().arity(i))
                    .map(|d| {
                        let extra = random_row(rng, k, 0.3);
                        b.transition(s, d)
                            .iter()
                            .flat_map(|&x| extra.iter().map(move |&y| x * y))
                            .collect()
                    })
                    .collect(),
            );
        }
    }
    let a =
        GenSystem::from_rows(b.iface().clone(), states.clone(), out, rows).expect("lifted system");
    let proj: Vec<usize> = (0..states.len()).map(|x| x / k).collect();
    let f = Channel::dirac(&states, b.states(), &proj);
    (a, f)
}
