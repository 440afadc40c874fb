//! Dependent Moore machines over polynomial interfaces, deterministic and
//! stochastic.
//!
//! A system over `p` has states `S`, an output map `out: S -> p(1)` and an
//! update out of the dependent sum `Σ_{s:S} p[out(s)]`. That sum is laid out
//! s-major: the directions of state 0 first, then those of state 1, and so on.

use rand::Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::finset::FinSet;
use crate::lens::Lens;
use crate::poly::Polynomial;
use crate::rng::{derived_rng, rng_from_seed};
use crate::stoch::{Channel, Dist};

/// Entrywise tolerance for the commuting square of a system morphism.
pub const EPS_MORPHISM: f64 = 1e-9;

fn check_out(iface: &Polynomial, states: &FinSet, out: &[usize]) -> Result<()> {
    if out.len() != states.len() {
        return Err(Error::invalid(
            "system",
            format!("output map covers {} of {} states", out.len(), states.len()),
        ));
    }
    if let Some((s, &i)) = out
        .iter()
        .enumerate()
        .find(|(_, &i)| i >= iface.num_positions())
    {
        return Err(Error::invalid(
            "system",
            format!(
                "out({}) = {i} is not a position of {iface}",
                states.label(s)
            ),
        ));
    }
    Ok(())
}

fn offsets(iface: &Polynomial, out: &[usize]) -> Vec<usize> {
    let mut acc = 0;
    let mut offs = Vec::with_capacity(out.len() + 1);
    for &i in out {
        offs.push(acc);
        acc += iface.arity(i);
    }
    offs.push(acc);
    offs
}

/// The carrier `Σ_{s:S} p[out(s)]` with labels `(s,d)`.
pub fn flat_domain(iface: &Polynomial, states: &FinSet, out: &[usize]) -> FinSet {
    let mut labels = Vec::new();
    for (s, &i) in out.iter().enumerate() {
        for d in iface.directions(i).elements() {
            labels.push(format!("({},{})", states.label(s), d));
        }
    }
    FinSet::new(format!("Σ{}", states.name()), labels).expect("state labels are distinct")
}

/// A deterministic dependent Moore machine.
#[derive(Clone, Debug, PartialEq)]
pub struct MooreSystem {
    iface: Polynomial,
    states: FinSet,
    out: Vec<usize>,
    upd: Vec<usize>,
    offsets: Vec<usize>,
}

impl MooreSystem {
    pub fn new(
        iface: Polynomial,
        states: FinSet,
        out: Vec<usize>,
        upd: Vec<usize>,
    ) -> Result<Self> {
        check_out(&iface, &states, &out)?;
        let offsets = offsets(&iface, &out);
        if upd.len() != offsets[out.len()] {
            return Err(Error::invalid(
                "moore system",
                format!(
                    "update covers {} of {} state/direction pairs",
                    upd.len(),
                    offsets[out.len()]
                ),
            ));
        }
        if let Some(&t) = upd.iter().find(|&&t| t >= states.len()) {
            return Err(Error::invalid(
                "moore system",
                format!("update reaches state index {t}"),
            ));
        }
        Ok(MooreSystem {
            iface,
            states,
            out,
            upd,
            offsets,
        })
    }

    pub fn iface(&self) -> &Polynomial {
        &self.iface
    }

    pub fn states(&self) -> &FinSet {
        &self.states
    }

    pub fn out(&self) -> &[usize] {
        &self.out
    }

    pub fn next(&self, s: usize, d: usize) -> usize {
        self.upd[self.offsets[s] + d]
    }

    /// The deterministic rewiring `Moore(φ)`.
    pub fn rewire(&self, phi: &Lens) -> Result<MooreSystem> {
        if phi.dom() != &self.iface {
            return Err(Error::InterfaceMismatch(format!(
                "system over {} rewired along a lens from {}",
                self.iface,
                phi.dom()
            )));
        }
        let out: Vec<usize> = self.out.iter().map(|&i| phi.forward(i)).collect();
        let mut upd = Vec::new();
        for (s, &i) in self.out.iter().enumerate() {
            for d in 0..phi.cod().arity(out[s]) {
                upd.push(self.next(s, phi.backward(i, d)));
            }
        }
        MooreSystem::new(phi.cod().clone(), self.states.clone(), out, upd)
    }
}

/// A stochastic dependent Moore machine: deterministic output, update channel
/// `Σ_{s:S} p[out(s)] ⇝ S`.
#[derive(Clone, Debug, PartialEq)]
pub struct GenSystem {
    iface: Polynomial,
    states: FinSet,
    out: Vec<usize>,
    upd: Channel,
    offsets: Vec<usize>,
}

impl GenSystem {
    /// `upd` must have one row per `(s, d)` pair in s-major order and codomain
    /// `states`; its domain labels are replaced by the canonical ones.
    pub fn new(iface: Polynomial, states: FinSet, out: Vec<usize>, upd: Channel) -> Result<Self> {
        check_out(&iface, &states, &out)?;
        let offsets = offsets(&iface, &out);
        if upd.dom().len() != offsets[out.len()] {
            return Err(Error::CarrierMismatch(format!(
                "update has {} rows, the dependent sum has {}",
                upd.dom().len(),
                offsets[out.len()]
            )));
        }
        if upd.cod().len() != states.len() {
            return Err(Error::CarrierMismatch(format!(
                "update lands in {} elements, there are {} states",
                upd.cod().len(),
                states.len()
            )));
        }
        let dom = flat_domain(&iface, &states, &out);
        let upd = Channel::from_data(dom, states.clone(), upd.rows().concat());
        Ok(GenSystem {
            iface,
            states,
            out,
            upd,
            offsets,
        })
    }

    /// Builds the update from rows indexed `[s][d]`.
    pub fn from_rows(
        iface: Polynomial,
        states: FinSet,
        out: Vec<usize>,
        rows: Vec<Vec<Vec<f64>>>,
    ) -> Result<Self> {
        check_out(&iface, &states, &out)?;
        if rows.len() != states.len() {
            return Err(Error::invalid(
                "system",
                format!("update rows for {} of {} states", rows.len(), states.len()),
            ));
        }
        for (s, r) in rows.iter().enumerate() {
            if r.len() != iface.arity(out[s]) {
                return Err(Error::invalid(
                    "system",
                    format!(
                        "state {} has {} update rows, its position has {} directions",
                        states.label(s),
                        r.len(),
                        iface.arity(out[s])
                    ),
                ));
            }
        }
        let dom = flat_domain(&iface, &states, &out);
        let upd = Channel::new(dom, states.clone(), rows.into_iter().flatten().collect())?;
        GenSystem::new(iface, states, out, upd)
    }

    pub fn iface(&self) -> &Polynomial {
        &self.iface
    }

    pub fn states(&self) -> &FinSet {
        &self.states
    }

    pub fn num_states(&self) -> usize {
        self.states.len()
    }

    pub fn out(&self) -> &[usize] {
        &self.out
    }

    pub fn upd(&self) -> &Channel {
        &self.upd
    }

    pub fn flat_index(&self, s: usize, d: usize) -> usize {
        debug_assert!(d < self.iface.arity(self.out[s]));
        self.offsets[s] + d
    }

    /// `upd(· | s, d)`.
    pub fn transition(&self, s: usize, d: usize) -> &[f64] {
        self.upd.row(self.flat_index(s, d))
    }

    /// The out map as a deterministic channel `S ⇝ p(1)`.
    pub fn out_channel(&self) -> Channel {
        Channel::dirac(&self.states, self.iface.positions(), &self.out)
    }

    /// Predicted distribution over positions.
    pub fn position_marginal(&self, belief: &Dist) -> Dist {
        belief.pushforward(&self.out, self.iface.positions())
    }

    /// One step of prediction: `Σ_s belief(s) upd(· | s, choice(s))`.
    /// `choice` gives a direction for every state with positive mass.
    pub fn propagate(&self, belief: &Dist, choice: impl Fn(usize) -> usize) -> Dist {
        let mut mass = vec![0.0; self.num_states()];
        for (s, &w) in belief.masses().iter().enumerate() {
            if w == 0.0 {
                continue;
            }
            for (m, &r) in mass.iter_mut().zip(self.transition(s, choice(s))) {
                *m += w * r;
            }
        }
        Dist::from_raw(self.states.clone(), mass)
    }
}

impl From<&MooreSystem> for GenSystem {
    fn from(m: &MooreSystem) -> Self {
        moore_to_gen(m)
    }
}

pub fn moore_to_gen(m: &MooreSystem) -> GenSystem {
    let dom = flat_domain(&m.iface, &m.states, &m.out);
    let upd = Channel::dirac(&dom, &m.states, &m.upd);
    GenSystem {
        iface: m.iface.clone(),
        states: m.states.clone(),
        out: m.out.clone(),
        upd,
        offsets: m.offsets.clone(),
    }
}

/// `Gen(φ)`: outputs pushed forward along `φ₁`, inputs pulled back along `φ♯`.
pub fn gen_rewire(phi: &Lens, sys: &GenSystem) -> Result<GenSystem> {
    if phi.dom() != &sys.iface {
        return Err(Error::InterfaceMismatch(format!(
            "system over {} rewired along a lens from {}",
            sys.iface,
            phi.dom()
        )));
    }
    let out: Vec<usize> = sys.out.iter().map(|&i| phi.forward(i)).collect();
    let mut reindex = Vec::new();
    for (s, &i) in sys.out.iter().enumerate() {
        for d in 0..phi.cod().arity(out[s]) {
            reindex.push(sys.flat_index(s, phi.backward(i, d)));
        }
    }
    let dom = flat_domain(phi.cod(), &sys.states, &out);
    let upd = Channel::dirac(&dom, sys.upd.dom(), &reindex).then(&sys.upd)?;
    let offsets = offsets(phi.cod(), &out);
    Ok(GenSystem {
        iface: phi.cod().clone(),
        states: sys.states.clone(),
        out,
        upd,
        offsets,
    })
}

/// The laxator: `(S x T, out_a x out_b, upd_a ⊗ upd_b)` over `p ⊗ q`.
pub fn gen_parallel(a: &GenSystem, b: &GenSystem) -> GenSystem {
    let iface = a.iface.tensor(&b.iface);
    let states = a.states.product(&b.states);
    let mut out = Vec::with_capacity(states.len());
    let mut data = Vec::new();
    for s in 0..a.num_states() {
        for t in 0..b.num_states() {
            out.push(a.iface.tensor_position(&b.iface, a.out[s], b.out[t]));
            for d in 0..a.iface.arity(a.out[s]) {
                for e in 0..b.iface.arity(b.out[t]) {
                    for &x in a.transition(s, d) {
                        for &y in b.transition(t, e) {
                            data.push(x * y);
                        }
                    }
                }
            }
        }
    }
    let dom = flat_domain(&iface, &states, &out);
    let offsets = offsets(&iface, &out);
    GenSystem {
        upd: Channel::from_data(dom, states.clone(), data),
        iface,
        states,
        out,
        offsets,
    }
}

/// Outcome of a morphism check: the largest entrywise residual and whether
/// it is within tolerance.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MorphismCheck {
    pub holds: bool,
    pub residual: f64,
    /// `max |π' - f∘π|` when priors were compared.
    pub prior_residual: Option<f64>,
}

/// Checks `f ∘ upd_a = upd_b ∘ (f x id)` for `f : S_a ⇝ S_b`.
pub fn check_system_morphism(f: &Channel, a: &GenSystem, b: &GenSystem) -> Result<MorphismCheck> {
    if a.iface != b.iface {
        return Err(Error::InterfaceMismatch(format!(
            "systems over {} and {}",
            a.iface, b.iface
        )));
    }
    if f.dom().len() != a.num_states() || f.cod().len() != b.num_states() {
        return Err(Error::CarrierMismatch(format!(
            "channel {} ⇝ {} between systems with {} and {} states",
            f.dom().len(),
            f.cod().len(),
            a.num_states(),
            b.num_states()
        )));
    }
    for s in 0..a.num_states() {
        for (u, &w) in f.row(s).iter().enumerate() {
            if w > 0.0 && b.out[u] != a.out[s] {
                return Err(Error::IncompatibleOutputs(format!(
                    "mass {w} from {} (position {}) to {} (position {})",
                    a.states.label(s),
                    a.iface.positions().label(a.out[s]),
                    b.states.label(u),
                    b.iface.positions().label(b.out[u])
                )));
            }
        }
    }
    let lhs = a.upd.then(f)?;
    let nb = b.num_states();
    let mut residual: f64 = 0.0;
    for s in 0..a.num_states() {
        for d in 0..a.iface.arity(a.out[s]) {
            let mut rhs = vec![0.0; nb];
            for (u, &w) in f.row(s).iter().enumerate() {
                if w == 0.0 {
                    continue;
                }
                for (r, &x) in rhs.iter_mut().zip(b.transition(u, d)) {
                    *r += w * x;
                }
            }
            let row = lhs.row(a.flat_index(s, d));
            for (x, y) in row.iter().zip(&rhs) {
                residual = residual.max((x - y).abs());
            }
        }
    }
    Ok(MorphismCheck {
        holds: residual <= EPS_MORPHISM,
        residual,
        prior_residual: None,
    })
}

/// A generative model together with a prior over its states.
#[derive(Clone, Debug, PartialEq)]
pub struct PrioredGenSystem {
    system: GenSystem,
    prior: Dist,
}

impl PrioredGenSystem {
    pub fn new(system: GenSystem, prior: Dist) -> Result<Self> {
        if prior.len() != system.num_states() {
            return Err(Error::CarrierMismatch(format!(
                "prior over {} elements for {} states",
                prior.len(),
                system.num_states()
            )));
        }
        let prior = Dist::new(system.states.clone(), prior.masses().to_vec())?;
        Ok(PrioredGenSystem { system, prior })
    }

    pub fn system(&self) -> &GenSystem {
        &self.system
    }

    pub fn prior(&self) -> &Dist {
        &self.prior
    }
}

pub fn forget_prior(ps: &PrioredGenSystem) -> GenSystem {
    ps.system.clone()
}

/// As [`check_system_morphism`], additionally requiring `π_b = f ∘ π_a`.
pub fn check_priored_morphism(
    f: &Channel,
    a: &PrioredGenSystem,
    b: &PrioredGenSystem,
) -> Result<MorphismCheck> {
    let mut check = check_system_morphism(f, &a.system, &b.system)?;
    let pushed = f.apply(&Dist::new(f.dom().clone(), a.prior.masses().to_vec())?)?;
    let prior_residual = pushed
        .masses()
        .iter()
        .zip(b.prior.masses())
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max);
    check.holds &= prior_residual <= EPS_MORPHISM;
    check.prior_residual = Some(prior_residual);
    Ok(check)
}

/// Folds a stochastic likelihood into the state: states `S x p(1)`, output
/// the second projection, and `(s, i, x) ↦ trans(s, i, x) ⊗ like(s)`.
///
/// `trans` is indexed by `Σ_{(s,i) : S x p(1)} p[i]`, s-major.
pub fn fold_likelihood(
    states: &FinSet,
    p: &Polynomial,
    trans: &Channel,
    like: &Channel,
) -> Result<GenSystem> {
    let per_state: usize = p.arities().iter().sum();
    if trans.dom().len() != states.len() * per_state || trans.cod().len() != states.len() {
        return Err(Error::CarrierMismatch(format!(
            "transition {} ⇝ {} does not match {} states over {p}",
            trans.dom().len(),
            trans.cod().len(),
            states.len()
        )));
    }
    if like.dom().len() != states.len() || like.cod().len() != p.num_positions() {
        return Err(Error::CarrierMismatch(format!(
            "likelihood {} ⇝ {} does not match {} states over {p}",
            like.dom().len(),
            like.cod().len(),
            states.len()
        )));
    }
    let folded = states.product(p.positions());
    let mut out = Vec::with_capacity(folded.len());
    let mut data = Vec::new();
    let mut row = 0;
    for s in 0..states.len() {
        for i in 0..p.num_positions() {
            out.push(i);
            for _ in 0..p.arity(i) {
                for &x in trans.row(row) {
                    for &l in like.row(s) {
                        data.push(x * l);
                    }
                }
                row += 1;
            }
        }
    }
    let dom = flat_domain(p, &folded, &out);
    let offsets = offsets(p, &out);
    Ok(GenSystem {
        upd: Channel::from_data(dom, folded.clone(), data),
        iface: p.clone(),
        states: folded,
        out,
        offsets,
    })
}

fn closed_step(ps: &PrioredGenSystem) -> Result<&GenSystem> {
    let sys = &ps.system;
    if !sys.iface.is_closed() {
        return Err(Error::InterfaceNotClosed(format!(
            "interface is {}",
            sys.iface
        )));
    }
    Ok(sys)
}

/// Marginals `d_0 = prior, d_{t+1} = d_t · upd` for `t < steps`.
pub fn closed_unroll_exact(ps: &PrioredGenSystem, steps: usize) -> Result<Vec<Dist>> {
    let sys = closed_step(ps)?;
    let mut out = Vec::with_capacity(steps + 1);
    out.push(ps.prior.clone());
    for _ in 0..steps {
        let next = sys.propagate(out.last().expect("nonempty"), |_| 0);
        out.push(next);
    }
    Ok(out)
}

/// One sampled state trajectory of length `steps + 1`.
pub fn closed_unroll_sample_with<R: Rng + ?Sized>(
    ps: &PrioredGenSystem,
    steps: usize,
    rng: &mut R,
) -> Result<Vec<usize>> {
    let sys = closed_step(ps)?;
    let mut s = ps.prior.sample(rng);
    let mut traj = Vec::with_capacity(steps + 1);
    traj.push(s);
    for _ in 0..steps {
        s = crate::stoch::sample_index(sys.transition(s, 0), rng);
        traj.push(s);
    }
    Ok(traj)
}

pub fn closed_unroll_sample(ps: &PrioredGenSystem, steps: usize, seed: u64) -> Result<Vec<usize>> {
    closed_unroll_sample_with(ps, steps, &mut rng_from_seed(seed))
}

/// `n` trajectories; trajectory `k` uses the stream derived from `(seed, k)`.
pub fn closed_unroll_sample_batch(
    ps: &PrioredGenSystem,
    steps: usize,
    seed: u64,
    n: usize,
) -> Result<Vec<Vec<usize>>> {
    closed_step(ps)?;
    (0..n)
        .into_par_iter()
        .map(|k| closed_unroll_sample_with(ps, steps, &mut derived_rng(seed, k as u64)))
        .collect()
}

/// Per-step empirical state frequencies of a batch of trajectories.
pub fn empirical_marginals(states: &FinSet, trajectories: &[Vec<usize>]) -> Vec<Dist> {
    let Some(len) = trajectories.first().map(Vec::len) else {
        return Vec::new();
    };
    (0..len)
        .map(|t| {
            let mut counts = vec![0.0; states.len()];
            for traj in trajectories {
                counts[traj[t]] += 1.0;
            }
            Dist::from_weights(states, counts).expect("at least one trajectory")
        })
        .collect()
}
