//! Manager/worker composition.
//!
//! A manager `By^C ⊗ Dy^E -> Oy^A` sits on top of a left worker over `By^C`
//! and a right worker over `Dy^E`. Composed, they form an agent over `Oy^A`
//! whose generative model has states `S x T x U`: at `(s, t, u)` the workers
//! show `b = out_L(t)` and `d = out_R(u)`, the composite shows
//! `likelihood(s, b, d)`, and action `a` moves the manager by `trans` and the
//! workers by the low-level commands `low_left(s, b, d, a)` and
//! `low_right(s, b, d, a)`.
//!
//! The composite controller, per step with observation `o`:
//! 1. joins the manager belief with the workers' predicted positions and
//!    conditions on `likelihood = o`;
//! 2. generates worker observations from the MAP manager state;
//! 3. lets each worker observe and act (`c`, `e`);
//! 4. chooses `a` from the table at `(MAP state, o, c, e)` or by expected
//!    free energy with the workers' positions held fixed;
//! 5. predicts the manager through `trans` and each worker through its own
//!    model under the manager's commands at the MAP state.

use super::policy::{select_from_conditioned, Decision};
use super::{Agent, Belief, DEFAULT_POLICY_GUARD};
use crate::error::{Error, Result};
use crate::finset::FinSet;
use crate::poly::Polynomial;
use crate::stoch::{Channel, Dist, EPS_NORM};
use crate::systems::{GenSystem, PrioredGenSystem};

#[derive(Clone, Debug, PartialEq)]
pub enum ManagerPolicy {
    /// `S x O x C x E -> A`, evaluated at the MAP manager state.
    Table(Vec<usize>),
    /// Expected free energy over `O` with the workers' positions held fixed.
    Efe { preferences: Dist, horizon: usize },
}

/// The manager's data. Tables over products are flat in left-major order,
/// e.g. `likelihood[(s * |B| + b) * |D| + d]`.
#[derive(Clone, Debug, PartialEq)]
pub struct HierAgent {
    pub states: FinSet,
    pub prior: Dist,
    pub b: FinSet,
    pub c: FinSet,
    pub d: FinSet,
    pub e: FinSet,
    pub o: FinSet,
    pub a: FinSet,
    /// `S x B x D -> O`
    pub likelihood: Vec<usize>,
    /// `S x B x D x A -> C`
    pub low_left: Vec<usize>,
    /// `S x B x D x A -> E`
    pub low_right: Vec<usize>,
    /// `S x B x D x A ⇝ S`
    pub trans: Channel,
    /// `S x O -> B`
    pub gen_left: Vec<usize>,
    /// `S x O -> D`
    pub gen_right: Vec<usize>,
    pub policy: ManagerPolicy,
}

fn check_table(name: &str, table: &[usize], len: usize, cod: &FinSet) -> Result<()> {
    if table.len() != len {
        return Err(Error::invalid(
            "manager",
            format!("{name} has {} entries, expected {len}", table.len()),
        ));
    }
    if let Some(&v) = table.iter().find(|&&v| v >= cod.len()) {
        return Err(Error::invalid(
            "manager",
            format!("{name} hits {v}, codomain {} has {}", cod.name(), cod.len()),
        ));
    }
    Ok(())
}

impl HierAgent {
    fn sbd(&self, s: usize, b: usize, d: usize) -> usize {
        (s * self.b.len() + b) * self.d.len() + d
    }

    fn sbda(&self, s: usize, b: usize, d: usize, a: usize) -> usize {
        self.sbd(s, b, d) * self.a.len() + a
    }

    fn so(&self, s: usize, o: usize) -> usize {
        s * self.o.len() + o
    }

    pub fn validate(&self) -> Result<()> {
        let (ns, nb, nd, na, no) = (
            self.states.len(),
            self.b.len(),
            self.d.len(),
            self.a.len(),
            self.o.len(),
        );
        if self.prior.len() != ns {
            return Err(Error::CarrierMismatch(format!(
                "manager prior over {} of {ns} states",
                self.prior.len()
            )));
        }
        check_table("likelihood", &self.likelihood, ns * nb * nd, &self.o)?;
        check_table("low_left", &self.low_left, ns * nb * nd * na, &self.c)?;
        check_table("low_right", &self.low_right, ns * nb * nd * na, &self.e)?;
        check_table("gen_left", &self.gen_left, ns * no, &self.b)?;
        check_table("gen_right", &self.gen_right, ns * no, &self.d)?;
        if self.trans.dom().len() != ns * nb * nd * na || self.trans.cod().len() != ns {
            return Err(Error::CarrierMismatch(format!(
                "manager transition {} ⇝ {}, expected {} ⇝ {ns}",
                self.trans.dom().len(),
                self.trans.cod().len(),
                ns * nb * nd * na
            )));
        }
        match &self.policy {
            ManagerPolicy::Table(t) => {
                check_table("policy", t, ns * no * self.c.len() * self.e.len(), &self.a)
            }
            ManagerPolicy::Efe { preferences, .. } if preferences.len() != no => {
                Err(Error::CarrierMismatch(format!(
                    "manager preferences over {} of {no} observations",
                    preferences.len()
                )))
            }
            ManagerPolicy::Efe { .. } => Ok(()),
        }
    }

    /// The manager's interface `By^C ⊗ Dy^E` below and `Oy^A` above.
    pub fn interfaces(&self) -> (Polynomial, Polynomial) {
        let below =
            Polynomial::monomial(&self.b, &self.c).tensor(&Polynomial::monomial(&self.d, &self.e));
        (below, Polynomial::monomial(&self.o, &self.a))
    }

    /// The lens `By^C ⊗ Dy^E -> Oy^A` the manager realizes in state `s`.
    pub fn wiring(&self, s: usize) -> crate::lens::Lens {
        let (below, above) = self.interfaces();
        let (nb, nd, ne) = (self.b.len(), self.d.len(), self.e.len());
        let mut fwd = Vec::with_capacity(nb * nd);
        let mut bwd = Vec::with_capacity(nb * nd);
        for b in 0..nb {
            for d in 0..nd {
                fwd.push(self.likelihood[self.sbd(s, b, d)]);
                bwd.push(
                    (0..self.a.len())
                        .map(|a| {
                            let k = self.sbda(s, b, d, a);
                            self.low_left[k] * ne + self.low_right[k]
                        })
                        .collect(),
                );
            }
        }
        crate::lens::Lens::new(below, above, fwd, bwd).expect("validated tables")
    }

    /// The manager model with the workers' positions frozen: states
    /// `S x B x D`, output `likelihood`, and `b`, `d` carried along unchanged.
    fn frozen_model(&self) -> GenSystem {
        let states = FinSet::product_all("SxBxD", &[&self.states, &self.b, &self.d]);
        let (ns, nb, nd, na) = (self.states.len(), self.b.len(), self.d.len(), self.a.len());
        let n = states.len();
        let mut rows = Vec::with_capacity(n);
        for s in 0..ns {
            for b in 0..nb {
                for d in 0..nd {
                    let per_action = (0..na)
                        .map(|a| {
                            let mut row = vec![0.0; n];
                            for (s2, &w) in self.trans.row(self.sbda(s, b, d, a)).iter().enumerate()
                            {
                                row[self.sbd(s2, b, d)] = w;
                            }
                            row
                        })
                        .collect();
                    rows.push(per_action);
                }
            }
        }
        GenSystem::from_rows(
            Polynomial::monomial(&self.o, &self.a),
            states,
            self.likelihood.clone(),
            rows,
        )
        .expect("validated tables")
    }
}

/// The step-local quantities the composite controller computes on observing.
#[derive(Clone, Debug, PartialEq)]
pub(crate) struct Observed {
    obs: usize,
    joint: Dist,
    map_state: usize,
    b_hat: usize,
    d_hat: usize,
    c: usize,
    e: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CompositeBelief {
    pub manager: Dist,
    pub left: Belief,
    pub right: Belief,
    pub(crate) observed: Option<Observed>,
}

#[derive(Clone, Debug)]
pub(crate) struct Hierarchy {
    manager: HierAgent,
    left: Agent,
    right: Agent,
    frozen: Option<GenSystem>,
    guard: u128,
}

impl Hierarchy {
    pub(crate) fn set_guard(&mut self, guard: u128) {
        self.guard = guard;
        self.left = self.left.clone().with_guard(guard);
        self.right = self.right.clone().with_guard(guard);
    }

    fn composite<'a>(&self, belief: &'a Belief) -> Result<&'a CompositeBelief> {
        match belief {
            Belief::Composite(cb) => Ok(cb),
            Belief::State(_) => Err(Error::invalid(
                "belief",
                "composite agent given a state belief",
            )),
        }
    }

    pub(crate) fn initial_belief(&self) -> Belief {
        Belief::Composite(Box::new(CompositeBelief {
            manager: self.manager.prior.clone(),
            left: self.left.initial_belief(),
            right: self.right.initial_belief(),
            observed: None,
        }))
    }

    /// `μ(s) P_L(b) P_R(d)` over `S x B x D`.
    fn prior_joint(&self, cb: &CompositeBelief) -> Result<Vec<f64>> {
        let m = &self.manager;
        let pl = self.left.predicted_positions(&cb.left)?;
        let pr = self.right.predicted_positions(&cb.right)?;
        let mut joint = Vec::with_capacity(m.states.len() * m.b.len() * m.d.len());
        for s in 0..m.states.len() {
            for b in 0..m.b.len() {
                for d in 0..m.d.len() {
                    joint.push(cb.manager.prob(s) * pl.prob(b) * pr.prob(d));
                }
            }
        }
        Ok(joint)
    }

    pub(crate) fn predicted_positions(&self, belief: &Belief) -> Result<Dist> {
        let joint = self.prior_joint(self.composite(belief)?)?;
        let mut mass = vec![0.0; self.manager.o.len()];
        for (k, &w) in joint.iter().enumerate() {
            mass[self.manager.likelihood[k]] += w;
        }
        Dist::from_weights(&self.manager.o, mass)
    }

    pub(crate) fn observe(&self, belief: &Belief, o: usize) -> Result<Belief> {
        let m = &self.manager;
        let cb = self.composite(belief)?;
        let mut joint = self.prior_joint(cb)?;
        for (k, w) in joint.iter_mut().enumerate() {
            if m.likelihood[k] != o {
                *w = 0.0;
            }
        }
        let evidence: f64 = joint.iter().sum();
        if evidence <= EPS_NORM {
            return Err(Error::ZeroEvidence(format!(
                "manager cannot explain observation {}",
                m.o.label(o)
            )));
        }
        let frozen_states = FinSet::product_all("SxBxD", &[&m.states, &m.b, &m.d]);
        let joint = Dist::from_weights(&frozen_states, joint)?;
        let bd = m.b.len() * m.d.len();
        let manager = Dist::from_weights(
            &m.states,
            (0..m.states.len())
                .map(|s| joint.masses()[s * bd..(s + 1) * bd].iter().sum())
                .collect(),
        )?;
        let map_state = manager.argmax();
        let b_hat = m.gen_left[m.so(map_state, o)];
        let d_hat = m.gen_right[m.so(map_state, o)];
        let left = self.left.observe(&cb.left, b_hat)?;
        let c = self.left.act(&left, b_hat)?.direction;
        let right = self.right.observe(&cb.right, d_hat)?;
        let e = self.right.act(&right, d_hat)?.direction;
        Ok(Belief::Composite(Box::new(CompositeBelief {
            manager,
            left,
            right,
            observed: Some(Observed {
                obs: o,
                joint,
                map_state,
                b_hat,
                d_hat,
                c,
                e,
            }),
        })))
    }

    fn observed<'a>(&self, belief: &'a Belief) -> Result<(&'a CompositeBelief, &'a Observed)> {
        let cb = self.composite(belief)?;
        let obs = cb.observed.as_ref().ok_or_else(|| {
            Error::invalid("belief", "composite belief has not observed this step")
        })?;
        Ok((cb, obs))
    }

    pub(crate) fn act(&self, belief: &Belief, position: usize) -> Result<Decision> {
        let m = &self.manager;
        let (_, obs) = self.observed(belief)?;
        if obs.obs != position {
            return Err(Error::invalid(
                "belief",
                "composite belief observed a different position",
            ));
        }
        match &m.policy {
            ManagerPolicy::Table(table) => {
                let k = ((m.so(obs.map_state, obs.obs)) * m.c.len() + obs.c) * m.e.len() + obs.e;
                Ok(Decision {
                    direction: table[k],
                    policy_index: None,
                    g: None,
                })
            }
            ManagerPolicy::Efe {
                preferences,
                horizon,
            } => select_from_conditioned(
                self.frozen.as_ref().expect("built with an EFE policy"),
                preferences,
                *horizon,
                self.guard,
                &obs.joint,
                position,
            ),
        }
    }

    pub(crate) fn advance(&self, belief: &Belief, a: usize) -> Result<Belief> {
        let m = &self.manager;
        let (cb, obs) = self.observed(belief)?;
        if a >= m.a.len() {
            return Err(Error::UntypedAction(format!(
                "manager action {a} of {}",
                m.a.len()
            )));
        }
        let ns = m.states.len();
        let mut next = vec![0.0; ns];
        for s in 0..ns {
            for b in 0..m.b.len() {
                for d in 0..m.d.len() {
                    let w = obs.joint.prob(m.sbd(s, b, d));
                    if w == 0.0 {
                        continue;
                    }
                    for (x, &r) in next.iter_mut().zip(m.trans.row(m.sbda(s, b, d, a))) {
                        *x += w * r;
                    }
                }
            }
        }
        let k = m.sbda(obs.map_state, obs.b_hat, obs.d_hat, a);
        let left = self.left.advance(&cb.left, obs.b_hat, m.low_left[k])?;
        let right = self.right.advance(&cb.right, obs.d_hat, m.low_right[k])?;
        Ok(Belief::Composite(Box::new(CompositeBelief {
            manager: Dist::from_weights(&m.states, next)?,
            left,
            right,
            observed: None,
        })))
    }

    pub(crate) fn state_belief(&self, belief: &Belief, states: &FinSet) -> Result<Dist> {
        let cb = self.composite(belief)?;
        let joint = cb
            .manager
            .tensor(&self.left.state_belief(&cb.left)?)
            .tensor(&self.right.state_belief(&cb.right)?);
        Ok(Dist::from_raw(states.clone(), joint.masses().to_vec()))
    }
}

/// Workers must match the manager's carriers in size; labels may differ.
fn check_worker(name: &str, worker: &Agent, positions: &FinSet, directions: &FinSet) -> Result<()> {
    let expected = Polynomial::monomial(positions, directions);
    if worker.iface().arities() != expected.arities() {
        return Err(Error::CarrierMismatch(format!(
            "{name} worker is over {}, the manager expects {expected}",
            worker.iface()
        )));
    }
    Ok(())
}

/// The composite agent over `Oy^A`.
pub fn compose_hierarchy(manager: HierAgent, left: Agent, right: Agent) -> Result<Agent> {
    manager.validate()?;
    check_worker("left", &left, &manager.b, &manager.c)?;
    check_worker("right", &right, &manager.d, &manager.e)?;
    let m = &manager;
    let (lm, rm) = (left.model().system(), right.model().system());
    let (nt, nu) = (lm.num_states(), rm.num_states());
    let states = FinSet::product_all(
        format!(
            "{}x{}x{}",
            m.states.name(),
            lm.states().name(),
            rm.states().name()
        ),
        &[&m.states, lm.states(), rm.states()],
    );
    let mut out = Vec::with_capacity(states.len());
    let mut rows = Vec::with_capacity(states.len());
    for s in 0..m.states.len() {
        for t in 0..nt {
            for u in 0..nu {
                let (b, d) = (lm.out()[t], rm.out()[u]);
                out.push(m.likelihood[m.sbd(s, b, d)]);
                let per_action = (0..m.a.len())
                    .map(|a| {
                        let k = m.sbda(s, b, d, a);
                        let (lt, ru) = (
                            lm.transition(t, m.low_left[k]),
                            rm.transition(u, m.low_right[k]),
                        );
                        let mut row = Vec::with_capacity(states.len());
                        for &x in m.trans.row(k) {
                            for &y in lt {
                                for &z in ru {
                                    row.push(x * y * z);
                                }
                            }
                        }
                        row
                    })
                    .collect();
                rows.push(per_action);
            }
        }
    }
    let system = GenSystem::new(
        Polynomial::monomial(&m.o, &m.a),
        states.clone(),
        out.clone(),
        Channel::from_data(
            FinSet::range("ΣS", rows.iter().map(Vec::len).sum()),
            states.clone(),
            rows.into_iter().flatten().flatten().collect(),
        ),
    )?;
    let prior = m
        .prior
        .tensor(left.model().prior())
        .tensor(right.model().prior());
    let model = PrioredGenSystem::new(system, Dist::from_raw(states, prior.masses().to_vec()))?;
    let (preferences, horizon, frozen) = match &m.policy {
        ManagerPolicy::Efe {
            preferences,
            horizon,
        } => (
            Dist::new(m.o.clone(), preferences.masses().to_vec())?,
            *horizon,
            Some(m.frozen_model()),
        ),
        ManagerPolicy::Table(_) => (Dist::uniform(&m.o), 0, None),
    };
    let guard = DEFAULT_POLICY_GUARD;
    Ok(Agent::hierarchical(
        model,
        preferences,
        horizon,
        Hierarchy {
            manager,
            left,
            right,
            frozen,
            guard,
        },
    ))
}

/// The trivial agent over `y`.
pub fn trivial_agent() -> Agent {
    let unit = FinSet::unit();
    let sys = GenSystem::from_rows(
        Polynomial::y(),
        unit.clone(),
        vec![0],
        vec![vec![vec![1.0]]],
    )
    .expect("unit system");
    let model = PrioredGenSystem::new(sys, Dist::point(&unit, 0)).expect("unit prior");
    Agent::fixed(model, vec![0]).expect("unit table")
}

/// Stacks managers with trivial observations on top of `bottom`: each
/// manager's `C` is the actions of the level below and its right worker is
/// trivial.
pub fn build_deep_chain(bottom: Agent, managers: Vec<HierAgent>) -> Result<Agent> {
    let mut agent = bottom;
    for (level, m) in managers.into_iter().enumerate() {
        for (name, set) in [("B", &m.b), ("D", &m.d), ("E", &m.e), ("O", &m.o)] {
            if set.len() != 1 {
                return Err(Error::CarrierMismatch(format!(
                    "level {} has |{name}| = {}; chain levels need trivial observations",
                    level + 1,
                    set.len()
                )));
            }
        }
        agent = compose_hierarchy(m, agent, trivial_agent())?;
    }
    Ok(agent)
}
