//! Agents: a priored generative model paired with a controller on its dual.
//!
//! The controller is realized by its two maps rather than as an enumerated
//! machine on `[p, y]`: [`Agent::observe`] conditions the belief on the
//! current position, [`Agent::act`] picks a direction there, and
//! [`Agent::advance`] predicts through the model's update.

mod episode;
mod hierarchy;
pub mod policy;

pub use episode::{
    exact_episode_distribution, simulate_batch, simulate_episode, Episode, EpisodeRecord,
    PathOutcome,
};
pub use hierarchy::{
    build_deep_chain, compose_hierarchy, trivial_agent, CompositeBelief, HierAgent, ManagerPolicy,
};
pub use policy::{
    check_policy_composable, enumerate_typed_policies, expected_free_energy, plan_table, Decision,
    TypedPolicy, DEFAULT_POLICY_GUARD,
};

use crate::error::{Error, Result};
use crate::poly::Polynomial;
use crate::stoch::{Dist, EPS_NORM};
use crate::systems::{GenSystem, PrioredGenSystem};

use hierarchy::Hierarchy;

/// What the controller holds between steps.
#[derive(Clone, Debug, PartialEq)]
pub enum Belief {
    State(Dist),
    Composite(Box<CompositeBelief>),
}

#[derive(Clone, Debug)]
pub(crate) enum ControllerKind {
    Efe,
    Fixed(Vec<usize>),
    Hierarchical(Box<Hierarchy>),
}

#[derive(Clone, Debug)]
pub struct Agent {
    model: PrioredGenSystem,
    preferences: Dist,
    horizon: usize,
    guard: u128,
    controller: ControllerKind,
}

/// Conditions `belief` on `out(s) = position`.
pub fn condition(model: &GenSystem, belief: &Dist, position: usize) -> Result<Dist> {
    let weights: Vec<f64> = belief
        .masses()
        .iter()
        .enumerate()
        .map(|(s, &w)| if model.out()[s] == position { w } else { 0.0 })
        .collect();
    let evidence: f64 = weights.iter().sum();
    if evidence <= EPS_NORM {
        return Err(Error::ZeroEvidence(format!(
            "position {} has predicted probability {evidence}",
            model.iface().positions().label(position)
        )));
    }
    Dist::from_weights(model.states(), weights)
}

/// Condition on the observed position, then predict through the update at
/// the taken direction.
pub fn exact_infer(
    model: &GenSystem,
    belief: &Dist,
    position: usize,
    direction: usize,
) -> Result<Dist> {
    if direction >= model.iface().arity(position) {
        return Err(Error::UntypedAction(format!(
            "direction {direction} at {}",
            model.iface().positions().label(position)
        )));
    }
    let post = condition(model, belief, position)?;
    Ok(model.propagate(&post, |_| direction))
}

/// EFE action selection for `agent`'s model from `belief` at `position`.
pub fn select_action(agent: &Agent, belief: &Dist, position: usize) -> Result<usize> {
    let sys = agent.model.system();
    let post = condition(sys, belief, position)?;
    Ok(policy::select_from_conditioned(
        sys,
        &agent.preferences,
        agent.horizon,
        agent.guard,
        &post,
        position,
    )?
    .direction)
}

fn relabel_prefs(model: &PrioredGenSystem, preferences: &Dist) -> Result<Dist> {
    let positions = model.system().iface().positions();
    if preferences.len() != positions.len() {
        return Err(Error::CarrierMismatch(format!(
            "preferences over {} elements, interface has {} positions",
            preferences.len(),
            positions.len()
        )));
    }
    Dist::new(positions.clone(), preferences.masses().to_vec())
}

impl Agent {
    /// An agent selecting actions by expected free energy over `horizon` steps.
    pub fn new(model: PrioredGenSystem, preferences: Dist, horizon: usize) -> Result<Self> {
        let preferences = relabel_prefs(&model, &preferences)?;
        Ok(Agent {
            model,
            preferences,
            horizon,
            guard: DEFAULT_POLICY_GUARD,
            controller: ControllerKind::Efe,
        })
    }

    /// An agent that filters like any other but always plays `table[position]`.
    pub fn fixed(model: PrioredGenSystem, table: Vec<usize>) -> Result<Self> {
        let iface = model.system().iface();
        if table.len() != iface.num_positions() {
            return Err(Error::invalid(
                "controller",
                format!(
                    "table has {} entries for {} positions",
                    table.len(),
                    iface.num_positions()
                ),
            ));
        }
        for (i, &d) in table.iter().enumerate() {
            if iface.arity(i) > 0 && d >= iface.arity(i) {
                return Err(Error::UntypedAction(format!(
                    "table plays {d} at {}, which has {} directions",
                    iface.positions().label(i),
                    iface.arity(i)
                )));
            }
        }
        let preferences = Dist::uniform(iface.positions());
        Ok(Agent {
            model,
            preferences,
            horizon: 0,
            guard: DEFAULT_POLICY_GUARD,
            controller: ControllerKind::Fixed(table),
        })
    }

    pub(crate) fn hierarchical(
        model: PrioredGenSystem,
        preferences: Dist,
        horizon: usize,
        h: Hierarchy,
    ) -> Self {
        Agent {
            model,
            preferences,
            horizon,
            guard: DEFAULT_POLICY_GUARD,
            controller: ControllerKind::Hierarchical(Box::new(h)),
        }
    }

    /// Overrides the policy-enumeration guard, recursively for composites.
    pub fn with_guard(mut self, guard: u128) -> Self {
        self.guard = guard;
        if let ControllerKind::Hierarchical(h) = &mut self.controller {
            h.set_guard(guard);
        }
        self
    }

    pub fn iface(&self) -> &Polynomial {
        self.model.system().iface()
    }

    pub fn model(&self) -> &PrioredGenSystem {
        &self.model
    }

    pub fn preferences(&self) -> &Dist {
        &self.preferences
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn guard(&self) -> u128 {
        self.guard
    }

    pub fn is_composite(&self) -> bool {
        matches!(self.controller, ControllerKind::Hierarchical(_))
    }

    pub fn initial_belief(&self) -> Belief {
        match &self.controller {
            ControllerKind::Hierarchical(h) => h.initial_belief(),
            _ => Belief::State(self.model.prior().clone()),
        }
    }

    fn state_dist<'a>(&self, belief: &'a Belief) -> Result<&'a Dist> {
        match belief {
            Belief::State(d) if d.len() == self.model.system().num_states() => Ok(d),
            _ => Err(Error::invalid(
                "belief",
                "belief does not match this controller",
            )),
        }
    }

    /// Predicted distribution over the current position.
    pub fn predicted_positions(&self, belief: &Belief) -> Result<Dist> {
        match &self.controller {
            ControllerKind::Hierarchical(h) => h.predicted_positions(belief),
            _ => Ok(self
                .model
                .system()
                .position_marginal(self.state_dist(belief)?)),
        }
    }

    pub fn observe(&self, belief: &Belief, position: usize) -> Result<Belief> {
        match &self.controller {
            ControllerKind::Hierarchical(h) => h.observe(belief, position),
            _ => Ok(Belief::State(condition(
                self.model.system(),
                self.state_dist(belief)?,
                position,
            )?)),
        }
    }

    /// Chooses a direction at `position` from an observed belief.
    pub fn act(&self, belief: &Belief, position: usize) -> Result<Decision> {
        let iface = self.iface();
        if iface.arity(position) == 0 {
            return Err(Error::NoAvailableAction(
                iface.positions().label(position).to_string(),
            ));
        }
        match &self.controller {
            ControllerKind::Efe => policy::select_from_conditioned(
                self.model.system(),
                &self.preferences,
                self.horizon,
                self.guard,
                self.state_dist(belief)?,
                position,
            ),
            ControllerKind::Fixed(table) => Ok(Decision {
                direction: table[position],
                policy_index: None,
                g: None,
            }),
            ControllerKind::Hierarchical(h) => h.act(belief, position),
        }
    }

    /// Predicts the next belief after playing `direction` at `position`.
    pub fn advance(&self, belief: &Belief, position: usize, direction: usize) -> Result<Belief> {
        match &self.controller {
            ControllerKind::Hierarchical(h) => h.advance(belief, direction),
            _ => {
                let sys = self.model.system();
                if direction >= sys.iface().arity(position) {
                    return Err(Error::UntypedAction(format!(
                        "direction {direction} at {}",
                        sys.iface().positions().label(position)
                    )));
                }
                Ok(Belief::State(
                    sys.propagate(self.state_dist(belief)?, |_| direction),
                ))
            }
        }
    }

    /// The belief as a distribution over the model's states; composites
    /// report the product of their components' marginals.
    pub fn state_belief(&self, belief: &Belief) -> Result<Dist> {
        match &self.controller {
            ControllerKind::Hierarchical(h) => h.state_belief(belief, self.model.system().states()),
            _ => Ok(self.state_dist(belief)?.clone()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::finset::FinSet;

    fn two_position_model() -> PrioredGenSystem {
        // state k sits at position k; action a goes to state 0, action b stays put
        let p = Polynomial::monomial(
            &FinSet::new("O", ["good", "bad"]).unwrap(),
            &FinSet::new("A", ["a", "b"]).unwrap(),
        );
        let states = FinSet::range("S", 2);
        let sys = GenSystem::from_rows(
            p,
            states.clone(),
            vec![0, 1],
            vec![
                vec![vec![1.0, 0.0], vec![1.0, 0.0]],
                vec![vec![1.0, 0.0], vec![0.0, 1.0]],
            ],
        )
        .unwrap();
        PrioredGenSystem::new(sys, Dist::point(&states, 1)).unwrap()
    }

    #[test]
    fn reaching_the_preferred_position() {
        let model = two_position_model();
        let prefs = Dist::new(model.system().iface().positions().clone(), vec![0.9, 0.1]).unwrap();
        let agent = Agent::new(model.clone(), prefs.clone(), 1).unwrap();
        let belief = Dist::point(model.system().states(), 1);
        let pols = enumerate_typed_policies(agent.iface(), 1, DEFAULT_POLICY_GUARD).unwrap();
        let g: Vec<f64> = pols
            .iter()
            .map(|pi| expected_free_energy(model.system(), &prefs, &belief, pi))
            .collect();
        assert!((g[0] - 0.9f64.recip().ln()).abs() < 1e-15);
        assert!((g[1] - 0.1f64.recip().ln()).abs() < 1e-15);
        assert_eq!(select_action(&agent, &belief, 1).unwrap(), 0);
    }

    #[test]
    fn one_step_kl_by_hand() {
        let p = Polynomial::monomial(&FinSet::range("O", 2), &FinSet::range("A", 1));
        let states = FinSet::range("S", 2);
        let sys = GenSystem::from_rows(
            p,
            states.clone(),
            vec![0, 1],
            vec![vec![vec![1.0, 0.0]], vec![vec![0.0, 1.0]]],
        )
        .unwrap();
        let prefs = Dist::new(FinSet::range("O", 2), vec![0.9, 0.1]).unwrap();
        let pols = enumerate_typed_policies(sys.iface(), 1, DEFAULT_POLICY_GUARD).unwrap();
        let g = expected_free_energy(&sys, &prefs, &Dist::uniform(&states), &pols[0]);
        let expected = 0.5 * (0.5f64 / 0.9).ln() + 0.5 * (0.5f64 / 0.1).ln();
        assert!((g - expected).abs() < 1e-15);
    }

    #[test]
    fn inference_examples() {
        let model = two_position_model();
        let sys = model.system();
        let uniform = Dist::uniform(sys.states());
        assert_eq!(
            exact_infer(sys, &uniform, 1, 1).unwrap().masses(),
            &[0.0, 1.0]
        );
        assert!(matches!(
            exact_infer(sys, &Dist::point(sys.states(), 0), 1, 0),
            Err(Error::ZeroEvidence(_))
        ));
    }

    #[test]
    fn fixed_table_is_typed() {
        let model = two_position_model();
        assert!(Agent::fixed(model.clone(), vec![0, 1]).is_ok());
        assert!(matches!(
            Agent::fixed(model, vec![0, 2]),
            Err(Error::UntypedAction(_))
        ));
    }
}
