//! Coupling an agent to an environment over the same interface.

use rand::Rng;
use rayon::prelude::*;

use super::{Agent, Belief};
use crate::error::{Error, Result};
use crate::rng::{derived_rng, rng_from_seed};
use crate::stoch::sample_index;
use crate::systems::PrioredGenSystem;

/// One step of an episode. `belief` is the agent's state belief after
/// conditioning on `position`. The final record of an episode has no action.
#[derive(Clone, Debug, PartialEq)]
pub struct EpisodeRecord {
    pub t: usize,
    pub env_state: usize,
    pub position: usize,
    pub belief: Vec<f64>,
    pub direction: Option<usize>,
    pub policy_index: Option<usize>,
    pub g: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Episode {
    pub records: Vec<EpisodeRecord>,
}

fn check_coupling(agent: &Agent, env: &PrioredGenSystem) -> Result<()> {
    if agent.iface() != env.system().iface() {
        return Err(Error::InterfaceMismatch(format!(
            "agent over {} coupled to an environment over {}",
            agent.iface(),
            env.system().iface()
        )));
    }
    Ok(())
}

/// Condition, act, transition, predict; `steps + 1` records.
pub fn simulate_with<R: Rng + ?Sized>(
    agent: &Agent,
    env: &PrioredGenSystem,
    steps: usize,
    rng: &mut R,
) -> Result<Episode> {
    check_coupling(agent, env)?;
    let sys = env.system();
    let mut s = env.prior().sample(rng);
    let mut belief = agent.initial_belief();
    let mut records = Vec::with_capacity(steps + 1);
    for t in 0..=steps {
        let position = sys.out()[s];
        let observed = agent.observe(&belief, position)?;
        let state_belief = agent.state_belief(&observed)?.masses().to_vec();
        if t == steps {
            records.push(EpisodeRecord {
                t,
                env_state: s,
                position,
                belief: state_belief,
                direction: None,
                policy_index: None,
                g: None,
            });
            break;
        }
        let decision = agent.act(&observed, position)?;
        if decision.direction >= sys.iface().arity(position) {
            return Err(Error::UntypedAction(format!(
                "direction {} at {}",
                decision.direction,
                sys.iface().positions().label(position)
            )));
        }
        records.push(EpisodeRecord {
            t,
            env_state: s,
            position,
            belief: state_belief,
            direction: Some(decision.direction),
            policy_index: decision.policy_index,
            g: decision.g,
        });
        s = sample_index(sys.transition(s, decision.direction), rng);
        belief = agent.advance(&observed, position, decision.direction)?;
    }
    Ok(Episode { records })
}

pub fn simulate_episode(
    agent: &Agent,
    env: &PrioredGenSystem,
    steps: usize,
    seed: u64,
) -> Result<Episode> {
    simulate_with(agent, env, steps, &mut rng_from_seed(seed))
}

/// `n` episodes; episode `k` uses the stream derived from `(seed, k)`.
pub fn simulate_batch(
    agent: &Agent,
    env: &PrioredGenSystem,
    steps: usize,
    seed: u64,
    n: usize,
) -> Result<Vec<Episode>> {
    (0..n)
        .into_par_iter()
        .map(|k| simulate_with(agent, env, steps, &mut derived_rng(seed, k as u64)))
        .collect()
}

/// One environment path with its probability and the agent's actions along it.
#[derive(Clone, Debug, PartialEq)]
pub struct PathOutcome {
    pub prob: f64,
    pub states: Vec<usize>,
    pub directions: Vec<usize>,
}

/// The exact distribution over `steps`-step environment paths. Controllers
/// are deterministic given the observations, so only the environment
/// branches. Paths of probability zero are dropped.
pub fn exact_episode_distribution(
    agent: &Agent,
    env: &PrioredGenSystem,
    steps: usize,
) -> Result<Vec<PathOutcome>> {
    check_coupling(agent, env)?;
    let mut out = Vec::new();
    let belief = agent.initial_belief();
    for (s, &w) in env.prior().masses().iter().enumerate() {
        if w > 0.0 {
            explore(
                agent,
                env,
                steps,
                &belief,
                PathOutcome {
                    prob: w,
                    states: vec![s],
                    directions: Vec::new(),
                },
                &mut out,
            )?;
        }
    }
    Ok(out)
}

fn explore(
    agent: &Agent,
    env: &PrioredGenSystem,
    steps: usize,
    belief: &Belief,
    path: PathOutcome,
    out: &mut Vec<PathOutcome>,
) -> Result<()> {
    if path.directions.len() == steps {
        out.push(path);
        return Ok(());
    }
    let sys = env.system();
    let s = *path.states.last().expect("nonempty path");
    let position = sys.out()[s];
    let observed = agent.observe(belief, position)?;
    let d = agent.act(&observed, position)?.direction;
    let next_belief = agent.advance(&observed, position, d)?;
    for (s2, &w) in sys.transition(s, d).iter().enumerate() {
        if w > 0.0 {
            let mut next = path.clone();
            next.prob *= w;
            next.states.push(s2);
            next.directions.push(d);
            explore(agent, env, steps, &next_belief, next, out)?;
        }
    }
    Ok(())
}
