//! Typed policies and expected free energy.

use rayon::prelude::*;

use crate::category::FinCategory;
use crate::error::{Error, Result};
use crate::finset::MixedRadix;
use crate::poly::Polynomial;
use crate::stoch::{kl_divergence, Dist};
use crate::systems::GenSystem;

pub const DEFAULT_POLICY_GUARD: u128 = 100_000;

/// A choice of direction at every position; `None` exactly at positions
/// without directions.
pub type Section = Vec<Option<usize>>;

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct TypedPolicy {
    steps: Vec<Section>,
}

impl TypedPolicy {
    pub fn new(p: &Polynomial, steps: Vec<Section>) -> Result<Self> {
        for (t, sigma) in steps.iter().enumerate() {
            if sigma.len() != p.num_positions() {
                return Err(Error::invalid(
                    "policy",
                    format!("step {t} covers {} positions", sigma.len()),
                ));
            }
            for (i, d) in sigma.iter().enumerate() {
                let ok = match d {
                    Some(d) => *d < p.arity(i),
                    None => p.arity(i) == 0,
                };
                if !ok {
                    return Err(Error::UntypedAction(format!(
                        "step {t} picks {d:?} at {}, which has {} directions",
                        p.positions().label(i),
                        p.arity(i)
                    )));
                }
            }
        }
        Ok(TypedPolicy { steps })
    }

    pub fn steps(&self) -> &[Section] {
        &self.steps
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    /// Renders steps as `[a|b]` per section over position labels.
    pub fn describe(&self, p: &Polynomial) -> Vec<String> {
        self.steps
            .iter()
            .map(|sigma| {
                sigma
                    .iter()
                    .enumerate()
                    .map(|(i, d)| match d {
                        Some(d) => p.directions(i).label(*d).to_string(),
                        None => "-".to_string(),
                    })
                    .collect::<Vec<_>>()
                    .join("|")
            })
            .collect()
    }
}

/// Sections considered at each step. On a monomial `Oy^A` these are the
/// constant sections, one per action; otherwise every section.
pub fn sections(p: &Polynomial) -> Vec<Section> {
    let n = p.num_positions();
    if n > 0 && p.is_monomial() && p.arity(0) > 0 {
        return (0..p.arity(0)).map(|a| vec![Some(a); n]).collect();
    }
    let radices: Vec<usize> = p.arities().iter().map(|&a| a.max(1)).collect();
    MixedRadix::new(radices)
        .map(|digits| {
            digits
                .iter()
                .enumerate()
                .map(|(i, &d)| (p.arity(i) > 0).then_some(d))
                .collect()
        })
        .collect()
}

fn sections_count(p: &Polynomial) -> u128 {
    let n = p.num_positions();
    if n > 0 && p.is_monomial() && p.arity(0) > 0 {
        return p.arity(0) as u128;
    }
    p.arities()
        .iter()
        .fold(1u128, |acc, &a| acc.saturating_mul(a.max(1) as u128))
}

pub fn policy_count(p: &Polynomial, horizon: usize) -> u128 {
    let per_step = sections_count(p);
    (0..horizon).fold(1u128, |acc, _| acc.saturating_mul(per_step))
}

/// All length-`horizon` section sequences, first step most significant.
pub fn enumerate_typed_policies(
    p: &Polynomial,
    horizon: usize,
    guard: u128,
) -> Result<Vec<TypedPolicy>> {
    let count = policy_count(p, horizon);
    if count > guard {
        return Err(Error::SizeGuardExceeded {
            what: format!("policies over {p} at horizon {horizon}"),
            cardinality: count,
            guard,
        });
    }
    let per_step = sections(p);
    Ok(MixedRadix::new(vec![per_step.len(); horizon])
        .map(|digits| TypedPolicy {
            steps: digits.iter().map(|&k| per_step[k].clone()).collect(),
        })
        .collect())
}

/// True iff the labelled morphisms form a composable path.
pub fn check_policy_composable(c: &FinCategory, labels: &[&str]) -> Result<bool> {
    c.is_composable_path(labels)
}

/// One predicted step under a section. Mass at positions without directions
/// stays where it is.
pub fn rollout_step(model: &GenSystem, belief: &[f64], section: &Section) -> Vec<f64> {
    let mut next = vec![0.0; belief.len()];
    for (s, &w) in belief.iter().enumerate() {
        if w == 0.0 {
            continue;
        }
        match section[model.out()[s]] {
            Some(d) => {
                for (m, &r) in next.iter_mut().zip(model.transition(s, d)) {
                    *m += w * r;
                }
            }
            None => next[s] += w,
        }
    }
    next
}

/// `G(π) = Σ_t KL(q_t ‖ preferences)` where `q_t` is the predicted position
/// marginal after `t` steps of `π` from `belief`.
pub fn expected_free_energy(
    model: &GenSystem,
    preferences: &Dist,
    belief: &Dist,
    policy: &TypedPolicy,
) -> f64 {
    let n_pos = model.iface().num_positions();
    let mut q = belief.masses().to_vec();
    let mut g = 0.0;
    for section in policy.steps() {
        q = rollout_step(model, &q, section);
        let mut marginal = vec![0.0; n_pos];
        for (s, &w) in q.iter().enumerate() {
            marginal[model.out()[s]] += w;
        }
        g += kl_divergence(&marginal, preferences.masses());
    }
    g
}

/// A controller's action together with the winning policy and its score.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Decision {
    pub direction: usize,
    pub policy_index: Option<usize>,
    pub g: Option<f64>,
}

/// Scores every policy from an already conditioned belief.
pub fn score_policies(
    model: &GenSystem,
    preferences: &Dist,
    horizon: usize,
    guard: u128,
    belief: &Dist,
) -> Result<(Vec<TypedPolicy>, Vec<f64>)> {
    let policies = enumerate_typed_policies(model.iface(), horizon, guard)?;
    let scores = policies
        .par_iter()
        .map(|pi| expected_free_energy(model, preferences, belief, pi))
        .collect();
    Ok((policies, scores))
}

/// EFE argmin from a conditioned belief; the first minimal policy wins.
pub fn select_from_conditioned(
    model: &GenSystem,
    preferences: &Dist,
    horizon: usize,
    guard: u128,
    belief: &Dist,
    position: usize,
) -> Result<Decision> {
    let iface = model.iface();
    if iface.arity(position) == 0 {
        return Err(Error::NoAvailableAction(
            iface.positions().label(position).to_string(),
        ));
    }
    if horizon == 0 {
        return Ok(Decision {
            direction: 0,
            policy_index: None,
            g: None,
        });
    }
    let (policies, scores) = score_policies(model, preferences, horizon, guard, belief)?;
    let mut best = 0;
    for (k, &g) in scores.iter().enumerate() {
        if g < scores[best] {
            best = k;
        }
    }
    let direction = policies[best].steps()[0][position].expect("position has directions");
    Ok(Decision {
        direction,
        policy_index: Some(best),
        g: Some(scores[best]),
    })
}

/// Policies ranked by ascending `G`, ties in canonical order.
pub fn plan_table(
    model: &GenSystem,
    preferences: &Dist,
    horizon: usize,
    guard: u128,
    belief: &Dist,
) -> Result<Vec<(usize, TypedPolicy, f64)>> {
    if horizon == 0 {
        return Ok(Vec::new());
    }
    let (policies, scores) = score_policies(model, preferences, horizon, guard, belief)?;
    let mut rows: Vec<_> = policies
        .into_iter()
        .zip(scores)
        .enumerate()
        .map(|(k, (pi, g))| (k, pi, g))
        .collect();
    rows.sort_by(|a, b| a.2.total_cmp(&b.2).then(a.0.cmp(&b.0)));
    Ok(rows)
}
