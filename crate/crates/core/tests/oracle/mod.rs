//! Hand-written oracles for hierarchical composition: the product-state
//! flattening and the composite controller written out as explicit loops.

#![allow(dead_code, clippy::needless_range_loop, clippy::too_many_arguments)]

use std::collections::HashMap;

use polyagent_core::agent::{exact_episode_distribution, HierAgent, ManagerPolicy};
use polyagent_core::finset::FinSet;
use polyagent_core::{Agent, Channel, Dist, GenSystem, Polynomial, PrioredGenSystem};

pub fn set(name: &str, n: usize) -> FinSet {
    FinSet::range(name, n)
}

pub fn argmax(v: &[f64]) -> usize {
    (0..v.len()).fold(0, |b, k| if v[k] > v[b] { k } else { b })
}

pub fn normalize(v: &mut [f64]) {
    let z: f64 = v.iter().sum();
    v.iter_mut().for_each(|x| *x /= z);
}

/// A fixed-table worker over `positions y^directions` whose state `t` shows `out[t]`.
pub fn worker(
    n_pos: usize,
    n_dir: usize,
    out: Vec<usize>,
    rows: Vec<Vec<Vec<f64>>>,
    prior: Vec<f64>,
    table: Vec<usize>,
) -> Agent {
    let states = set("T", out.len());
    let p = Polynomial::monomial(&set("P", n_pos), &set("Q", n_dir));
    let sys = GenSystem::from_rows(p, states.clone(), out, rows).unwrap();
    Agent::fixed(
        PrioredGenSystem::new(sys, Dist::new(states, prior).unwrap()).unwrap(),
        table,
    )
    .unwrap()
}

pub struct Dims {
    pub s: usize,
    pub b: usize,
    pub c: usize,
    pub d: usize,
    pub e: usize,
    pub o: usize,
    pub a: usize,
}

/// Deterministic pseudo-random rows with full support.
pub fn rows(count: usize, width: usize, salt: usize) -> Vec<Vec<f64>> {
    (0..count)
        .map(|k| {
            let mut r: Vec<f64> = (0..width)
                .map(|j| 1.0 + ((k * 7 + j * 3 + salt * 5) % 11) as f64)
                .collect();
            normalize(&mut r);
            r
        })
        .collect()
}

pub fn manager(dims: &Dims, prior: Vec<f64>, policy: ManagerPolicy, salt: usize) -> HierAgent {
    let Dims {
        s,
        b,
        c,
        d,
        e,
        o,
        a,
    } = *dims;
    let sbd = s * b * d;
    HierAgent {
        states: set("M", s),
        prior: Dist::new(set("M", s), prior).unwrap(),
        b: set("B", b),
        c: set("C", c),
        d: set("D", d),
        e: set("E", e),
        o: set("O", o),
        a: set("A", a),
        likelihood: (0..sbd).map(|k| (k * 5 + salt + k / 3) % o).collect(),
        low_left: (0..sbd * a).map(|k| (k + salt + k / 2) % c).collect(),
        low_right: (0..sbd * a).map(|k| (k * 3 + salt) % e).collect(),
        trans: Channel::new(set("K", sbd * a), set("M", s), rows(sbd * a, s, salt)).unwrap(),
        gen_left: (0..s * o).map(|k| (k + salt) % b).collect(),
        gen_right: (0..s * o).map(|k| (k * 3 + 1 + salt) % d).collect(),
        policy,
    }
}

/// The manager and workers flattened by hand onto `S x T x U`.
pub fn flatten(m: &HierAgent, left: &Agent, right: &Agent) -> PrioredGenSystem {
    let (l, r) = (left.model().system(), right.model().system());
    let (ns, nt, nu) = (m.states.len(), l.num_states(), r.num_states());
    let (nb, nd, na) = (m.b.len(), m.d.len(), m.a.len());
    let mut out = Vec::new();
    let mut table = Vec::new();
    for s in 0..ns {
        for t in 0..nt {
            for u in 0..nu {
                let (b, d) = (l.out()[t], r.out()[u]);
                out.push(m.likelihood[(s * nb + b) * nd + d]);
                let mut per_action = Vec::new();
                for a in 0..na {
                    let k = ((s * nb + b) * nd + d) * na + a;
                    let mut row = vec![0.0; ns * nt * nu];
                    for s2 in 0..ns {
                        for t2 in 0..nt {
                            for u2 in 0..nu {
                                row[(s2 * nt + t2) * nu + u2] = m.trans.get(k, s2)
                                    * l.transition(t, m.low_left[k])[t2]
                                    * r.transition(u, m.low_right[k])[u2];
                            }
                        }
                    }
                    per_action.push(row);
                }
                table.push(per_action);
            }
        }
    }
    let states = set("SxTxU", ns * nt * nu);
    let sys =
        GenSystem::from_rows(Polynomial::monomial(&m.o, &m.a), states.clone(), out, table).unwrap();
    let mut prior = Vec::new();
    for s in 0..ns {
        for t in 0..nt {
            for u in 0..nu {
                prior.push(
                    m.prior.prob(s) * left.model().prior().prob(t) * right.model().prior().prob(u),
                );
            }
        }
    }
    PrioredGenSystem::new(sys, Dist::new(states, prior).unwrap()).unwrap()
}

/// The composite controller written out directly, for fixed-table workers and a
/// table manager.
#[derive(Clone)]
pub struct Manual {
    pub mu: Vec<f64>,
    pub left: Vec<f64>,
    pub right: Vec<f64>,
}

pub struct ManualParts<'a> {
    pub m: &'a HierAgent,
    pub l: &'a GenSystem,
    pub r: &'a GenSystem,
    pub lt: &'a [usize],
    pub rt: &'a [usize],
}

impl ManualParts<'_> {
    pub fn step(&self, st: &Manual, o: usize) -> (usize, Manual) {
        let m = self.m;
        let (nb, nd, na, ns) = (m.b.len(), m.d.len(), m.a.len(), m.states.len());
        let marginal = |belief: &[f64], out: &[usize], n: usize| {
            let mut v = vec![0.0; n];
            for (t, &w) in belief.iter().enumerate() {
                v[out[t]] += w;
            }
            v
        };
        let pl = marginal(&st.left, self.l.out(), nb);
        let pr = marginal(&st.right, self.r.out(), nd);
        let mut joint = vec![0.0; ns * nb * nd];
        for s in 0..ns {
            for b in 0..nb {
                for d in 0..nd {
                    let k = (s * nb + b) * nd + d;
                    if m.likelihood[k] == o {
                        joint[k] = st.mu[s] * pl[b] * pr[d];
                    }
                }
            }
        }
        normalize(&mut joint);
        let post: Vec<f64> = (0..ns)
            .map(|s| joint[s * nb * nd..(s + 1) * nb * nd].iter().sum())
            .collect();
        let hat = argmax(&post);
        let (bh, dh) = (
            m.gen_left[hat * m.o.len() + o],
            m.gen_right[hat * m.o.len() + o],
        );
        let condition = |belief: &[f64], out: &[usize], pos: usize| {
            let mut v: Vec<f64> = belief
                .iter()
                .enumerate()
                .map(|(t, &w)| if out[t] == pos { w } else { 0.0 })
                .collect();
            normalize(&mut v);
            v
        };
        let left = condition(&st.left, self.l.out(), bh);
        let right = condition(&st.right, self.r.out(), dh);
        let (c, e) = (self.lt[bh], self.rt[dh]);
        let a = match &m.policy {
            ManagerPolicy::Table(t) => t[((hat * m.o.len() + o) * m.c.len() + c) * m.e.len() + e],
            ManagerPolicy::Efe { .. } => unreachable!(),
        };
        let mut mu = vec![0.0; ns];
        for (k, &w) in joint.iter().enumerate() {
            for s2 in 0..ns {
                mu[s2] += w * m.trans.get(k * na + a, s2);
            }
        }
        let cmd = ((hat * nb + bh) * nd + dh) * na + a;
        let predict = |belief: &[f64], sys: &GenSystem, dir: usize| {
            let mut v = vec![0.0; belief.len()];
            for (t, &w) in belief.iter().enumerate() {
                for (t2, &p) in sys.transition(t, dir).iter().enumerate() {
                    v[t2] += w * p;
                }
            }
            v
        };
        (
            a,
            Manual {
                mu,
                left: predict(&left, self.l, m.low_left[cmd]),
                right: predict(&right, self.r, m.low_right[cmd]),
            },
        )
    }
}

pub type Paths = HashMap<(Vec<usize>, Vec<usize>), f64>;

pub fn manual_paths(
    parts: &ManualParts,
    env: &PrioredGenSystem,
    init: Manual,
    steps: usize,
) -> Paths {
    fn go(
        parts: &ManualParts,
        env: &PrioredGenSystem,
        st: Manual,
        states: Vec<usize>,
        dirs: Vec<usize>,
        p: f64,
        steps: usize,
        out: &mut Paths,
    ) {
        if dirs.len() == steps {
            *out.entry((states, dirs)).or_insert(0.0) += p;
            return;
        }
        let x = *states.last().unwrap();
        let (a, next) = parts.step(&st, env.system().out()[x]);
        for (x2, &w) in env.system().transition(x, a).iter().enumerate() {
            if w > 0.0 {
                let (mut s2, mut d2) = (states.clone(), dirs.clone());
                s2.push(x2);
                d2.push(a);
                go(parts, env, next.clone(), s2, d2, p * w, steps, out);
            }
        }
    }
    let mut out = HashMap::new();
    for (x, &w) in env.prior().masses().iter().enumerate() {
        if w > 0.0 {
            go(
                parts,
                env,
                init.clone(),
                vec![x],
                vec![],
                w,
                steps,
                &mut out,
            );
        }
    }
    out
}

pub fn tv(a: &Paths, b: &Paths) -> f64 {
    let keys: std::collections::HashSet<_> = a.keys().chain(b.keys()).collect();
    0.5 * keys
        .into_iter()
        .map(|k| (a.get(k).unwrap_or(&0.0) - b.get(k).unwrap_or(&0.0)).abs())
        .sum::<f64>()
}

pub fn library_paths(agent: &Agent, env: &PrioredGenSystem, steps: usize) -> Paths {
    let mut out = HashMap::new();
    for p in exact_episode_distribution(agent, env, steps).unwrap() {
        *out.entry((p.states, p.directions)).or_insert(0.0) += p.prob;
    }
    out
}

pub fn two_by_two() -> (HierAgent, Agent, Agent, Vec<usize>, Vec<usize>) {
    let dims = Dims {
        s: 2,
        b: 2,
        c: 2,
        d: 2,
        e: 2,
        o: 2,
        a: 2,
    };
    let policy = ManagerPolicy::Table((0..16).map(|k| (k * 3 + k / 5) % 2).collect());
    let m = manager(&dims, vec![0.65, 0.35], policy, 1);
    let (lt, rt) = (vec![1, 0], vec![0, 1]);
    let left = worker(
        2,
        2,
        vec![0, 1],
        rows(4, 2, 2).chunks(2).map(|c| c.to_vec()).collect(),
        vec![0.3, 0.7],
        lt.clone(),
    );
    let right = worker(
        2,
        2,
        vec![1, 0],
        rows(4, 2, 3).chunks(2).map(|c| c.to_vec()).collect(),
        vec![0.55, 0.45],
        rt.clone(),
    );
    (m, left, right, lt, rt)
}

pub fn chain_level(ns: usize, nc: usize, na: usize, prior: Vec<f64>, salt: usize) -> HierAgent {
    let dims = Dims {
        s: ns,
        b: 1,
        c: nc,
        d: 1,
        e: 1,
        o: 1,
        a: na,
    };
    let table = (0..ns * nc).map(|k| (k * 3 + salt + k / 2) % na).collect();
    manager(&dims, prior, ManagerPolicy::Table(table), salt)
}
