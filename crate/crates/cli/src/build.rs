//! Resolving a parsed scenario into core values.
//!
//! Declarations are built lazily and memoized, so they may appear in any
//! order; cycles are reported as reference errors.

use std::cell::RefCell;
use std::collections::{BTreeMap, HashMap};

use polyagent_core::agent::{
    build_deep_chain, compose_hierarchy, ManagerPolicy, DEFAULT_POLICY_GUARD,
};
use polyagent_core::category::Morphism;
use polyagent_core::hom::{HomPolynomial, DEFAULT_LENS_GUARD};
use polyagent_core::meta::{
    morphism_tables, structure_agent_interface, structure_environment, ChannelSearch, GrothObject,
    MorphismTables, StructureInterface, DEFAULT_CHANNEL_GUARD,
};
use polyagent_core::systems::{fold_likelihood, gen_parallel, gen_rewire, moore_to_gen};
use polyagent_core::{
    Agent, Channel, Dist, FinCategory, FinSet, GenSystem, HierAgent, Lens, MooreSystem, Polynomial,
    PrioredGenSystem,
};

use crate::error::{CliError, CliResult};
use crate::expr::parse_polynomial;
use crate::scenario::{
    AgentDecl, ExperimentDecl, LensDecl, ManagerDecl, ManagerPolicyDecl, PolyDecl, Scenario,
    SearchDecl, SetDecl, SystemDecl,
};

/// Enumeration limits; `POLYAGENT_GUARD` overrides all three.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Guards {
    pub lens: u128,
    pub policy: u128,
    pub channel: u128,
}

impl Default for Guards {
    fn default() -> Self {
        Guards {
            lens: DEFAULT_LENS_GUARD,
            policy: DEFAULT_POLICY_GUARD,
            channel: DEFAULT_CHANNEL_GUARD,
        }
    }
}

impl Guards {
    pub fn uniform(n: u128) -> Self {
        Guards {
            lens: n,
            policy: n,
            channel: n,
        }
    }

    pub fn from_env() -> CliResult<Self> {
        match std::env::var("POLYAGENT_GUARD") {
            Err(_) => Ok(Guards::default()),
            Ok(v) => v.trim().parse().map(Guards::uniform).map_err(|_| {
                CliError::Usage(format!(
                    "POLYAGENT_GUARD must be a non-negative integer, got {v:?}"
                ))
            }),
        }
    }
}

/// A system with its prior, when one was declared or can be inherited.
#[derive(Clone, Debug)]
pub struct SystemEntry {
    pub system: GenSystem,
    pub prior: Option<Dist>,
}

/// The structure-learning layer over the declared meta objects.
#[derive(Clone, Debug)]
pub struct MetaModel {
    pub objects: Vec<GrothObject>,
    pub search: ChannelSearch,
    pub tables: MorphismTables,
    pub iface: StructureInterface,
}

type Cache<T> = RefCell<HashMap<String, T>>;

pub struct Built<'a> {
    pub scenario: &'a Scenario,
    pub guards: Guards,
    stack: RefCell<Vec<String>>,
    sets: Cache<FinSet>,
    categories: Cache<FinCategory>,
    polys: Cache<Polynomial>,
    lenses: Cache<Lens>,
    channels: Cache<Channel>,
    systems: Cache<SystemEntry>,
    managers: Cache<HierAgent>,
    agents: Cache<Agent>,
    meta: RefCell<Option<MetaModel>>,
}

fn index(set: &FinSet, label: &str, location: &str) -> CliResult<usize> {
    set.index_of(label).ok_or_else(|| {
        CliError::reference(
            location,
            format!("{label:?} is not an element of {}", set.name()),
        )
    })
}

fn indices(set: &FinSet, labels: &[String], location: &str) -> CliResult<Vec<usize>> {
    labels
        .iter()
        .enumerate()
        .map(|(k, l)| index(set, l, &format!("{location}[{k}]")))
        .collect()
}

fn dist(set: &FinSet, mass: &[f64], location: &str) -> CliResult<Dist> {
    Dist::new(set.clone(), mass.to_vec()).map_err(|e| CliError::building(location, e))
}

/// Weights keyed by label; unlisted elements get zero.
fn keyed_dist(set: &FinSet, weights: &BTreeMap<String, f64>, location: &str) -> CliResult<Dist> {
    let mut mass = vec![0.0; set.len()];
    for (label, &w) in weights {
        mass[index(set, label, &format!("{location}.{label}"))?] = w;
    }
    dist(set, &mass, location)
}

impl<'a> Built<'a> {
    pub fn new(scenario: &'a Scenario, guards: Guards) -> Self {
        Built {
            scenario,
            guards,
            stack: RefCell::default(),
            sets: RefCell::default(),
            categories: RefCell::default(),
            polys: RefCell::default(),
            lenses: RefCell::default(),
            channels: RefCell::default(),
            systems: RefCell::default(),
            managers: RefCell::default(),
            agents: RefCell::default(),
            meta: RefCell::default(),
        }
    }

    fn cached<T: Clone>(
        &self,
        cache: &Cache<T>,
        section: &str,
        name: &str,
        build: impl FnOnce() -> CliResult<T>,
    ) -> CliResult<T> {
        if let Some(v) = cache.borrow().get(name) {
            return Ok(v.clone());
        }
        let key = format!("{section}.{name}");
        if self.stack.borrow().contains(&key) {
            let path = self.stack.borrow().join(" -> ");
            return Err(CliError::reference(
                key.clone(),
                format!("cyclic reference: {path} -> {key}"),
            ));
        }
        self.stack.borrow_mut().push(key);
        let built = build();
        self.stack.borrow_mut().pop();
        let v = built?;
        cache.borrow_mut().insert(name.to_string(), v.clone());
        Ok(v)
    }

    fn undeclared(kind: &str, name: &str, at: &str) -> CliError {
        CliError::reference(at, format!("undeclared {kind} {name:?}"))
    }

    /// Builds every declaration and checks every experiment.
    pub fn resolve_all(&self) -> CliResult<()> {
        let sc = self.scenario;
        for name in sc.sets.keys() {
            self.set(name, "sets")?;
        }
        for name in sc.categories.keys() {
            self.category(name, "categories")?;
        }
        for name in sc.polynomials.keys() {
            self.poly(name, "polynomials")?;
        }
        for name in sc.lenses.keys() {
            self.lens(name, "lenses")?;
        }
        for name in sc.channels.keys() {
            self.channel(name, "channels")?;
        }
        for name in sc.systems.keys() {
            self.system(name, "systems")?;
        }
        for name in sc.managers.keys() {
            self.manager(name, "managers")?;
        }
        for name in sc.agents.keys() {
            self.agent(name, "agents")?;
        }
        if sc.meta.is_some() {
            self.meta("meta")?;
        }
        for name in sc.experiments.keys() {
            self.check_experiment(name)?;
        }
        Ok(())
    }

    pub fn set(&self, name: &str, at: &str) -> CliResult<FinSet> {
        let decl = self
            .scenario
            .sets
            .get(name)
            .ok_or_else(|| Self::undeclared("set", name, at))?;
        self.cached(&self.sets, "sets", name, || {
            let location = format!("sets.{name}");
            match decl {
                SetDecl::Size(n) => Ok(FinSet::range(name, *n)),
                SetDecl::Labels(labels) => {
                    if let Some(bad) = labels
                        .iter()
                        .find(|l| l.is_empty() || l.contains(['(', ')', ',']))
                    {
                        return Err(CliError::invariant(
                            location,
                            format!("label {bad:?} is empty or contains one of '(', ')', ','"),
                        ));
                    }
                    FinSet::new(name, labels.iter().cloned())
                        .map_err(|e| CliError::building(location, e))
                }
            }
        })
    }

    pub fn category(&self, name: &str, at: &str) -> CliResult<FinCategory> {
        let decl = self
            .scenario
            .categories
            .get(name)
            .ok_or_else(|| Self::undeclared("category", name, at))?;
        self.cached(&self.categories, "categories", name, || {
            let location = format!("categories.{name}");
            let objects = FinSet::new(name, decl.objects.iter().cloned())
                .map_err(|e| CliError::building(&location, e))?;
            let mut morphisms = Vec::with_capacity(decl.morphisms.len() + objects.len());
            for (k, m) in decl.morphisms.iter().enumerate() {
                let at = format!("{location}.morphisms[{k}]");
                morphisms.push(Morphism {
                    label: m.name.clone(),
                    dom: index(&objects, &m.dom, &at)?,
                    cod: index(&objects, &m.cod, &at)?,
                });
            }
            let mut identities = Vec::with_capacity(objects.len());
            for (x, label) in objects.elements().iter().enumerate() {
                let id = decl
                    .identities
                    .get(label)
                    .cloned()
                    .unwrap_or_else(|| format!("id_{label}"));
                match morphisms.iter().position(|m| m.label == id) {
                    Some(k) => identities.push(k),
                    None => {
                        identities.push(morphisms.len());
                        morphisms.push(Morphism {
                            label: id,
                            dom: x,
                            cod: x,
                        });
                    }
                }
            }
            if let Some(x) = decl
                .identities
                .keys()
                .find(|x| objects.index_of(x).is_none())
            {
                return Err(CliError::reference(
                    format!("{location}.identities.{x}"),
                    format!("{x:?} is not an object"),
                ));
            }
            let lookup = |label: &str, at: &str| {
                morphisms
                    .iter()
                    .position(|m| m.label == label)
                    .ok_or_else(|| {
                        CliError::reference(at, format!("undeclared morphism {label:?}"))
                    })
            };
            let mut composition = HashMap::new();
            for (k, [g, f, h]) in decl.compose.iter().enumerate() {
                let at = format!("{location}.compose[{k}]");
                composition.insert((lookup(g, &at)?, lookup(f, &at)?), lookup(h, &at)?);
            }
            FinCategory::with_unit_composites(objects, morphisms, identities, composition)
                .map_err(|e| CliError::building(location, e))
        })
    }

    pub fn poly(&self, name: &str, at: &str) -> CliResult<Polynomial> {
        let decl = self
            .scenario
            .polynomials
            .get(name)
            .ok_or_else(|| Self::undeclared("polynomial", name, at))?;
        self.cached(&self.polys, "polynomials", name, || {
            let location = format!("polynomials.{name}");
            match decl {
                PolyDecl::Monomial {
                    positions,
                    directions,
                } => Ok(Polynomial::monomial(
                    &self.set(positions, &location)?,
                    &self.set(directions, &location)?,
                )),
                PolyDecl::Dependent {
                    positions,
                    directions,
                } => {
                    let positions = self.set(positions, &location)?;
                    if let Some(extra) = directions.keys().find(|l| positions.index_of(l).is_none())
                    {
                        return Err(CliError::reference(
                            format!("{location}.directions.{extra}"),
                            format!("{extra:?} is not an element of {}", positions.name()),
                        ));
                    }
                    let sets = positions
                        .elements()
                        .iter()
                        .map(|l| match directions.get(l) {
                            Some(set) => self.set(set, &format!("{location}.directions.{l}")),
                            None => Err(CliError::invariant(
                                format!("{location}.directions"),
                                format!("position {l:?} has no direction set"),
                            )),
                        })
                        .collect::<CliResult<Vec<_>>>()?;
                    Polynomial::new(positions, sets).map_err(|e| CliError::building(location, e))
                }
                PolyDecl::Expr { expr } => {
                    let at = format!("{location}.expr");
                    parse_polynomial(expr, &at, |s| self.set(s, &at))
                }
                PolyDecl::Category { category } => {
                    Ok(self.category(category, &location)?.to_polynomial())
                }
                PolyDecl::Tensor { factors } => {
                    let mut acc = Polynomial::y();
                    for (k, f) in factors.iter().enumerate() {
                        let p = self.poly(f, &format!("{location}.factors[{k}]"))?;
                        acc = if k == 0 { p } else { acc.tensor(&p) };
                    }
                    Ok(acc)
                }
                PolyDecl::Hom { source, target } => {
                    let p = self.poly(source, &location)?;
                    let q = self.poly(target, &location)?;
                    let hom = HomPolynomial::new(&p, &q, self.guards.lens)
                        .map_err(|e| CliError::building(&location, e))?;
                    Ok(hom.polynomial().clone())
                }
            }
        })
    }

    pub fn lens(&self, name: &str, at: &str) -> CliResult<Lens> {
        let decl = self
            .scenario
            .lenses
            .get(name)
            .ok_or_else(|| Self::undeclared("lens", name, at))?;
        self.cached(&self.lenses, "lenses", name, || {
            let location = format!("lenses.{name}");
            match decl {
                LensDecl::Table { dom, cod, fwd, bwd } => {
                    let (p, q) = (self.poly(dom, &location)?, self.poly(cod, &location)?);
                    for key in fwd.keys().chain(bwd.keys()) {
                        index(p.positions(), key, &format!("{location}.{key}"))?;
                    }
                    let mut f = Vec::with_capacity(p.num_positions());
                    let mut b = Vec::with_capacity(p.num_positions());
                    for (i, label) in p.positions().elements().iter().enumerate() {
                        let at = format!("{location}.fwd.{label}");
                        let target = fwd.get(label).ok_or_else(|| {
                            CliError::invariant(&at, "no image for this position")
                        })?;
                        let j = index(q.positions(), target, &at)?;
                        let empty = BTreeMap::new();
                        let back = bwd.get(label).unwrap_or(&empty);
                        let at = format!("{location}.bwd.{label}");
                        for key in back.keys() {
                            index(q.directions(j), key, &at)?;
                        }
                        let row = q
                            .directions(j)
                            .elements()
                            .iter()
                            .map(|e| match back.get(e) {
                                Some(d) => index(p.directions(i), d, &format!("{at}.{e}")),
                                None => Err(CliError::invariant(
                                    &at,
                                    format!("direction {e:?} is not sent back"),
                                )),
                            })
                            .collect::<CliResult<Vec<_>>>()?;
                        f.push(j);
                        b.push(row);
                    }
                    Lens::new(p, q, f, b).map_err(|e| CliError::building(location, e))
                }
                LensDecl::Identity { of } => Ok(Lens::identity(&self.poly(of, &location)?)),
                LensDecl::Compose { chain } => {
                    let mut acc: Option<Lens> = None;
                    for (k, l) in chain.iter().enumerate() {
                        let at = format!("{location}.chain[{k}]");
                        let next = self.lens(l, &at)?;
                        acc = Some(match acc {
                            None => next,
                            Some(a) => a.then(&next).map_err(|e| CliError::building(&at, e))?,
                        });
                    }
                    acc.ok_or_else(|| CliError::invariant(location, "empty composite"))
                }
                LensDecl::Tensor { factors } => {
                    let mut acc: Option<Lens> = None;
                    for (k, l) in factors.iter().enumerate() {
                        let next = self.lens(l, &format!("{location}.factors[{k}]"))?;
                        acc = Some(match acc {
                            None => next,
                            Some(a) => a.tensor(&next),
                        });
                    }
                    acc.ok_or_else(|| CliError::invariant(location, "empty tensor"))
                }
            }
        })
    }

    pub fn channel(&self, name: &str, at: &str) -> CliResult<Channel> {
        let decl = self
            .scenario
            .channels
            .get(name)
            .ok_or_else(|| Self::undeclared("channel", name, at))?;
        self.cached(&self.channels, "channels", name, || {
            let location = format!("channels.{name}");
            let dom = self.set(&decl.dom, &location)?;
            let cod = self.set(&decl.cod, &location)?;
            Channel::new(dom, cod, decl.rows.clone()).map_err(|e| CliError::building(location, e))
        })
    }

    pub fn system(&self, name: &str, at: &str) -> CliResult<SystemEntry> {
        let decl = self
            .scenario
            .systems
            .get(name)
            .ok_or_else(|| Self::undeclared("system", name, at))?;
        self.cached(&self.systems, "systems", name, || {
            let location = format!("systems.{name}");
            let with_prior = |system: GenSystem,
                              prior: &Option<Vec<f64>>,
                              inherited: Option<Dist>| {
                let prior = match prior {
                    Some(m) => Some(dist(system.states(), m, &format!("{location}.prior"))?),
                    None => inherited.map(|d| {
                        Dist::new(system.states().clone(), d.masses().to_vec()).expect("same size")
                    }),
                };
                Ok(SystemEntry { system, prior })
            };
            match decl {
                SystemDecl::Stochastic {
                    iface,
                    states,
                    out,
                    upd,
                    prior,
                } => {
                    let p = self.poly(iface, &location)?;
                    let states = self.set(states, &location)?;
                    let out = indices(p.positions(), out, &format!("{location}.out"))?;
                    let system = GenSystem::from_rows(p, states, out, upd.clone())
                        .map_err(|e| CliError::building(&location, e))?;
                    with_prior(system, prior, None)
                }
                SystemDecl::Moore {
                    iface,
                    states,
                    out,
                    next,
                    prior,
                } => {
                    let p = self.poly(iface, &location)?;
                    let states = self.set(states, &location)?;
                    let out = indices(p.positions(), out, &format!("{location}.out"))?;
                    let mut flat = Vec::new();
                    for (s, row) in next.iter().enumerate() {
                        flat.extend(indices(&states, row, &format!("{location}.next[{s}]"))?);
                    }
                    let m = MooreSystem::new(p, states, out, flat)
                        .map_err(|e| CliError::building(&location, e))?;
                    with_prior(moore_to_gen(&m), prior, None)
                }
                SystemDecl::Rewire { base, lens, prior } => {
                    let base = self.system(base, &location)?;
                    let lens = self.lens(lens, &location)?;
                    let system = gen_rewire(&lens, &base.system)
                        .map_err(|e| CliError::building(&location, e))?;
                    with_prior(system, prior, base.prior)
                }
                SystemDecl::Parallel { factors, prior } => {
                    let a = self.system(&factors[0], &location)?;
                    let b = self.system(&factors[1], &location)?;
                    let inherited = match (&a.prior, &b.prior) {
                        (Some(x), Some(y)) => Some(x.tensor(y)),
                        _ => None,
                    };
                    with_prior(gen_parallel(&a.system, &b.system), prior, inherited)
                }
                SystemDecl::Fold {
                    states,
                    iface,
                    trans,
                    like,
                    prior,
                } => {
                    let states = self.set(states, &location)?;
                    let p = self.poly(iface, &location)?;
                    let trans = self.channel(trans, &location)?;
                    let like = self.channel(like, &location)?;
                    let system = fold_likelihood(&states, &p, &trans, &like)
                        .map_err(|e| CliError::building(&location, e))?;
                    with_prior(system, prior, None)
                }
                SystemDecl::Structure { start, prior } => {
                    let meta = self.meta(&location)?;
                    let k = meta
                        .objects
                        .iter()
                        .position(|o| &o.name == start)
                        .ok_or_else(|| {
                            CliError::reference(
                                &location,
                                format!("{start:?} is not a meta object"),
                            )
                        })?;
                    let prior = dist(
                        meta.objects[k].system.states(),
                        prior,
                        &format!("{location}.prior"),
                    )?;
                    let env =
                        structure_environment(&meta.objects, &meta.tables, &meta.iface, k, &prior)
                            .map_err(|e| CliError::building(&location, e))?;
                    Ok(SystemEntry {
                        system: env.system().clone(),
                        prior: Some(env.prior().clone()),
                    })
                }
            }
        })
    }

    /// The system together with its prior, which must exist.
    pub fn priored(&self, name: &str, at: &str) -> CliResult<PrioredGenSystem> {
        let entry = self.system(name, at)?;
        let prior = entry.prior.ok_or_else(|| {
            CliError::invariant(format!("systems.{name}"), "no prior declared or inherited")
        })?;
        PrioredGenSystem::new(entry.system, prior)
            .map_err(|e| CliError::building(format!("systems.{name}"), e))
    }

    pub fn manager(&self, name: &str, at: &str) -> CliResult<HierAgent> {
        let decl = self
            .scenario
            .managers
            .get(name)
            .ok_or_else(|| Self::undeclared("manager", name, at))?;
        self.cached(&self.managers, "managers", name, || {
            self.build_manager(name, decl)
        })
    }

    fn build_manager(&self, name: &str, m: &ManagerDecl) -> CliResult<HierAgent> {
        let location = format!("managers.{name}");
        let set = |s: &str| self.set(s, &location);
        let (states, b, c, d, e, o, a) = (
            set(&m.states)?,
            set(&m.b)?,
            set(&m.c)?,
            set(&m.d)?,
            set(&m.e)?,
            set(&m.o)?,
            set(&m.a)?,
        );
        let at = |field: &str| format!("{location}.{field}");
        let n = states.len() * b.len() * d.len() * a.len();
        let trans = Channel::new(FinSet::range("SxBxDxA", n), states.clone(), m.trans.clone())
            .map_err(|err| CliError::building(at("trans"), err))?;
        let policy = match &m.policy {
            ManagerPolicyDecl::Table { table } => {
                ManagerPolicy::Table(indices(&a, table, &at("policy.table"))?)
            }
            ManagerPolicyDecl::Efe {
                preferences,
                horizon,
            } => ManagerPolicy::Efe {
                preferences: keyed_dist(&o, preferences, &at("policy.preferences"))?,
                horizon: *horizon,
            },
        };
        let h = HierAgent {
            prior: dist(&states, &m.prior, &at("prior"))?,
            likelihood: indices(&o, &m.likelihood, &at("likelihood"))?,
            low_left: indices(&c, &m.low_left, &at("low_left"))?,
            low_right: indices(&e, &m.low_right, &at("low_right"))?,
            gen_left: indices(&b, &m.gen_left, &at("gen_left"))?,
            gen_right: indices(&d, &m.gen_right, &at("gen_right"))?,
            trans,
            policy,
            states,
            b,
            c,
            d,
            e,
            o,
            a,
        };
        h.validate()
            .map_err(|err| CliError::building(location, err))?;
        Ok(h)
    }

    pub fn agent(&self, name: &str, at: &str) -> CliResult<Agent> {
        let decl = self
            .scenario
            .agents
            .get(name)
            .ok_or_else(|| Self::undeclared("agent", name, at))?;
        self.cached(&self.agents, "agents", name, || {
            let location = format!("agents.{name}");
            let agent = match decl {
                AgentDecl::Efe {
                    model,
                    preferences,
                    horizon,
                } => {
                    let model = self.priored(model, &location)?;
                    let prefs = keyed_dist(
                        model.system().iface().positions(),
                        preferences,
                        &format!("{location}.preferences"),
                    )?;
                    Agent::new(model, prefs, *horizon)
                }
                AgentDecl::Fixed { model, table } => {
                    let model = self.priored(model, &location)?;
                    let p = model.system().iface().clone();
                    for key in table.keys() {
                        index(p.positions(), key, &format!("{location}.table.{key}"))?;
                    }
                    let mut flat = Vec::with_capacity(p.num_positions());
                    for (i, label) in p.positions().elements().iter().enumerate() {
                        let at = format!("{location}.table.{label}");
                        flat.push(match (table.get(label), p.arity(i)) {
                            (None, 0) => 0,
                            (None, _) => {
                                return Err(CliError::invariant(at, "no action for this position"))
                            }
                            (Some(d), _) => index(p.directions(i), d, &at)?,
                        });
                    }
                    Agent::fixed(model, flat)
                }
                AgentDecl::Hierarchy {
                    manager,
                    left,
                    right,
                } => {
                    let m = self.manager(manager, &location)?;
                    let l = self.agent(left, &location)?;
                    let r = self.agent(right, &location)?;
                    compose_hierarchy(m, l, r)
                }
                AgentDecl::Chain { bottom, managers } => {
                    let b = self.agent(bottom, &location)?;
                    let ms = managers
                        .iter()
                        .map(|m| self.manager(m, &location))
                        .collect::<CliResult<Vec<_>>>()?;
                    build_deep_chain(b, ms)
                }
            };
            agent
                .map(|a| a.with_guard(self.guards.policy))
                .map_err(|e| CliError::building(location, e))
        })
    }

    pub fn meta(&self, at: &str) -> CliResult<MetaModel> {
        let decl = self
            .scenario
            .meta
            .as_ref()
            .ok_or_else(|| CliError::reference(at, "the scenario has no meta section"))?;
        if let Some(m) = self.meta.borrow().as_ref() {
            return Ok(m.clone());
        }
        if self.stack.borrow().iter().any(|k| k == "meta") {
            return Err(CliError::reference(
                "meta",
                "meta objects refer back to the structure environment",
            ));
        }
        self.stack.borrow_mut().push("meta".to_string());
        let built = self.build_meta(decl);
        self.stack.borrow_mut().pop();
        let m = built?;
        *self.meta.borrow_mut() = Some(m.clone());
        Ok(m)
    }

    fn build_meta(&self, decl: &crate::scenario::MetaDecl) -> CliResult<MetaModel> {
        let objects = decl
            .objects
            .iter()
            .enumerate()
            .map(|(k, name)| {
                Ok(GrothObject::new(
                    name.clone(),
                    self.system(name, &format!("meta.objects[{k}]"))?.system,
                ))
            })
            .collect::<CliResult<Vec<_>>>()?;
        let search = match &decl.search {
            SearchDecl::Deterministic => ChannelSearch::Deterministic,
            SearchDecl::Grid { denominator } => ChannelSearch::Grid {
                denominator: *denominator,
            },
            SearchDecl::Candidates { channels } => ChannelSearch::Candidates(
                channels
                    .iter()
                    .enumerate()
                    .map(|(k, c)| self.channel(c, &format!("meta.search.channels[{k}]")))
                    .collect::<CliResult<Vec<_>>>()?,
            ),
        };
        let tables = morphism_tables(&objects, &search, self.guards.channel)
            .map_err(|e| CliError::building("meta", e))?;
        let iface = structure_agent_interface(&objects, &tables)
            .map_err(|e| CliError::building("meta", e))?;
        Ok(MetaModel {
            objects,
            search,
            tables,
            iface,
        })
    }

    /// References and static requirements of one experiment.
    pub fn check_experiment(&self, name: &str) -> CliResult<()> {
        let decl = self
            .scenario
            .experiments
            .get(name)
            .ok_or_else(|| Self::undeclared("experiment", name, "experiments"))?;
        let location = format!("experiments.{name}");
        match decl {
            ExperimentDecl::Unroll {
                system,
                mode,
                samples,
                ..
            } => {
                let ps = self.priored(system, &location)?;
                if !ps.system().iface().is_closed() {
                    return Err(CliError::invariant(
                        location,
                        format!(
                            "unrolling needs a closed system, {system:?} is over {}",
                            ps.system().iface()
                        ),
                    ));
                }
                if *mode == crate::scenario::UnrollMode::Sample && *samples == Some(0) {
                    return Err(CliError::invariant(
                        location,
                        "at least one sample is needed",
                    ));
                }
            }
            ExperimentDecl::Simulate {
                agent,
                env,
                episodes,
                ..
            } => {
                let a = self.agent(agent, &location)?;
                let e = self.priored(env, &location)?;
                if a.iface() != e.system().iface() {
                    return Err(CliError::invariant(
                        location,
                        format!(
                            "agent {agent:?} is over {}, environment {env:?} over {}",
                            a.iface(),
                            e.system().iface()
                        ),
                    ));
                }
                if *episodes == Some(0) {
                    return Err(CliError::invariant(
                        location,
                        "at least one episode is needed",
                    ));
                }
            }
            ExperimentDecl::Plan {
                agent,
                position,
                belief,
                ..
            } => {
                self.planner(agent, &location)?;
                let a = self.agent(agent, &location)?;
                index(
                    a.iface().positions(),
                    position,
                    &format!("{location}.position"),
                )?;
                if let Some(b) = belief {
                    dist(
                        a.model().system().states(),
                        b,
                        &format!("{location}.belief"),
                    )?;
                }
            }
            ExperimentDecl::Compose { agent } => {
                if !self.agent(agent, &location)?.is_composite() {
                    return Err(CliError::invariant(
                        location,
                        format!("agent {agent:?} is not composite"),
                    ));
                }
            }
        }
        Ok(())
    }

    /// The agent's EFE data, for agents that plan.
    pub fn planner(&self, name: &str, at: &str) -> CliResult<Agent> {
        match self.scenario.agents.get(name) {
            None => Err(Self::undeclared("agent", name, at)),
            Some(AgentDecl::Efe { .. }) => self.agent(name, at),
            Some(_) => Err(CliError::invariant(
                at,
                format!("agent {name:?} does not select actions by EFE"),
            )),
        }
    }
}
