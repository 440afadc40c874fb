//! The verbs. Each returns a [`RunReport`]; `main` prints it and maps
//! errors to exit codes.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use polyagent_core::agent::{condition, plan_table, select_action, simulate_batch};
use polyagent_core::hom::{curry, lens_count, uncurry, HomPolynomial};
use polyagent_core::laws::{self, brute_force_filter, LensCompose, SuiteSizes};
use polyagent_core::meta::{check_groth_morphism, GrothMorphism};
use polyagent_core::stoch::EPS_LAW;
use polyagent_core::systems::{
    closed_unroll_exact, closed_unroll_sample_batch, empirical_marginals, gen_rewire,
};
use polyagent_core::{Agent, Channel, Dist, FinSet, Lens, Polynomial};
use serde_json::{json, Value};

use crate::build::{Built, Guards, MetaModel};
use crate::error::{CliError, CliResult};
use crate::expr::parse_polynomial;
use crate::report::{jsonl, number, write_atomic, Check, RunReport};
use crate::scenario::{
    AgentDecl, ExperimentDecl, PolyDecl, Scenario, SetDecl, SystemDecl, UnrollMode, VERSION,
};

pub fn load(path: &Path) -> CliResult<Scenario> {
    let text =
        std::fs::read_to_string(path).map_err(|e| CliError::io(path.display().to_string(), e))?;
    Scenario::parse(&text)
}

pub fn polynomial_json(p: &Polynomial) -> Value {
    json!({
        "positions": p.positions().elements(),
        "directions": (0..p.num_positions()).map(|i| p.directions(i).elements().to_vec()).collect::<Vec<_>>(),
    })
}

/// Forward and backward maps by label.
pub fn lens_json(l: &Lens) -> Value {
    let (p, q) = (l.dom(), l.cod());
    let fwd: Vec<&str> = (0..p.num_positions())
        .map(|i| q.positions().label(l.forward(i)))
        .collect();
    let bwd: Vec<Vec<&str>> = (0..p.num_positions())
        .map(|i| {
            (0..q.arity(l.forward(i)))
                .map(|d| p.directions(i).label(l.backward(i, d)))
                .collect()
        })
        .collect();
    json!({ "fwd": fwd, "bwd": bwd })
}

pub fn validate(path: &Path, guards: Guards) -> CliResult<RunReport> {
    let text =
        std::fs::read_to_string(path).map_err(|e| CliError::io(path.display().to_string(), e))?;
    let sc = Scenario::parse(&text)?;
    Built::new(&sc, guards).resolve_all()?;
    let mut report = RunReport::new("validate", Some(&sc));
    let counts = [
        ("sets", sc.sets.len()),
        ("categories", sc.categories.len()),
        ("polynomials", sc.polynomials.len()),
        ("lenses", sc.lenses.len()),
        ("channels", sc.channels.len()),
        ("systems", sc.systems.len()),
        ("managers", sc.managers.len()),
        ("agents", sc.agents.len()),
        ("experiments", sc.experiments.len()),
    ];
    for (section, n) in counts {
        report.push(Check::holds(section, true, format!("{n} resolved")));
    }
    if sc.meta.is_some() {
        report.push(Check::holds("meta", true, "morphism tables built"));
    }
    report.result = json!({
        "declarations": counts.iter().map(|(k, n)| (k.to_string(), json!(n))).collect::<serde_json::Map<_, _>>(),
        "canonical": text == sc.to_canonical(),
    });
    Ok(report)
}

#[derive(Clone, Debug, Default)]
pub struct LawsArgs {
    pub scenario: Option<PathBuf>,
    pub random: Option<u64>,
    pub sizes: SuiteSizes,
    /// Runs the suites against a broken lens composition.
    pub mutant: bool,
    pub seed: u64,
}

pub fn check_laws(args: &LawsArgs, guards: Guards) -> CliResult<RunReport> {
    if args.scenario.is_none() && args.random.is_none() {
        return Err(CliError::Usage(
            "check-laws needs a scenario, --random SEED, or both".into(),
        ));
    }
    let compose: LensCompose = if args.mutant {
        laws::broken_compose
    } else {
        laws::standard_compose
    };
    let scenario = args.scenario.as_deref().map(load).transpose()?;
    let mut report = RunReport::new("check-laws", scenario.as_ref());
    report.seed = args.random.or(Some(args.seed));
    if let Some(sc) = &scenario {
        let built = Built::new(sc, guards);
        built.resolve_all()?;
        for c in declared_laws(&built, compose, args.seed)? {
            report.push(c);
        }
    }
    if let Some(seed) = args.random {
        for r in laws::random_suite(seed, &args.sizes, compose) {
            report.push(r.into());
        }
    }
    let failed: Vec<&str> = report
        .checks
        .iter()
        .filter(|c| !c.pass)
        .map(|c| c.name.as_str())
        .collect();
    report.result = json!({ "laws": report.checks.len(), "failed": failed });
    Ok(report)
}

fn mismatch(equal: bool) -> f64 {
    if equal {
        0.0
    } else {
        1.0
    }
}

/// Enumerations in the declared adjunction sweep stay below this size.
const DECLARED_HOM_GUARD: u128 = 2_000;

/// Law checks over every declared object.
pub fn declared_laws(built: &Built, compose: LensCompose, seed: u64) -> CliResult<Vec<Check>> {
    let sc = built.scenario;
    let mut out = Vec::new();
    for name in sc.categories.keys() {
        built.category(name, "categories")?;
        out.push(Check::holds(
            format!("category.laws[{name}]"),
            true,
            "closure, units and associativity",
        ));
    }

    let lenses: Vec<Lens> = sc
        .lenses
        .keys()
        .map(|n| built.lens(n, "lenses"))
        .collect::<CliResult<_>>()?;
    let unit = lenses
        .iter()
        .map(|f| {
            let left = compose(&Lens::identity(f.dom()), f).ok().as_ref() == Some(f);
            let right = compose(f, &Lens::identity(f.cod())).ok().as_ref() == Some(f);
            mismatch(left && right)
        })
        .fold(0.0, f64::max);
    out.push(Check::new(
        "lens.unit[declared]",
        unit,
        0.0,
        format!("{} lenses", lenses.len()),
    ));
    let (mut assoc, mut triples) = (0.0f64, 0usize);
    for f in &lenses {
        for g in lenses.iter().filter(|g| g.dom() == f.cod()) {
            for h in lenses.iter().filter(|h| h.dom() == g.cod()) {
                let lhs = compose(f, g).and_then(|fg| compose(&fg, h));
                let rhs = compose(g, h).and_then(|gh| compose(f, &gh));
                assoc = assoc.max(match (lhs, rhs) {
                    (Ok(a), Ok(b)) => mismatch(a == b),
                    _ => 1.0,
                });
                triples += 1;
            }
        }
    }
    out.push(Check::new(
        "lens.associativity[declared]",
        assoc,
        0.0,
        format!("{triples} composable triples"),
    ));

    let polys: Vec<Polynomial> = sc
        .polynomials
        .keys()
        .map(|n| built.poly(n, "polynomials"))
        .collect::<CliResult<_>>()?;
    let mut symmetry = 0.0f64;
    for p in &polys {
        for q in &polys {
            let round = Lens::swap(p, q)
                .then(&Lens::swap(q, p))
                .map(|l| l == Lens::identity(&p.tensor(q)));
            symmetry = symmetry.max(mismatch(round == Ok(true)));
        }
    }
    out.push(Check::new(
        "tensor.symmetry[declared]",
        symmetry,
        0.0,
        format!("{} ordered pairs", polys.len().pow(2)),
    ));
    out.push(declared_adjunction(&polys, guards_min(built.guards.lens)));

    let channels: Vec<Channel> = sc
        .channels
        .keys()
        .map(|n| built.channel(n, "channels"))
        .collect::<CliResult<_>>()?;
    let mut chan_unit = 0.0f64;
    for c in &channels {
        let l = Channel::identity(c.dom())
            .then(c)
            .map(|x| x.max_abs_diff(c))
            .unwrap_or(f64::INFINITY);
        let r = c
            .then(&Channel::identity(c.cod()))
            .map(|x| x.max_abs_diff(c))
            .unwrap_or(f64::INFINITY);
        chan_unit = chan_unit.max(l).max(r);
    }
    out.push(Check::new(
        "channel.unit[declared]",
        chan_unit,
        EPS_LAW,
        format!("{} channels", channels.len()),
    ));
    let (mut chan_assoc, mut chan_triples) = (0.0f64, 0usize);
    for q in &channels {
        for r in channels.iter().filter(|r| r.dom() == q.cod()) {
            for s in channels.iter().filter(|s| s.dom() == r.cod()) {
                let lhs = q.then(r).and_then(|qr| qr.then(s));
                let rhs = r.then(s).and_then(|rs| q.then(&rs));
                chan_assoc = chan_assoc.max(match (lhs, rhs) {
                    (Ok(a), Ok(b)) => a.max_abs_diff(&b),
                    _ => f64::INFINITY,
                });
                chan_triples += 1;
            }
        }
    }
    out.push(Check::new(
        "channel.associativity[declared]",
        chan_assoc,
        EPS_LAW,
        format!("{chan_triples} composable triples"),
    ));

    let (mut gen_unit, mut gen_comp, mut pairs) = (0.0f64, 0.0f64, 0usize);
    for name in sc.systems.keys() {
        let sys = built.system(name, "systems")?.system;
        let id = gen_rewire(&Lens::identity(sys.iface()), &sys).map(|s| s == sys);
        gen_unit = gen_unit.max(mismatch(id == Ok(true)));
        for phi in lenses.iter().filter(|l| l.dom() == sys.iface()) {
            for psi in lenses.iter().filter(|l| l.dom() == phi.cod()) {
                let once = phi.then(psi).and_then(|c| gen_rewire(&c, &sys));
                let twice = gen_rewire(phi, &sys).and_then(|s| gen_rewire(psi, &s));
                gen_comp = gen_comp.max(match (once, twice) {
                    (Ok(a), Ok(b)) => mismatch(a == b),
                    _ => 1.0,
                });
                pairs += 1;
            }
        }
    }
    out.push(Check::new(
        "gen.unit[declared]",
        gen_unit,
        0.0,
        format!("{} systems", sc.systems.len()),
    ));
    out.push(Check::new(
        "gen.composition[declared]",
        gen_comp,
        0.0,
        format!("{pairs} (system, φ, ψ)"),
    ));

    for (name, decl) in &sc.agents {
        if matches!(decl, AgentDecl::Efe { .. } | AgentDecl::Fixed { .. }) {
            let agent = built.agent(name, "agents")?;
            out.push(filtering_check(name, &agent, seed));
        }
    }
    if sc.meta.is_some() {
        out.extend(meta_checks(&built.meta("meta")?));
    }
    Ok(out)
}

fn guards_min(lens_guard: u128) -> u128 {
    lens_guard.min(DECLARED_HOM_GUARD)
}

/// `Lens(p⊗q, r) ≅ Lens(p, [q,r])` with round trips, for every declared
/// triple small enough to enumerate.
fn declared_adjunction(polys: &[Polynomial], guard: u128) -> Check {
    let (mut worst, mut checked, mut skipped) = (0.0f64, 0usize, 0usize);
    for p in polys {
        for q in polys {
            for r in polys {
                let run = || -> polyagent_core::Result<f64> {
                    let pq = p.tensor(q);
                    if lens_count(&pq, r) > guard || lens_count(q, r) > guard {
                        return Err(polyagent_core::Error::SizeGuardExceeded {
                            what: "declared adjunction".into(),
                            cardinality: lens_count(&pq, r).max(lens_count(q, r)),
                            guard,
                        });
                    }
                    let hom = HomPolynomial::new(q, r, guard)?;
                    if lens_count(p, hom.polynomial()) > guard {
                        return Err(polyagent_core::Error::SizeGuardExceeded {
                            what: "declared adjunction".into(),
                            cardinality: lens_count(p, hom.polynomial()),
                            guard,
                        });
                    }
                    let left = polyagent_core::hom::enumerate_lenses(&pq, r, guard)?;
                    let right = polyagent_core::hom::enumerate_lenses(p, hom.polynomial(), guard)?;
                    let mut bad = mismatch(left.len() == right.len());
                    for phi in &left {
                        bad = bad.max(mismatch(&uncurry(&curry(phi, p, &hom)?, &hom)? == phi));
                    }
                    for psi in &right {
                        bad = bad.max(mismatch(&curry(&uncurry(psi, &hom)?, p, &hom)? == psi));
                    }
                    Ok(bad)
                };
                match run() {
                    Ok(bad) => {
                        worst = worst.max(bad);
                        checked += 1;
                    }
                    Err(polyagent_core::Error::SizeGuardExceeded { .. }) => skipped += 1,
                    Err(_) => worst = 1.0,
                }
            }
        }
    }
    Check::new(
        "hom.adjunction[declared]",
        worst,
        0.0,
        format!("{checked} triples checked, {skipped} over the enumeration guard {guard}"),
    )
}

/// Beliefs along a 5-step episode against exhaustive filtering, with the
/// agent's own model as the environment.
pub fn filtering_check(name: &str, agent: &Agent, seed: u64) -> Check {
    let check_name = format!("agent.filtering[{name}]");
    let model = agent.model();
    let ep = match polyagent_core::agent::simulate_episode(agent, model, 5, seed) {
        Ok(ep) => ep,
        Err(e) => return Check::new(check_name, f64::INFINITY, 1e-9, e.to_string()),
    };
    let positions: Vec<usize> = ep.records.iter().map(|r| r.position).collect();
    let directions: Vec<usize> = ep.records.iter().filter_map(|r| r.direction).collect();
    let mut worst = 0.0f64;
    for (t, rec) in ep.records.iter().enumerate() {
        let oracle = brute_force_filter(model, &positions[..=t], &directions[..t]);
        worst = worst.max(
            0.5 * oracle
                .iter()
                .zip(&rec.belief)
                .map(|(a, b)| (a - b).abs())
                .sum::<f64>(),
        );
    }
    Check::new(
        check_name,
        worst,
        1e-9,
        format!("seed {seed}, {} records", ep.records.len()),
    )
}

/// Identities and composites of the tabled ∫Gen morphisms verify, and the
/// unit laws hold on every tabled morphism.
pub fn meta_checks(meta: &MetaModel) -> Vec<Check> {
    let objs = &meta.objects;
    let n = objs.len();
    let residual =
        |k: usize, l: usize, m: &GrothMorphism| match check_groth_morphism(&objs[k], &objs[l], m) {
            Ok(c) => c.residual,
            Err(_) => f64::INFINITY,
        };
    let (mut ids, mut tabled, mut units, mut comps, mut count, mut ncomp) =
        (0.0f64, 0.0f64, 0.0f64, 0.0f64, 0usize, 0usize);
    for k in 0..n {
        ids = ids.max(residual(k, k, &GrothMorphism::identity(&objs[k])));
        for l in 0..n {
            for m in &meta.tables[&(k, l)] {
                count += 1;
                tabled = tabled.max(residual(k, l, m));
                let left = GrothMorphism::identity(&objs[k]).then(m);
                let right = m.then(&GrothMorphism::identity(&objs[l]));
                for u in [left, right] {
                    units = units.max(match u {
                        Ok(u) if u.lens == m.lens => u.chan.max_abs_diff(&m.chan),
                        _ => f64::INFINITY,
                    });
                }
                for j in 0..n {
                    for m2 in &meta.tables[&(l, j)] {
                        ncomp += 1;
                        comps = comps.max(match m.then(m2) {
                            Ok(c) => residual(k, j, &c),
                            Err(_) => f64::INFINITY,
                        });
                    }
                }
            }
        }
    }
    vec![
        Check::new("meta.identities", ids, EPS_LAW, format!("{n} objects")),
        Check::new(
            "meta.morphisms",
            tabled,
            EPS_LAW,
            format!("{count} tabled morphisms"),
        ),
        Check::new(
            "meta.unit_laws",
            units,
            EPS_LAW,
            format!("{count} tabled morphisms"),
        ),
        Check::new(
            "meta.composites",
            comps,
            EPS_LAW,
            format!("{ncomp} composable pairs"),
        ),
    ]
}

#[derive(Clone, Debug, Default)]
pub struct HomArgs {
    pub source: String,
    pub target: String,
    pub scenario: Option<PathBuf>,
    /// Inline sets `NAME=SIZE`, taking precedence over the scenario's.
    pub sets: Vec<(String, usize)>,
    pub enumerate: bool,
    pub out: Option<PathBuf>,
}

pub fn hom(args: &HomArgs, guards: Guards) -> CliResult<RunReport> {
    let scenario = args.scenario.as_deref().map(load).transpose()?;
    let empty = Scenario::parse(&format!("{{\"version\":\"{VERSION}\"}}"))?;
    let sc = scenario.as_ref().unwrap_or(&empty);
    let built = Built::new(sc, guards);
    let resolve = |text: &str, at: &str| -> CliResult<Polynomial> {
        if sc.polynomials.contains_key(text) {
            return built.poly(text, at);
        }
        parse_polynomial(text, at, |name| {
            match args.sets.iter().find(|(n, _)| n == name) {
                Some((n, k)) => Ok(FinSet::range(n.as_str(), *k)),
                None => built.set(name, at),
            }
        })
    };
    let p = resolve(&args.source, "source")?;
    let q = resolve(&args.target, "target")?;
    let h = HomPolynomial::new(&p, &q, guards.lens).map_err(|e| CliError::running("hom", e))?;
    let mut report = RunReport::new("hom", scenario.as_ref());
    let hp = h.polynomial();
    report.push(Check::holds(
        "hom.count_closed_form",
        lens_count(&p, &q) == hp.num_positions() as u128,
        "positions of [p,q] against Π_i Σ_j |p[i]|^|q[j]|",
    ));
    let mut result = json!({
        "source": polynomial_json(&p),
        "target": polynomial_json(&q),
        "hom": polynomial_json(hp),
        "positions": hp.num_positions(),
        "arities": hp.arities(),
    });
    if args.enumerate {
        result["lenses"] = Value::Array(h.lenses().iter().map(lens_json).collect());
    }
    if let Some(path) = &args.out {
        write_atomic(path, crate::scenario::canonical_json(&result).as_bytes())?;
        report.artifacts.push(path.display().to_string());
    }
    report.result = result;
    Ok(report)
}

#[derive(Clone, Debug, Default)]
pub struct SimulateArgs {
    pub scenario: PathBuf,
    pub experiment: String,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
}

pub fn simulate(args: &SimulateArgs, guards: Guards) -> CliResult<RunReport> {
    let sc = load(&args.scenario)?;
    let built = Built::new(&sc, guards);
    let name = &args.experiment;
    let decl = sc.experiments.get(name).ok_or_else(|| {
        CliError::reference("experiments", format!("undeclared experiment {name:?}"))
    })?;
    built.check_experiment(name)?;
    let location = format!("experiments.{name}");
    let mut report = RunReport::new("simulate", Some(&sc));
    let (records, result) = match decl {
        ExperimentDecl::Unroll {
            system,
            steps,
            mode,
            samples,
            seed,
        } => {
            let ps = built.priored(system, &location)?;
            let seed = args.seed.or(*seed).unwrap_or(0);
            report.seed = Some(seed);
            let exact =
                closed_unroll_exact(&ps, *steps).map_err(|e| CliError::running(&location, e))?;
            let states = ps.system().states();
            match mode {
                UnrollMode::Exact => {
                    let defect = exact
                        .iter()
                        .map(|d| (d.masses().iter().sum::<f64>() - 1.0).abs())
                        .fold(0.0, f64::max);
                    report.push(Check::new(
                        "unroll.normalized",
                        defect,
                        1e-9,
                        format!("{} marginals", exact.len()),
                    ));
                    let records = exact
                        .iter()
                        .enumerate()
                        .map(|(t, d)| json!({ "t": t, "state": states.label(d.argmax()), "marginal": d.masses() }))
                        .collect();
                    (
                        records,
                        json!({ "experiment": name, "kind": "unroll", "mode": "exact", "steps": steps }),
                    )
                }
                UnrollMode::Sample => {
                    let n = samples.unwrap_or(1);
                    let paths = closed_unroll_sample_batch(&ps, *steps, seed, n)
                        .map_err(|e| CliError::running(&location, e))?;
                    let empirical = empirical_marginals(states, &paths);
                    let tv = empirical
                        .iter()
                        .zip(&exact)
                        .map(|(a, b)| a.tv(b))
                        .fold(0.0, f64::max);
                    let mut records = Vec::with_capacity(n * (steps + 1));
                    for (k, path) in paths.iter().enumerate() {
                        for (t, &s) in path.iter().enumerate() {
                            records.push(json!({ "sample": k, "t": t, "state": states.label(s) }));
                        }
                    }
                    (
                        records,
                        json!({
                            "experiment": name, "kind": "unroll", "mode": "sample", "steps": steps,
                            "samples": n, "max_tv_to_exact": number(tv),
                        }),
                    )
                }
            }
        }
        ExperimentDecl::Simulate {
            agent,
            env,
            steps,
            episodes,
            seed,
        } => {
            let a = built.agent(agent, &location)?;
            let e = built.priored(env, &location)?;
            let seed = args.seed.or(*seed).unwrap_or(0);
            report.seed = Some(seed);
            let n = episodes.unwrap_or(1);
            let eps = simulate_batch(&a, &e, *steps, seed, n)
                .map_err(|err| CliError::running(&location, err))?;
            let sys = e.system();
            let p = sys.iface();
            let mut typed = true;
            let mut records = Vec::new();
            for (k, ep) in eps.iter().enumerate() {
                for r in &ep.records {
                    typed &= r.direction.is_none_or(|d| d < p.arity(r.position));
                    records.push(json!({
                        "episode": k,
                        "t": r.t,
                        "position": p.positions().label(r.position),
                        "direction": r.direction.map(|d| p.directions(r.position).label(d)),
                        "env_state": sys.states().label(r.env_state),
                        "belief": r.belief,
                        "policy": r.policy_index,
                        "g": r.g.map(number),
                    }));
                }
            }
            report.push(Check::holds(
                "episode.typed_actions",
                typed,
                format!("{n} episodes of {steps} steps"),
            ));
            report.push(Check::holds(
                "episode.records",
                records.len() == n * (steps + 1),
                format!("{} records", records.len()),
            ));
            (
                records,
                json!({ "experiment": name, "kind": "simulate", "episodes": n, "steps": steps }),
            )
        }
        ExperimentDecl::Plan { .. } => {
            return Err(CliError::Usage(format!(
                "experiment {name:?} is a plan; run it with `polyagent plan`"
            )))
        }
        ExperimentDecl::Compose { .. } => {
            return Err(CliError::Usage(format!(
                "experiment {name:?} is a composition; run it with `polyagent compose`"
            )))
        }
    };
    let path = args
        .out
        .clone()
        .unwrap_or_else(|| PathBuf::from(format!("{name}.jsonl")));
    write_atomic(&path, jsonl(&records).as_bytes())?;
    report.artifacts.push(path.display().to_string());
    let mut result = result;
    result["records"] = json!(records.len());
    report.result = result;
    Ok(report)
}

#[derive(Clone, Debug, Default)]
pub struct PlanArgs {
    pub scenario: PathBuf,
    /// An agent or a plan experiment.
    pub name: String,
    pub position: Option<String>,
    pub belief: Option<Vec<f64>>,
    pub horizon: Option<usize>,
}

pub fn plan(args: &PlanArgs, guards: Guards) -> CliResult<RunReport> {
    let sc = load(&args.scenario)?;
    let built = Built::new(&sc, guards);
    let (agent_name, mut position, mut belief, mut horizon) = match sc.experiments.get(&args.name) {
        Some(ExperimentDecl::Plan {
            agent,
            position,
            belief,
            horizon,
        }) => (
            agent.clone(),
            Some(position.clone()),
            belief.clone(),
            *horizon,
        ),
        _ => (args.name.clone(), None, None, None),
    };
    position = args.position.clone().or(position);
    belief = args.belief.clone().or(belief);
    horizon = args.horizon.or(horizon);
    let at = format!("agents.{agent_name}");
    let base = built.planner(&agent_name, "plan")?;
    let model = base.model().clone();
    let sys = model.system();
    let p = sys.iface();
    let position = position.ok_or_else(|| CliError::Usage("plan needs --position".into()))?;
    let pos = p.positions().index_of(&position).ok_or_else(|| {
        CliError::reference(
            "position",
            format!("{position:?} is not a position of {agent_name:?}"),
        )
    })?;
    let belief = match belief {
        Some(b) => {
            Dist::new(sys.states().clone(), b).map_err(|e| CliError::building("belief", e))?
        }
        None => model.prior().clone(),
    };
    let horizon = horizon.unwrap_or(base.horizon());
    let agent = Agent::new(model.clone(), base.preferences().clone(), horizon)
        .map_err(|e| CliError::building(&at, e))?
        .with_guard(guards.policy);
    let chosen = select_action(&agent, &belief, pos).map_err(|e| CliError::running(&at, e))?;
    let conditioned = condition(sys, &belief, pos).map_err(|e| CliError::running(&at, e))?;
    let table = plan_table(
        sys,
        agent.preferences(),
        horizon,
        guards.policy,
        &conditioned,
    )
    .map_err(|e| CliError::running(&at, e))?;
    let mut report = RunReport::new("plan", Some(&sc));
    if let Some((_, pi, _)) = table.first() {
        report.push(Check::holds(
            "plan.winner_matches_select_action",
            pi.steps()[0][pos] == Some(chosen),
            "first step of the top-ranked policy at the current position",
        ));
    }
    let rows: Vec<Value> = table
        .iter()
        .enumerate()
        .map(|(rank, (k, pi, g))| json!({ "rank": rank, "policy": k, "steps": pi.describe(p), "g": number(*g) }))
        .collect();
    report.result = json!({
        "agent": agent_name,
        "position": position,
        "horizon": horizon,
        "belief": conditioned.masses(),
        "action": p.directions(pos).label(chosen),
        "rows": rows,
    });
    Ok(report)
}

#[derive(Clone, Debug, Default)]
pub struct ComposeArgs {
    pub scenario: PathBuf,
    /// A composite agent or a compose experiment.
    pub name: String,
    pub out: Option<PathBuf>,
}

/// Labels without the characters reserved for products.
fn flat_labels(set: &FinSet) -> Vec<String> {
    let cleaned: Vec<String> = set
        .elements()
        .iter()
        .map(|l| l.replace(['(', ')'], "").replace(',', "."))
        .collect();
    if FinSet::new("check", cleaned.iter().cloned()).is_ok() {
        cleaned
    } else {
        (0..set.len()).map(|k| format!("s{k}")).collect()
    }
}

/// The flattened generative model of a composite agent as a scenario.
pub fn fragment(name: &str, agent: &Agent) -> Scenario {
    let model = agent.model();
    let sys = model.system();
    let p = sys.iface();
    let (o, a, s) = (
        format!("{name}_O"),
        format!("{name}_A"),
        format!("{name}_S"),
    );
    let mut sets = BTreeMap::new();
    sets.insert(
        o.clone(),
        SetDecl::Labels(p.positions().elements().to_vec()),
    );
    sets.insert(
        a.clone(),
        SetDecl::Labels(p.directions(0).elements().to_vec()),
    );
    sets.insert(s.clone(), SetDecl::Labels(flat_labels(sys.states())));
    let iface = format!("{name}_iface");
    let mut polynomials = BTreeMap::new();
    polynomials.insert(
        iface.clone(),
        PolyDecl::Monomial {
            positions: o,
            directions: a,
        },
    );
    let upd = (0..sys.num_states())
        .map(|x| {
            (0..p.arity(sys.out()[x]))
                .map(|d| sys.transition(x, d).to_vec())
                .collect()
        })
        .collect();
    let mut systems = BTreeMap::new();
    systems.insert(
        format!("{name}_model"),
        SystemDecl::Stochastic {
            iface,
            states: s,
            out: sys
                .out()
                .iter()
                .map(|&i| p.positions().label(i).to_string())
                .collect(),
            upd,
            prior: Some(model.prior().masses().to_vec()),
        },
    );
    Scenario {
        version: VERSION.to_string(),
        sets,
        categories: BTreeMap::new(),
        polynomials,
        lenses: BTreeMap::new(),
        channels: BTreeMap::new(),
        systems,
        managers: BTreeMap::new(),
        agents: BTreeMap::new(),
        meta: None,
        experiments: BTreeMap::new(),
    }
}

pub fn compose(args: &ComposeArgs, guards: Guards) -> CliResult<RunReport> {
    let sc = load(&args.scenario)?;
    let built = Built::new(&sc, guards);
    let agent_name = match sc.experiments.get(&args.name) {
        Some(ExperimentDecl::Compose { agent }) => agent.clone(),
        _ => args.name.clone(),
    };
    let agent = built.agent(&agent_name, "compose")?;
    if !agent.is_composite() {
        return Err(CliError::invariant(
            format!("agents.{agent_name}"),
            "agent is not composite",
        ));
    }
    let frag = fragment(&agent_name, &agent);
    let text = frag.to_canonical();
    let mut report = RunReport::new("compose", Some(&sc));
    let reparsed = Scenario::parse(&text)?;
    report.push(Check::holds(
        "fragment.round_trip",
        reparsed.to_canonical() == text,
        "canonical bytes",
    ));
    let rebuilt = Built::new(&reparsed, guards);
    rebuilt.resolve_all()?;
    let back = rebuilt.priored(&format!("{agent_name}_model"), "fragment")?;
    let sys = agent.model().system();
    let diff = if back.system().out() == sys.out() {
        back.system()
            .upd()
            .max_abs_diff(sys.upd())
            .max(back.prior().tv(agent.model().prior()))
    } else {
        f64::INFINITY
    };
    report.push(Check::new(
        "fragment.matches_model",
        diff,
        EPS_LAW,
        "update, outputs and prior",
    ));
    report.result = json!({
        "agent": agent_name,
        "states": sys.num_states(),
        "positions": sys.iface().num_positions(),
    });
    match &args.out {
        Some(path) => {
            write_atomic(path, text.as_bytes())?;
            report.artifacts.push(path.display().to_string());
        }
        None => {
            report.result["fragment"] =
                serde_json::from_str(&text).expect("canonical text is JSON");
        }
    }
    Ok(report)
}
