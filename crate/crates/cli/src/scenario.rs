//! The `polyagent/1` scenario format.
//!
//! Every declaration is keyed by name. Tables refer to elements by label and
//! follow the declaring set's order; product carriers are flattened
//! left-major.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

pub const VERSION: &str = "polyagent/1";

type Named<T> = BTreeMap<String, T>;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub version: String,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub sets: Named<SetDecl>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub categories: Named<CategoryDecl>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub polynomials: Named<PolyDecl>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub lenses: Named<LensDecl>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub channels: Named<ChannelDecl>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub systems: Named<SystemDecl>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub managers: Named<ManagerDecl>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub agents: Named<AgentDecl>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub meta: Option<MetaDecl>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub experiments: Named<ExperimentDecl>,
}

/// A set of `n` elements labelled `0..n`, or explicit labels.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SetDecl {
    Size(usize),
    Labels(Vec<String>),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MorphismDecl {
    pub name: String,
    pub dom: String,
    pub cod: String,
}

/// Composites are `[first, then, result]`; composites with identities are
/// filled in.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CategoryDecl {
    pub objects: Vec<String>,
    pub morphisms: Vec<MorphismDecl>,
    /// Object to identity morphism; defaults to `id_<object>`.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub identities: BTreeMap<String, String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub compose: Vec<[String; 3]>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PolyDecl {
    /// `positions y^directions`
    Monomial {
        positions: String,
        directions: String,
    },
    /// One direction set per position label.
    Dependent {
        positions: String,
        directions: BTreeMap<String, String>,
    },
    /// A sum of terms such as `y^2+1` or `Oy^A`.
    Expr {
        expr: String,
    },
    Category {
        category: String,
    },
    Tensor {
        factors: Vec<String>,
    },
    Hom {
        source: String,
        target: String,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum LensDecl {
    /// `fwd` maps domain positions to codomain positions; `bwd[i]` maps the
    /// directions at `fwd(i)` back to directions at `i`.
    Table {
        dom: String,
        cod: String,
        fwd: BTreeMap<String, String>,
        #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
        bwd: BTreeMap<String, BTreeMap<String, String>>,
    },
    Identity {
        of: String,
    },
    Compose {
        chain: Vec<String>,
    },
    Tensor {
        factors: Vec<String>,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelDecl {
    pub dom: String,
    pub cod: String,
    pub rows: Vec<Vec<f64>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SystemDecl {
    /// `upd[s][d]` is the next-state distribution at direction `d` of `out[s]`.
    Stochastic {
        iface: String,
        states: String,
        out: Vec<String>,
        upd: Vec<Vec<Vec<f64>>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        prior: Option<Vec<f64>>,
    },
    /// `next[s][d]` is the next state label.
    Moore {
        iface: String,
        states: String,
        out: Vec<String>,
        next: Vec<Vec<String>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        prior: Option<Vec<f64>>,
    },
    Rewire {
        base: String,
        lens: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        prior: Option<Vec<f64>>,
    },
    Parallel {
        factors: [String; 2],
        #[serde(default, skip_serializing_if = "Option::is_none")]
        prior: Option<Vec<f64>>,
    },
    /// States `S x p(1)`; `trans` is indexed by `Σ_{(s,i)} p[i]`.
    Fold {
        states: String,
        iface: String,
        trans: String,
        like: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        prior: Option<Vec<f64>>,
    },
    /// The environment of the structure-learning agent over the `meta` objects.
    Structure { start: String, prior: Vec<f64> },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ManagerPolicyDecl {
    /// Indexed by `S x O x C x E`.
    Table { table: Vec<String> },
    Efe {
        preferences: BTreeMap<String, f64>,
        horizon: usize,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManagerDecl {
    pub states: String,
    pub prior: Vec<f64>,
    pub b: String,
    pub c: String,
    pub d: String,
    pub e: String,
    pub o: String,
    pub a: String,
    /// `S x B x D -> O`
    pub likelihood: Vec<String>,
    /// `S x B x D x A -> C`
    pub low_left: Vec<String>,
    /// `S x B x D x A -> E`
    pub low_right: Vec<String>,
    /// `S x B x D x A ⇝ S`
    pub trans: Vec<Vec<f64>>,
    /// `S x O -> B`
    pub gen_left: Vec<String>,
    /// `S x O -> D`
    pub gen_right: Vec<String>,
    pub policy: ManagerPolicyDecl,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum AgentDecl {
    Efe {
        model: String,
        preferences: BTreeMap<String, f64>,
        horizon: usize,
    },
    Fixed {
        model: String,
        table: BTreeMap<String, String>,
    },
    Hierarchy {
        manager: String,
        left: String,
        right: String,
    },
    Chain {
        bottom: String,
        managers: Vec<String>,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SearchDecl {
    Deterministic,
    Grid { denominator: usize },
    Candidates { channels: Vec<String> },
}

/// Objects of `∫Gen` are declared systems, named after them.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MetaDecl {
    pub objects: Vec<String>,
    pub search: SearchDecl,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UnrollMode {
    Exact,
    Sample,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ExperimentDecl {
    Unroll {
        system: String,
        steps: usize,
        mode: UnrollMode,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        samples: Option<usize>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        seed: Option<u64>,
    },
    Simulate {
        agent: String,
        env: String,
        steps: usize,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        episodes: Option<usize>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        seed: Option<u64>,
    },
    Plan {
        agent: String,
        position: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        belief: Option<Vec<f64>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        horizon: Option<usize>,
    },
    Compose {
        agent: String,
    },
}

impl Scenario {
    pub fn parse(text: &str) -> CliResult<Scenario> {
        let value: serde_json::Value = serde_json::from_str(text).map_err(|e| {
            CliError::parse(
                format!("line {}, column {}", e.line(), e.column()),
                e.to_string(),
            )
        })?;
        match value.get("version").and_then(|v| v.as_str()) {
            Some(VERSION) => {}
            Some(other) => {
                return Err(CliError::parse(
                    "version",
                    format!("unsupported version {other:?}, expected {VERSION:?}"),
                ))
            }
            None => {
                return Err(CliError::parse(
                    "version",
                    format!("missing version field, expected {VERSION:?}"),
                ))
            }
        }
        // deserialize section by section so that errors carry a location
        let Some(obj) = value.as_object() else {
            return Err(CliError::parse("<root>", "a scenario is a JSON object"));
        };
        let known = [
            "version",
            "sets",
            "categories",
            "polynomials",
            "lenses",
            "channels",
            "systems",
            "managers",
            "agents",
            "meta",
            "experiments",
        ];
        if let Some(k) = obj.keys().find(|k| !known.contains(&k.as_str())) {
            return Err(CliError::parse(k.clone(), "unknown section"));
        }
        fn section<T: serde::de::DeserializeOwned>(
            obj: &serde_json::Map<String, serde_json::Value>,
            key: &str,
        ) -> CliResult<Named<T>> {
            let Some(v) = obj.get(key) else {
                return Ok(BTreeMap::new());
            };
            let Some(entries) = v.as_object() else {
                return Err(CliError::parse(
                    key,
                    "expected an object of named declarations",
                ));
            };
            entries
                .iter()
                .map(|(name, decl)| {
                    T::deserialize(decl)
                        .map(|d| (name.clone(), d))
                        .map_err(|e| CliError::parse(format!("{key}.{name}"), e.to_string()))
                })
                .collect()
        }
        let meta = match obj.get("meta") {
            None => None,
            Some(v) => {
                Some(MetaDecl::deserialize(v).map_err(|e| CliError::parse("meta", e.to_string()))?)
            }
        };
        Ok(Scenario {
            version: VERSION.to_string(),
            sets: section(obj, "sets")?,
            categories: section(obj, "categories")?,
            polynomials: section(obj, "polynomials")?,
            lenses: section(obj, "lenses")?,
            channels: section(obj, "channels")?,
            systems: section(obj, "systems")?,
            managers: section(obj, "managers")?,
            agents: section(obj, "agents")?,
            meta,
            experiments: section(obj, "experiments")?,
        })
    }

    /// Sorted keys, two-space indentation, shortest round-trip floats, and a
    /// trailing newline.
    pub fn to_canonical(&self) -> String {
        canonical_json(&serde_json::to_value(self).expect("scenarios serialize"))
    }
}

pub fn canonical_json(value: &serde_json::Value) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("values serialize");
    s.push('\n');
    s
}
