//! The category `∫Gen` of interfaces with models over them.
//!
//! A morphism `(p, S, ϑ) -> (p', S', ϑ')` pairs a lens `φ : p -> p'` with a
//! system morphism `Gen(φ)(S, ϑ) -> (S', ϑ')`. Hom-sets are searched over a
//! finite family of channels.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::finset::{pow_sat, FinSet, MixedRadix};
use crate::hom::enumerate_lenses;
use crate::lens::Lens;
use crate::poly::Polynomial;
use crate::stoch::{Channel, Dist};
use crate::systems::{
    check_system_morphism, gen_rewire, GenSystem, MorphismCheck, PrioredGenSystem,
};

/// Largest `|S| * |S'|` for which grid channels are enumerated.
pub const GRID_CELL_GUARD: usize = 16;
pub const DEFAULT_CHANNEL_GUARD: u128 = 1_000_000;

#[derive(Clone, Debug, PartialEq)]
pub struct GrothObject {
    pub name: String,
    pub system: GenSystem,
}

impl GrothObject {
    pub fn new(name: impl Into<String>, system: GenSystem) -> Self {
        GrothObject {
            name: name.into(),
            system,
        }
    }

    pub fn iface(&self) -> &Polynomial {
        self.system.iface()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GrothMorphism {
    pub lens: Lens,
    pub chan: Channel,
}

impl GrothMorphism {
    pub fn identity(obj: &GrothObject) -> Self {
        GrothMorphism {
            lens: Lens::identity(obj.iface()),
            chan: Channel::identity(obj.system.states()),
        }
    }

    /// `self` first, then `next`.
    pub fn then(&self, next: &GrothMorphism) -> Result<GrothMorphism> {
        Ok(GrothMorphism {
            lens: self.lens.then(&next.lens)?,
            chan: self.chan.then(&next.chan)?,
        })
    }
}

/// Rewires `src` along the lens, then checks the channel as a system morphism.
pub fn check_groth_morphism(
    src: &GrothObject,
    dst: &GrothObject,
    m: &GrothMorphism,
) -> Result<MorphismCheck> {
    if m.lens.dom() != src.iface() || m.lens.cod() != dst.iface() {
        return Err(Error::InterfaceMismatch(format!(
            "lens {} -> {} between objects over {} and {}",
            m.lens.dom(),
            m.lens.cod(),
            src.iface(),
            dst.iface()
        )));
    }
    let rewired = gen_rewire(&m.lens, &src.system)?;
    check_system_morphism(&m.chan, &rewired, &dst.system)
}

/// Which channels `S ⇝ S'` to try.
#[derive(Clone, Debug, PartialEq)]
pub enum ChannelSearch {
    /// Dirac channels of functions.
    Deterministic,
    /// Rows with entries in `{0, 1/n, ..., 1}`.
    Grid {
        denominator: usize,
    },
    Candidates(Vec<Channel>),
}

/// Rows with entries `k/n` summing to 1, lexicographic in the numerators.
fn grid_rows(width: usize, n: usize) -> Vec<Vec<f64>> {
    let mut rows = Vec::new();
    let mut current = vec![0usize; width];
    fn fill(k: usize, left: usize, n: usize, current: &mut Vec<usize>, rows: &mut Vec<Vec<f64>>) {
        if k + 1 == current.len() {
            current[k] = left;
            rows.push(current.iter().map(|&c| c as f64 / n as f64).collect());
            return;
        }
        for v in (0..=left).rev() {
            current[k] = v;
            fill(k + 1, left - v, n, current, rows);
        }
    }
    if width > 0 {
        fill(0, n, n, &mut current, &mut rows);
    }
    rows
}

/// Candidate channels whose support respects outputs: mass may only move
/// from `s` to states `u` with `out'(u) = out(s)`.
fn candidate_channels(
    a: &GenSystem,
    b: &GenSystem,
    search: &ChannelSearch,
    guard: u128,
) -> Result<Vec<Channel>> {
    let (sa, sb) = (a.states(), b.states());
    let compatible: Vec<Vec<usize>> = (0..sa.len())
        .map(|s| {
            (0..sb.len())
                .filter(|&u| b.out()[u] == a.out()[s])
                .collect()
        })
        .collect();
    match search {
        ChannelSearch::Candidates(list) => Ok(list.clone()),
        ChannelSearch::Deterministic => {
            let radices: Vec<usize> = compatible.iter().map(Vec::len).collect();
            let total = MixedRadix::cardinality(&radices);
            if total > guard {
                return Err(Error::SizeGuardExceeded {
                    what: format!("functions {} -> {}", sa.name(), sb.name()),
                    cardinality: total,
                    guard,
                });
            }
            Ok(MixedRadix::new(radices)
                .map(|digits| {
                    let f: Vec<usize> = digits
                        .iter()
                        .enumerate()
                        .map(|(s, &k)| compatible[s][k])
                        .collect();
                    Channel::dirac(sa, sb, &f)
                })
                .collect())
        }
        ChannelSearch::Grid { denominator } => {
            let cells = sa.len() * sb.len();
            if cells > GRID_CELL_GUARD {
                return Err(Error::SizeGuardExceeded {
                    what: format!("grid channels {} ⇝ {}", sa.name(), sb.name()),
                    cardinality: cells as u128,
                    guard: GRID_CELL_GUARD as u128,
                });
            }
            let n = (*denominator).max(1);
            let per_state: Vec<Vec<Vec<f64>>> = compatible
                .iter()
                .map(|targets| {
                    grid_rows(targets.len(), n)
                        .into_iter()
                        .map(|r| {
                            let mut row = vec![0.0; sb.len()];
                            for (&u, x) in targets.iter().zip(r) {
                                row[u] = x;
                            }
                            row
                        })
                        .collect()
                })
                .collect();
            let radices: Vec<usize> = per_state.iter().map(Vec::len).collect();
            let total = MixedRadix::cardinality(&radices);
            if total > guard {
                return Err(Error::SizeGuardExceeded {
                    what: format!("grid channels {} ⇝ {}", sa.name(), sb.name()),
                    cardinality: total,
                    guard,
                });
            }
            Ok(MixedRadix::new(radices)
                .map(|digits| {
                    let rows = digits
                        .iter()
                        .enumerate()
                        .map(|(s, &k)| per_state[s][k].clone())
                        .collect();
                    Channel::new(sa.clone(), sb.clone(), rows).expect("grid rows sum to one")
                })
                .collect())
        }
    }
}

/// Every `(lens, channel)` pair from the search passing
/// [`check_groth_morphism`], lens-major in canonical order.
pub fn enumerate_groth_morphisms(
    src: &GrothObject,
    dst: &GrothObject,
    search: &ChannelSearch,
    guard: u128,
) -> Result<Vec<GrothMorphism>> {
    let bound = pow_sat(dst.system.num_states(), src.system.num_states());
    if matches!(search, ChannelSearch::Deterministic) && bound > guard {
        return Err(Error::SizeGuardExceeded {
            what: format!("functions {} -> {}", src.name, dst.name),
            cardinality: bound,
            guard,
        });
    }
    let mut found = Vec::new();
    for lens in enumerate_lenses(src.iface(), dst.iface(), guard)? {
        let rewired = gen_rewire(&lens, &src.system)?;
        for chan in candidate_channels(&rewired, &dst.system, search, guard)? {
            match check_system_morphism(&chan, &rewired, &dst.system) {
                Ok(c) if c.holds => found.push(GrothMorphism {
                    lens: lens.clone(),
                    chan,
                }),
                Ok(_) | Err(Error::IncompatibleOutputs(_)) => {}
                Err(e) => return Err(e),
            }
        }
    }
    Ok(found)
}

/// Precomputed hom lists, keyed by `(source index, target index)`.
pub type MorphismTables = HashMap<(usize, usize), Vec<GrothMorphism>>;

pub fn morphism_tables(
    objs: &[GrothObject],
    search: &ChannelSearch,
    guard: u128,
) -> Result<MorphismTables> {
    let mut tables = HashMap::new();
    for (k, a) in objs.iter().enumerate() {
        for (l, b) in objs.iter().enumerate() {
            tables.insert((k, l), enumerate_groth_morphisms(a, b, search, guard)?);
        }
    }
    Ok(tables)
}

/// The structure-learning interface: a position `(k, i)` for every object `k`
/// and position `i` of its interface; the directions there are all tabled
/// morphisms out of `k`, grouped by target in object order.
#[derive(Clone, Debug, PartialEq)]
pub struct StructureInterface {
    pub poly: Polynomial,
    /// For position `(k, i)` (flattened, object-major): direction `e` is
    /// morphism `moves[k][e].1` of the table `(k, moves[k][e].0)`.
    pub moves: Vec<Vec<(usize, usize)>>,
    pub position_offsets: Vec<usize>,
}

impl StructureInterface {
    pub fn position(&self, k: usize, i: usize) -> usize {
        self.position_offsets[k] + i
    }

    /// `(object, position)` behind a flattened position.
    pub fn split(&self, position: usize) -> (usize, usize) {
        let k = self.position_offsets.partition_point(|&o| o <= position) - 1;
        (k, position - self.position_offsets[k])
    }
}

pub fn structure_agent_interface(
    objs: &[GrothObject],
    tables: &MorphismTables,
) -> Result<StructureInterface> {
    let n = objs.len();
    let mut moves = Vec::with_capacity(n);
    let mut move_labels = Vec::with_capacity(n);
    for (k, src) in objs.iter().enumerate() {
        let mut ms = Vec::new();
        let mut labels = Vec::new();
        for (l, dst) in objs.iter().enumerate() {
            let table = tables.get(&(k, l)).ok_or(Error::MissingTable(k, l))?;
            for m in 0..table.len() {
                ms.push((l, m));
                labels.push(format!("{}->{}#{m}", src.name, dst.name));
            }
        }
        moves.push(ms);
        move_labels.push(
            FinSet::new(format!("moves({})", src.name), labels).map_err(|_| {
                Error::invalid(
                    "structure interface",
                    format!("object names out of {} collide", src.name),
                )
            })?,
        );
    }
    let mut position_labels = Vec::new();
    let mut directions = Vec::new();
    let mut position_offsets = Vec::with_capacity(n + 1);
    for (k, obj) in objs.iter().enumerate() {
        position_offsets.push(position_labels.len());
        for label in obj.iface().positions().elements() {
            position_labels.push(format!("({},{label})", obj.name));
            directions.push(move_labels[k].clone());
        }
    }
    position_offsets.push(position_labels.len());
    let positions = FinSet::new("∫Gen", position_labels)
        .map_err(|_| Error::invalid("structure interface", "object names collide"))?;
    Ok(StructureInterface {
        poly: Polynomial::new(positions, directions)?,
        moves,
        position_offsets,
    })
}

/// A closed-loop environment for the structure interface: states `(k, s)`,
/// output `(k, out_k(s))`, and a move `k -> l` samples the next state from
/// the row of its channel at `s`.
pub fn structure_environment(
    objs: &[GrothObject],
    tables: &MorphismTables,
    iface: &StructureInterface,
    start: usize,
    prior: &Dist,
) -> Result<PrioredGenSystem> {
    if start >= objs.len() || prior.len() != objs[start].system.num_states() {
        return Err(Error::CarrierMismatch(format!(
            "prior does not match object {start}"
        )));
    }
    let mut offsets = Vec::with_capacity(objs.len() + 1);
    let mut labels = Vec::new();
    for obj in objs {
        offsets.push(labels.len());
        labels.extend(
            obj.system
                .states()
                .elements()
                .iter()
                .map(|s| format!("({},{s})", obj.name)),
        );
    }
    offsets.push(labels.len());
    let states = FinSet::new("ΣS", labels)
        .map_err(|_| Error::invalid("structure environment", "object names collide"))?;
    let mut out = Vec::with_capacity(states.len());
    let mut rows = Vec::with_capacity(states.len());
    for (k, obj) in objs.iter().enumerate() {
        for s in 0..obj.system.num_states() {
            out.push(iface.position(k, obj.system.out()[s]));
            let per_move = iface.moves[k]
                .iter()
                .map(|&(l, m)| {
                    let chan = &tables[&(k, l)][m].chan;
                    let mut row = vec![0.0; states.len()];
                    for (u, &w) in chan.row(s).iter().enumerate() {
                        row[offsets[l] + u] = w;
                    }
                    row
                })
                .collect();
            rows.push(per_move);
        }
    }
    let system = GenSystem::from_rows(iface.poly.clone(), states.clone(), out, rows)?;
    let mut mass = vec![0.0; states.len()];
    mass[offsets[start]..offsets[start + 1]].copy_from_slice(prior.masses());
    PrioredGenSystem::new(system, Dist::new(states, mass)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn trivial() -> GrothObject {
        let sys = GenSystem::from_rows(
            Polynomial::y(),
            FinSet::unit(),
            vec![0],
            vec![vec![vec![1.0]]],
        )
        .unwrap();
        GrothObject::new("one", sys)
    }

    fn flip(name: &str) -> GrothObject {
        let p = Polynomial::from_arities(&[1, 1]);
        let sys = GenSystem::from_rows(
            p,
            FinSet::range("S", 2),
            vec![0, 1],
            vec![vec![vec![0.0, 1.0]], vec![vec![1.0, 0.0]]],
        )
        .unwrap();
        GrothObject::new(name, sys)
    }

    #[test]
    fn trivial_object_has_only_identity() {
        let t = trivial();
        let ms =
            enumerate_groth_morphisms(&t, &t, &ChannelSearch::Deterministic, DEFAULT_CHANNEL_GUARD)
                .unwrap();
        assert_eq!(ms, vec![GrothMorphism::identity(&t)]);
    }

    #[test]
    fn flip_automorphisms() {
        let a = flip("a");
        let ms =
            enumerate_groth_morphisms(&a, &a, &ChannelSearch::Deterministic, DEFAULT_CHANNEL_GUARD)
                .unwrap();
        // identity, and swapping both positions and states
        assert_eq!(ms.len(), 2);
        assert!(ms.contains(&GrothMorphism::identity(&a)));
    }

    #[test]
    fn grid_search_is_guarded() {
        let sys = GenSystem::from_rows(
            Polynomial::y(),
            FinSet::range("S", 5),
            vec![0; 5],
            vec![vec![vec![0.2; 5]]; 5],
        )
        .unwrap();
        let big = GrothObject::new("big", sys);
        let err = enumerate_groth_morphisms(
            &big,
            &big,
            &ChannelSearch::Grid { denominator: 2 },
            DEFAULT_CHANNEL_GUARD,
        )
        .unwrap_err();
        assert!(matches!(
            err,
            Error::SizeGuardExceeded {
                cardinality: 25,
                ..
            }
        ));
    }

    #[test]
    fn grid_rows_cover_simplex() {
        assert_eq!(
            grid_rows(2, 2),
            vec![vec![1.0, 0.0], vec![0.5, 0.5], vec![0.0, 1.0]]
        );
        assert_eq!(grid_rows(3, 1).len(), 3);
    }

    #[test]
    fn missing_table_reported() {
        let objs = vec![trivial(), flip("a")];
        let mut tables =
            morphism_tables(&objs, &ChannelSearch::Deterministic, DEFAULT_CHANNEL_GUARD).unwrap();
        tables.remove(&(1, 0));
        assert_eq!(
            structure_agent_interface(&objs, &tables).unwrap_err(),
            Error::MissingTable(1, 0)
        );
    }

    #[test]
    fn single_trivial_object_interface() {
        let objs = vec![trivial()];
        let tables =
            morphism_tables(&objs, &ChannelSearch::Deterministic, DEFAULT_CHANNEL_GUARD).unwrap();
        let si = structure_agent_interface(&objs, &tables).unwrap();
        assert_eq!(si.poly.arities(), vec![1]);
        assert_eq!(si.split(0), (0, 0));
    }
}
