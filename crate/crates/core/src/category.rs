//! Finite categories and the polynomial they induce.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::finset::FinSet;
use crate::poly::Polynomial;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Morphism {
    pub label: String,
    pub dom: usize,
    pub cod: usize,
}

/// A finite category given by explicit tables. Composition is written in
/// diagrammatic order: `compose(g, f)` is "first `g`, then `f`" and requires
/// `cod(g) = dom(f)`.
#[derive(Clone, Debug)]
pub struct FinCategory {
    objects: FinSet,
    morphisms: Vec<Morphism>,
    identities: Vec<usize>,
    composition: HashMap<(usize, usize), usize>,
}

impl FinCategory {
    /// Builds the category and checks closure, unit and associativity laws
    /// exhaustively.
    pub fn new(
        objects: FinSet,
        morphisms: Vec<Morphism>,
        identities: Vec<usize>,
        composition: HashMap<(usize, usize), usize>,
    ) -> Result<Self> {
        let c = FinCategory {
            objects,
            morphisms,
            identities,
            composition,
        };
        c.check_laws()?;
        Ok(c)
    }

    /// Like [`FinCategory::new`], filling in every composite that involves
    /// an identity before checking.
    pub fn with_unit_composites(
        objects: FinSet,
        morphisms: Vec<Morphism>,
        identities: Vec<usize>,
        mut composition: HashMap<(usize, usize), usize>,
    ) -> Result<Self> {
        if identities.len() == objects.len() && identities.iter().all(|&i| i < morphisms.len()) {
            for (k, m) in morphisms.iter().enumerate() {
                if m.dom < identities.len() && m.cod < identities.len() {
                    composition.entry((identities[m.dom], k)).or_insert(k);
                    composition.entry((k, identities[m.cod])).or_insert(k);
                }
            }
        }
        FinCategory::new(objects, morphisms, identities, composition)
    }

    pub fn objects(&self) -> &FinSet {
        &self.objects
    }

    pub fn morphisms(&self) -> &[Morphism] {
        &self.morphisms
    }

    pub fn identity(&self, object: usize) -> usize {
        self.identities[object]
    }

    pub fn morphism_index(&self, label: &str) -> Option<usize> {
        self.morphisms.iter().position(|m| m.label == label)
    }

    pub fn compose(&self, g: usize, f: usize) -> Option<usize> {
        self.composition.get(&(g, f)).copied()
    }

    pub fn composition_table(&self) -> &HashMap<(usize, usize), usize> {
        &self.composition
    }

    fn check_laws(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidCategory(msg));
        let n_obj = self.objects.len();
        let n_mor = self.morphisms.len();
        for m in &self.morphisms {
            if m.dom >= n_obj || m.cod >= n_obj {
                return bad(format!(
                    "morphism {} has an endpoint outside the objects",
                    m.label
                ));
            }
        }
        let mut labels = std::collections::HashSet::new();
        for m in &self.morphisms {
            if !labels.insert(m.label.as_str()) {
                return bad(format!("duplicate morphism label {}", m.label));
            }
        }
        if self.identities.len() != n_obj {
            return bad(format!(
                "{} identities for {} objects",
                self.identities.len(),
                n_obj
            ));
        }
        for (x, &id) in self.identities.iter().enumerate() {
            let Some(m) = self.morphisms.get(id) else {
                return bad(format!("identity of object {x} is not a morphism"));
            };
            if m.dom != x || m.cod != x {
                return bad(format!(
                    "identity {} is not an endomorphism of {}",
                    m.label,
                    self.objects.label(x)
                ));
            }
        }
        for (&(g, f), &h) in &self.composition {
            if g >= n_mor || f >= n_mor || h >= n_mor {
                return bad(format!("composition entry ({g},{f}) -> {h} out of range"));
            }
            let (mg, mf, mh) = (&self.morphisms[g], &self.morphisms[f], &self.morphisms[h]);
            if mg.cod != mf.dom {
                return bad(format!(
                    "composite {};{} is not composable",
                    mg.label, mf.label
                ));
            }
            if mh.dom != mg.dom || mh.cod != mf.cod {
                return bad(format!(
                    "{};{} = {} has the wrong type",
                    mg.label, mf.label, mh.label
                ));
            }
        }
        for g in 0..n_mor {
            for f in 0..n_mor {
                if self.morphisms[g].cod == self.morphisms[f].dom
                    && !self.composition.contains_key(&(g, f))
                {
                    return bad(format!(
                        "missing composite {};{}",
                        self.morphisms[g].label, self.morphisms[f].label
                    ));
                }
            }
        }
        for (k, m) in self.morphisms.iter().enumerate() {
            if self.compose(self.identities[m.dom], k) != Some(k)
                || self.compose(k, self.identities[m.cod]) != Some(k)
            {
                return bad(format!("unit law fails at {}", m.label));
            }
        }
        for h in 0..n_mor {
            for g in 0..n_mor {
                let Some(hg) = self.compose(h, g) else {
                    continue;
                };
                for f in 0..n_mor {
                    let Some(gf) = self.compose(g, f) else {
                        continue;
                    };
                    if self.compose(hg, f) != self.compose(h, gf) {
                        return bad(format!(
                            "associativity fails at ({},{},{})",
                            self.morphisms[h].label,
                            self.morphisms[g].label,
                            self.morphisms[f].label
                        ));
                    }
                }
            }
        }
        Ok(())
    }

    /// True iff consecutive morphisms are composable. Unknown labels are errors.
    pub fn is_composable_path(&self, labels: &[&str]) -> Result<bool> {
        let indices = labels
            .iter()
            .map(|l| {
                self.morphism_index(l)
                    .ok_or_else(|| Error::UnknownMorphism((*l).to_string()))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(indices
            .windows(2)
            .all(|w| self.morphisms[w[0]].cod == self.morphisms[w[1]].dom))
    }

    /// The polynomial whose positions are objects and whose directions at `x`
    /// are the morphisms out of `x`, in declaration order.
    pub fn to_polynomial(&self) -> Polynomial {
        let directions = (0..self.objects.len())
            .map(|x| {
                let out: Vec<&str> = self
                    .morphisms
                    .iter()
                    .filter(|m| m.dom == x)
                    .map(|m| m.label.as_str())
                    .collect();
                FinSet::new(format!("out({})", self.objects.label(x)), out)
                    .expect("labels checked distinct")
            })
            .collect();
        Polynomial::new(self.objects.clone(), directions).expect("one direction set per object")
    }

    /// Morphism index behind direction `d` at position `x` of [`Self::to_polynomial`].
    pub fn direction_morphism(&self, x: usize, d: usize) -> usize {
        self.morphisms
            .iter()
            .enumerate()
            .filter(|(_, m)| m.dom == x)
            .nth(d)
            .map(|(k, _)| k)
            .expect("direction in range")
    }

    pub fn walking_arrow() -> FinCategory {
        let objects = FinSet::new("C0", ["X", "Y"]).expect("distinct");
        let morphisms = vec![
            Morphism {
                label: "id_X".into(),
                dom: 0,
                cod: 0,
            },
            Morphism {
                label: "id_Y".into(),
                dom: 1,
                cod: 1,
            },
            Morphism {
                label: "f".into(),
                dom: 0,
                cod: 1,
            },
        ];
        FinCategory::with_unit_composites(objects, morphisms, vec![0, 1], HashMap::new())
            .expect("walking arrow is a category")
    }

    pub fn discrete(n: usize) -> FinCategory {
        let objects = FinSet::range("C0", n);
        let morphisms = (0..n)
            .map(|x| Morphism {
                label: format!("id_{x}"),
                dom: x,
                cod: x,
            })
            .collect();
        FinCategory::with_unit_composites(objects, morphisms, (0..n).collect(), HashMap::new())
            .expect("discrete category")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// The two-element monoid {e, t} with t;t = e.
    fn z2() -> Result<FinCategory> {
        let objects = FinSet::new("C0", ["*"]).unwrap();
        let morphisms = vec![
            Morphism {
                label: "e".into(),
                dom: 0,
                cod: 0,
            },
            Morphism {
                label: "t".into(),
                dom: 0,
                cod: 0,
            },
        ];
        let mut comp = HashMap::new();
        comp.insert((1, 1), 0);
        FinCategory::with_unit_composites(objects, morphisms, vec![0], comp)
    }

    #[test]
    fn walking_arrow_polynomial() {
        let c = FinCategory::walking_arrow();
        let p = c.to_polynomial();
        assert_eq!(p.positions().elements(), &["X", "Y"]);
        assert_eq!(p.directions(0).elements(), &["id_X", "f"]);
        assert_eq!(p.directions(1).elements(), &["id_Y"]);
    }

    #[test]
    fn discrete_category_is_linear() {
        let p = FinCategory::discrete(4).to_polynomial();
        assert_eq!(p.arities(), vec![1; 4]);
    }

    #[test]
    fn monoid_gives_y_squared() {
        let p = z2().unwrap().to_polynomial();
        assert_eq!(p.arities(), vec![2]);
    }

    #[test]
    fn non_associative_table_rejected() {
        // {e, a, b} with a;a = b, a;b = e, b;a = a (breaks (a;a);a = a;(a;a))
        let objects = FinSet::new("C0", ["*"]).unwrap();
        let morphisms = ["e", "a", "b"]
            .iter()
            .map(|l| Morphism {
                label: (*l).into(),
                dom: 0,
                cod: 0,
            })
            .collect();
        let mut comp = HashMap::new();
        comp.insert((1, 1), 2);
        comp.insert((1, 2), 0);
        comp.insert((2, 1), 1);
        comp.insert((2, 2), 2);
        let err = FinCategory::with_unit_composites(objects, morphisms, vec![0], comp).unwrap_err();
        assert!(matches!(err, Error::InvalidCategory(_)));
    }

    #[test]
    fn missing_composite_rejected() {
        let objects = FinSet::new("C0", ["*"]).unwrap();
        let morphisms = vec![
            Morphism {
                label: "e".into(),
                dom: 0,
                cod: 0,
            },
            Morphism {
                label: "t".into(),
                dom: 0,
                cod: 0,
            },
        ];
        assert!(
            FinCategory::with_unit_composites(objects, morphisms, vec![0], HashMap::new()).is_err()
        );
    }

    #[test]
    fn composable_paths() {
        let c = FinCategory::walking_arrow();
        assert!(c.is_composable_path(&["f", "id_Y"]).unwrap());
        assert!(!c.is_composable_path(&["f", "f"]).unwrap());
        assert!(c.is_composable_path(&[]).unwrap());
        assert!(matches!(
            c.is_composable_path(&["g"]),
            Err(Error::UnknownMorphism(_))
        ));
    }
}
