//! Dependent lenses: morphisms of polynomials.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::poly::Polynomial;

/// A morphism `dom -> cod`: a forward map on positions and, for every domain
/// position `i`, a backward map `cod[fwd(i)] -> dom[i]`.
///
/// Equality is extensional: the endpoints and all tables must agree.
/// Endpoints are shared, so enumerations into large codomains stay cheap.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Lens {
    dom: Arc<Polynomial>,
    cod: Arc<Polynomial>,
    fwd: Vec<usize>,
    bwd: Vec<Vec<usize>>,
}

impl Lens {
    pub fn new(
        dom: Polynomial,
        cod: Polynomial,
        fwd: Vec<usize>,
        bwd: Vec<Vec<usize>>,
    ) -> Result<Self> {
        Lens::shared(Arc::new(dom), Arc::new(cod), fwd, bwd)
    }

    pub(crate) fn shared(
        dom: Arc<Polynomial>,
        cod: Arc<Polynomial>,
        fwd: Vec<usize>,
        bwd: Vec<Vec<usize>>,
    ) -> Result<Self> {
        if fwd.len() != dom.num_positions() || bwd.len() != dom.num_positions() {
            return Err(Error::invalid(
                "lens",
                format!(
                    "tables cover {} / {} positions, domain has {}",
                    fwd.len(),
                    bwd.len(),
                    dom.num_positions()
                ),
            ));
        }
        for (i, (&j, back)) in fwd.iter().zip(&bwd).enumerate() {
            if j >= cod.num_positions() {
                return Err(Error::invalid(
                    "lens",
                    format!("fwd({i}) = {j} is not a codomain position"),
                ));
            }
            if back.len() != cod.arity(j) {
                return Err(Error::invalid(
                    "lens",
                    format!(
                        "bwd at {i} has {} entries, cod[{j}] has {}",
                        back.len(),
                        cod.arity(j)
                    ),
                ));
            }
            if let Some(&d) = back.iter().find(|&&d| d >= dom.arity(i)) {
                return Err(Error::invalid(
                    "lens",
                    format!("bwd at {i} hits {d}, dom[{i}] has {}", dom.arity(i)),
                ));
            }
        }
        Ok(Lens { dom, cod, fwd, bwd })
    }

    pub fn identity(p: &Polynomial) -> Self {
        let p = Arc::new(p.clone());
        Lens {
            dom: p.clone(),
            cod: p.clone(),
            fwd: (0..p.num_positions()).collect(),
            bwd: (0..p.num_positions())
                .map(|i| (0..p.arity(i)).collect())
                .collect(),
        }
    }

    pub fn dom(&self) -> &Polynomial {
        &self.dom
    }

    pub fn cod(&self) -> &Polynomial {
        &self.cod
    }

    pub fn fwd(&self) -> &[usize] {
        &self.fwd
    }

    pub fn bwd(&self) -> &[Vec<usize>] {
        &self.bwd
    }

    pub fn forward(&self, i: usize) -> usize {
        self.fwd[i]
    }

    pub fn backward(&self, i: usize, d: usize) -> usize {
        self.bwd[i][d]
    }

    /// `self ; next`: forward `next₁ ∘ self₁`, backward at `i` is
    /// `self♯_i ∘ next♯_{self₁(i)}`.
    pub fn then(&self, next: &Lens) -> Result<Lens> {
        if self.cod != next.dom {
            return Err(Error::InterfaceMismatch(format!(
                "cannot compose {} -> {} with {} -> {}",
                self.dom, self.cod, next.dom, next.cod
            )));
        }
        let fwd = self.fwd.iter().map(|&j| next.fwd[j]).collect();
        let bwd = self
            .fwd
            .iter()
            .zip(&self.bwd)
            .map(|(&j, back)| next.bwd[j].iter().map(|&e| back[e]).collect())
            .collect();
        Ok(Lens {
            dom: self.dom.clone(),
            cod: next.cod.clone(),
            fwd,
            bwd,
        })
    }

    /// `self ⊗ other : dom ⊗ other.dom -> cod ⊗ other.cod`.
    pub fn tensor(&self, other: &Lens) -> Lens {
        let dom = Arc::new(self.dom.tensor(&other.dom));
        let cod = Arc::new(self.cod.tensor(&other.cod));
        let mut fwd = Vec::with_capacity(dom.num_positions());
        let mut bwd = Vec::with_capacity(dom.num_positions());
        for i in 0..self.dom.num_positions() {
            for j in 0..other.dom.num_positions() {
                let (ci, cj) = (self.fwd[i], other.fwd[j]);
                fwd.push(self.cod.tensor_position(&other.cod, ci, cj));
                let width_dom = other.dom.arity(j);
                let mut back = Vec::with_capacity(self.cod.arity(ci) * other.cod.arity(cj));
                for a in 0..self.cod.arity(ci) {
                    for b in 0..other.cod.arity(cj) {
                        back.push(self.bwd[i][a] * width_dom + other.bwd[j][b]);
                    }
                }
                bwd.push(back);
            }
        }
        Lens { dom, cod, fwd, bwd }
    }

    /// The symmetry `p ⊗ q -> q ⊗ p`.
    pub fn swap(p: &Polynomial, q: &Polynomial) -> Lens {
        let dom = Arc::new(p.tensor(q));
        let cod = Arc::new(q.tensor(p));
        let mut fwd = Vec::with_capacity(dom.num_positions());
        let mut bwd = Vec::with_capacity(dom.num_positions());
        for i in 0..p.num_positions() {
            for j in 0..q.num_positions() {
                fwd.push(q.tensor_position(p, j, i));
                let (ai, aj) = (p.arity(i), q.arity(j));
                let mut back = Vec::with_capacity(ai * aj);
                for b in 0..aj {
                    for a in 0..ai {
                        back.push(a * aj + b);
                    }
                }
                bwd.push(back);
            }
        }
        Lens { dom, cod, fwd, bwd }
    }

    /// True when this lens is invertible (bijective forward map and
    /// bijective backward maps).
    pub fn is_isomorphism(&self) -> bool {
        let mut hit = vec![false; self.cod.num_positions()];
        for &j in &self.fwd {
            if hit[j] {
                return false;
            }
            hit[j] = true;
        }
        if hit.iter().any(|h| !h) {
            return false;
        }
        self.fwd
            .iter()
            .zip(&self.bwd)
            .enumerate()
            .all(|(i, (_, back))| {
                let mut seen = vec![false; self.dom.arity(i)];
                back.iter().all(|&d| !std::mem::replace(&mut seen[d], true))
                    && seen.iter().all(|&s| s)
            })
    }

    /// Inverse of an isomorphism.
    pub fn inverse(&self) -> Option<Lens> {
        if !self.is_isomorphism() {
            return None;
        }
        let mut fwd = vec![0; self.cod.num_positions()];
        let mut bwd = vec![Vec::new(); self.cod.num_positions()];
        for (i, &j) in self.fwd.iter().enumerate() {
            fwd[j] = i;
            let mut back = vec![0; self.dom.arity(i)];
            for (e, &d) in self.bwd[i].iter().enumerate() {
                back[d] = e;
            }
            bwd[j] = back;
        }
        Some(Lens {
            dom: self.cod.clone(),
            cod: self.dom.clone(),
            fwd,
            bwd,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_y() -> Polynomial {
        Polynomial::from_arities(&[1, 1])
    }

    fn swap2() -> Lens {
        Lens::new(two_y(), two_y(), vec![1, 0], vec![vec![0], vec![0]]).unwrap()
    }

    #[test]
    fn swap_twice_is_identity() {
        let s = swap2();
        assert_eq!(s.then(&s).unwrap(), Lens::identity(&two_y()));
    }

    #[test]
    fn identity_laws() {
        let s = swap2();
        let id = Lens::identity(&two_y());
        assert_eq!(id.then(&s).unwrap(), s);
        assert_eq!(s.then(&id).unwrap(), s);
        assert_eq!(id.then(&id).unwrap(), id);
    }

    #[test]
    fn mismatched_composition_rejected() {
        let s = swap2();
        let other = Lens::identity(&Polynomial::y());
        assert!(matches!(s.then(&other), Err(Error::InterfaceMismatch(_))));
    }

    #[test]
    fn invalid_tables_rejected() {
        let p = Polynomial::from_arities(&[2, 0]);
        let q = Polynomial::from_arities(&[1]);
        // position 1 has no directions, so no backward map out of q[0] exists
        assert!(Lens::new(p.clone(), q.clone(), vec![0, 0], vec![vec![0], vec![0]]).is_err());
        assert!(Lens::new(p, q, vec![0], vec![vec![0]]).is_err());
    }

    #[test]
    fn swap_tensor_identity_permutes_first_coordinate() {
        // (swap ⊗ id) on 2y ⊗ y: positions (0,*),(1,*) trade places.
        let t = swap2().tensor(&Lens::identity(&Polynomial::y()));
        assert_eq!(t.fwd(), &[1, 0]);
        assert_eq!(t.bwd(), &[vec![0], vec![0]]);
    }

    #[test]
    fn tensor_symmetry_round_trip() {
        let p = Polynomial::from_arities(&[2, 0, 1]);
        let q = Polynomial::from_arities(&[3, 1]);
        let there = Lens::swap(&p, &q);
        let back = Lens::swap(&q, &p);
        assert_eq!(there.then(&back).unwrap(), Lens::identity(&p.tensor(&q)));
        assert_eq!(there.inverse().unwrap(), back);
    }
}
