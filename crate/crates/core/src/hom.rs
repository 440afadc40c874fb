//! Hom-sets of polynomials, the internal hom `[p, q]`, and the closed
//! monoidal structure around it (currying, evaluation, internal composition).
//!
//! Lenses `p -> q` are enumerated forward-table-major: forward maps in
//! mixed-radix order (position 0 most significant), then for each forward map
//! every combination of backward tables, again position 0 most significant
//! and each table in lexicographic order. Position `k` of [`HomPolynomial`]
//! is the `k`-th lens in that order.

use crate::error::{Error, Result};
use crate::finset::{function_rank, function_unrank, functions, pow_sat, FinSet, MixedRadix};
use crate::lens::Lens;
use crate::poly::Polynomial;

pub const DEFAULT_LENS_GUARD: u128 = 1_000_000;

/// `|Lens(p, q)| = Π_{i:p(1)} Σ_{j:q(1)} |p[i]|^{|q[j]|}`, saturating.
pub fn lens_count(p: &Polynomial, q: &Polynomial) -> u128 {
    let mut total: u128 = 1;
    for i in 0..p.num_positions() {
        let per: u128 = (0..q.num_positions())
            .map(|j| pow_sat(p.arity(i), q.arity(j)))
            .fold(0u128, |a, b| a.saturating_add(b));
        total = total.saturating_mul(per);
        if total == 0 {
            return 0;
        }
    }
    total
}

fn check_guard(what: impl FnOnce() -> String, cardinality: u128, guard: u128) -> Result<()> {
    if cardinality > guard {
        return Err(Error::SizeGuardExceeded {
            what: what(),
            cardinality,
            guard,
        });
    }
    Ok(())
}

/// Number of backward-table combinations for a fixed forward map.
fn backward_combinations(p: &Polynomial, q: &Polynomial, fwd: &[usize]) -> Vec<usize> {
    fwd.iter()
        .enumerate()
        .map(|(i, &j)| pow_sat(p.arity(i), q.arity(j)) as usize)
        .collect()
}

/// Every lens `p -> q`, each exactly once, in canonical order.
pub fn enumerate_lenses(p: &Polynomial, q: &Polynomial, guard: u128) -> Result<Vec<Lens>> {
    let count = lens_count(p, q);
    check_guard(|| format!("Lens({p}, {q})"), count, guard)?;
    let mut out = Vec::with_capacity(count as usize);
    let (ps, qs) = (
        std::sync::Arc::new(p.clone()),
        std::sync::Arc::new(q.clone()),
    );
    for fwd in functions(p.num_positions(), q.num_positions()) {
        let radices = backward_combinations(p, q, &fwd);
        for ranks in MixedRadix::new(radices) {
            let bwd = ranks
                .iter()
                .enumerate()
                .map(|(i, &r)| function_unrank(r, q.arity(fwd[i]), p.arity(i)))
                .collect();
            out.push(
                Lens::shared(ps.clone(), qs.clone(), fwd.clone(), bwd)
                    .expect("enumerated tables are well-typed"),
            );
        }
    }
    debug_assert_eq!(out.len() as u128, count);
    Ok(out)
}

/// `[p, q] = Σ_{φ : p -> q} y^{Σ_{i:p(1)} q[φ₁(i)]}` together with the lens
/// behind each position.
#[derive(Clone, Debug)]
pub struct HomPolynomial {
    source: Polynomial,
    target: Polynomial,
    poly: Polynomial,
    lenses: Vec<Lens>,
    /// `block_offsets[k][i]`: first direction of position `k` belonging to source position `i`.
    block_offsets: Vec<Vec<usize>>,
    /// Rank offset of each forward map, length `|q(1)|^{|p(1)|} + 1`.
    fwd_offsets: Vec<usize>,
}

impl HomPolynomial {
    pub fn new(p: &Polynomial, q: &Polynomial, guard: u128) -> Result<Self> {
        let lenses = enumerate_lenses(p, q, guard)?;
        let mut block_offsets = Vec::with_capacity(lenses.len());
        let mut directions = Vec::with_capacity(lenses.len());
        for (k, lens) in lenses.iter().enumerate() {
            let mut offsets = Vec::with_capacity(p.num_positions());
            let mut labels = Vec::new();
            for i in 0..p.num_positions() {
                offsets.push(labels.len());
                let j = lens.forward(i);
                for d in q.directions(j).elements() {
                    labels.push(format!("({},{})", p.positions().label(i), d));
                }
            }
            block_offsets.push(offsets);
            directions
                .push(FinSet::new(format!("[p,q][#{k}]"), labels).expect("pairs are distinct"));
        }
        let positions = FinSet::range("[p,q](1)", lenses.len());
        let positions = FinSet::new(
            positions.name(),
            positions.elements().iter().map(|e| format!("#{e}")),
        )
        .expect("distinct");
        let poly = Polynomial::new(positions, directions).expect("one direction set per lens");

        let mut fwd_offsets = vec![0usize];
        for fwd in functions(p.num_positions(), q.num_positions()) {
            let combos = MixedRadix::cardinality(&backward_combinations(p, q, &fwd)) as usize;
            let last = *fwd_offsets.last().expect("nonempty");
            fwd_offsets.push(last + combos);
        }
        Ok(HomPolynomial {
            source: p.clone(),
            target: q.clone(),
            poly,
            lenses,
            block_offsets,
            fwd_offsets,
        })
    }

    pub fn source(&self) -> &Polynomial {
        &self.source
    }

    pub fn target(&self) -> &Polynomial {
        &self.target
    }

    pub fn polynomial(&self) -> &Polynomial {
        &self.poly
    }

    pub fn lenses(&self) -> &[Lens] {
        &self.lenses
    }

    pub fn lens(&self, position: usize) -> &Lens {
        &self.lenses[position]
    }

    /// Position of `lens` in the canonical enumeration.
    pub fn position_of(&self, lens: &Lens) -> Result<usize> {
        if lens.dom() != &self.source || lens.cod() != &self.target {
            return Err(Error::InterfaceMismatch(format!(
                "lens {} -> {} is not in [{}, {}]",
                lens.dom(),
                lens.cod(),
                self.source,
                self.target
            )));
        }
        let fwd_rank = function_rank(lens.fwd(), self.target.num_positions());
        let radices = backward_combinations(&self.source, &self.target, lens.fwd());
        let bwd_rank = lens
            .bwd()
            .iter()
            .enumerate()
            .fold(0usize, |acc, (i, table)| {
                acc * radices[i] + function_rank(table, self.source.arity(i))
            });
        Ok(self.fwd_offsets[fwd_rank] + bwd_rank)
    }

    /// Index of the direction `(i, d)` at position `k`, where `d ∈ q[φ₁(i)]`.
    pub fn direction_index(&self, k: usize, i: usize, d: usize) -> usize {
        self.block_offsets[k][i] + d
    }

    /// Inverse of [`Self::direction_index`].
    pub fn direction_pair(&self, k: usize, e: usize) -> (usize, usize) {
        let offsets = &self.block_offsets[k];
        let i = (0..offsets.len())
            .find(|&i| {
                e >= offsets[i] && e - offsets[i] < self.target.arity(self.lenses[k].forward(i))
            })
            .expect("direction index in range");
        (i, e - offsets[i])
    }
}

fn check_tensor_dom(phi: &Lens, p: &Polynomial, q: &Polynomial) -> Result<()> {
    if phi.dom() != &p.tensor(q) {
        return Err(Error::InterfaceMismatch(format!(
            "lens domain {} is not {} ⊗ {}",
            phi.dom(),
            p,
            q
        )));
    }
    Ok(())
}

/// `φ : p ⊗ q -> r` becomes `p -> [q, r]`, with `hom = [q, r]`.
pub fn curry(phi: &Lens, p: &Polynomial, hom: &HomPolynomial) -> Result<Lens> {
    let q = hom.source();
    check_tensor_dom(phi, p, q)?;
    if phi.cod() != hom.target() {
        return Err(Error::InterfaceMismatch(format!(
            "lens codomain {} is not {}",
            phi.cod(),
            hom.target()
        )));
    }
    let r = hom.target();
    let mut fwd = Vec::with_capacity(p.num_positions());
    let mut bwd = Vec::with_capacity(p.num_positions());
    for i in 0..p.num_positions() {
        let mut partial_fwd = Vec::with_capacity(q.num_positions());
        let mut partial_bwd = Vec::with_capacity(q.num_positions());
        for j in 0..q.num_positions() {
            let ij = p.tensor_position(q, i, j);
            partial_fwd.push(phi.forward(ij));
            let width = q.arity(j);
            partial_bwd.push(phi.bwd()[ij].iter().map(|&pair| pair % width).collect());
        }
        let partial = Lens::new(q.clone(), r.clone(), partial_fwd, partial_bwd)?;
        let k = hom.position_of(&partial)?;
        let mut back = Vec::with_capacity(hom.polynomial().arity(k));
        for j in 0..q.num_positions() {
            let ij = p.tensor_position(q, i, j);
            let width = q.arity(j);
            for &pair in &phi.bwd()[ij] {
                back.push(pair / width);
            }
        }
        fwd.push(k);
        bwd.push(back);
    }
    Lens::new(p.clone(), hom.polynomial().clone(), fwd, bwd)
}

/// `ψ : p -> [q, r]` becomes `p ⊗ q -> r`, with `hom = [q, r]`.
pub fn uncurry(psi: &Lens, hom: &HomPolynomial) -> Result<Lens> {
    if psi.cod() != hom.polynomial() {
        return Err(Error::InterfaceMismatch(format!(
            "lens codomain is not the internal hom [{}, {}]",
            hom.source(),
            hom.target()
        )));
    }
    let p = psi.dom();
    let q = hom.source();
    let mut fwd = Vec::with_capacity(p.num_positions() * q.num_positions());
    let mut bwd = Vec::with_capacity(p.num_positions() * q.num_positions());
    for i in 0..p.num_positions() {
        let k = psi.forward(i);
        let partial = hom.lens(k);
        for j in 0..q.num_positions() {
            let target = partial.forward(j);
            fwd.push(target);
            let width = q.arity(j);
            let back = (0..hom.target().arity(target))
                .map(|d| {
                    psi.backward(i, hom.direction_index(k, j, d)) * width + partial.backward(j, d)
                })
                .collect();
            bwd.push(back);
        }
    }
    Lens::new(p.tensor(q), hom.target().clone(), fwd, bwd)
}

/// The evaluation lens `[q, r] ⊗ q -> r`: `(φ, j) ↦ φ₁(j)`, and a direction
/// `d` at `(φ, j)` goes back to `((j, d), φ♯_j(d))`.
pub fn eval_lens(hom: &HomPolynomial) -> Result<Lens> {
    uncurry(&Lens::identity(hom.polynomial()), hom)
}

/// `[p, q] ⊗ [q, r] -> [p, r]`, composing along `q`.
pub fn internal_compose(
    pq: &HomPolynomial,
    qr: &HomPolynomial,
    pr: &HomPolynomial,
) -> Result<Lens> {
    if pq.target() != qr.source() || pq.source() != pr.source() || qr.target() != pr.target() {
        return Err(Error::InterfaceMismatch(
            "internal homs do not chain as [p,q], [q,r], [p,r]".into(),
        ));
    }
    let dom = pq.polynomial().tensor(qr.polynomial());
    let mut fwd = Vec::with_capacity(dom.num_positions());
    let mut bwd = Vec::with_capacity(dom.num_positions());
    for (a, phi) in pq.lenses().iter().enumerate() {
        for (b, psi) in qr.lenses().iter().enumerate() {
            let composite = phi.then(psi)?;
            let c = pr.position_of(&composite)?;
            let width = qr.polynomial().arity(b);
            let mut back = Vec::with_capacity(pr.polynomial().arity(c));
            for i in 0..pq.source().num_positions() {
                let j = phi.forward(i);
                for d in 0..pr.target().arity(composite.forward(i)) {
                    let first = pq.direction_index(a, i, psi.backward(j, d));
                    let second = qr.direction_index(b, j, d);
                    back.push(first * width + second);
                }
            }
            fwd.push(c);
            bwd.push(back);
        }
    }
    Lens::new(dom, pr.polynomial().clone(), fwd, bwd)
}

/// `[p, y]`.
pub fn dual(p: &Polynomial, guard: u128) -> Result<HomPolynomial> {
    HomPolynomial::new(p, &Polynomial::y(), guard)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_y() -> Polynomial {
        Polynomial::from_arities(&[1, 1])
    }

    fn y2_plus_1() -> Polynomial {
        Polynomial::from_arities(&[2, 0])
    }

    const G: u128 = DEFAULT_LENS_GUARD;

    #[test]
    fn small_hom_counts() {
        assert_eq!(enumerate_lenses(&two_y(), &two_y(), G).unwrap().len(), 4);
        // y -> y^2 + 1: pick a position, the backward map into {*} is unique.
        assert_eq!(
            enumerate_lenses(&Polynomial::y(), &y2_plus_1(), G)
                .unwrap()
                .len(),
            2
        );
        // y^2 + 1 -> y: the constant position needs a map {*} -> ∅.
        assert_eq!(
            enumerate_lenses(&y2_plus_1(), &Polynomial::y(), G)
                .unwrap()
                .len(),
            0
        );
    }

    #[test]
    fn identity_is_enumerated() {
        let all = enumerate_lenses(&two_y(), &two_y(), G).unwrap();
        assert!(all.contains(&Lens::identity(&two_y())));
    }

    #[test]
    fn enumeration_is_duplicate_free_and_ranked() {
        let p = Polynomial::from_arities(&[2, 0, 1]);
        let q = Polynomial::from_arities(&[1, 2]);
        let hom = HomPolynomial::new(&p, &q, G).unwrap();
        for (k, lens) in hom.lenses().iter().enumerate() {
            assert_eq!(hom.position_of(lens).unwrap(), k);
        }
        assert_eq!(hom.lenses().len() as u128, lens_count(&p, &q));
    }

    #[test]
    fn guard_is_loud() {
        let p = Polynomial::from_arities(&[3, 3, 3]);
        let err = enumerate_lenses(&p, &p, 10).unwrap_err();
        match err {
            Error::SizeGuardExceeded {
                cardinality, guard, ..
            } => {
                assert_eq!(cardinality, lens_count(&p, &p));
                assert_eq!(guard, 10);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn hom_two_y_is_four_y_squared() {
        let hom = HomPolynomial::new(&two_y(), &two_y(), G).unwrap();
        assert_eq!(hom.polynomial().arities(), vec![2; 4]);
    }

    #[test]
    fn dual_of_monomial() {
        let o = FinSet::range("O", 2);
        let a = FinSet::range("A", 3);
        let d = dual(&Polynomial::monomial(&o, &a), G).unwrap();
        assert_eq!(d.polynomial().arities(), vec![2; 9]);
        assert_eq!(
            dual(&Polynomial::y(), G).unwrap().polynomial().arities(),
            vec![1]
        );
        assert_eq!(
            dual(&y2_plus_1(), G).unwrap().polynomial().num_positions(),
            0
        );
    }

    #[test]
    fn hom_from_unit_is_iso() {
        let p = Polynomial::from_arities(&[2, 0, 1]);
        let hom = HomPolynomial::new(&Polynomial::y(), &p, G).unwrap();
        assert!(hom.polynomial().isomorphism(&p).is_some());
    }

    #[test]
    fn direction_pairs_round_trip() {
        let p = Polynomial::from_arities(&[1, 0, 2]);
        let q = Polynomial::from_arities(&[0, 2, 1]);
        let hom = HomPolynomial::new(&p, &q, G).unwrap();
        for (k, lens) in hom.lenses().iter().enumerate() {
            for i in 0..p.num_positions() {
                for d in 0..q.arity(lens.forward(i)) {
                    let e = hom.direction_index(k, i, d);
                    assert_eq!(hom.direction_pair(k, e), (i, d));
                }
            }
        }
    }

    #[test]
    fn curry_projection_gives_unit_iso() {
        let p = Polynomial::from_arities(&[2, 1]);
        let y = Polynomial::y();
        // p ⊗ y -> p, (i,*) ↦ i, d ↦ (d,*)
        let proj = Lens::new(
            p.tensor(&y),
            p.clone(),
            vec![0, 1],
            vec![vec![0, 1], vec![0]],
        )
        .unwrap();
        let hom = HomPolynomial::new(&y, &p, G).unwrap();
        let curried = curry(&proj, &p, &hom).unwrap();
        assert!(curried.is_isomorphism());
        assert_eq!(uncurry(&curried, &hom).unwrap(), proj);
    }

    #[test]
    fn eval_then_curry_is_identity() {
        for (q, r) in [
            (two_y(), two_y()),
            (y2_plus_1(), two_y()),
            (Polynomial::y(), y2_plus_1()),
        ] {
            let hom = HomPolynomial::new(&q, &r, G).unwrap();
            let ev = eval_lens(&hom).unwrap();
            assert_eq!(
                curry(&ev, hom.polynomial(), &hom).unwrap(),
                Lens::identity(hom.polynomial())
            );
        }
    }

    #[test]
    fn eval_into_y_reads_dual_sections() {
        let q = two_y();
        let hom = dual(&q, G).unwrap();
        let ev = eval_lens(&hom).unwrap();
        for sigma in 0..hom.polynomial().num_positions() {
            for j in 0..q.num_positions() {
                let pos = hom.polynomial().tensor_position(&q, sigma, j);
                assert_eq!(ev.forward(pos), 0);
                // the single direction of y goes back to ((j,*), σ♯_j(*))
                let expected_q_dir = hom.lens(sigma).backward(j, 0);
                let back = ev.backward(pos, 0);
                assert_eq!(back % q.arity(j), expected_q_dir);
                assert_eq!(back / q.arity(j), hom.direction_index(sigma, j, 0));
            }
        }
    }

    #[test]
    fn internal_compose_matches_lens_compose() {
        let p = two_y();
        let pq = HomPolynomial::new(&p, &p, G).unwrap();
        let comp = internal_compose(&pq, &pq, &pq).unwrap();
        for a in 0..4 {
            for b in 0..4 {
                let pos = pq.polynomial().tensor_position(pq.polynomial(), a, b);
                let expected = pq.lens(a).then(pq.lens(b)).unwrap();
                assert_eq!(pq.lens(comp.forward(pos)), &expected);
            }
        }
    }

    #[test]
    fn internal_compose_on_unit() {
        let y = Polynomial::y();
        let h = HomPolynomial::new(&y, &y, G).unwrap();
        let comp = internal_compose(&h, &h, &h).unwrap();
        assert_eq!(comp.fwd(), &[0]);
        assert_eq!(comp.bwd(), &[vec![0]]);
    }
}
