//! Finitely supported distributions and stochastic channels.
//!
//! A [`Channel`] `X ⇝ Y` is a row-stochastic `|X| x |Y|` matrix stored row
//! major. Products of carriers follow the left-major layout of
//! [`FinSet::product`].

use rand::Rng;

use crate::error::{Error, Result};
use crate::finset::FinSet;

/// Slack accepted on the total mass of user-supplied rows; such rows are renormalized.
pub const EPS_NORM: f64 = 1e-9;
/// Tolerance for algebraic law checks between channels.
pub const EPS_LAW: f64 = 1e-12;

fn check_row(kind: &'static str, what: impl FnOnce() -> String, row: &mut [f64]) -> Result<()> {
    if let Some(bad) = row.iter().find(|m| !m.is_finite() || **m < 0.0) {
        return Err(Error::invalid(
            kind,
            format!("{} has a negative or non-finite mass {bad}", what()),
        ));
    }
    let sum: f64 = row.iter().sum();
    if (sum - 1.0).abs() > EPS_NORM {
        return Err(Error::invalid(kind, format!("{} sums to {sum}", what())));
    }
    if sum != 1.0 {
        row.iter_mut().for_each(|m| *m /= sum);
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq)]
pub struct Dist {
    carrier: FinSet,
    mass: Vec<f64>,
}

impl Dist {
    pub fn new(carrier: FinSet, mut mass: Vec<f64>) -> Result<Self> {
        if mass.len() != carrier.len() {
            return Err(Error::invalid(
                "distribution",
                format!(
                    "{} masses for a carrier of size {}",
                    mass.len(),
                    carrier.len()
                ),
            ));
        }
        check_row(
            "distribution",
            || format!("distribution over {}", carrier.name()),
            &mut mass,
        )?;
        Ok(Dist { carrier, mass })
    }

    pub fn point(carrier: &FinSet, i: usize) -> Self {
        let mut mass = vec![0.0; carrier.len()];
        mass[i] = 1.0;
        Dist {
            carrier: carrier.clone(),
            mass,
        }
    }

    pub fn uniform(carrier: &FinSet) -> Self {
        let n = carrier.len();
        Dist {
            carrier: carrier.clone(),
            mass: vec![1.0 / n as f64; n],
        }
    }

    /// Normalizes nonnegative weights. Errors when they sum to (numerically) zero.
    pub fn from_weights(carrier: &FinSet, weights: Vec<f64>) -> Result<Self> {
        let total: f64 = weights.iter().sum();
        if weights.len() != carrier.len() || total <= EPS_NORM || !total.is_finite() {
            return Err(Error::ZeroEvidence(format!(
                "weights over {} sum to {total}",
                carrier.name()
            )));
        }
        Ok(Dist {
            carrier: carrier.clone(),
            mass: weights.into_iter().map(|w| w / total).collect(),
        })
    }

    pub(crate) fn from_raw(carrier: FinSet, mass: Vec<f64>) -> Self {
        debug_assert_eq!(carrier.len(), mass.len());
        Dist { carrier, mass }
    }

    pub fn carrier(&self) -> &FinSet {
        &self.carrier
    }

    pub fn masses(&self) -> &[f64] {
        &self.mass
    }

    pub fn prob(&self, i: usize) -> f64 {
        self.mass[i]
    }

    pub fn len(&self) -> usize {
        self.mass.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mass.is_empty()
    }

    /// Most probable element; the first one on ties.
    pub fn argmax(&self) -> usize {
        let mut best = 0;
        for (i, &m) in self.mass.iter().enumerate() {
            if m > self.mass[best] {
                best = i;
            }
        }
        best
    }

    /// `f_* d`: the mass of `y` is the total mass of its preimage.
    pub fn pushforward(&self, f: &[usize], target: &FinSet) -> Dist {
        let mut mass = vec![0.0; target.len()];
        for (x, &m) in self.mass.iter().enumerate() {
            mass[f[x]] += m;
        }
        Dist {
            carrier: target.clone(),
            mass,
        }
    }

    /// Independent joint `α ⊗ β` on the product carrier.
    pub fn tensor(&self, other: &Dist) -> Dist {
        let mut mass = Vec::with_capacity(self.len() * other.len());
        for &a in &self.mass {
            for &b in &other.mass {
                mass.push(a * b);
            }
        }
        Dist {
            carrier: self.carrier.product(&other.carrier),
            mass,
        }
    }

    /// Marginals of a distribution on `left x right`.
    pub fn marginals(&self, left: &FinSet, right: &FinSet) -> (Dist, Dist) {
        let mut l = vec![0.0; left.len()];
        let mut r = vec![0.0; right.len()];
        for (k, &m) in self.mass.iter().enumerate() {
            l[k / right.len()] += m;
            r[k % right.len()] += m;
        }
        (
            Dist {
                carrier: left.clone(),
                mass: l,
            },
            Dist {
                carrier: right.clone(),
                mass: r,
            },
        )
    }

    /// `KL(self ‖ other)` in nats, with `0 log 0 = 0` and `+∞` when `self`
    /// puts mass where `other` has none.
    pub fn kl(&self, other: &Dist) -> f64 {
        kl_divergence(&self.mass, &other.mass)
    }

    /// Total-variation distance.
    pub fn tv(&self, other: &Dist) -> f64 {
        0.5 * self
            .mass
            .iter()
            .zip(&other.mass)
            .map(|(a, b)| (a - b).abs())
            .sum::<f64>()
    }

    /// Inverse-CDF sample; falls back to the last element with positive mass
    /// when rounding leaves the draw past the total.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        sample_index(&self.mass, rng)
    }
}

pub fn kl_divergence(p: &[f64], q: &[f64]) -> f64 {
    let mut total = 0.0;
    for (&a, &b) in p.iter().zip(q) {
        if a > 0.0 {
            if b <= 0.0 {
                return f64::INFINITY;
            }
            total += a * (a / b).ln();
        }
    }
    total
}

pub fn sample_index<R: Rng + ?Sized>(weights: &[f64], rng: &mut R) -> usize {
    let u: f64 = rng.gen();
    let mut acc = 0.0;
    let mut last = 0;
    for (i, &w) in weights.iter().enumerate() {
        if w > 0.0 {
            acc += w;
            last = i;
            if u < acc {
                return i;
            }
        }
    }
    last
}

#[derive(Clone, Debug, PartialEq)]
pub struct Channel {
    dom: FinSet,
    cod: FinSet,
    data: Vec<f64>,
}

impl Channel {
    pub fn new(dom: FinSet, cod: FinSet, rows: Vec<Vec<f64>>) -> Result<Self> {
        if rows.len() != dom.len() {
            return Err(Error::invalid(
                "channel",
                format!("{} rows for a domain of size {}", rows.len(), dom.len()),
            ));
        }
        let mut data = Vec::with_capacity(dom.len() * cod.len());
        for (x, mut row) in rows.into_iter().enumerate() {
            if row.len() != cod.len() {
                return Err(Error::invalid(
                    "channel",
                    format!(
                        "row {} has {} entries, codomain has {}",
                        dom.label(x),
                        row.len(),
                        cod.len()
                    ),
                ));
            }
            check_row("channel", || format!("row {}", dom.label(x)), &mut row)?;
            data.extend(row);
        }
        Ok(Channel { dom, cod, data })
    }

    pub(crate) fn from_data(dom: FinSet, cod: FinSet, data: Vec<f64>) -> Self {
        debug_assert_eq!(data.len(), dom.len() * cod.len());
        Channel { dom, cod, data }
    }

    pub fn identity(x: &FinSet) -> Self {
        let map: Vec<usize> = (0..x.len()).collect();
        Channel::dirac(x, x, &map)
    }

    /// `δ_f`: row `x` is the point mass at `f(x)`.
    pub fn dirac(dom: &FinSet, cod: &FinSet, f: &[usize]) -> Self {
        assert_eq!(f.len(), dom.len(), "dirac channel needs a total map");
        let mut data = vec![0.0; dom.len() * cod.len()];
        for (x, &y) in f.iter().enumerate() {
            data[x * cod.len() + y] = 1.0;
        }
        Channel {
            dom: dom.clone(),
            cod: cod.clone(),
            data,
        }
    }

    /// The channel `1 ⇝ X` of a distribution.
    pub fn from_dist(d: &Dist) -> Self {
        Channel {
            dom: FinSet::unit(),
            cod: d.carrier.clone(),
            data: d.mass.clone(),
        }
    }

    pub fn dom(&self) -> &FinSet {
        &self.dom
    }

    pub fn cod(&self) -> &FinSet {
        &self.cod
    }

    pub fn row(&self, x: usize) -> &[f64] {
        let n = self.cod.len();
        &self.data[x * n..(x + 1) * n]
    }

    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.data[x * self.cod.len() + y]
    }

    pub fn row_dist(&self, x: usize) -> Dist {
        Dist {
            carrier: self.cod.clone(),
            mass: self.row(x).to_vec(),
        }
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        (0..self.dom.len()).map(|x| self.row(x).to_vec()).collect()
    }

    /// `next ∘ self`: `(next ∘ self)(z|x) = Σ_y next(z|y) self(y|x)`.
    pub fn then(&self, next: &Channel) -> Result<Channel> {
        if self.cod != next.dom {
            return Err(Error::CarrierMismatch(format!(
                "cannot compose {} ⇝ {} with {} ⇝ {}",
                self.dom.name(),
                self.cod.name(),
                next.dom.name(),
                next.cod.name()
            )));
        }
        let (nx, ny, nz) = (self.dom.len(), self.cod.len(), next.cod.len());
        let mut data = vec![0.0; nx * nz];
        for x in 0..nx {
            let out = &mut data[x * nz..(x + 1) * nz];
            for y in 0..ny {
                let w = self.data[x * ny + y];
                if w == 0.0 {
                    continue;
                }
                for (o, &r) in out.iter_mut().zip(next.row(y)) {
                    *o += w * r;
                }
            }
        }
        Ok(Channel {
            dom: self.dom.clone(),
            cod: next.cod.clone(),
            data,
        })
    }

    /// `self ⊗ other : X x X' ⇝ Y x Y'` with independent rows.
    pub fn tensor(&self, other: &Channel) -> Channel {
        let dom = self.dom.product(&other.dom);
        let cod = self.cod.product(&other.cod);
        let mut data = Vec::with_capacity(dom.len() * cod.len());
        for x in 0..self.dom.len() {
            for x2 in 0..other.dom.len() {
                for &a in self.row(x) {
                    for &b in other.row(x2) {
                        data.push(a * b);
                    }
                }
            }
        }
        Channel { dom, cod, data }
    }

    /// The distribution obtained by pushing `d` through the channel.
    pub fn apply(&self, d: &Dist) -> Result<Dist> {
        if d.carrier != self.dom {
            return Err(Error::CarrierMismatch(format!(
                "distribution over {} fed to a channel from {}",
                d.carrier.name(),
                self.dom.name()
            )));
        }
        let n = self.cod.len();
        let mut mass = vec![0.0; n];
        for (x, &w) in d.mass.iter().enumerate() {
            if w == 0.0 {
                continue;
            }
            for (m, &r) in mass.iter_mut().zip(self.row(x)) {
                *m += w * r;
            }
        }
        Ok(Dist {
            carrier: self.cod.clone(),
            mass,
        })
    }

    /// Largest entrywise difference; `∞` when the shapes differ.
    pub fn max_abs_diff(&self, other: &Channel) -> f64 {
        if self.dom.len() != other.dom.len() || self.cod.len() != other.cod.len() {
            return f64::INFINITY;
        }
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    /// Largest deviation of a row sum from 1.
    pub fn max_row_defect(&self) -> f64 {
        (0..self.dom.len())
            .map(|x| (self.row(x).iter().sum::<f64>() - 1.0).abs())
            .fold(0.0, f64::max)
    }
}

/// `posterior(s) = prior(s) like(obs|s) / Σ_s prior(s) like(obs|s)`.
pub fn bayes_posterior(prior: &Dist, like: &Channel, obs: usize) -> Result<Dist> {
    if prior.carrier != like.dom {
        return Err(Error::CarrierMismatch(format!(
            "prior over {} but likelihood from {}",
            prior.carrier.name(),
            like.dom.name()
        )));
    }
    let joint: Vec<f64> = prior
        .mass
        .iter()
        .enumerate()
        .map(|(s, &m)| m * like.get(s, obs))
        .collect();
    let evidence: f64 = joint.iter().sum();
    if evidence <= EPS_NORM {
        return Err(Error::ZeroEvidence(format!(
            "observation {} has marginal probability {evidence}",
            like.cod.label(obs)
        )));
    }
    Ok(Dist {
        carrier: prior.carrier.clone(),
        mass: joint.into_iter().map(|m| m / evidence).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn set(n: usize) -> FinSet {
        FinSet::range("X", n)
    }

    #[test]
    fn identity_is_identity_matrix() {
        let id = Channel::identity(&set(3));
        assert_eq!(
            id.rows(),
            vec![
                vec![1.0, 0.0, 0.0],
                vec![0.0, 1.0, 0.0],
                vec![0.0, 0.0, 1.0]
            ]
        );
    }

    #[test]
    fn constant_dirac_rows_agree() {
        let c = Channel::dirac(&set(3), &set(2), &[1, 1, 1]);
        assert!(c.rows().iter().all(|r| r == &vec![0.0, 1.0]));
    }

    #[test]
    fn dirac_composes_as_functions() {
        let f = [1, 2, 0, 0];
        let g = [1, 0, 1];
        let lhs = Channel::dirac(&set(4), &set(3), &f)
            .then(&Channel::dirac(&set(3), &set(2), &g))
            .unwrap();
        let composed: Vec<usize> = f.iter().map(|&x| g[x]).collect();
        assert_eq!(lhs, Channel::dirac(&set(4), &set(2), &composed));
    }

    #[test]
    fn two_state_square() {
        let q = Channel::new(set(2), set(2), vec![vec![0.9, 0.1], vec![0.2, 0.8]]).unwrap();
        let qq = q.then(&q).unwrap();
        let expected = [[0.83, 0.17], [0.34, 0.66]];
        for x in 0..2 {
            for y in 0..2 {
                assert!((qq.get(x, y) - expected[x][y]).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn malformed_row_named() {
        let err = Channel::new(set(2), set(2), vec![vec![0.5, 0.5], vec![0.6, 0.3]]).unwrap_err();
        assert!(err.to_string().contains("row 1"), "{err}");
    }

    #[test]
    fn near_normalized_rows_renormalized() {
        let c = Channel::new(set(1), set(2), vec![vec![0.5 + 4e-10, 0.5]]).unwrap();
        assert!((c.row(0).iter().sum::<f64>() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn merge_pushforward() {
        let d = Dist::new(set(2), vec![0.3, 0.7]).unwrap();
        let merged = d.pushforward(&[0, 0], &set(1));
        assert!((merged.prob(0) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn tensor_marginals() {
        let a = Dist::new(set(2), vec![0.25, 0.75]).unwrap();
        let b = Dist::new(set(3), vec![0.2, 0.3, 0.5]).unwrap();
        let (ma, mb) = a.tensor(&b).marginals(a.carrier(), b.carrier());
        assert!(ma.tv(&a) < 1e-15 && mb.tv(&b) < 1e-15);
    }

    #[test]
    fn posterior_by_hand() {
        let prior = Dist::new(set(2), vec![0.5, 0.5]).unwrap();
        let like = Channel::new(set(2), set(2), vec![vec![0.8, 0.2], vec![0.4, 0.6]]).unwrap();
        let post = bayes_posterior(&prior, &like, 0).unwrap();
        assert!((post.prob(0) - 2.0 / 3.0).abs() < 1e-15);
        assert!((post.prob(1) - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn deterministic_inversion_and_uninformative_likelihood() {
        let prior = Dist::uniform(&set(2));
        let det = Channel::identity(&set(2));
        assert_eq!(
            bayes_posterior(&prior, &det, 0).unwrap().masses(),
            &[1.0, 0.0]
        );
        let flat = Channel::new(set(2), set(2), vec![vec![0.3, 0.7], vec![0.3, 0.7]]).unwrap();
        let skew = Dist::new(set(2), vec![0.1, 0.9]).unwrap();
        assert!(bayes_posterior(&skew, &flat, 1).unwrap().tv(&skew) < 1e-15);
    }

    #[test]
    fn zero_evidence_is_an_error() {
        let prior = Dist::point(&set(2), 0);
        let det = Channel::identity(&set(2));
        assert!(matches!(
            bayes_posterior(&prior, &det, 1),
            Err(Error::ZeroEvidence(_))
        ));
    }

    #[test]
    fn kl_conventions() {
        let p = Dist::new(set(2), vec![0.5, 0.5]).unwrap();
        let q = Dist::new(set(2), vec![0.9, 0.1]).unwrap();
        let expected = 0.5 * (0.5f64 / 0.9).ln() + 0.5 * (0.5f64 / 0.1).ln();
        assert!((p.kl(&q) - expected).abs() < 1e-15);
        assert!((expected - 0.5108).abs() < 1e-4);
        assert_eq!(p.kl(&p), 0.0);
        assert_eq!(p.kl(&Dist::point(&set(2), 0)), f64::INFINITY);
        assert_eq!(Dist::point(&set(2), 0).kl(&p), 2f64.ln());
    }
}
