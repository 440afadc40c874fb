//! Finite labelled sets and total functions between them.
//!
//! Every carrier in the crate is a [`FinSet`]: an ordered list of distinct
//! labels. Computation happens on indices `0..n`; labels only matter for
//! display and serialization. Products are laid out lexicographically with
//! the left factor major.

use std::collections::HashMap;
use std::fmt;

use crate::error::{Error, Result};

#[derive(Clone)]
pub struct FinSet {
    name: String,
    elements: Vec<String>,
    index: HashMap<String, usize>,
}

impl FinSet {
    pub fn new<S: Into<String>>(
        name: impl Into<String>,
        elements: impl IntoIterator<Item = S>,
    ) -> Result<Self> {
        let name = name.into();
        let elements: Vec<String> = elements.into_iter().map(Into::into).collect();
        let mut index = HashMap::with_capacity(elements.len());
        for (i, e) in elements.iter().enumerate() {
            if index.insert(e.clone(), i).is_some() {
                return Err(Error::invalid(
                    "finset",
                    format!("duplicate label {e:?} in {name}"),
                ));
            }
        }
        Ok(FinSet {
            name,
            elements,
            index,
        })
    }

    /// `{0, 1, ..., n-1}` with decimal labels.
    pub fn range(name: impl Into<String>, n: usize) -> Self {
        FinSet::new(name, (0..n).map(|i| i.to_string())).expect("decimal labels are distinct")
    }

    /// The one-element set `{*}`.
    pub fn unit() -> Self {
        FinSet::new("1", ["*"]).expect("singleton")
    }

    pub fn empty(name: impl Into<String>) -> Self {
        FinSet::new(name, Vec::<String>::new()).expect("empty")
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn elements(&self) -> &[String] {
        &self.elements
    }

    pub fn label(&self, i: usize) -> &str {
        &self.elements[i]
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.index.get(label).copied()
    }

    pub fn renamed(&self, name: impl Into<String>) -> Self {
        FinSet {
            name: name.into(),
            ..self.clone()
        }
    }

    /// Cartesian product, left-major, labels `(a,b)`.
    pub fn product(&self, other: &FinSet) -> FinSet {
        let mut elements = Vec::with_capacity(self.len() * other.len());
        for a in &self.elements {
            for b in &other.elements {
                elements.push(format!("({a},{b})"));
            }
        }
        FinSet::new(format!("{}x{}", self.name, other.name), elements)
            .expect("pairs of distinct labels are distinct")
    }

    /// Product of many sets, lexicographic with the first factor major.
    pub fn product_all(name: impl Into<String>, factors: &[&FinSet]) -> FinSet {
        let dims: Vec<usize> = factors.iter().map(|f| f.len()).collect();
        let elements = MixedRadix::new(dims)
            .map(|digits| {
                let parts: Vec<&str> = digits
                    .iter()
                    .zip(factors)
                    .map(|(&d, f)| f.label(d))
                    .collect();
                format!("({})", parts.join(","))
            })
            .collect::<Vec<_>>();
        FinSet::new(name, elements).expect("tuples of distinct labels are distinct")
    }
}

/// Equality ignores the display name.
impl PartialEq for FinSet {
    fn eq(&self, other: &Self) -> bool {
        self.elements == other.elements
    }
}

impl Eq for FinSet {}

impl fmt::Debug for FinSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{{{}}}", self.name, self.elements.join(","))
    }
}

/// Iterates every tuple of a mixed-radix counter in lexicographic order, the
/// first digit most significant. A zero radix anywhere yields nothing; an
/// empty radix list yields the single empty tuple.
#[derive(Debug, Clone)]
pub struct MixedRadix {
    radices: Vec<usize>,
    current: Option<Vec<usize>>,
}

impl MixedRadix {
    pub fn new(radices: Vec<usize>) -> Self {
        let current = if radices.contains(&0) {
            None
        } else {
            Some(vec![0; radices.len()])
        };
        MixedRadix { radices, current }
    }

    /// Number of tuples, saturating at `u128::MAX`.
    pub fn cardinality(radices: &[usize]) -> u128 {
        radices
            .iter()
            .try_fold(1u128, |acc, &r| acc.checked_mul(r as u128))
            .unwrap_or(u128::MAX)
    }
}

impl Iterator for MixedRadix {
    type Item = Vec<usize>;

    fn next(&mut self) -> Option<Vec<usize>> {
        let out = self.current.clone()?;
        let cur = self.current.as_mut().expect("checked above");
        let mut k = cur.len();
        loop {
            if k == 0 {
                self.current = None;
                break;
            }
            k -= 1;
            cur[k] += 1;
            if cur[k] < self.radices[k] {
                break;
            }
            cur[k] = 0;
        }
        Some(out)
    }
}

/// All total functions `[domain] -> [codomain]` as value tables, lexicographic.
pub fn functions(domain: usize, codomain: usize) -> MixedRadix {
    MixedRadix::new(vec![codomain; domain])
}

/// `base^exp` with `0^0 = 1`, saturating.
pub fn pow_sat(base: usize, exp: usize) -> u128 {
    let mut acc: u128 = 1;
    for _ in 0..exp {
        acc = match acc.checked_mul(base as u128) {
            Some(v) => v,
            None => return u128::MAX,
        };
        if acc == 0 {
            return 0;
        }
    }
    acc
}

/// Rank of a value table among [`functions`]`(table.len(), codomain)`.
pub fn function_rank(table: &[usize], codomain: usize) -> usize {
    table.iter().fold(0usize, |acc, &v| acc * codomain + v)
}

/// Inverse of [`function_rank`].
pub fn function_unrank(mut rank: usize, domain: usize, codomain: usize) -> Vec<usize> {
    let mut table = vec![0; domain];
    for slot in table.iter_mut().rev() {
        *slot = rank % codomain;
        rank /= codomain;
    }
    table
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn duplicate_labels_rejected() {
        assert!(FinSet::new("X", ["a", "a"]).is_err());
    }

    #[test]
    fn product_layout_is_left_major() {
        let a = FinSet::new("A", ["a0", "a1"]).unwrap();
        let b = FinSet::new("B", ["b0", "b1", "b2"]).unwrap();
        let ab = a.product(&b);
        assert_eq!(ab.len(), 6);
        assert_eq!(ab.label(1), "(a0,b1)");
        assert_eq!(ab.label(3), "(a1,b0)");
    }

    #[test]
    fn mixed_radix_edge_cases() {
        assert_eq!(
            MixedRadix::new(vec![]).collect::<Vec<_>>(),
            vec![Vec::<usize>::new()]
        );
        assert_eq!(MixedRadix::new(vec![2, 0]).count(), 0);
        let all: Vec<_> = MixedRadix::new(vec![2, 3]).collect();
        assert_eq!(all.len(), 6);
        assert_eq!(all[4], vec![1, 1]);
    }

    #[test]
    fn rank_round_trip() {
        for (r, f) in functions(3, 2).enumerate() {
            assert_eq!(function_rank(&f, 2), r);
            assert_eq!(function_unrank(r, 3, 2), f);
        }
    }

    #[test]
    fn pow_conventions() {
        assert_eq!(pow_sat(0, 0), 1);
        assert_eq!(pow_sat(0, 2), 0);
        assert_eq!(pow_sat(3, 2), 9);
    }
}
