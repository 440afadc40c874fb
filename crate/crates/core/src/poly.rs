//! Finite polynomial functors `p = Σ_{i : p(1)} y^{p[i]}`.

use std::fmt;

use crate::error::{Error, Result};
use crate::finset::{functions, FinSet, MixedRadix};
use crate::lens::Lens;

/// An interface: a finite set of positions, each with its own finite set of
/// directions (possibly empty).
#[derive(Clone, PartialEq, Eq)]
pub struct Polynomial {
    positions: FinSet,
    directions: Vec<FinSet>,
}

impl Polynomial {
    pub fn new(positions: FinSet, directions: Vec<FinSet>) -> Result<Self> {
        if positions.len() != directions.len() {
            return Err(Error::invalid(
                "polynomial",
                format!(
                    "{} positions but {} direction sets",
                    positions.len(),
                    directions.len()
                ),
            ));
        }
        Ok(Polynomial {
            positions,
            directions,
        })
    }

    /// `O y^I`: every position has the same directions.
    pub fn monomial(outputs: &FinSet, inputs: &FinSet) -> Self {
        Polynomial {
            positions: outputs.clone(),
            directions: vec![inputs.clone(); outputs.len()],
        }
    }

    /// The unit interface `y`.
    pub fn y() -> Self {
        Polynomial::monomial(&FinSet::unit(), &FinSet::unit())
    }

    pub fn zero() -> Self {
        Polynomial {
            positions: FinSet::empty("0"),
            directions: Vec::new(),
        }
    }

    /// Positions `0..n` with `arities[i]` directions labelled `0..arities[i]`.
    pub fn from_arities(arities: &[usize]) -> Self {
        Polynomial {
            positions: FinSet::range("P", arities.len()),
            directions: arities
                .iter()
                .enumerate()
                .map(|(i, &a)| FinSet::range(format!("P[{i}]"), a))
                .collect(),
        }
    }

    pub fn positions(&self) -> &FinSet {
        &self.positions
    }

    pub fn directions(&self, position: usize) -> &FinSet {
        &self.directions[position]
    }

    pub fn num_positions(&self) -> usize {
        self.positions.len()
    }

    pub fn arity(&self, position: usize) -> usize {
        self.directions[position].len()
    }

    pub fn arities(&self) -> Vec<usize> {
        self.directions.iter().map(FinSet::len).collect()
    }

    pub fn is_monomial(&self) -> bool {
        self.directions.windows(2).all(|w| w[0] == w[1])
    }

    /// Structurally `y`: one position with one direction.
    pub fn is_closed(&self) -> bool {
        self.num_positions() == 1 && self.arity(0) == 1
    }

    /// Parallel product: positions `p(1) x q(1)`, directions `p[i] x q[j]`.
    pub fn tensor(&self, other: &Polynomial) -> Polynomial {
        let positions = self.positions.product(&other.positions);
        let mut directions = Vec::with_capacity(positions.len());
        for dp in &self.directions {
            for dq in &other.directions {
                directions.push(dp.product(dq));
            }
        }
        Polynomial {
            positions,
            directions,
        }
    }

    /// Index of position `(i, j)` in `self ⊗ other`.
    pub fn tensor_position(&self, other: &Polynomial, i: usize, j: usize) -> usize {
        i * other.num_positions() + j
    }

    /// The set of `p`-terms with inputs in `x`: pairs `(i, f: p[i] -> x)`,
    /// labelled `i(f(d0),f(d1),...)`.
    pub fn apply(&self, x: &FinSet) -> FinSet {
        let mut elements = Vec::new();
        for (i, dirs) in self.directions.iter().enumerate() {
            for f in functions(dirs.len(), x.len()) {
                let args: Vec<&str> = f.iter().map(|&v| x.label(v)).collect();
                elements.push(format!("{}({})", self.positions.label(i), args.join(",")));
            }
        }
        FinSet::new(format!("{}({})", self.positions.name(), x.name()), elements)
            .expect("terms with distinct heads or arguments are distinct")
    }

    /// The action of the functor on a map `g: x -> x2`, as a table over
    /// `self.apply(x)` into `self.apply(x2)`.
    pub fn apply_map(&self, x_len: usize, x2_len: usize, g: &[usize]) -> Vec<usize> {
        let mut table = Vec::new();
        let mut offset2 = 0usize;
        for dirs in &self.directions {
            let n = dirs.len();
            for f in functions(n, x_len) {
                let image: Vec<usize> = f.iter().map(|&v| g[v]).collect();
                table.push(offset2 + crate::finset::function_rank(&image, x2_len));
            }
            offset2 += MixedRadix::cardinality(&vec![x2_len; n]) as usize;
        }
        table
    }

    /// A witness isomorphism `self -> other` if the two polynomials have the
    /// same multiset of arities. Positions are matched stably by arity, and
    /// direction sets are matched in order.
    pub fn isomorphism(&self, other: &Polynomial) -> Option<Lens> {
        if self.num_positions() != other.num_positions() {
            return None;
        }
        let mut used = vec![false; other.num_positions()];
        let mut fwd = Vec::with_capacity(self.num_positions());
        for i in 0..self.num_positions() {
            let j = (0..other.num_positions())
                .find(|&j| !used[j] && other.arity(j) == self.arity(i))?;
            used[j] = true;
            fwd.push(j);
        }
        let bwd = fwd.iter().map(|&j| (0..other.arity(j)).collect()).collect();
        Lens::new(self.clone(), other.clone(), fwd, bwd).ok()
    }
}

/// Consistent with label-wise equality: equal polynomials have equal arities.
impl std::hash::Hash for Polynomial {
    fn hash<H: std::hash::Hasher>(&self, state: &mut H) {
        self.arities().hash(state);
    }
}

impl fmt::Debug for Polynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

/// Renders the shape, e.g. `2y^2+y+1`.
impl fmt::Display for Polynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.num_positions() == 0 {
            return write!(f, "0");
        }
        let mut arities = self.arities();
        arities.sort_unstable_by(|a, b| b.cmp(a));
        let mut terms = Vec::new();
        let mut k = 0;
        while k < arities.len() {
            let a = arities[k];
            let n = arities[k..].iter().take_while(|&&b| b == a).count();
            let coeff = if n == 1 && a != 0 {
                String::new()
            } else {
                n.to_string()
            };
            let term = match a {
                0 => coeff,
                1 => format!("{coeff}y"),
                _ => format!("{coeff}y^{a}"),
            };
            terms.push(term);
            k += n;
        }
        write!(f, "{}", terms.join("+"))
    }
}
