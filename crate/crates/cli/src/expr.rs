//! Polynomial expressions such as `y^2+1`, `2y` or `Oy^A`.
//!
//! A term is `[coef]y[^exp]` or a bare constant; coefficients and exponents
//! are decimal integers or set names. Integer coefficients contribute
//! positions labelled by their running index, named ones contribute the
//! set's labels.

use polyagent_core::{FinSet, Polynomial};

use crate::error::{CliError, CliResult};

#[derive(Clone, Debug, PartialEq, Eq)]
enum Atom {
    Count(usize),
    Set(String),
}

#[derive(Clone, Debug, PartialEq, Eq)]
struct Term {
    coef: Atom,
    exp: Atom,
}

fn atom(text: &str, default: usize, location: &str) -> CliResult<Atom> {
    if text.is_empty() {
        return Ok(Atom::Count(default));
    }
    if text.bytes().all(|b| b.is_ascii_digit()) {
        return text
            .parse()
            .map(Atom::Count)
            .map_err(|_| CliError::parse(location, format!("{text:?} is out of range")));
    }
    if text.chars().all(|c| c.is_alphanumeric() || c == '_') {
        return Ok(Atom::Set(text.to_string()));
    }
    Err(CliError::parse(
        location,
        format!("{text:?} is neither an integer nor a set name"),
    ))
}

fn term(text: &str, location: &str) -> CliResult<Term> {
    let bytes = text.as_bytes();
    let split = (0..bytes.len())
        .find(|&k| bytes[k] == b'y' && (k + 1 == bytes.len() || bytes[k + 1] == b'^'));
    match split {
        None => Ok(Term {
            coef: atom(text, 1, location)?,
            exp: Atom::Count(0),
        }),
        Some(k) => {
            let exp = match &text[k + 1..] {
                "" => "",
                rest => {
                    let e = &rest[1..];
                    if e.is_empty() {
                        return Err(CliError::parse(
                            location,
                            format!("missing exponent in {text:?}"),
                        ));
                    }
                    e
                }
            };
            Ok(Term {
                coef: atom(&text[..k], 1, location)?,
                exp: atom(exp, 1, location)?,
            })
        }
    }
}

/// Parses `text`, resolving set names through `set`.
pub fn parse_polynomial(
    text: &str,
    location: &str,
    mut set: impl FnMut(&str) -> CliResult<FinSet>,
) -> CliResult<Polynomial> {
    let compact: String = text.chars().filter(|c| !c.is_whitespace()).collect();
    if compact.is_empty() {
        return Err(CliError::parse(location, "empty polynomial expression"));
    }
    let mut labels: Vec<String> = Vec::new();
    let mut directions = Vec::new();
    for piece in compact.split('+') {
        if piece.is_empty() {
            return Err(CliError::parse(location, format!("empty term in {text:?}")));
        }
        let t = term(piece, location)?;
        let exp = match &t.exp {
            Atom::Count(n) => FinSet::range(n.to_string(), *n),
            Atom::Set(name) => set(name)?,
        };
        match &t.coef {
            Atom::Count(n) => {
                for _ in 0..*n {
                    labels.push(labels.len().to_string());
                    directions.push(exp.clone());
                }
            }
            Atom::Set(name) => {
                for l in set(name)?.elements() {
                    labels.push(l.clone());
                    directions.push(exp.clone());
                }
            }
        }
    }
    let positions =
        FinSet::new(compact, labels).map_err(|e| CliError::invariant(location, e.to_string()))?;
    Polynomial::new(positions, directions).map_err(|e| CliError::invariant(location, e.to_string()))
}
