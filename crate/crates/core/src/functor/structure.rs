use std::collections::BTreeMap;
use std::fmt;

use num_traits::{One, Signed, Zero};
use thiserror::Error;

use super::FunctorExpr;
use crate::numerics::{format_rational, Rational};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ShapeError {
    #[error("{path}: expected {expected}")]
    Mismatch { path: String, expected: String },
    #[error("{path}: distribution weights sum to {sum}, not 1")]
    WeightSum { path: String, sum: String },
    #[error("{path}: distribution weight {weight} is not positive")]
    Weight { path: String, weight: String },
    #[error("{path}: atom index {index} is outside a carrier of {len} atoms")]
    UnknownAtom { path: String, index: usize, len: usize },
    #[error("{path}: entries are not in canonical order or repeat")]
    NotCanonical { path: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Side {
    Left,
    Right,
}

impl fmt::Display for Side {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Side::Left => "left",
            Side::Right => "right",
        })
    }
}

/// An element of `F(X)`. Atoms index either the carrier (under `Id`) or the
/// carrier of the enclosing `Const` space.
///
/// Distributions keep their support sorted with merged, positive weights and
/// sets are sorted without repeats, so structural equality is semantic
/// equality. Use the constructors to keep that form.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum FStructure {
    Atom(usize),
    Dist(Vec<(FStructure, Rational)>),
    Set(Vec<FStructure>),
    Pair(Box<FStructure>, Box<FStructure>),
    Tagged(Side, Box<FStructure>),
}

impl FStructure {
    pub fn atom(i: usize) -> Self {
        FStructure::Atom(i)
    }

    /// Merge repeated support points and drop zero weights.
    pub fn dist(entries: impl IntoIterator<Item = (FStructure, Rational)>) -> Self {
        let mut merged: BTreeMap<FStructure, Rational> = BTreeMap::new();
        for (t, w) in entries {
            *merged.entry(t).or_insert_with(Rational::zero) += w;
        }
        FStructure::Dist(merged.into_iter().filter(|(_, w)| !w.is_zero()).collect())
    }

    pub fn point_mass(t: FStructure) -> Self {
        FStructure::Dist(vec![(t, Rational::one())])
    }

    pub fn set(items: impl IntoIterator<Item = FStructure>) -> Self {
        let mut v: Vec<FStructure> = items.into_iter().collect();
        v.sort();
        v.dedup();
        FStructure::Set(v)
    }

    pub fn pair(a: FStructure, b: FStructure) -> Self {
        FStructure::Pair(Box::new(a), Box::new(b))
    }

    pub fn left(t: FStructure) -> Self {
        FStructure::Tagged(Side::Left, Box::new(t))
    }

    pub fn right(t: FStructure) -> Self {
        FStructure::Tagged(Side::Right, Box::new(t))
    }

    /// Rename carrier atoms (those under `Id` leaves) through `f`, keeping
    /// the canonical form.
    pub fn map_states(&self, expr: &FunctorExpr, f: &impl Fn(usize) -> usize) -> FStructure {
        match (expr, self) {
            (FunctorExpr::Id { .. }, FStructure::Atom(i)) => FStructure::Atom(f(*i)),
            (FunctorExpr::Const(_), t) => t.clone(),
            (FunctorExpr::Dist(sub), FStructure::Dist(es)) => {
                FStructure::dist(es.iter().map(|(t, w)| (t.map_states(sub, f), w.clone())))
            }
            (FunctorExpr::FinPow(sub), FStructure::Set(xs)) => {
                FStructure::set(xs.iter().map(|t| t.map_states(sub, f)))
            }
            (FunctorExpr::Product { left, right, .. }, FStructure::Pair(a, b)) => {
                FStructure::pair(a.map_states(left, f), b.map_states(right, f))
            }
            (FunctorExpr::DiagSquare(sub), FStructure::Pair(a, b)) => {
                FStructure::pair(a.map_states(sub, f), b.map_states(sub, f))
            }
            (FunctorExpr::Coproduct(l, r), FStructure::Tagged(side, t)) => {
                let sub = if *side == Side::Left { l } else { r };
                FStructure::Tagged(*side, Box::new(t.map_states(sub, f)))
            }
            (_, t) => t.clone(),
        }
    }

    /// Check that `self` is a well-formed element of `F(X)` with `|X| = carrier_len`.
    pub fn validate(&self, expr: &FunctorExpr, carrier_len: usize) -> Result<(), ShapeError> {
        self.validate_at(expr, carrier_len, "$")
    }

    fn validate_at(&self, expr: &FunctorExpr, n: usize, path: &str) -> Result<(), ShapeError> {
        let mismatch = |expected: &str| ShapeError::Mismatch {
            path: path.to_string(),
            expected: expected.to_string(),
        };
        match expr {
            FunctorExpr::Id { .. } => match self {
                FStructure::Atom(i) if *i < n => Ok(()),
                FStructure::Atom(i) => Err(ShapeError::UnknownAtom {
                    path: path.to_string(),
                    index: *i,
                    len: n,
                }),
                _ => Err(mismatch("a state")),
            },
            FunctorExpr::Const(space) => match self {
                FStructure::Atom(i) if *i < space.table.len() => Ok(()),
                FStructure::Atom(i) => Err(ShapeError::UnknownAtom {
                    path: path.to_string(),
                    index: *i,
                    len: space.table.len(),
                }),
                _ => Err(mismatch(&format!("an element of `{}`", space.name))),
            },
            FunctorExpr::Dist(sub) => {
                let FStructure::Dist(es) = self else {
                    return Err(mismatch("a distribution"));
                };
                let mut sum = Rational::zero();
                for (k, (t, w)) in es.iter().enumerate() {
                    let p = format!("{path}.dist[{k}]");
                    if !w.is_positive() {
                        return Err(ShapeError::Weight {
                            path: p,
                            weight: format_rational(w),
                        });
                    }
                    t.validate_at(sub, n, &p)?;
                    sum += w;
                }
                if !sum.is_one() {
                    return Err(ShapeError::WeightSum {
                        path: path.to_string(),
                        sum: format_rational(&sum),
                    });
                }
                if es.windows(2).any(|w| w[0].0 >= w[1].0) {
                    return Err(ShapeError::NotCanonical {
                        path: path.to_string(),
                    });
                }
                Ok(())
            }
            FunctorExpr::FinPow(sub) => {
                let FStructure::Set(xs) = self else {
                    return Err(mismatch("a finite set"));
                };
                for (k, t) in xs.iter().enumerate() {
                    t.validate_at(sub, n, &format!("{path}.set[{k}]"))?;
                }
                if xs.windows(2).any(|w| w[0] >= w[1]) {
                    return Err(ShapeError::NotCanonical {
                        path: path.to_string(),
                    });
                }
                Ok(())
            }
            FunctorExpr::Product { left, right, .. } => {
                let FStructure::Pair(a, b) = self else {
                    return Err(mismatch("a pair"));
                };
                a.validate_at(left, n, &format!("{path}.0"))?;
                b.validate_at(right, n, &format!("{path}.1"))
            }
            FunctorExpr::DiagSquare(sub) => {
                let FStructure::Pair(a, b) = self else {
                    return Err(mismatch("a pair"));
                };
                a.validate_at(sub, n, &format!("{path}.0"))?;
                b.validate_at(sub, n, &format!("{path}.1"))
            }
            FunctorExpr::Coproduct(l, r) => {
                let FStructure::Tagged(side, t) = self else {
                    return Err(mismatch("a tagged value"));
                };
                let sub = if *side == Side::Left { l } else { r };
                t.validate_at(sub, n, &format!("{path}.{side}"))
            }
        }
    }

    /// Human-readable rendering with atom names resolved.
    pub fn render(&self, expr: &FunctorExpr, states: &[String]) -> String {
        let mut out = String::new();
        self.render_into(expr, states, &mut out);
        out
    }

    fn render_into(&self, expr: &FunctorExpr, states: &[String], out: &mut String) {
        use std::fmt::Write;
        match (expr, self) {
            (FunctorExpr::Id { .. }, FStructure::Atom(i)) => {
                out.push_str(states.get(*i).map(String::as_str).unwrap_or("?"))
            }
            (FunctorExpr::Const(space), FStructure::Atom(i)) => {
                out.push_str(space.table.atoms().get(*i).map(String::as_str).unwrap_or("?"))
            }
            (FunctorExpr::Dist(sub), FStructure::Dist(es)) => {
                out.push('{');
                for (k, (t, w)) in es.iter().enumerate() {
                    if k > 0 {
                        out.push_str(", ");
                    }
                    t.render_into(sub, states, out);
                    let _ = write!(out, ": {}", format_rational(w));
                }
                out.push('}');
            }
            (FunctorExpr::FinPow(sub), FStructure::Set(xs)) => {
                out.push('{');
                for (k, t) in xs.iter().enumerate() {
                    if k > 0 {
                        out.push_str(", ");
                    }
                    t.render_into(sub, states, out);
                }
                out.push('}');
            }
            (FunctorExpr::Product { left, right, .. }, FStructure::Pair(a, b)) => {
                out.push('(');
                a.render_into(left, states, out);
                out.push_str(", ");
                b.render_into(right, states, out);
                out.push(')');
            }
            (FunctorExpr::DiagSquare(sub), FStructure::Pair(a, b)) => {
                out.push('(');
                a.render_into(sub, states, out);
                out.push_str(", ");
                b.render_into(sub, states, out);
                out.push(')');
            }
            (FunctorExpr::Coproduct(l, r), FStructure::Tagged(side, t)) => {
                let _ = write!(out, "{side}(");
                t.render_into(if *side == Side::Left { l } else { r }, states, out);
                out.push(')');
            }
            (_, t) => {
                let _ = write!(out, "{t:?}");
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::functor::ConstSpace;
    use crate::numerics::{ratio, Top};

    fn refusal() -> FunctorExpr {
        FunctorExpr::refusal(ratio(9, 10), Top::one())
    }

    #[test]
    fn dist_validation() {
        let e = FunctorExpr::dist(FunctorExpr::id());
        let ok = FStructure::dist([(FStructure::atom(0), ratio(1, 2)), (FStructure::atom(1), ratio(1, 2))]);
        assert_eq!(ok.validate(&e, 2), Ok(()));
        let short = FStructure::dist([(FStructure::atom(0), ratio(1, 2))]);
        assert!(matches!(short.validate(&e, 2), Err(ShapeError::WeightSum { .. })));
        let unknown = FStructure::point_mass(FStructure::atom(5));
        assert!(matches!(unknown.validate(&e, 2), Err(ShapeError::UnknownAtom { index: 5, .. })));
    }

    #[test]
    fn termination_branch_is_valid() {
        let t = FStructure::point_mass(FStructure::right(FStructure::atom(0)));
        assert_eq!(t.validate(&refusal(), 0), Ok(()));
        let coproduct = FunctorExpr::coproduct(
            FunctorExpr::id(),
            FunctorExpr::constant(ConstSpace::unit(Top::one())),
        );
        assert_eq!(FStructure::right(FStructure::atom(0)).validate(&coproduct, 3), Ok(()));
        assert!(FStructure::right(FStructure::atom(1)).validate(&coproduct, 3).is_err());
    }

    #[test]
    fn constructors_canonicalize() {
        let d = FStructure::dist([
            (FStructure::atom(1), ratio(1, 4)),
            (FStructure::atom(0), ratio(1, 2)),
            (FStructure::atom(1), ratio(1, 4)),
            (FStructure::atom(2), ratio(0, 1)),
        ]);
        assert_eq!(
            d,
            FStructure::Dist(vec![(FStructure::atom(0), ratio(1, 2)), (FStructure::atom(1), ratio(1, 2))])
        );
        assert_eq!(
            FStructure::set([FStructure::atom(2), FStructure::atom(0), FStructure::atom(2)]),
            FStructure::Set(vec![FStructure::atom(0), FStructure::atom(2)])
        );
        let raw = FStructure::Set(vec![FStructure::atom(1), FStructure::atom(0)]);
        assert!(matches!(
            raw.validate(&FunctorExpr::finpow(FunctorExpr::id()), 2),
            Err(ShapeError::NotCanonical { .. })
        ));
    }

    #[test]
    fn shape_mismatch_reports_path() {
        let t = FStructure::Dist(vec![(FStructure::atom(0), ratio(1, 1))]);
        match t.validate(&refusal(), 1) {
            Err(ShapeError::Mismatch { path, .. }) => assert_eq!(path, "$.dist[0]"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn render_and_relabel() {
        let e = refusal();
        let t = FStructure::dist([
            (FStructure::left(FStructure::atom(0)), ratio(1, 2)),
            (FStructure::right(FStructure::atom(0)), ratio(1, 2)),
        ]);
        let names = vec!["x".to_string(), "y".to_string()];
        assert_eq!(t.render(&e, &names), "{left(x): 1/2, right(✓): 1/2}");
        let moved = t.map_states(&e, &|i| 1 - i);
        assert_eq!(moved.render(&e, &names), "{left(y): 1/2, right(✓): 1/2}");
    }
}
