use std::fmt;
use std::sync::Arc;

use num_traits::{One, Signed};
use thiserror::Error;

use super::PseudometricTable;
use crate::numerics::{format_rational, Rational, Top};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FunctorError {
    #[error("discount {0} is not in (0, 1]")]
    Discount(String),
    #[error("product weights must lie in (0, 1], got c1 = {c1}, c2 = {c2}")]
    Weight { c1: String, c2: String },
    #[error("product weights c1 + c2 = {0} exceed 1, so distances would leave [0, ⊤]")]
    WeightSum(String),
    #[error("p must be at least 1")]
    Exponent,
    #[error("constant space `{name}` has top {found}, expression uses {expected}")]
    MixedTop {
        name: String,
        found: String,
        expected: String,
    },
    #[error("the diagonal square X×X with sum evaluation needs an infinite top")]
    DiagSquareTop,
}

/// Evaluation function of the product bifunctor.
#[derive(Debug, Clone, PartialEq)]
pub enum ProductEval {
    /// `max(r1, r2)`
    Max,
    /// `(c1·r1^p + c2·r2^p)^(1/p)`
    PNorm { p: u32, c1: Rational, c2: Rational },
}

/// A named constant pseudometric space.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstSpace {
    pub name: String,
    pub table: PseudometricTable,
}

impl ConstSpace {
    pub fn new(name: impl Into<String>, table: PseudometricTable) -> Arc<Self> {
        Arc::new(ConstSpace {
            name: name.into(),
            table,
        })
    }

    /// The singleton space `1 = {✓}`.
    pub fn unit(top: Top) -> Arc<Self> {
        Self::new("unit", PseudometricTable::singleton(UNIT_ATOM, top))
    }
}

/// Name of the single element of the built-in `unit` space.
pub const UNIT_ATOM: &str = "✓";

/// Functor expressions, each node carrying its evaluation function.
#[derive(Debug, Clone, PartialEq)]
pub enum FunctorExpr {
    /// Identity, `ev(r) = c·r`.
    Id { discount: Rational },
    /// Finitely supported distributions, expected value.
    Dist(Box<FunctorExpr>),
    /// Finite subsets, `max` with `max ∅ = 0`.
    FinPow(Box<FunctorExpr>),
    Product {
        left: Box<FunctorExpr>,
        right: Box<FunctorExpr>,
        eval: ProductEval,
    },
    /// Binary coproduct, `ev(x, i) = x`.
    Coproduct(Box<FunctorExpr>, Box<FunctorExpr>),
    Const(Arc<ConstSpace>),
    /// `X ↦ X × X` with `ev(r1, r2) = r1 + r2`; one shared test function on
    /// both components.
    DiagSquare(Box<FunctorExpr>),
}

impl FunctorExpr {
    pub fn id() -> Self {
        FunctorExpr::Id {
            discount: Rational::one(),
        }
    }

    pub fn discounted(c: Rational) -> Self {
        FunctorExpr::Id { discount: c }
    }

    pub fn dist(sub: FunctorExpr) -> Self {
        FunctorExpr::Dist(Box::new(sub))
    }

    pub fn finpow(sub: FunctorExpr) -> Self {
        FunctorExpr::FinPow(Box::new(sub))
    }

    pub fn product(left: FunctorExpr, right: FunctorExpr, eval: ProductEval) -> Self {
        FunctorExpr::Product {
            left: Box::new(left),
            right: Box::new(right),
            eval,
        }
    }

    pub fn coproduct(left: FunctorExpr, right: FunctorExpr) -> Self {
        FunctorExpr::Coproduct(Box::new(left), Box::new(right))
    }

    pub fn constant(space: Arc<ConstSpace>) -> Self {
        FunctorExpr::Const(space)
    }

    pub fn diag_square(sub: FunctorExpr) -> Self {
        FunctorExpr::DiagSquare(Box::new(sub))
    }

    /// The discrete refusal composite `D(c·Id + 1)` of probabilistic systems.
    pub fn refusal(c: Rational, top: Top) -> Self {
        FunctorExpr::dist(FunctorExpr::coproduct(
            FunctorExpr::discounted(c),
            FunctorExpr::constant(ConstSpace::unit(top)),
        ))
    }

    /// Check parameters and that every constant lives under `top`.
    pub fn validate(&self, top: &Top) -> Result<(), FunctorError> {
        match self {
            FunctorExpr::Id { discount } => {
                if discount.is_positive() && *discount <= Rational::one() {
                    Ok(())
                } else {
                    Err(FunctorError::Discount(format_rational(discount)))
                }
            }
            FunctorExpr::Dist(sub) | FunctorExpr::FinPow(sub) => sub.validate(top),
            FunctorExpr::DiagSquare(sub) => {
                if !top.is_infinite() {
                    return Err(FunctorError::DiagSquareTop);
                }
                sub.validate(top)
            }
            FunctorExpr::Coproduct(l, r) => {
                l.validate(top)?;
                r.validate(top)
            }
            FunctorExpr::Product { left, right, eval } => {
                if let ProductEval::PNorm { p, c1, c2 } = eval {
                    if *p == 0 {
                        return Err(FunctorError::Exponent);
                    }
                    let in_unit = |c: &Rational| c.is_positive() && *c <= Rational::one();
                    if !in_unit(c1) || !in_unit(c2) {
                        return Err(FunctorError::Weight {
                            c1: format_rational(c1),
                            c2: format_rational(c2),
                        });
                    }
                    if !top.is_infinite() && c1 + c2 > Rational::one() {
                        return Err(FunctorError::WeightSum(format_rational(&(c1 + c2))));
                    }
                }
                left.validate(top)?;
                right.validate(top)
            }
            FunctorExpr::Const(space) => {
                if space.table.top() == top {
                    Ok(())
                } else {
                    Err(FunctorError::MixedTop {
                        name: space.name.clone(),
                        found: space.table.top().to_string(),
                        expected: top.to_string(),
                    })
                }
            }
        }
    }

    /// Whether the expression mentions the carrier (an `Id` leaf).
    pub fn uses_carrier(&self) -> bool {
        match self {
            FunctorExpr::Id { .. } => true,
            FunctorExpr::Const(_) => false,
            FunctorExpr::Dist(s) | FunctorExpr::FinPow(s) | FunctorExpr::DiagSquare(s) => {
                s.uses_carrier()
            }
            FunctorExpr::Product { left, right, .. } => left.uses_carrier() || right.uses_carrier(),
            FunctorExpr::Coproduct(l, r) => l.uses_carrier() || r.uses_carrier(),
        }
    }

    /// All constant spaces, left to right, without duplicates by name.
    pub fn const_spaces(&self) -> Vec<Arc<ConstSpace>> {
        let mut out: Vec<Arc<ConstSpace>> = Vec::new();
        self.collect_consts(&mut out);
        out
    }

    fn collect_consts(&self, out: &mut Vec<Arc<ConstSpace>>) {
        match self {
            FunctorExpr::Id { .. } => {}
            FunctorExpr::Const(s) => {
                if !out.iter().any(|o| o.name == s.name) {
                    out.push(s.clone());
                }
            }
            FunctorExpr::Dist(s) | FunctorExpr::FinPow(s) | FunctorExpr::DiagSquare(s) => {
                s.collect_consts(out)
            }
            FunctorExpr::Product { left, right, .. } => {
                left.collect_consts(out);
                right.collect_consts(out);
            }
            FunctorExpr::Coproduct(l, r) => {
                l.collect_consts(out);
                r.collect_consts(out);
            }
        }
    }
}

impl fmt::Display for FunctorExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FunctorExpr::Id { discount } if discount.is_one() => f.write_str("Id"),
            FunctorExpr::Id { discount } => write!(f, "{}·Id", format_rational(discount)),
            FunctorExpr::Dist(s) => write!(f, "D({s})"),
            FunctorExpr::FinPow(s) => write!(f, "Pfin({s})"),
            FunctorExpr::Product { left, right, eval } => match eval {
                ProductEval::Max => write!(f, "({left} ×max {right})"),
                ProductEval::PNorm { p, c1, c2 } => write!(
                    f,
                    "({left} ×[p={p},{},{}] {right})",
                    format_rational(c1),
                    format_rational(c2)
                ),
            },
            FunctorExpr::Coproduct(l, r) => write!(f, "({l} + {r})"),
            FunctorExpr::Const(s) => write!(f, "{}", s.name),
            FunctorExpr::DiagSquare(s) => write!(f, "Sq({s})"),
        }
    }
}

impl Default for FunctorExpr {
    fn default() -> Self {
        FunctorExpr::id()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{int, ratio};

    #[test]
    fn validation() {
        assert!(FunctorExpr::refusal(ratio(9, 10), Top::one()).validate(&Top::one()).is_ok());
        assert!(matches!(
            FunctorExpr::discounted(int(2)).validate(&Top::one()),
            Err(FunctorError::Discount(_))
        ));
        assert!(matches!(
            FunctorExpr::discounted(int(0)).validate(&Top::one()),
            Err(FunctorError::Discount(_))
        ));
        // constants must share the expression's top
        assert!(matches!(
            FunctorExpr::refusal(ratio(1, 2), Top::Infinite).validate(&Top::one()),
            Err(FunctorError::MixedTop { .. })
        ));
        assert!(matches!(
            FunctorExpr::diag_square(FunctorExpr::id()).validate(&Top::one()),
            Err(FunctorError::DiagSquareTop)
        ));
        assert!(FunctorExpr::diag_square(FunctorExpr::id()).validate(&Top::Infinite).is_ok());
        let pn = |c1, c2| {
            FunctorExpr::product(
                FunctorExpr::id(),
                FunctorExpr::id(),
                ProductEval::PNorm { p: 2, c1, c2 },
            )
        };
        assert!(pn(int(1), int(1)).validate(&Top::Infinite).is_ok());
        assert!(matches!(pn(int(1), int(1)).validate(&Top::one()), Err(FunctorError::WeightSum(_))));
        assert!(pn(ratio(1, 2), ratio(1, 2)).validate(&Top::one()).is_ok());
    }

    #[test]
    fn display() {
        let e = FunctorExpr::refusal(ratio(9, 10), Top::one());
        assert_eq!(e.to_string(), "D((9/10·Id + unit))");
        assert_eq!(e.const_spaces().len(), 1);
        assert!(e.uses_carrier());
    }
}
