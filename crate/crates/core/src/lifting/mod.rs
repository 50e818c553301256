//! Kantorovich and Wasserstein liftings of pseudometrics along functor
//! expressions, and sampled well-behavedness checks for evaluation functions.
//!
//! Both liftings recurse through the expression: the distance on `F(X)` for a
//! node is computed from the lifted distance of its children, so every node
//! only ever sees a finite space of sub-structures.

mod kantorovich;
mod wasserstein;
mod well_behaved;

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::functor::{FStructure, FunctorError, FunctorExpr, PseudometricTable, ShapeError};
use crate::numerics::Value;

pub use kantorovich::{kantorovich_lp, solve_linear_kantorovich};
pub use wasserstein::hausdorff;
pub use well_behaved::{
    check_well_behaved, NodeEval, OneLevel, SamplingPlan, WellBehavedReport, Witness,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum LiftMethod {
    Kantorovich,
    #[default]
    Wasserstein,
}

impl fmt::Display for LiftMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            LiftMethod::Kantorovich => "kantorovich",
            LiftMethod::Wasserstein => "wasserstein",
        })
    }
}

impl FromStr for LiftMethod {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "kantorovich" | "k" => Ok(LiftMethod::Kantorovich),
            "wasserstein" | "w" => Ok(LiftMethod::Wasserstein),
            other => Err(format!("unknown lifting method `{other}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LiftError {
    #[error(transparent)]
    Shape(#[from] ShapeError),
    #[error(transparent)]
    Functor(#[from] FunctorError),
    /// A lifting LP came back infeasible or unbounded where that cannot
    /// happen for a valid input.
    #[error("internal lifting error: {0}")]
    Internal(String),
}

/// Lifted distance between `t1` and `t2` in `F(X)` for the pseudometric `d`
/// on `X`.
pub fn lift_dist(
    expr: &FunctorExpr,
    d: &PseudometricTable,
    method: LiftMethod,
    t1: &FStructure,
    t2: &FStructure,
) -> Result<Value, LiftError> {
    expr.validate(d.top())?;
    t1.validate(expr, d.len())?;
    t2.validate(expr, d.len())?;
    lift_validated(expr, d, method, t1, t2)
}

/// [`lift_dist`] without input validation.
pub(crate) fn lift_validated(
    expr: &FunctorExpr,
    d: &PseudometricTable,
    method: LiftMethod,
    t1: &FStructure,
    t2: &FStructure,
) -> Result<Value, LiftError> {
    match method {
        LiftMethod::Kantorovich => kantorovich::lift(expr, d, t1, t2),
        LiftMethod::Wasserstein => wasserstein::lift(expr, d, t1, t2),
    }
}

/// Both liftings and their difference.
#[derive(Debug, Clone, PartialEq)]
pub struct DualityReport {
    pub kantorovich: Value,
    pub wasserstein: Value,
    pub gap: Value,
}

pub fn lift_both(
    expr: &FunctorExpr,
    d: &PseudometricTable,
    t1: &FStructure,
    t2: &FStructure,
) -> Result<DualityReport, LiftError> {
    let kantorovich = lift_dist(expr, d, LiftMethod::Kantorovich, t1, t2)?;
    let wasserstein = lift_validated(expr, d, LiftMethod::Wasserstein, t1, t2)?;
    let gap = wasserstein.saturating_sub(&kantorovich);
    Ok(DualityReport {
        kantorovich,
        wasserstein,
        gap,
    })
}

/// `W − K`, never negative.
pub fn duality_gap(
    expr: &FunctorExpr,
    d: &PseudometricTable,
    t1: &FStructure,
    t2: &FStructure,
) -> Result<Value, LiftError> {
    lift_both(expr, d, t1, t2).map(|r| r.gap)
}

/// The lifted distance table on a list of F-structures, computed once per
/// unordered pair (diagonal included).
pub fn lift_table(
    expr: &FunctorExpr,
    d: &PseudometricTable,
    method: LiftMethod,
    structures: &[FStructure],
) -> Result<Vec<Vec<Value>>, LiftError> {
    expr.validate(d.top())?;
    for t in structures {
        t.validate(expr, d.len())?;
    }
    let n = structures.len();
    let mut out = vec![vec![Value::zero(); n]; n];
    for i in 0..n {
        for j in i..n {
            let v = lift_validated(expr, d, method, &structures[i], &structures[j])?;
            out[i][j] = v.clone();
            out[j][i] = v;
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests;
