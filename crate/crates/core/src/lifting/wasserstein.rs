use super::LiftError;
use crate::functor::{FStructure, FunctorExpr, PseudometricTable, ProductEval, ShapeError, Side};
use crate::lp::{solve_transportation, TransportationInstance};
use crate::numerics::{add_ext, pnorm, Top, Value};

/// Wasserstein lifting, recursively: the infimum of `F̃d(t)` over couplings,
/// in closed form or as a transportation problem per node.
pub(super) fn lift(
    expr: &FunctorExpr,
    d: &PseudometricTable,
    t1: &FStructure,
    t2: &FStructure,
) -> Result<Value, LiftError> {
    let top = d.top();
    match (expr, t1, t2) {
        (FunctorExpr::Id { discount }, FStructure::Atom(i), FStructure::Atom(j)) => {
            Ok(d.get(*i, *j).scale(discount))
        }
        (FunctorExpr::Const(space), FStructure::Atom(i), FStructure::Atom(j)) => {
            Ok(space.table.get(*i, *j).clone())
        }
        (FunctorExpr::Dist(sub), FStructure::Dist(p1), FStructure::Dist(p2)) => {
            let mut cost = Vec::with_capacity(p1.len());
            for (x, _) in p1 {
                let row = p2
                    .iter()
                    .map(|(y, _)| lift(sub, d, x, y))
                    .collect::<Result<Vec<_>, _>>()?;
                cost.push(row);
            }
            let inst = TransportationInstance {
                supply: p1.iter().map(|(_, w)| w.clone()).collect(),
                demand: p2.iter().map(|(_, w)| w.clone()).collect(),
                cost,
            };
            solve_transportation(&inst)
                .map(|plan| plan.value)
                .map_err(|e| LiftError::Internal(e.to_string()))
        }
        (FunctorExpr::FinPow(sub), FStructure::Set(a), FStructure::Set(b)) => {
            let mut cost = Vec::with_capacity(a.len());
            for x in a {
                let row = b
                    .iter()
                    .map(|y| lift(sub, d, x, y))
                    .collect::<Result<Vec<_>, _>>()?;
                cost.push(row);
            }
            Ok(hausdorff(&cost, a.len(), b.len(), top))
        }
        (FunctorExpr::Product { left, right, eval }, FStructure::Pair(a1, a2), FStructure::Pair(b1, b2)) => {
            let x = lift(left, d, a1, b1)?;
            let y = lift(right, d, a2, b2)?;
            Ok(match eval {
                ProductEval::Max => x.max_of(y),
                ProductEval::PNorm { p, c1, c2 } => pnorm(*p, c1, c2, &x, &y),
            })
        }
        (FunctorExpr::Coproduct(l, r), FStructure::Tagged(s1, x), FStructure::Tagged(s2, y)) => {
            if s1 != s2 {
                return Ok(top.value());
            }
            lift(if *s1 == Side::Left { l } else { r }, d, x, y)
        }
        // the unique coupling pairs components position by position
        (FunctorExpr::DiagSquare(sub), FStructure::Pair(a1, a2), FStructure::Pair(b1, b2)) => {
            Ok(add_ext(&lift(sub, d, a1, b1)?, &lift(sub, d, a2, b2)?, None))
        }
        _ => Err(ShapeError::Mismatch {
            path: "$".into(),
            expected: format!("two elements of {expr}"),
        }
        .into()),
    }
}

/// Hausdorff distance from an `m × n` cost table: the larger of the two
/// directed max-min distances, `⊤` when exactly one side is empty and `0`
/// when both are.
pub fn hausdorff(cost: &[Vec<Value>], m: usize, n: usize, top: &Top) -> Value {
    match (m, n) {
        (0, 0) => Value::zero(),
        (0, _) | (_, 0) => top.value(),
        _ => {
            let row_min = (0..m).map(|i| (0..n).map(|j| cost[i][j].clone()).min().expect("n > 0"));
            let col_min = (0..n).map(|j| (0..m).map(|i| cost[i][j].clone()).min().expect("m > 0"));
            row_min.chain(col_min).max().expect("m + n > 0")
        }
    }
}
