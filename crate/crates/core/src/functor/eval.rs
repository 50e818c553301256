use super::{ConstSpace, FStructure, FunctorExpr, ProductEval, ShapeError, Side};
use crate::numerics::{add_ext, pnorm, Value};

/// A leaf of an F-structure handed to the test function.
#[derive(Debug, Clone, Copy)]
pub enum Leaf<'a> {
    /// A carrier state.
    State(usize),
    /// An element of a constant space.
    Const(&'a ConstSpace, usize),
}

/// `F̃g(t) = ev_F(Fg(t))`: apply `g` at the leaves and aggregate with each
/// node's evaluation function.
pub fn eval_functor<'a, G>(expr: &'a FunctorExpr, g: &G, t: &FStructure) -> Result<Value, ShapeError>
where
    G: Fn(Leaf<'a>) -> Value,
{
    eval_at(expr, g, t, "$")
}

/// [`eval_functor`] with `g` given as a table on the carrier; constant
/// leaves evaluate to zero.
pub fn eval_on_states(expr: &FunctorExpr, g: &[Value], t: &FStructure) -> Result<Value, ShapeError> {
    eval_functor(
        expr,
        &|leaf| match leaf {
            Leaf::State(i) => g[i].clone(),
            Leaf::Const(..) => Value::zero(),
        },
        t,
    )
}

fn eval_at<'a, G>(expr: &'a FunctorExpr, g: &G, t: &FStructure, path: &str) -> Result<Value, ShapeError>
where
    G: Fn(Leaf<'a>) -> Value,
{
    let mismatch = |expected: &str| ShapeError::Mismatch {
        path: path.to_string(),
        expected: expected.to_string(),
    };
    match (expr, t) {
        (FunctorExpr::Id { discount }, FStructure::Atom(i)) => Ok(g(Leaf::State(*i)).scale(discount)),
        (FunctorExpr::Const(space), FStructure::Atom(i)) => Ok(g(Leaf::Const(space, *i))),
        (FunctorExpr::Dist(sub), FStructure::Dist(es)) => {
            let mut acc = Value::zero();
            for (k, (s, w)) in es.iter().enumerate() {
                let v = eval_at(sub, g, s, &format!("{path}.dist[{k}]"))?;
                acc = add_ext(&acc, &v.scale(w), None);
            }
            Ok(acc)
        }
        (FunctorExpr::FinPow(sub), FStructure::Set(xs)) => {
            let mut acc = Value::zero();
            for (k, s) in xs.iter().enumerate() {
                acc = acc.max_of(eval_at(sub, g, s, &format!("{path}.set[{k}]"))?);
            }
            Ok(acc)
        }
        (FunctorExpr::Product { left, right, eval }, FStructure::Pair(a, b)) => {
            let x = eval_at(left, g, a, &format!("{path}.0"))?;
            let y = eval_at(right, g, b, &format!("{path}.1"))?;
            Ok(match eval {
                ProductEval::Max => x.max_of(y),
                ProductEval::PNorm { p, c1, c2 } => pnorm(*p, c1, c2, &x, &y),
            })
        }
        (FunctorExpr::Coproduct(l, r), FStructure::Tagged(side, s)) => {
            let sub = if *side == Side::Left { l } else { r };
            eval_at(sub, g, s, &format!("{path}.{side}"))
        }
        (FunctorExpr::DiagSquare(sub), FStructure::Pair(a, b)) => {
            let x = eval_at(sub, g, a, &format!("{path}.0"))?;
            let y = eval_at(sub, g, b, &format!("{path}.1"))?;
            Ok(add_ext(&x, &y, None))
        }
        (FunctorExpr::Id { .. }, _) => Err(mismatch("a state")),
        (FunctorExpr::Const(_), _) => Err(mismatch("a constant")),
        (FunctorExpr::Dist(_), _) => Err(mismatch("a distribution")),
        (FunctorExpr::FinPow(_), _) => Err(mismatch("a finite set")),
        (FunctorExpr::Product { .. } | FunctorExpr::DiagSquare(_), _) => Err(mismatch("a pair")),
        (FunctorExpr::Coproduct(..), _) => Err(mismatch("a tagged value")),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{int, ratio, Top};
    use proptest::prelude::*;

    #[test]
    fn expected_value() {
        // carrier {0, 1/2} embedded identically
        let g = [Value::zero(), Value::ratio(1, 2)];
        let p = FStructure::dist([(FStructure::atom(0), ratio(1, 2)), (FStructure::atom(1), ratio(1, 2))]);
        let v = eval_on_states(&FunctorExpr::dist(FunctorExpr::id()), &g, &p).unwrap();
        assert_eq!(v, Value::ratio(1, 4));
    }

    #[test]
    fn empty_set_evaluates_to_zero() {
        let g = [Value::ratio(3, 4)];
        let v = eval_on_states(&FunctorExpr::finpow(FunctorExpr::id()), &g, &FStructure::set([])).unwrap();
        assert_eq!(v, Value::zero());
    }

    #[test]
    fn diag_square_sums() {
        let g = [Value::ratio(2, 7), Value::ratio(2, 7)];
        let t = FStructure::pair(FStructure::atom(0), FStructure::atom(1));
        let v = eval_on_states(&FunctorExpr::diag_square(FunctorExpr::id()), &g, &t).unwrap();
        assert_eq!(v, Value::ratio(4, 7));
    }

    #[test]
    fn product_and_coproduct() {
        let g = [Value::ratio(1, 3), Value::ratio(1, 2)];
        let t = FStructure::pair(FStructure::atom(0), FStructure::atom(1));
        let max = FunctorExpr::product(FunctorExpr::id(), FunctorExpr::id(), ProductEval::Max);
        assert_eq!(eval_on_states(&max, &g, &t).unwrap(), Value::ratio(1, 2));
        let p1 = FunctorExpr::product(
            FunctorExpr::id(),
            FunctorExpr::id(),
            ProductEval::PNorm { p: 1, c1: ratio(1, 2), c2: ratio(1, 2) },
        );
        assert_eq!(eval_on_states(&p1, &g, &t).unwrap(), Value::ratio(5, 12));
        let co = FunctorExpr::coproduct(FunctorExpr::discounted(ratio(1, 2)), FunctorExpr::id());
        assert_eq!(
            eval_on_states(&co, &g, &FStructure::left(FStructure::atom(1))).unwrap(),
            Value::ratio(1, 4)
        );
    }

    #[test]
    fn const_leaves_reach_the_test_function() {
        let e = FunctorExpr::refusal(ratio(9, 10), Top::one());
        let t = FStructure::point_mass(FStructure::right(FStructure::atom(0)));
        let v = eval_functor(
            &e,
            &|leaf| match leaf {
                Leaf::State(_) => Value::zero(),
                Leaf::Const(space, _) => {
                    assert_eq!(space.name, "unit");
                    Value::exact(int(1))
                }
            },
            &t,
        )
        .unwrap();
        assert_eq!(v, Value::exact(int(1)));
    }

    fn exprs() -> Vec<FunctorExpr> {
        vec![
            FunctorExpr::dist(FunctorExpr::id()),
            FunctorExpr::finpow(FunctorExpr::id()),
            FunctorExpr::diag_square(FunctorExpr::discounted(ratio(1, 2))),
            FunctorExpr::product(FunctorExpr::id(), FunctorExpr::id(), ProductEval::Max),
        ]
    }

    proptest! {
        // g ≤ g' pointwise implies F̃g ≤ F̃g'.
        #[test]
        fn evaluation_is_monotone(
            g in proptest::collection::vec(0i64..20, 3),
            bump in proptest::collection::vec(0i64..5, 3),
            pick in 0usize..4,
            a in 0usize..3, b in 0usize..3, wa in 1i64..5,
        ) {
            let e = &exprs()[pick];
            let t = match e {
                FunctorExpr::Dist(_) => FStructure::dist([(FStructure::atom(a), ratio(wa, 5)), (FStructure::atom(b), ratio(5 - wa, 5))]),
                FunctorExpr::FinPow(_) => FStructure::set([FStructure::atom(a), FStructure::atom(b)]),
                _ => FStructure::pair(FStructure::atom(a), FStructure::atom(b)),
            };
            let lo: Vec<Value> = g.iter().map(|&x| Value::ratio(x, 20)).collect();
            let hi: Vec<Value> = g.iter().zip(&bump).map(|(&x, &d)| Value::ratio(x + d, 20)).collect();
            prop_assert!(eval_on_states(e, &lo, &t).unwrap() <= eval_on_states(e, &hi, &t).unwrap());
        }
    }
}
