use std::collections::{BTreeMap, BTreeSet};

use num_traits::{One, Zero};

use super::LiftError;
use crate::functor::{FStructure, FunctorExpr, PseudometricTable, ProductEval, ShapeError, Side};
use crate::lp::{self, LinearProgram, LpError, Relation, Sense};
use crate::numerics::{pnorm, Rational, Top, Value};

/// Kantorovich lifting, recursively: the supremum of `d_e(F̃f(t1), F̃f(t2))`
/// over nonexpansive `f` into `[0, ⊤]`, where each node sees the lifted
/// distance of its children.
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
            let mut weights: BTreeMap<&FStructure, Rational> = BTreeMap::new();
            for (t, w) in p1 {
                *weights.entry(t).or_insert_with(Rational::zero) += w;
            }
            for (t, w) in p2 {
                *weights.entry(t).or_insert_with(Rational::zero) -= w;
            }
            linear(sub, d, weights)
        }
        (FunctorExpr::DiagSquare(sub), FStructure::Pair(a1, a2), FStructure::Pair(b1, b2)) => {
            let mut weights: BTreeMap<&FStructure, Rational> = BTreeMap::new();
            for t in [a1, a2] {
                *weights.entry(t).or_insert_with(Rational::zero) += Rational::one();
            }
            for t in [b1, b2] {
                *weights.entry(t).or_insert_with(Rational::zero) -= Rational::one();
            }
            linear(sub, d, weights)
        }
        (FunctorExpr::FinPow(sub), FStructure::Set(a), FStructure::Set(b)) => finpow(sub, d, a, b),
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
        _ => Err(ShapeError::Mismatch {
            path: "$".into(),
            expected: format!("two elements of {expr}"),
        }
        .into()),
    }
}

/// Test functions enter linearly: maximize `Σ w(p)·f(p)` over the support
/// points with nonzero weight. Points of weight zero can be dropped because a
/// nonexpansive map on a subset extends to the whole space.
fn linear(
    sub: &FunctorExpr,
    d: &PseudometricTable,
    weights: BTreeMap<&FStructure, Rational>,
) -> Result<Value, LiftError> {
    let (points, coeffs): (Vec<&FStructure>, Vec<Rational>) =
        weights.into_iter().filter(|(_, w)| !w.is_zero()).unzip();
    if points.is_empty() {
        return Ok(Value::zero());
    }
    let dist = pairwise(sub, d, &points)?;
    solve_linear_kantorovich(&dist, &coeffs, d.top())
}

fn pairwise(
    sub: &FunctorExpr,
    d: &PseudometricTable,
    points: &[&FStructure],
) -> Result<Vec<Vec<Value>>, LiftError> {
    let n = points.len();
    let mut dist = vec![vec![Value::zero(); n]; n];
    for i in 0..n {
        for j in (i + 1)..n {
            let v = lift(sub, d, points[i], points[j])?;
            dist[i][j] = v.clone();
            dist[j][i] = v;
        }
    }
    Ok(dist)
}

/// The nonexpansiveness polytope `{0 ≤ f ≤ ⊤, |f_i − f_j| ≤ d_ij}` with the
/// objective `maximize Σ coeffs·f`. Pairs at infinite distance impose no
/// constraint and are left out.
pub fn kantorovich_lp(dist: &[Vec<Value>], coeffs: &[Rational], top: &Top) -> LinearProgram {
    nonexpansive_lp(dist, coeffs.to_vec(), top)
}

/// Like [`kantorovich_lp`], with extra variables past the points allowed.
fn nonexpansive_lp(dist: &[Vec<Value>], objective: Vec<Rational>, top: &Top) -> LinearProgram {
    let n = dist.len();
    let mut lp = LinearProgram::new(Sense::Maximize, objective);
    for j in 0..lp.num_vars() {
        lp.set_bounds(j, Rational::zero(), top.as_bound());
    }
    for i in 0..n {
        for j in (i + 1)..n {
            if let Some(q) = dist[i][j].to_rational() {
                lp.add_sparse(&[(i, Rational::one()), (j, -Rational::one())], Relation::Le, q.clone());
                lp.add_sparse(&[(j, Rational::one()), (i, -Rational::one())], Relation::Le, q);
            }
        }
    }
    lp
}

/// `sup_f |Σ coeffs·f|` over the nonexpansiveness polytope: one LP per sign.
pub fn solve_linear_kantorovich(
    dist: &[Vec<Value>],
    coeffs: &[Rational],
    top: &Top,
) -> Result<Value, LiftError> {
    let exact = dist.iter().flatten().all(Value::is_exact);
    let mut best = Rational::zero();
    for sign in [Rational::one(), -Rational::one()] {
        let c: Vec<Rational> = coeffs.iter().map(|w| w * &sign).collect();
        match maximize(&kantorovich_lp(dist, &c, top), top)? {
            Some(v) => best = best.max(v),
            None => return Ok(Value::Infinity),
        }
    }
    Ok(Value::from_computed(best, exact))
}

/// `None` stands for an unbounded objective, which is only legitimate when
/// `⊤ = ∞`.
fn maximize(lp: &LinearProgram, top: &Top) -> Result<Option<Rational>, LiftError> {
    match lp::solve(lp) {
        Ok(sol) => Ok(Some(sol.value)),
        Err(LpError::Unbounded) if top.is_infinite() => Ok(None),
        Err(e) => Err(LiftError::Internal(e.to_string())),
    }
}

/// For `max`: `sup_f (max f[A] − max f[B])` splits into one LP per `x ∈ A`,
/// maximizing `f(x) − s` subject to `s ≥ f(y)` for every `y ∈ B`.
fn finpow(
    sub: &FunctorExpr,
    d: &PseudometricTable,
    a: &[FStructure],
    b: &[FStructure],
) -> Result<Value, LiftError> {
    if a.is_empty() && b.is_empty() {
        return Ok(Value::zero());
    }
    let points: Vec<&FStructure> = a.iter().chain(b).collect::<BTreeSet<_>>().into_iter().collect();
    let index = |t: &FStructure| points.binary_search(&t).expect("point collected above");
    let dist = pairwise(sub, d, &points)?;
    let exact = dist.iter().flatten().all(Value::is_exact);
    let n = points.len();
    let mut best = Rational::zero();
    for (src, dst) in [(a, b), (b, a)] {
        for x in src {
            let mut objective = vec![Rational::zero(); n + 1];
            objective[index(x)] = Rational::one();
            objective[n] = -Rational::one();
            let mut lp = nonexpansive_lp(&dist, objective, d.top());
            for y in dst {
                lp.add_sparse(&[(n, Rational::one()), (index(y), -Rational::one())], Relation::Ge, Rational::zero());
            }
            match maximize(&lp, d.top())? {
                Some(v) => best = best.max(v),
                None => return Ok(Value::Infinity),
            }
        }
    }
    Ok(Value::from_computed(best, exact))
}
