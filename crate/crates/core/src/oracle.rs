//! Brute-force references for the lifting engine: coupling enumeration,
//! transportation-polytope vertices and LP vertex enumeration. Exponential by
//! design; everything is guarded by an [`OracleBudget`].

use num_traits::{Signed, Zero};
use thiserror::Error;

use crate::functor::{
    enumerate_couplings_diagsquare, enumerate_couplings_finpow, CouplingError, FStructure,
    FunctorExpr, PseudometricTable, ProductEval, Side,
};
use crate::lifting::{lift_dist, LiftError, LiftMethod};
use crate::lp::{LinearProgram, Relation, Sense};
use crate::numerics::{add_ext, pnorm, Rational, Value};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OracleBudget {
    pub max_coupling_cells: usize,
    pub max_support: usize,
}

impl Default for OracleBudget {
    fn default() -> Self {
        OracleBudget {
            max_coupling_cells: 16,
            max_support: 4,
        }
    }
}

/// Variables accepted by [`kantorovich_vertex_oracle`].
pub const MAX_VERTEX_VARS: usize = 6;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OracleError {
    #[error("instance exceeds the oracle budget: {0}")]
    Budget(String),
    #[error("linear program has no feasible vertex")]
    Infeasible,
    #[error("vertex enumeration needs finite bounds on every variable")]
    UnboundedVariable,
    #[error(transparent)]
    Lift(#[from] LiftError),
}

impl From<CouplingError> for OracleError {
    fn from(e: CouplingError) -> Self {
        OracleError::Budget(e.to_string())
    }
}

/// Wasserstein distance at the root node by exhausting its couplings. The
/// children's distances come from the engine; only the root is brute-forced.
pub fn wasserstein_oracle(
    expr: &FunctorExpr,
    d: &PseudometricTable,
    t1: &FStructure,
    t2: &FStructure,
    budget: &OracleBudget,
) -> Result<Value, OracleError> {
    let top = d.top();
    let sub = |e: &FunctorExpr, a: &FStructure, b: &FStructure| -> Result<Value, OracleError> {
        Ok(lift_dist(e, d, LiftMethod::Wasserstein, a, b)?)
    };
    // shape and parameter errors surface here
    lift_dist(expr, d, LiftMethod::Wasserstein, t1, t2)?;
    match (expr, t1, t2) {
        (FunctorExpr::Id { discount }, FStructure::Atom(i), FStructure::Atom(j)) => {
            Ok(d.get(*i, *j).scale(discount))
        }
        (FunctorExpr::Const(space), FStructure::Atom(i), FStructure::Atom(j)) => {
            Ok(space.table.get(*i, *j).clone())
        }
        (FunctorExpr::FinPow(s), FStructure::Set(a), FStructure::Set(b)) => {
            let ia: Vec<usize> = (0..a.len()).collect();
            let ib: Vec<usize> = (0..b.len()).collect();
            let couplings = enumerate_couplings_finpow(&ia, &ib, budget.max_coupling_cells)?;
            let mut cost = vec![vec![Value::zero(); b.len()]; a.len()];
            for (i, x) in a.iter().enumerate() {
                for (j, y) in b.iter().enumerate() {
                    cost[i][j] = sub(s, x, y)?;
                }
            }
            // ev = max with max ∅ = 0; no coupling at all gives ⊤
            Ok(couplings
                .iter()
                .map(|rel| rel.iter().map(|&(i, j)| cost[i][j].clone()).max().unwrap_or_else(Value::zero))
                .min()
                .unwrap_or_else(|| top.value()))
        }
        (FunctorExpr::DiagSquare(s), FStructure::Pair(a1, a2), FStructure::Pair(b1, b2)) => {
            let couplings = enumerate_couplings_diagsquare(&(a1, a2), &(b1, b2));
            let mut best: Option<Value> = None;
            for ((x1, y1), (x2, y2)) in couplings {
                let v = add_ext(&sub(s, x1, y1)?, &sub(s, x2, y2)?, None);
                best = Some(best.map_or(v.clone(), |b| b.min_of(v)));
            }
            Ok(best.unwrap_or_else(|| top.value()))
        }
        (FunctorExpr::Dist(s), FStructure::Dist(p1), FStructure::Dist(p2)) => {
            if p1.len() > budget.max_support || p2.len() > budget.max_support {
                return Err(OracleError::Budget(format!(
                    "supports of size {} and {} exceed {}",
                    p1.len(),
                    p2.len(),
                    budget.max_support
                )));
            }
            let mut cost = vec![vec![Value::zero(); p2.len()]; p1.len()];
            for (i, (x, _)) in p1.iter().enumerate() {
                for (j, (y, _)) in p2.iter().enumerate() {
                    cost[i][j] = sub(s, x, y)?;
                }
            }
            let supply: Vec<Rational> = p1.iter().map(|(_, w)| w.clone()).collect();
            let demand: Vec<Rational> = p2.iter().map(|(_, w)| w.clone()).collect();
            Ok(transport_vertex_oracle(&supply, &demand, &cost))
        }
        (FunctorExpr::Product { left, right, eval }, FStructure::Pair(a1, a2), FStructure::Pair(b1, b2)) => {
            let x = sub(left, a1, b1)?;
            let y = sub(right, a2, b2)?;
            Ok(match eval {
                ProductEval::Max => x.max_of(y),
                ProductEval::PNorm { p, c1, c2 } => pnorm(*p, c1, c2, &x, &y),
            })
        }
        (FunctorExpr::Coproduct(l, r), FStructure::Tagged(s1, x), FStructure::Tagged(s2, y)) => {
            if s1 != s2 {
                // no coupling exists
                return Ok(top.value());
            }
            sub(if *s1 == Side::Left { l } else { r }, x, y)
        }
        _ => unreachable!("validated by lift_dist above"),
    }
}

/// Minimum of `Σ cost·plan` over the vertices of the transportation polytope.
/// Each vertex is the unique flow on a spanning tree of the bipartite
/// supply/demand graph, so all `(m + n − 1)`-subsets of cells are tried.
pub fn transport_vertex_oracle(supply: &[Rational], demand: &[Rational], cost: &[Vec<Value>]) -> Value {
    let (m, n) = (supply.len(), demand.len());
    let cells: Vec<(usize, usize)> = (0..m).flat_map(|i| (0..n).map(move |j| (i, j))).collect();
    let k = m + n - 1;
    let exact = cost.iter().flatten().all(Value::is_exact);
    let mut best: Option<Value> = None;
    for subset in combinations(cells.len(), k) {
        let tree: Vec<(usize, usize)> = subset.iter().map(|&c| cells[c]).collect();
        let Some(flow) = tree_flow(m, n, &tree, supply, demand) else {
            continue;
        };
        if flow.iter().any(Rational::is_negative) {
            continue;
        }
        let mut total = Rational::zero();
        let mut infinite = false;
        for (&(i, j), x) in tree.iter().zip(&flow) {
            if x.is_zero() {
                continue;
            }
            match cost[i][j].to_rational() {
                Some(c) => total += c * x,
                None => infinite = true,
            }
        }
        let v = if infinite {
            Value::Infinity
        } else {
            Value::from_computed(total, exact)
        };
        best = Some(match best {
            Some(b) => b.min_of(v),
            None => v,
        });
    }
    best.unwrap_or(Value::Infinity)
}

/// The flow on a spanning tree meeting supply and demand, found by peeling
/// leaves. `None` when the cells do not form a spanning tree.
fn tree_flow(
    m: usize,
    n: usize,
    tree: &[(usize, usize)],
    supply: &[Rational],
    demand: &[Rational],
) -> Option<Vec<Rational>> {
    // nodes 0..m are rows, m..m+n columns
    let mut degree = vec![0usize; m + n];
    for &(i, j) in tree {
        degree[i] += 1;
        degree[m + j] += 1;
    }
    let mut residual: Vec<Rational> = supply.iter().chain(demand).cloned().collect();
    let mut flow: Vec<Option<Rational>> = vec![None; tree.len()];
    let mut assigned = 0;
    while assigned < tree.len() {
        let leaf_edge = (0..tree.len()).find_map(|e| {
            if flow[e].is_some() {
                return None;
            }
            let (i, j) = tree[e];
            if degree[i] == 1 {
                Some((e, i, m + j))
            } else if degree[m + j] == 1 {
                Some((e, m + j, i))
            } else {
                None
            }
        });
        // a cycle, or a component without leaves
        let (e, leaf, other) = leaf_edge?;
        let x = residual[leaf].clone();
        residual[leaf] = Rational::zero();
        residual[other] -= &x;
        degree[leaf] -= 1;
        degree[other] -= 1;
        flow[e] = Some(x);
        assigned += 1;
    }
    if residual.iter().any(|r| !r.is_zero()) {
        return None;
    }
    Some(flow.into_iter().map(|f| f.expect("assigned")).collect())
}

/// Hyperplanes the vertex oracle can track.
const MAX_HYPERPLANES: usize = 128;

/// A vertex with the set of inequalities tight at it.
struct Vertex {
    x: Vec<Rational>,
    tight: u128,
}

fn dot(a: &[Rational], x: &[Rational]) -> Rational {
    a.iter().zip(x).fold(Rational::zero(), |acc, (u, v)| acc + u * v)
}

/// Optimum of `lp` over all vertices of its feasible region, found by the
/// double description method: start from the vertices of the bounding box
/// and cut by one inequality at a time, creating a vertex on every edge
/// that crosses the cutting hyperplane.
pub fn kantorovich_vertex_oracle(lp: &LinearProgram) -> Result<Rational, OracleError> {
    let n = lp.num_vars();
    if n > MAX_VERTEX_VARS {
        return Err(OracleError::Budget(format!(
            "{n} variables exceed the limit of {MAX_VERTEX_VARS}"
        )));
    }
    if lp.bounds.iter().any(|b| b.hi.is_none()) {
        return Err(OracleError::UnboundedVariable);
    }
    // inequalities a·x ≤ b; bounds first, two per variable
    let mut rows: Vec<(Vec<Rational>, Rational)> = Vec::new();
    for (j, b) in lp.bounds.iter().enumerate() {
        let unit = |s: i64| (0..n).map(|k| Rational::from_integer(if k == j { s.into() } else { 0.into() })).collect();
        rows.push((unit(-1), -b.lo.clone()));
        rows.push((unit(1), b.hi.clone().expect("checked above")));
    }
    for c in &lp.constraints {
        let neg = || c.coeffs.iter().map(|a| -a).collect::<Vec<_>>();
        match c.relation {
            Relation::Le => rows.push((c.coeffs.clone(), c.rhs.clone())),
            Relation::Ge => rows.push((neg(), -c.rhs.clone())),
            Relation::Eq => {
                rows.push((c.coeffs.clone(), c.rhs.clone()));
                rows.push((neg(), -c.rhs.clone()));
            }
        }
    }
    if rows.len() > MAX_HYPERPLANES {
        return Err(OracleError::Budget(format!(
            "{} inequalities exceed the limit of {MAX_HYPERPLANES}",
            rows.len()
        )));
    }
    let mut vertices = box_vertices(lp, &rows);
    for (k, (a, b)) in rows.iter().enumerate().skip(2 * n) {
        vertices = cut(vertices, a, b, k);
        if vertices.is_empty() {
            break;
        }
    }
    let values = vertices.iter().map(|v| lp.objective_at(&v.x));
    match lp.sense {
        Sense::Maximize => values.max(),
        Sense::Minimize => values.min(),
    }
    .ok_or(OracleError::Infeasible)
}

fn tight_set(x: &[Rational], rows: &[(Vec<Rational>, Rational)], upto: usize) -> u128 {
    (0..upto)
        .filter(|&k| dot(&rows[k].0, x) == rows[k].1)
        .fold(0, |acc, k| acc | 1 << k)
}

fn box_vertices(lp: &LinearProgram, rows: &[(Vec<Rational>, Rational)]) -> Vec<Vertex> {
    let mut points: Vec<Vec<Rational>> = vec![Vec::new()];
    for b in &lp.bounds {
        let hi = b.hi.clone().expect("checked by the caller");
        if hi < b.lo {
            return Vec::new();
        }
        let choices = if hi == b.lo { vec![hi] } else { vec![b.lo.clone(), hi] };
        points = points
            .into_iter()
            .flat_map(|p| {
                choices.iter().map(move |c| {
                    let mut q = p.clone();
                    q.push(c.clone());
                    q
                })
            })
            .collect();
    }
    let upto = 2 * lp.bounds.len();
    points
        .into_iter()
        .map(|x| Vertex {
            tight: tight_set(&x, rows, upto),
            x,
        })
        .collect()
}

/// Intersect the polytope spanned by `vertices` with `a·x ≤ b`, the
/// inequality with index `k`.
fn cut(vertices: Vec<Vertex>, a: &[Rational], b: &Rational, k: usize) -> Vec<Vertex> {
    let slack: Vec<Rational> = vertices.iter().map(|v| b - dot(a, &v.x)).collect();
    let (mut inside, mut outside) = (Vec::new(), Vec::new());
    for (i, s) in slack.iter().enumerate() {
        if s.is_negative() {
            outside.push(i);
        } else {
            inside.push(i);
        }
    }
    if outside.is_empty() {
        let mut vertices = vertices;
        for (v, s) in vertices.iter_mut().zip(&slack) {
            if s.is_zero() {
                v.tight |= 1 << k;
            }
        }
        return vertices;
    }
    let mut out = Vec::new();
    for &i in inside.iter().filter(|&&i| slack[i].is_positive()) {
        for &j in &outside {
            if !adjacent(&vertices, i, j) {
                continue;
            }
            let (u, v) = (&vertices[i].x, &vertices[j].x);
            // slack is affine along the edge: zero at t = s_u / (s_u − s_v)
            let t = &slack[i] / (&slack[i] - &slack[j]);
            let x = u.iter().zip(v).map(|(p, q)| p + &t * (q - p)).collect();
            out.push(Vertex {
                x,
                tight: (vertices[i].tight & vertices[j].tight) | 1 << k,
            });
        }
    }
    for (i, v) in vertices.into_iter().enumerate() {
        if slack[i].is_zero() {
            out.push(Vertex {
                tight: v.tight | 1 << k,
                ..v
            });
        } else if slack[i].is_positive() {
            out.push(v);
        }
    }
    out
}

/// Two vertices span an edge iff no third vertex is tight on every
/// inequality the two share.
fn adjacent(vertices: &[Vertex], i: usize, j: usize) -> bool {
    let common = vertices[i].tight & vertices[j].tight;
    vertices
        .iter()
        .enumerate()
        .all(|(w, v)| w == i || w == j || v.tight & common != common)
}

/// All `k`-subsets of `0..n` in lexicographic order.
fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    if k > n {
        return out;
    }
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        out.push(idx.clone());
        let Some(i) = (0..k).rev().find(|&i| idx[i] != i + n - k) else {
            return out;
        };
        idx[i] += 1;
        for j in (i + 1)..k {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lifting::{kantorovich_lp, solve_linear_kantorovich};
    use crate::lp::{solve, solve_transportation, TransportationInstance};
    use crate::numerics::{int, ratio, Top};

    fn names(n: usize) -> Vec<String> {
        (0..n).map(|i| format!("a{i}")).collect()
    }

    #[test]
    fn single_coupling_and_empty_side() {
        let d = PseudometricTable::from_fn(names(2), Top::Infinite, |i, j| {
            if i == j { Value::zero() } else { Value::ratio(1, 3) }
        })
        .unwrap();
        let e = FunctorExpr::finpow(FunctorExpr::id());
        let b = OracleBudget::default();
        let a0 = FStructure::set([FStructure::atom(0)]);
        let a1 = FStructure::set([FStructure::atom(1)]);
        assert_eq!(wasserstein_oracle(&e, &d, &a0, &a1, &b).unwrap(), Value::ratio(1, 3));
        assert_eq!(wasserstein_oracle(&e, &d, &FStructure::set([]), &a1, &b).unwrap(), Value::Infinity);
    }

    #[test]
    fn distribution_oracle_matches_transportation() {
        let d = PseudometricTable::from_fn(names(2), Top::one(), |i, j| {
            if i == j { Value::zero() } else { Value::ratio(1, 3) }
        })
        .unwrap();
        let e = FunctorExpr::dist(FunctorExpr::id());
        let p1 = FStructure::dist([(FStructure::atom(0), ratio(1, 2)), (FStructure::atom(1), ratio(1, 2))]);
        let p2 = FStructure::point_mass(FStructure::atom(0));
        let o = wasserstein_oracle(&e, &d, &p1, &p2, &OracleBudget::default()).unwrap();
        assert_eq!(o, Value::ratio(1, 6));
        assert_eq!(o, lift_dist(&e, &d, LiftMethod::Wasserstein, &p1, &p2).unwrap());
    }

    #[test]
    fn transport_vertices_on_a_three_by_three() {
        let c = |rows: [[i64; 3]; 3]| -> Vec<Vec<Value>> {
            rows.iter().map(|r| r.iter().map(|&x| Value::exact(int(x))).collect()).collect()
        };
        let supply = vec![ratio(1, 2), ratio(1, 4), ratio(1, 4)];
        let demand = vec![ratio(1, 3), ratio(1, 3), ratio(1, 3)];
        let cost = c([[4, 1, 3], [2, 0, 5], [3, 2, 1]]);
        let inst = TransportationInstance {
            supply: supply.clone(),
            demand: demand.clone(),
            cost: cost.clone(),
        };
        assert_eq!(transport_vertex_oracle(&supply, &demand, &cost), solve_transportation(&inst).unwrap().value);
    }

    #[test]
    fn vertex_oracle_on_a_box() {
        let mut lp = LinearProgram::new(Sense::Maximize, vec![int(1)]);
        lp.set_bounds(0, int(0), Some(int(1)));
        assert_eq!(kantorovich_vertex_oracle(&lp).unwrap(), int(1));
        let free = LinearProgram::new(Sense::Maximize, vec![int(1)]);
        assert_eq!(kantorovich_vertex_oracle(&free), Err(OracleError::UnboundedVariable));
    }

    #[test]
    fn vertex_oracle_on_the_counterexample() {
        // f(x1) + f(x2) − f(x2) − f(x1) vanishes for every f
        let dist = vec![vec![Value::zero(), Value::exact(int(1))], vec![Value::exact(int(1)), Value::zero()]];
        let lp = kantorovich_lp(&dist, &[int(0), int(0)], &Top::finite(int(4)).unwrap());
        assert_eq!(kantorovich_vertex_oracle(&lp).unwrap(), int(0));
        assert_eq!(solve(&lp).unwrap().value, int(0));
    }

    #[test]
    fn vertex_oracle_matches_simplex_on_three_atoms() {
        let v = |a, b| Value::ratio(a, b);
        let dist = vec![
            vec![v(0, 1), v(1, 3), v(1, 2)],
            vec![v(1, 3), v(0, 1), v(1, 4)],
            vec![v(1, 2), v(1, 4), v(0, 1)],
        ];
        let coeffs = vec![ratio(1, 2), ratio(-1, 3), ratio(-1, 6)];
        let lp = kantorovich_lp(&dist, &coeffs, &Top::one());
        assert_eq!(kantorovich_vertex_oracle(&lp).unwrap(), solve(&lp).unwrap().value);
        let both = solve_linear_kantorovich(&dist, &coeffs, &Top::one()).unwrap();
        assert!(both >= Value::exact(solve(&lp).unwrap().value));
    }

    #[test]
    fn combinations_count() {
        assert_eq!(combinations(5, 2).len(), 10);
        assert_eq!(combinations(3, 0), vec![Vec::<usize>::new()]);
        assert!(combinations(2, 3).is_empty());
    }
}
