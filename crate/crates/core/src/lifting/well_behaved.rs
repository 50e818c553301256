use std::fmt;

use num_traits::One;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::functor::Side;
use crate::numerics::{add_ext, dist_e, pnorm, ratio, Rational, Top, Value};

/// Slack for comparisons that involve irrational p-norm results.
const TOL: f64 = 1e-9;

/// Witnesses kept per condition.
const MAX_WITNESSES: usize = 8;

/// Evaluation functions of single grammar nodes, plus `min` on finite sets
/// as a known negative case.
#[derive(Debug, Clone, PartialEq)]
pub enum NodeEval {
    Id(Rational),
    Dist,
    FinPowMax,
    /// `min` with `min ∅ = ⊤`.
    FinPowMin,
    ProductMax,
    ProductPNorm { p: u32, c1: Rational, c2: Rational },
    Coproduct,
    DiagSquare,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum ShapeKind {
    Single,
    Dist,
    Set,
    Pair,
    Tagged,
}

impl NodeEval {
    fn kind(&self) -> ShapeKind {
        match self {
            NodeEval::Id(_) => ShapeKind::Single,
            NodeEval::Dist => ShapeKind::Dist,
            NodeEval::FinPowMax | NodeEval::FinPowMin => ShapeKind::Set,
            NodeEval::ProductMax | NodeEval::ProductPNorm { .. } | NodeEval::DiagSquare => {
                ShapeKind::Pair
            }
            NodeEval::Coproduct => ShapeKind::Tagged,
        }
    }

    /// `ev_F` on a one-level structure of values; `None` on a shape mismatch.
    pub fn eval(&self, t: &OneLevel<Value>, top: &Top) -> Option<Value> {
        match (self, t) {
            (NodeEval::Id(c), OneLevel::Single(v)) => Some(v.scale(c)),
            (NodeEval::Dist, OneLevel::Dist(es)) => Some(
                es.iter()
                    .fold(Value::zero(), |acc, (v, w)| add_ext(&acc, &v.scale(w), None)),
            ),
            (NodeEval::FinPowMax, OneLevel::Set(xs)) => {
                Some(xs.iter().cloned().max().unwrap_or_else(Value::zero))
            }
            (NodeEval::FinPowMin, OneLevel::Set(xs)) => {
                Some(xs.iter().cloned().min().unwrap_or_else(|| top.value()))
            }
            (NodeEval::ProductMax, OneLevel::Pair(a, b)) => Some(a.clone().max_of(b.clone())),
            (NodeEval::ProductPNorm { p, c1, c2 }, OneLevel::Pair(a, b)) => Some(pnorm(*p, c1, c2, a, b)),
            (NodeEval::DiagSquare, OneLevel::Pair(a, b)) => Some(add_ext(a, b, None)),
            (NodeEval::Coproduct, OneLevel::Tagged(_, v)) => Some(v.clone()),
            _ => None,
        }
    }
}

impl fmt::Display for NodeEval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NodeEval::Id(c) => write!(f, "id(c={})", crate::numerics::format_rational(c)),
            NodeEval::Dist => f.write_str("dist/expectation"),
            NodeEval::FinPowMax => f.write_str("finpow/max"),
            NodeEval::FinPowMin => f.write_str("finpow/min"),
            NodeEval::ProductMax => f.write_str("product/max"),
            NodeEval::ProductPNorm { p, .. } => write!(f, "product/p-norm(p={p})"),
            NodeEval::Coproduct => f.write_str("coproduct"),
            NodeEval::DiagSquare => f.write_str("diag-square/sum"),
        }
    }
}

/// An F-structure one level deep, with leaves of type `T`.
#[derive(Debug, Clone, PartialEq)]
pub enum OneLevel<T> {
    Single(T),
    Dist(Vec<(T, Rational)>),
    Set(Vec<T>),
    Pair(T, T),
    Tagged(Side, T),
}

impl<T> OneLevel<T> {
    pub fn map<U>(&self, mut f: impl FnMut(&T) -> U) -> OneLevel<U> {
        match self {
            OneLevel::Single(x) => OneLevel::Single(f(x)),
            OneLevel::Dist(es) => OneLevel::Dist(es.iter().map(|(x, w)| (f(x), w.clone())).collect()),
            OneLevel::Set(xs) => OneLevel::Set(xs.iter().map(&mut f).collect()),
            OneLevel::Pair(a, b) => OneLevel::Pair(f(a), f(b)),
            OneLevel::Tagged(s, x) => OneLevel::Tagged(*s, f(x)),
        }
    }

    pub fn leaves(&self) -> Vec<&T> {
        match self {
            OneLevel::Single(x) | OneLevel::Tagged(_, x) => vec![x],
            OneLevel::Dist(es) => es.iter().map(|(x, _)| x).collect(),
            OneLevel::Set(xs) => xs.iter().collect(),
            OneLevel::Pair(a, b) => vec![a, b],
        }
    }

    /// Compact rendering such as `{(0,1),(1,1)}`.
    pub fn render(&self, leaf: impl Fn(&T) -> String) -> String {
        match self {
            OneLevel::Single(x) => leaf(x),
            OneLevel::Dist(es) => {
                let parts: Vec<String> = es
                    .iter()
                    .map(|(x, w)| format!("{}:{}", leaf(x), crate::numerics::format_rational(w)))
                    .collect();
                format!("{{{}}}", parts.join(","))
            }
            OneLevel::Set(xs) => {
                let parts: Vec<String> = xs.iter().map(leaf).collect();
                format!("{{{}}}", parts.join(","))
            }
            OneLevel::Pair(a, b) => format!("({},{})", leaf(a), leaf(b)),
            OneLevel::Tagged(s, x) => format!("{s}({})", leaf(x)),
        }
    }
}

fn render_value(t: &OneLevel<Value>) -> String {
    t.render(Value::to_string)
}

fn render_pairs(t: &OneLevel<(Value, Value)>) -> String {
    t.render(|(a, b)| format!("({a},{b})"))
}

/// Sampling parameters for [`check_well_behaved`].
#[derive(Debug, Clone, PartialEq)]
pub struct SamplingPlan {
    pub top: Top,
    pub seed: u64,
    /// Random structures per condition, on top of the exhaustive grid.
    pub random_samples: usize,
    /// Largest set or support drawn from the grid exhaustively.
    pub max_grid_size: usize,
}

impl SamplingPlan {
    pub fn new(top: Top, seed: u64) -> Self {
        SamplingPlan {
            top,
            seed,
            random_samples: 500,
            max_grid_size: 3,
        }
    }

    /// `{0, ⊤/4, ⊤/2, 3⊤/4, ⊤}`; for `⊤ = ∞` the quarters of `1` and `∞`.
    pub fn grid(&self) -> Vec<Value> {
        let quarters = |scale: Rational| (0..=4).map(move |k| Value::exact(ratio(k, 4) * &scale));
        match self.top.as_bound() {
            Some(q) => quarters(q).collect(),
            None => quarters(Rational::one()).chain([Value::Infinity]).collect(),
        }
    }

    fn random_value(&self, rng: &mut ChaCha8Rng) -> Value {
        let den = [3i64, 5, 7, 8, 12][rng.gen_range(0..5)];
        match self.top.as_bound() {
            Some(q) => Value::exact(ratio(rng.gen_range(0..=den), den) * q),
            None if rng.gen_bool(0.125) => Value::Infinity,
            None => Value::exact(ratio(rng.gen_range(0..=4 * den), den)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Witness {
    /// 1, 2 or 3.
    pub condition: u8,
    /// The failing input, e.g. `{(0,1),(1,1)}`.
    pub input: String,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WellBehavedReport {
    pub node: NodeEval,
    pub top: Top,
    pub seed: u64,
    pub condition1_ok: bool,
    pub condition2_ok: bool,
    pub condition3_ok: bool,
    /// Failing inputs, explicit candidates first, at most a few per condition.
    pub witnesses: Vec<Witness>,
    /// Inputs checked per condition.
    pub samples: [usize; 3],
}

impl WellBehavedReport {
    pub fn all_ok(&self) -> bool {
        self.condition1_ok && self.condition2_ok && self.condition3_ok
    }

    pub fn witnesses_for(&self, condition: u8) -> impl Iterator<Item = &Witness> {
        self.witnesses.iter().filter(move |w| w.condition == condition)
    }
}

/// Sample the three well-behavedness conditions for one evaluation function:
/// monotonicity of `F̃`, `d_e(ev(Fπ1 t), ev(Fπ2 t)) ≤ ev(F d_e (t))` on
/// couplings `t`, and `ev(t) = 0` exactly when every leaf is `0`.
pub fn check_well_behaved(node: &NodeEval, plan: &SamplingPlan) -> WellBehavedReport {
    let top = &plan.top;
    let mut rng = ChaCha8Rng::seed_from_u64(plan.seed);
    let grid = plan.grid();
    let kind = node.kind();
    let ev = |t: &OneLevel<Value>| node.eval(t, top).expect("shape generated for this node");
    let mut witnesses = Vec::new();
    let mut samples = [0usize; 3];
    let push = |witnesses: &mut Vec<Witness>, condition: u8, input: String, detail: String| {
        if witnesses.iter().filter(|w: &&Witness| w.condition == condition).count() < MAX_WITNESSES {
            witnesses.push(Witness {
                condition,
                input,
                detail,
            });
        }
    };

    // Condition 1: raising leaves never lowers the evaluation.
    let mut ok1 = true;
    let mut singles = grid_shapes(kind, &grid, plan.max_grid_size);
    for _ in 0..plan.random_samples {
        singles.push(random_shape(kind, &mut rng, |r| plan.random_value(r)));
    }
    for t in &singles {
        let raised = t.map(|v| {
            let above: Vec<&Value> = grid.iter().filter(|g| *g >= v).collect();
            if above.is_empty() {
                v.clone()
            } else {
                above[rng.gen_range(0..above.len())].clone()
            }
        });
        samples[0] += 1;
        let (lo, hi) = (ev(t), ev(&raised));
        if !lo.le_tol(&hi, TOL) {
            ok1 = false;
            push(
                &mut witnesses,
                1,
                format!("{} ≤ {}", render_value(t), render_value(&raised)),
                format!("ev drops from {lo} to {hi}"),
            );
        }
    }

    // Condition 2 on couplings over [0,⊤]².
    let mut ok2 = true;
    let cells: Vec<(Value, Value)> = grid
        .iter()
        .flat_map(|a| grid.iter().map(move |b| (a.clone(), b.clone())))
        .collect();
    let mut couplings = explicit_couplings(kind, top);
    couplings.extend(grid_shapes(kind, &cells, plan.max_grid_size.min(2)));
    for _ in 0..plan.random_samples {
        couplings.push(random_shape(kind, &mut rng, |r| {
            (plan.random_value(r), plan.random_value(r))
        }));
    }
    for t in &couplings {
        samples[1] += 1;
        let lhs = dist_e(&ev(&t.map(|c| c.0.clone())), &ev(&t.map(|c| c.1.clone())));
        let rhs = ev(&t.map(|c| dist_e(&c.0, &c.1)));
        if !lhs.le_tol(&rhs, TOL) {
            ok2 = false;
            push(
                &mut witnesses,
                2,
                render_pairs(t),
                format!("d_e of the projections is {lhs}, the evaluated distance is {rhs}"),
            );
        }
    }

    // Condition 3: the kernel of ev is exactly the structures over {0}.
    let mut ok3 = true;
    let mut kernel_inputs = explicit_kernel_inputs(kind, top);
    kernel_inputs.extend(singles.iter().cloned());
    for t in &kernel_inputs {
        samples[2] += 1;
        let in_kernel = ev(t).is_zero();
        let over_zero = t.leaves().iter().all(|v| v.is_zero());
        if in_kernel != over_zero {
            ok3 = false;
            let detail = if in_kernel {
                "evaluates to 0 but has a nonzero leaf"
            } else {
                "all leaves are 0 but the evaluation is not"
            };
            push(&mut witnesses, 3, render_value(t), detail.to_string());
        }
    }

    WellBehavedReport {
        node: node.clone(),
        top: top.clone(),
        seed: plan.seed,
        condition1_ok: ok1,
        condition2_ok: ok2,
        condition3_ok: ok3,
        witnesses,
        samples,
    }
}

fn fits(top: &Top, v: i64) -> bool {
    top.contains(&Value::exact(ratio(v, 1)))
}

/// The known failing coupling for `min` on sets, `{(0,1),(1,1)}`.
fn explicit_couplings(kind: ShapeKind, top: &Top) -> Vec<OneLevel<(Value, Value)>> {
    if kind != ShapeKind::Set || !fits(top, 1) {
        return Vec::new();
    }
    let v = |n| Value::exact(ratio(n, 1));
    vec![OneLevel::Set(vec![(v(0), v(1)), (v(1), v(1))])]
}

/// The known kernel witness for `min` on sets, `{0,1}`.
fn explicit_kernel_inputs(kind: ShapeKind, top: &Top) -> Vec<OneLevel<Value>> {
    if kind != ShapeKind::Set || !fits(top, 1) {
        return Vec::new();
    }
    vec![OneLevel::Set(vec![Value::zero(), Value::exact(Rational::one())])]
}

/// Every shape built from the grid, with sets and supports of at most
/// `max_size` distinct grid points.
fn grid_shapes<T: Clone>(kind: ShapeKind, grid: &[T], max_size: usize) -> Vec<OneLevel<T>> {
    let n = grid.len();
    match kind {
        ShapeKind::Single => grid.iter().cloned().map(OneLevel::Single).collect(),
        ShapeKind::Tagged => [Side::Left, Side::Right]
            .into_iter()
            .flat_map(|s| grid.iter().cloned().map(move |x| OneLevel::Tagged(s, x)))
            .collect(),
        ShapeKind::Pair => grid
            .iter()
            .flat_map(|a| grid.iter().map(move |b| OneLevel::Pair(a.clone(), b.clone())))
            .collect(),
        ShapeKind::Set => subsets(n, max_size)
            .into_iter()
            .map(|idx| OneLevel::Set(idx.into_iter().map(|i| grid[i].clone()).collect()))
            .collect(),
        ShapeKind::Dist => {
            let mut out = Vec::new();
            for idx in subsets(n, max_size.min(2)) {
                match idx.as_slice() {
                    [] => {}
                    [i] => out.push(OneLevel::Dist(vec![(grid[*i].clone(), Rational::one())])),
                    [i, j] => {
                        for w in [ratio(1, 2), ratio(1, 4), ratio(3, 4)] {
                            out.push(OneLevel::Dist(vec![
                                (grid[*i].clone(), w.clone()),
                                (grid[*j].clone(), Rational::one() - w),
                            ]));
                        }
                    }
                    _ => unreachable!("supports capped at two"),
                }
            }
            out
        }
    }
}

/// Index subsets of `0..n` with at most `k` elements, in lexicographic order.
fn subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = vec![Vec::new()];
    let mut frontier = vec![Vec::new()];
    for _ in 0..k {
        let mut next = Vec::new();
        for s in &frontier {
            let start = s.last().map_or(0, |&l: &usize| l + 1);
            for i in start..n {
                let mut t = s.clone();
                t.push(i);
                next.push(t);
            }
        }
        out.extend(next.iter().cloned());
        frontier = next;
    }
    out
}

fn random_shape<T>(kind: ShapeKind, rng: &mut ChaCha8Rng, mut draw: impl FnMut(&mut ChaCha8Rng) -> T) -> OneLevel<T> {
    match kind {
        ShapeKind::Single => OneLevel::Single(draw(rng)),
        ShapeKind::Tagged => {
            let side = if rng.gen_bool(0.5) { Side::Left } else { Side::Right };
            OneLevel::Tagged(side, draw(rng))
        }
        ShapeKind::Pair => OneLevel::Pair(draw(rng), draw(rng)),
        ShapeKind::Set => {
            let n = rng.gen_range(0..=4);
            OneLevel::Set((0..n).map(|_| draw(rng)).collect())
        }
        ShapeKind::Dist => {
            let n = rng.gen_range(1..=4);
            let raw: Vec<i64> = (0..n).map(|_| rng.gen_range(1..=6)).collect();
            let total: i64 = raw.iter().sum();
            OneLevel::Dist(raw.into_iter().map(|w| (draw(rng), ratio(w, total))).collect())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_points() {
        let g = SamplingPlan::new(Top::one(), 0).grid();
        assert_eq!(g, vec![Value::zero(), Value::ratio(1, 4), Value::ratio(1, 2), Value::ratio(3, 4), Value::ratio(1, 1)]);
        let g = SamplingPlan::new(Top::Infinite, 0).grid();
        assert_eq!(g.last(), Some(&Value::Infinity));
        assert_eq!(g.len(), 6);
    }

    #[test]
    fn subsets_enumerate_small_sets() {
        assert_eq!(subsets(3, 2).len(), 1 + 3 + 3);
        assert_eq!(subsets(4, 4).len(), 16);
    }

    #[test]
    fn max_is_well_behaved() {
        for top in [Top::Infinite, Top::one()] {
            let r = check_well_behaved(&NodeEval::FinPowMax, &SamplingPlan::new(top, 11));
            assert!(r.all_ok(), "{:?}", r.witnesses);
            assert!(r.witnesses.is_empty());
        }
    }

    #[test]
    fn min_fails_conditions_two_and_three() {
        let r = check_well_behaved(&NodeEval::FinPowMin, &SamplingPlan::new(Top::Infinite, 11));
        assert!(r.condition1_ok);
        assert!(!r.condition2_ok);
        assert!(!r.condition3_ok);
        assert_eq!(r.witnesses_for(2).next().unwrap().input, "{(0,1),(1,1)}");
        assert_eq!(r.witnesses_for(3).next().unwrap().input, "{0,1}");
    }

    #[test]
    fn grammar_nodes_are_well_behaved() {
        let nodes = [
            (NodeEval::Id(ratio(9, 10)), Top::one()),
            (NodeEval::Dist, Top::one()),
            (NodeEval::ProductMax, Top::Infinite),
            (NodeEval::ProductPNorm { p: 2, c1: ratio(1, 2), c2: ratio(1, 3) }, Top::one()),
            (NodeEval::ProductPNorm { p: 1, c1: ratio(1, 1), c2: ratio(1, 1) }, Top::Infinite),
            (NodeEval::Coproduct, Top::one()),
            (NodeEval::DiagSquare, Top::Infinite),
        ];
        for (node, top) in nodes {
            let r = check_well_behaved(&node, &SamplingPlan::new(top, 3));
            assert!(r.all_ok(), "{node}: {:?}", r.witnesses);
        }
    }

    #[test]
    fn reports_are_deterministic() {
        let plan = SamplingPlan::new(Top::Infinite, 42);
        assert_eq!(
            check_well_behaved(&NodeEval::FinPowMin, &plan),
            check_well_behaved(&NodeEval::FinPowMin, &plan)
        );
    }
}
