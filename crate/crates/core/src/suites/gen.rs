//! Seeded random instances: pseudometric tables, expressions, structures
//! and systems.

use std::fmt;

use num_traits::{One, Zero};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::coalgebra::{MetricTS, ProbTS, System};
use crate::functor::{ConstSpace, FStructure, FunctorExpr, ProductEval, PseudometricTable};
use crate::numerics::{format_rational, int, ratio, NumericMode, Rational, Top, Value};

/// An independent generator for case `case` of the stream `salt`.
pub fn case_rng(seed: u64, salt: u64, case: u64) -> ChaCha8Rng {
    let mut x = seed ^ salt.rotate_left(21) ^ case.rotate_left(42);
    // splitmix64 finalizer
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    ChaCha8Rng::seed_from_u64(x ^ (x >> 31) ^ case)
}

pub fn random_top(rng: &mut ChaCha8Rng) -> Top {
    match rng.gen_range(0..3) {
        0 => Top::one(),
        1 => Top::finite(int(2)).expect("positive"),
        _ => Top::Infinite,
    }
}

/// Shortest-path closure of random edge weights, cut at `⊤`. Some edges
/// weigh 0 (so the table is only a pseudometric) and, under `⊤ = ∞`, some are
/// missing.
pub fn random_table(rng: &mut ChaCha8Rng, n: usize, top: &Top, prefix: &str) -> PseudometricTable {
    let den = [2i64, 3, 4, 5, 8][rng.gen_range(0..5)];
    let span = top.as_bound().unwrap_or_else(|| int(3));
    let mut d: Vec<Vec<Option<Rational>>> = vec![vec![None; n]; n];
    for (i, row) in d.iter_mut().enumerate() {
        row[i] = Some(Rational::zero());
    }
    for i in 0..n {
        for j in (i + 1)..n {
            let w = if rng.gen_bool(0.1) {
                Some(Rational::zero())
            } else if top.is_infinite() && rng.gen_bool(0.15) {
                None
            } else {
                Some(ratio(rng.gen_range(1..=den), den) * &span)
            };
            d[i][j] = w.clone();
            d[j][i] = w;
        }
    }
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                if let (Some(a), Some(b)) = (&d[i][k], &d[k][j]) {
                    let via = a + b;
                    if d[i][j].as_ref().is_none_or(|c| via < *c) {
                        d[i][j] = Some(via);
                    }
                }
            }
        }
    }
    let atoms = (0..n).map(|i| format!("{prefix}{i}")).collect();
    PseudometricTable::from_fn(atoms, top.clone(), |i, j| match (&d[i][j], top.as_bound()) {
        (Some(q), Some(t)) => Value::exact(q.clone().min(t)),
        (Some(q), None) => Value::exact(q.clone()),
        (None, _) => top.value(),
    })
    .expect("shortest paths cut at top form a pseudometric")
}

/// Grammar nodes exercised by the suites, each over simple children.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NodeKind {
    Id,
    Const,
    Dist,
    FinPow,
    ProductMax,
    ProductPNorm1,
    ProductPNorm2,
    Coproduct,
    DiagSquare,
    /// Random expressions of depth two, without `DiagSquare`.
    Nested,
}

impl NodeKind {
    pub const ALL: [NodeKind; 10] = [
        NodeKind::Id,
        NodeKind::Const,
        NodeKind::Dist,
        NodeKind::FinPow,
        NodeKind::ProductMax,
        NodeKind::ProductPNorm1,
        NodeKind::ProductPNorm2,
        NodeKind::Coproduct,
        NodeKind::DiagSquare,
        NodeKind::Nested,
    ];

    /// Nodes whose two liftings agree exactly.
    pub const DUALITY: [NodeKind; 8] = [
        NodeKind::Id,
        NodeKind::Const,
        NodeKind::Dist,
        NodeKind::FinPow,
        NodeKind::ProductMax,
        NodeKind::ProductPNorm1,
        NodeKind::Coproduct,
        NodeKind::Nested,
    ];

    fn salt(self) -> u64 {
        NodeKind::ALL.iter().position(|k| *k == self).expect("listed") as u64 + 1
    }
}

impl fmt::Display for NodeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            NodeKind::Id => "id",
            NodeKind::Const => "const",
            NodeKind::Dist => "dist",
            NodeKind::FinPow => "finpow",
            NodeKind::ProductMax => "product/max",
            NodeKind::ProductPNorm1 => "product/p=1",
            NodeKind::ProductPNorm2 => "product/p=2",
            NodeKind::Coproduct => "coproduct",
            NodeKind::DiagSquare => "diag-square",
            NodeKind::Nested => "nested",
        })
    }
}

fn leaf(rng: &mut ChaCha8Rng) -> FunctorExpr {
    let c = [ratio(1, 1), ratio(1, 2), ratio(3, 4), ratio(9, 10)];
    FunctorExpr::discounted(c[rng.gen_range(0..c.len())].clone())
}

fn constant(rng: &mut ChaCha8Rng, top: &Top) -> FunctorExpr {
    let n = rng.gen_range(1..=3);
    FunctorExpr::constant(ConstSpace::new("k", random_table(rng, n, top, "k")))
}

fn pnorm_weights(rng: &mut ChaCha8Rng, top: &Top) -> (Rational, Rational) {
    let mut options = vec![(ratio(1, 2), ratio(1, 2)), (ratio(1, 3), ratio(2, 3)), (ratio(1, 4), ratio(1, 2))];
    if top.is_infinite() {
        options.push((ratio(1, 1), ratio(1, 1)));
    }
    options.swap_remove(rng.gen_range(0..options.len()))
}

/// One node of kind `kind` over identity or constant children, together with
/// a bound it is valid under.
pub fn node_expr(rng: &mut ChaCha8Rng, kind: NodeKind) -> (FunctorExpr, Top) {
    let top = if kind == NodeKind::DiagSquare {
        Top::Infinite
    } else {
        random_top(rng)
    };
    let child = |rng: &mut ChaCha8Rng| {
        if rng.gen_bool(0.75) {
            leaf(rng)
        } else {
            constant(rng, &top)
        }
    };
    let expr = match kind {
        NodeKind::Id => leaf(rng),
        NodeKind::Const => constant(rng, &top),
        NodeKind::Dist => {
            if rng.gen_bool(0.5) {
                FunctorExpr::dist(leaf(rng))
            } else {
                let c = leaf(rng);
                FunctorExpr::dist(FunctorExpr::coproduct(c, FunctorExpr::constant(ConstSpace::unit(top.clone()))))
            }
        }
        NodeKind::FinPow => FunctorExpr::finpow(leaf(rng)),
        NodeKind::ProductMax => FunctorExpr::product(leaf(rng), child(rng), ProductEval::Max),
        NodeKind::ProductPNorm1 | NodeKind::ProductPNorm2 => {
            let (c1, c2) = pnorm_weights(rng, &top);
            let p = if kind == NodeKind::ProductPNorm1 { 1 } else { 2 };
            FunctorExpr::product(leaf(rng), child(rng), ProductEval::PNorm { p, c1, c2 })
        }
        NodeKind::Coproduct => FunctorExpr::coproduct(leaf(rng), child(rng)),
        NodeKind::DiagSquare => FunctorExpr::diag_square(leaf(rng)),
        NodeKind::Nested => random_expr(rng, 2, &top, false),
    };
    (expr, top)
}

/// A random expression of depth at most `depth` using the carrier.
pub fn random_expr(rng: &mut ChaCha8Rng, depth: usize, top: &Top, diag_square: bool) -> FunctorExpr {
    if depth == 0 {
        return leaf(rng);
    }
    let sub = |rng: &mut ChaCha8Rng| random_expr(rng, depth - 1, top, diag_square);
    let pick = rng.gen_range(0..if diag_square && top.is_infinite() { 7 } else { 6 });
    match pick {
        0 => leaf(rng),
        1 => FunctorExpr::dist(sub(rng)),
        2 => FunctorExpr::finpow(sub(rng)),
        3 => {
            let other = if rng.gen_bool(0.3) { constant(rng, top) } else { sub(rng) };
            FunctorExpr::product(sub(rng), other, ProductEval::Max)
        }
        4 => {
            let (c1, c2) = pnorm_weights(rng, top);
            FunctorExpr::product(sub(rng), sub(rng), ProductEval::PNorm { p: 1, c1, c2 })
        }
        5 => {
            let other = if rng.gen_bool(0.5) { constant(rng, top) } else { sub(rng) };
            FunctorExpr::coproduct(sub(rng), other)
        }
        _ => FunctorExpr::diag_square(sub(rng)),
    }
}

/// A random element of `expr` over a carrier of `n` states: supports and
/// sets of at most four elements.
pub fn random_structure(rng: &mut ChaCha8Rng, expr: &FunctorExpr, n: usize) -> FStructure {
    match expr {
        FunctorExpr::Id { .. } => FStructure::atom(rng.gen_range(0..n)),
        FunctorExpr::Const(space) => FStructure::atom(rng.gen_range(0..space.table.len())),
        FunctorExpr::Dist(sub) => {
            let k = rng.gen_range(1..=4);
            let raw: Vec<(FStructure, i64)> = (0..k)
                .map(|_| (random_structure(rng, sub, n), rng.gen_range(1..=6)))
                .collect();
            let total: i64 = raw.iter().map(|(_, w)| w).sum();
            FStructure::dist(raw.into_iter().map(|(t, w)| (t, ratio(w, total))))
        }
        FunctorExpr::FinPow(sub) => {
            let k = if rng.gen_bool(0.1) { 0 } else { rng.gen_range(1..=4) };
            FStructure::set((0..k).map(|_| random_structure(rng, sub, n)).collect::<Vec<_>>())
        }
        FunctorExpr::Product { left, right, .. } => {
            FStructure::pair(random_structure(rng, left, n), random_structure(rng, right, n))
        }
        FunctorExpr::DiagSquare(sub) => {
            FStructure::pair(random_structure(rng, sub, n), random_structure(rng, sub, n))
        }
        FunctorExpr::Coproduct(l, r) => {
            if rng.gen_bool(0.5) {
                FStructure::left(random_structure(rng, l, n))
            } else {
                FStructure::right(random_structure(rng, r, n))
            }
        }
    }
}

/// A single lifting problem.
#[derive(Debug, Clone)]
pub struct LiftInstance {
    pub expr: FunctorExpr,
    pub table: PseudometricTable,
    pub t1: FStructure,
    pub t2: FStructure,
}

impl LiftInstance {
    pub fn describe(&self) -> String {
        let atoms = self.table.atoms();
        format!(
            "{} on {} vs {} (top {})",
            self.expr,
            self.t1.render(&self.expr, atoms),
            self.t2.render(&self.expr, atoms),
            self.table.top()
        )
    }
}

/// Case `case` of the stream for `kind`: carriers of at most five points.
pub fn lift_instance(seed: u64, kind: NodeKind, case: u64) -> LiftInstance {
    let mut rng = case_rng(seed, kind.salt(), case);
    let (expr, top) = node_expr(&mut rng, kind);
    let n = rng.gen_range(1..=5);
    let table = random_table(&mut rng, n, &top, "x");
    let t1 = random_structure(&mut rng, &expr, n);
    let t2 = if rng.gen_bool(0.1) {
        t1.clone()
    } else {
        random_structure(&mut rng, &expr, n)
    };
    LiftInstance { expr, table, t1, t2 }
}

/// A probabilistic system with discount `c` and at most `max_states`
/// states, built from a small quotient whose states are duplicated with
/// their outgoing mass split between copies, so bisimilar pairs are common.
pub fn random_prob_ts(rng: &mut ChaCha8Rng, max_states: usize, c: Rational) -> ProbTS {
    let q = rng.gen_range(1..=max_states.clamp(1, 4));
    let n = rng.gen_range(q..=max_states.max(q));
    let mut class: Vec<usize> = (0..q).chain((q..n).map(|_| rng.gen_range(0..q))).collect();
    class.shuffle(rng);
    let members: Vec<Vec<usize>> = (0..q).map(|b| (0..n).filter(|&s| class[s] == b).collect()).collect();
    let base: Vec<(Rational, Vec<(usize, Rational)>)> = (0..q)
        .map(|_| {
            let stop = if rng.gen_bool(0.35) {
                ratio(rng.gen_range(1..=4), 4)
            } else {
                Rational::zero()
            };
            let mut targets: Vec<usize> = (0..q).collect();
            targets.shuffle(rng);
            targets.truncate(rng.gen_range(1..=q.min(3)));
            let raw: Vec<i64> = targets.iter().map(|_| rng.gen_range(1..=4)).collect();
            let total: i64 = raw.iter().sum();
            let rest = Rational::one() - &stop;
            let moves = targets
                .into_iter()
                .zip(raw)
                .map(|(t, w)| (t, ratio(w, total) * &rest))
                .filter(|(_, w)| !w.is_zero())
                .collect();
            (stop, moves)
        })
        .collect();
    let mut transitions = Vec::with_capacity(n);
    let mut terminate = Vec::with_capacity(n);
    for s in 0..n {
        let (stop, moves) = &base[class[s]];
        let mut out = Vec::new();
        for (b, w) in moves {
            let mut copies = members[*b].clone();
            copies.shuffle(rng);
            copies.truncate(rng.gen_range(1..=copies.len()));
            let raw: Vec<i64> = copies.iter().map(|_| rng.gen_range(1..=3)).collect();
            let total: i64 = raw.iter().sum();
            out.extend(copies.into_iter().zip(raw).map(|(t, r)| (t, ratio(r, total) * w)));
        }
        out.sort();
        transitions.push(out);
        terminate.push(stop.clone());
    }
    ProbTS {
        states: (0..n).map(|i| format!("s{i}")).collect(),
        transitions,
        terminate,
        discount: c,
    }
}

/// A metric transition system with one or two real-valued propositions.
pub fn random_metric_ts(rng: &mut ChaCha8Rng, max_states: usize) -> MetricTS {
    let n = rng.gen_range(1..=max_states.max(1));
    let props = rng.gen_range(1..=2);
    let carrier: Vec<Rational> = (0..=4).map(|k| ratio(k, 4)).collect();
    let table = PseudometricTable::euclidean(
        carrier.iter().map(|q| (format_rational(q), q.clone())).collect(),
        Top::Infinite,
    )
    .expect("points on a line");
    MetricTS {
        states: (0..n).map(|i| format!("m{i}")).collect(),
        propositions: (0..props).map(|k| (format!("r{k}"), table.clone())).collect(),
        valuation: (0..n)
            .map(|_| (0..props).map(|_| rng.gen_range(0..carrier.len())).collect())
            .collect(),
        tau: (0..n)
            .map(|_| {
                let k = rng.gen_range(0..=n.min(3));
                let mut succ: Vec<usize> = (0..n).collect();
                succ.shuffle(rng);
                succ.truncate(k);
                succ.sort();
                succ
            })
            .collect(),
    }
}

/// A coalgebra for a random expression, with at most `max_states` states.
pub fn random_system(rng: &mut ChaCha8Rng, max_states: usize, mode: NumericMode) -> System {
    let top = random_top(rng);
    let expr = loop {
        let depth = rng.gen_range(1..=2);
        let e = random_expr(rng, depth, &top, true);
        if e.uses_carrier() {
            break e;
        }
    };
    let n = rng.gen_range(1..=max_states.max(1));
    let alpha = (0..n).map(|_| random_structure(rng, &expr, n)).collect();
    System::new((0..n).map(|i| format!("q{i}")).collect(), expr, alpha, top, mode)
        .expect("generated structures validate")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coalgebra::from_prob_ts;

    #[test]
    fn tables_are_pseudometrics() {
        for case in 0..200 {
            let mut rng = case_rng(1, 0, case);
            let top = random_top(&mut rng);
            let t = random_table(&mut rng, 5, &top, "a");
            assert!(t.check_axioms(0.0).is_ok());
        }
    }

    #[test]
    fn instances_validate_and_repeat() {
        for kind in NodeKind::ALL {
            for case in 0..50 {
                let a = lift_instance(9, kind, case);
                a.expr.validate(a.table.top()).unwrap();
                a.t1.validate(&a.expr, a.table.len()).unwrap();
                a.t2.validate(&a.expr, a.table.len()).unwrap();
                let b = lift_instance(9, kind, case);
                assert_eq!((a.expr, a.t1, a.t2), (b.expr, b.t1, b.t2));
            }
        }
    }

    #[test]
    fn prob_ts_are_valid() {
        for case in 0..200 {
            let mut rng = case_rng(3, 0, case);
            let p = random_prob_ts(&mut rng, 8, ratio(1, 2));
            assert!(p.states.len() <= 8);
            from_prob_ts(&p).unwrap();
        }
    }

    #[test]
    fn systems_are_valid() {
        for case in 0..100 {
            let mut rng = case_rng(4, 0, case);
            random_system(&mut rng, 4, NumericMode::Exact);
            random_metric_ts(&mut rng, 5).validate().unwrap();
        }
    }
}
