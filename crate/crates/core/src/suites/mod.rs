//! Seeded property suites over random instances, shared by `behametric
//! check` and the acceptance run. Every case draws from its own generator,
//! so reports do not depend on thread scheduling.

pub mod gen;

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rayon::prelude::*;

use crate::coalgebra::{from_metric_ts, from_prob_ts};
use crate::fixpoint::{bisimilarity_partition, iterate, kernel_partition, IterationOptions};
use crate::functor::{FStructure, PseudometricTable};
use crate::lifting::{
    check_well_behaved, kantorovich_lp, lift_dist, solve_linear_kantorovich, LiftMethod, NodeEval, SamplingPlan,
};
use crate::lp::solve;
use crate::numerics::{ratio, NumericMode, Rational, Top, Value};
use crate::oracle::{kantorovich_vertex_oracle, wasserstein_oracle, OracleBudget};
use gen::{case_rng, lift_instance, random_metric_ts, random_prob_ts, random_system, random_table, NodeKind};

/// Slack for comparisons involving irrational p-norm results.
pub const FLOAT_TOL: f64 = 1e-9;

/// Slack in the contraction inequality `Δ_{i+1} ≤ c·Δ_i + slack`.
pub const CONTRACTION_SLACK: f64 = 1e-12;

/// Failures quoted per report.
const MAX_FAILURES: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Suite {
    Duality,
    KLeW,
    Axioms,
    Oracle,
    WellBehaved,
    Kernel,
    Contraction,
}

impl Suite {
    pub const ALL: [Suite; 7] = [
        Suite::Duality,
        Suite::KLeW,
        Suite::Axioms,
        Suite::Oracle,
        Suite::WellBehaved,
        Suite::Kernel,
        Suite::Contraction,
    ];
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Suite::Duality => "duality",
            Suite::KLeW => "k-le-w",
            Suite::Axioms => "axioms",
            Suite::Oracle => "oracle",
            Suite::WellBehaved => "well-behaved",
            Suite::Kernel => "kernel",
            Suite::Contraction => "contraction",
        })
    }
}

impl FromStr for Suite {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Suite::ALL
            .into_iter()
            .find(|k| k.to_string() == s)
            .ok_or_else(|| format!("unknown suite `{s}`"))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SuiteConfig {
    pub seed: u64,
    /// Instances per node kind, system class or oracle.
    pub n: usize,
}

/// Outcome of one suite: case counts per group and the first failures.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SuiteReport {
    pub suite: Suite,
    pub groups: Vec<(String, usize)>,
    pub failures: Vec<String>,
    pub failure_count: usize,
}

impl SuiteReport {
    fn new(suite: Suite) -> Self {
        SuiteReport {
            suite,
            groups: Vec::new(),
            failures: Vec::new(),
            failure_count: 0,
        }
    }

    pub fn passed(&self) -> bool {
        self.failure_count == 0
    }

    pub fn cases(&self) -> usize {
        self.groups.iter().map(|(_, n)| n).sum()
    }

    /// The fewest cases run for any group.
    pub fn min_group(&self) -> usize {
        self.groups.iter().map(|(_, n)| *n).min().unwrap_or(0)
    }

    fn record(&mut self, group: impl Into<String>, outcomes: Vec<Option<String>>) {
        self.groups.push((group.into(), outcomes.len()));
        for f in outcomes.into_iter().flatten() {
            self.failure_count += 1;
            if self.failures.len() < MAX_FAILURES {
                self.failures.push(f);
            }
        }
    }
}

impl fmt::Display for SuiteReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let status = if self.passed() { "PASS" } else { "FAIL" };
        write!(f, "{status} {}: {} cases", self.suite, self.cases())?;
        if !self.passed() {
            write!(f, ", {} failures", self.failure_count)?;
        }
        for (g, n) in &self.groups {
            write!(f, "\n  {g}: {n}")?;
        }
        for w in &self.failures {
            write!(f, "\n  witness: {w}")?;
        }
        Ok(())
    }
}

pub fn run_suite(suite: Suite, cfg: &SuiteConfig) -> SuiteReport {
    match suite {
        Suite::Duality => duality(cfg),
        Suite::KLeW => k_le_w(cfg),
        Suite::Axioms => axioms(cfg),
        Suite::Oracle => oracles(cfg),
        Suite::WellBehaved => well_behaved(cfg),
        Suite::Kernel => kernel(cfg),
        Suite::Contraction => contraction(cfg),
    }
}

fn par_cases(n: usize, f: impl Fn(u64) -> Option<String> + Sync + Send) -> Vec<Option<String>> {
    (0..n as u64).into_par_iter().map(f).collect()
}

fn both(inst: &gen::LiftInstance) -> Result<(Value, Value), String> {
    let k = lift_dist(&inst.expr, &inst.table, LiftMethod::Kantorovich, &inst.t1, &inst.t2);
    let w = lift_dist(&inst.expr, &inst.table, LiftMethod::Wasserstein, &inst.t1, &inst.t2);
    match (k, w) {
        (Ok(k), Ok(w)) => Ok((k, w)),
        (Err(e), _) | (_, Err(e)) => Err(format!("{e} on {}", inst.describe())),
    }
}

/// `K = W` exactly on the nodes where the two liftings coincide.
fn duality(cfg: &SuiteConfig) -> SuiteReport {
    let mut r = SuiteReport::new(Suite::Duality);
    for kind in NodeKind::DUALITY {
        let out = par_cases(cfg.n, |case| {
            let inst = lift_instance(cfg.seed, kind, case);
            match both(&inst) {
                Ok((k, w)) if k == w => None,
                Ok((k, w)) => Some(format!("{kind} case {case}: K = {k}, W = {w}; {}", inst.describe())),
                Err(e) => Some(format!("{kind} case {case}: {e}")),
            }
        });
        r.record(kind.to_string(), out);
    }
    r
}

/// `K ≤ W` on every node, exactly unless an irrational value is involved.
fn k_le_w(cfg: &SuiteConfig) -> SuiteReport {
    let mut r = SuiteReport::new(Suite::KLeW);
    for kind in NodeKind::ALL {
        let out = par_cases(cfg.n, |case| {
            let inst = lift_instance(cfg.seed, kind, case);
            match both(&inst) {
                Ok((k, w)) => {
                    let ok = if k.is_exact() && w.is_exact() { k <= w } else { k.le_tol(&w, FLOAT_TOL) };
                    (!ok).then(|| format!("{kind} case {case}: K = {k} > W = {w}; {}", inst.describe()))
                }
                Err(e) => Some(format!("{kind} case {case}: {e}")),
            }
        });
        r.record(kind.to_string(), out);
    }
    r
}

fn axiom_failure(rows: Vec<Vec<Value>>, top: &Top) -> Option<String> {
    let atoms = (0..rows.len()).map(|i| format!("t{i}")).collect();
    PseudometricTable::new(atoms, top.clone(), rows).err().map(|e| e.to_string())
}

/// Lifted tables over random structures and every exact iterate of random
/// systems satisfy the pseudometric axioms without tolerance.
fn axioms(cfg: &SuiteConfig) -> SuiteReport {
    let mut r = SuiteReport::new(Suite::Axioms);
    let lifted = par_cases(cfg.n, |case| {
        let mut rng = case_rng(cfg.seed, 101, case);
        let top = gen::random_top(&mut rng);
        let depth = rng.gen_range(1..=2);
        let expr = gen::random_expr(&mut rng, depth, &top, true);
        let n = rng.gen_range(1..=5);
        let table = random_table(&mut rng, n, &top, "x");
        let ts: Vec<FStructure> = (0..4).map(|_| gen::random_structure(&mut rng, &expr, n)).collect();
        for method in [LiftMethod::Kantorovich, LiftMethod::Wasserstein] {
            let mut rows = Vec::new();
            for a in &ts {
                let mut row = Vec::new();
                for b in &ts {
                    match lift_dist(&expr, &table, method, a, b) {
                        Ok(v) => row.push(v),
                        Err(e) => return Some(format!("case {case}: {e}")),
                    }
                }
                rows.push(row);
            }
            if let Some(e) = axiom_failure(rows, &top) {
                return Some(format!("case {case}: {method} table over {expr}: {e}"));
            }
        }
        None
    });
    r.record("lifted tables", lifted);
    let systems = par_cases(cfg.n, |case| {
        let mut rng = case_rng(cfg.seed, 102, case);
        let sys = match case % 3 {
            0 => {
                let c = ratio(rng.gen_range(1..=9), 10);
                from_prob_ts(&random_prob_ts(&mut rng, 5, c)).ok()?
            }
            1 => from_metric_ts(&random_metric_ts(&mut rng, 5)).ok()?,
            _ => random_system(&mut rng, 4, NumericMode::Exact),
        }
        .with_mode(NumericMode::Exact);
        let opts = IterationOptions {
            max_iter: 6,
            trace: true,
            ..Default::default()
        };
        match iterate(&sys, &opts) {
            Ok(run) => run
                .trace
                .into_iter()
                .enumerate()
                .find_map(|(k, e)| axiom_failure(e, &sys.top).map(|err| format!("case {case}: iterate {k}: {err}"))),
            Err(e) => Some(format!("case {case}: {e}")),
        }
    });
    r.record("iteration matrices", systems);
    r
}

/// Closed forms and LP solvers against brute-force enumeration.
fn oracles(cfg: &SuiteConfig) -> SuiteReport {
    let mut r = SuiteReport::new(Suite::Oracle);
    let budget = OracleBudget::default();
    for kind in [NodeKind::FinPow, NodeKind::Dist, NodeKind::DiagSquare] {
        let out = par_cases(cfg.n, |case| {
            let inst = lift_instance(cfg.seed ^ 0x5eed, kind, case);
            let engine = lift_dist(&inst.expr, &inst.table, LiftMethod::Wasserstein, &inst.t1, &inst.t2);
            let oracle = wasserstein_oracle(&inst.expr, &inst.table, &inst.t1, &inst.t2, &budget);
            match (engine, oracle) {
                (Ok(a), Ok(b)) if a == b => None,
                (Ok(a), Ok(b)) => Some(format!("{kind} case {case}: engine {a}, oracle {b}; {}", inst.describe())),
                (Err(e), _) => Some(format!("{kind} case {case}: {e}")),
                (_, Err(e)) => Some(format!("{kind} case {case}: {e}")),
            }
        });
        let group = match kind {
            NodeKind::FinPow => "hausdorff vs couplings",
            NodeKind::Dist => "transportation vs vertices",
            _ => "diag-square vs couplings",
        };
        r.record(group, out);
    }
    let lps = par_cases(cfg.n, |case| {
        let mut rng = case_rng(cfg.seed, 103, case);
        let k = 1 + (case % 6) as usize;
        let top = if rng.gen_bool(0.5) { Top::one() } else { Top::finite(ratio(2, 1)).expect("positive") };
        let table = random_table(&mut rng, k, &top, "x");
        let dist = table.rows();
        let coeffs: Vec<Rational> = (0..k).map(|_| ratio(rng.gen_range(-6..=6), 6)).collect();
        let lp = kantorovich_lp(&dist, &coeffs, &top);
        let simplex = solve(&lp).map(|s| s.value);
        let vertex = kantorovich_vertex_oracle(&lp);
        match (simplex, vertex) {
            (Ok(a), Ok(b)) if a == b => {}
            (a, b) => return Some(format!("lp case {case} ({k} variables): simplex {a:?}, vertices {b:?}")),
        }
        let neg: Vec<Rational> = coeffs.iter().map(|c| -c).collect();
        let best = [&coeffs, &neg]
            .into_iter()
            .map(|c| kantorovich_vertex_oracle(&kantorovich_lp(&dist, c, &top)).expect("bounded"))
            .max()
            .expect("two signs")
            .max(Rational::from_integer(0.into()));
        match solve_linear_kantorovich(&dist, &coeffs, &top) {
            Ok(v) if v == Value::exact(best.clone()) => None,
            other => Some(format!("lp case {case}: engine {other:?}, vertices {best}")),
        }
    });
    r.record("kantorovich lp vs vertices", lps);
    r
}

/// `max` satisfies all three conditions, `min` fails the second and third
/// with the known witnesses, and the remaining evaluation functions pass.
fn well_behaved(cfg: &SuiteConfig) -> SuiteReport {
    let mut r = SuiteReport::new(Suite::WellBehaved);
    let plan = |top: Top| SamplingPlan {
        random_samples: cfg.n,
        ..SamplingPlan::new(top, cfg.seed)
    };
    let mut expect_ok = Vec::new();
    for top in [Top::one(), Top::Infinite] {
        expect_ok.push((NodeEval::FinPowMax, top.clone()));
        expect_ok.push((NodeEval::Dist, top.clone()));
        expect_ok.push((NodeEval::Id(ratio(9, 10)), top.clone()));
        expect_ok.push((NodeEval::ProductMax, top.clone()));
        expect_ok.push((NodeEval::ProductPNorm { p: 2, c1: ratio(1, 2), c2: ratio(1, 2) }, top.clone()));
        expect_ok.push((NodeEval::Coproduct, top));
    }
    expect_ok.push((NodeEval::DiagSquare, Top::Infinite));
    for (node, top) in expect_ok {
        let rep = check_well_behaved(&node, &plan(top.clone()));
        let fail = (!rep.all_ok()).then(|| {
            let w = rep.witnesses.first().map(|w| format!("condition {}: {}", w.condition, w.input));
            format!("{node} under top {top} fails: {}", w.unwrap_or_default())
        });
        r.record(format!("{node} (top {top})"), vec![fail]);
    }
    let rep = check_well_behaved(&NodeEval::FinPowMin, &plan(Top::Infinite));
    let first = |c: u8| rep.witnesses_for(c).next().map(|w| w.input.clone());
    let mut out = Vec::new();
    out.push((!rep.condition1_ok).then(|| "finpow/min fails condition 1".to_string()));
    out.push(match (rep.condition2_ok, first(2)) {
        (false, Some(w)) if w == "{(0,1),(1,1)}" => None,
        (ok, w) => Some(format!("finpow/min condition 2: ok = {ok}, first witness {w:?}")),
    });
    out.push(match (rep.condition3_ok, first(3)) {
        (false, Some(w)) if w == "{0,1}" => None,
        (ok, w) => Some(format!("finpow/min condition 3: ok = {ok}, first witness {w:?}")),
    });
    r.record("finpow/min witnesses", out);
    r
}

/// The random probabilistic corpus of the kernel and contraction suites:
/// at most eight states, discount 1/2.
pub fn prob_corpus_system(seed: u64, case: u64) -> crate::coalgebra::ProbTS {
    let mut rng = case_rng(seed, 104, case);
    random_prob_ts(&mut rng, 8, ratio(1, 2))
}

fn float_opts() -> IterationOptions {
    IterationOptions {
        trace: false,
        threads: Some(1),
        ..Default::default()
    }
}

/// Distance zero coincides with probabilistic bisimilarity.
fn kernel(cfg: &SuiteConfig) -> SuiteReport {
    let mut r = SuiteReport::new(Suite::Kernel);
    let out = par_cases(cfg.n, |case| {
        let p = prob_corpus_system(cfg.seed, case);
        let sys = from_prob_ts(&p).ok()?.with_mode(NumericMode::Float { tol: FLOAT_TOL });
        let m = match iterate(&sys, &float_opts()) {
            Ok(run) => run.matrix,
            Err(e) => return Some(format!("case {case}: {e}")),
        };
        let k = match kernel_partition(&m) {
            Ok(k) => k,
            Err(e) => return Some(format!("case {case}: {e}")),
        };
        let b = bisimilarity_partition(&p);
        (k != b).then(|| {
            format!(
                "case {case}: kernel {:?} but bisimilarity {:?}",
                k.named(&p.states),
                b.named(&p.states)
            )
        })
    });
    r.record("random probabilistic systems", out);
    r
}

/// Successive changes shrink by at least the discount factor.
fn contraction(cfg: &SuiteConfig) -> SuiteReport {
    let mut r = SuiteReport::new(Suite::Contraction);
    let out = par_cases(cfg.n, |case| {
        let p = prob_corpus_system(cfg.seed, case);
        let c = num_traits::ToPrimitive::to_f64(&p.discount).expect("small rational");
        let sys = from_prob_ts(&p).ok()?.with_mode(NumericMode::Float { tol: FLOAT_TOL });
        let run = match iterate(&sys, &float_opts()) {
            Ok(run) => run,
            Err(e) => return Some(format!("case {case}: {e}")),
        };
        run.residuals.windows(2).enumerate().find_map(|(i, w)| {
            let (a, b) = (w[0].to_f64(), w[1].to_f64());
            (b > c * a + CONTRACTION_SLACK).then(|| format!("case {case}: Δ{} = {b:e} > c·Δ{} = {:e}", i + 2, i + 1, c * a))
        })
    });
    r.record("random probabilistic systems", out);
    r
}
