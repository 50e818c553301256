//! Behavioral distances by iterating `e_{i+1} = lift(e_i) ∘ (α × α)` from
//! the zero pseudometric, plus kernels and a bisimilarity reference.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use rayon::prelude::*;
use serde_json::{json, Value as Json};
use thiserror::Error;

use crate::coalgebra::{mode_from_json, mode_to_json, ProbTS, System, SystemError};
use crate::functor::PseudometricTable;
use crate::lifting::{lift_validated, LiftError, LiftMethod};
use crate::numerics::{dist_e, NumericMode, Rational, Value};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IterationOptions {
    pub max_iter: usize,
    pub method: LiftMethod,
    /// Keep every iterate.
    pub trace: bool,
    /// Worker threads; `None` uses the global pool.
    pub threads: Option<usize>,
}

impl Default for IterationOptions {
    fn default() -> Self {
        IterationOptions {
            max_iter: 10_000,
            method: LiftMethod::Wasserstein,
            trace: false,
            threads: None,
        }
    }
}

#[derive(Debug, Error)]
pub enum FixpointError {
    #[error(transparent)]
    Lift(#[from] LiftError),
    #[error("iterate {iteration} decreased the distance of ({a}, {b})")]
    NotMonotone { iteration: usize, a: String, b: String },
    #[error("cannot build a worker pool: {0}")]
    Threads(String),
    #[error("the distance matrix has not converged")]
    NotConverged,
    #[error("max_iter must be positive")]
    ZeroIterations,
    #[error(transparent)]
    Document(#[from] SystemError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct DistanceMatrix {
    pub states: Vec<String>,
    pub entries: Vec<Vec<Value>>,
    /// Lifting steps performed.
    pub iterations: usize,
    pub converged: bool,
    /// Sup-norm of the last change.
    pub residual: Value,
    pub method: LiftMethod,
    pub mode: NumericMode,
}

impl DistanceMatrix {
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn get(&self, i: usize, j: usize) -> &Value {
        &self.entries[i][j]
    }

    pub fn by_name(&self, a: &str, b: &str) -> Option<&Value> {
        let i = self.states.iter().position(|s| s == a)?;
        let j = self.states.iter().position(|s| s == b)?;
        Some(&self.entries[i][j])
    }

    /// A state-by-state table with a header row.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for s in &self.states {
            out.push(',');
            out.push_str(&csv_field(s));
        }
        out.push('\n');
        for (s, row) in self.states.iter().zip(&self.entries) {
            out.push_str(&csv_field(s));
            for v in row {
                let _ = write!(out, ",{v}");
            }
            out.push('\n');
        }
        out
    }

    pub fn to_json(&self) -> Json {
        let entries: Vec<Vec<String>> = self
            .entries
            .iter()
            .map(|r| r.iter().map(Value::to_string).collect())
            .collect();
        json!({
            "states": self.states,
            "entries": entries,
            "iterations": self.iterations,
            "converged": self.converged,
            "residual": self.residual.to_string(),
            "method": self.method.to_string(),
            "mode": mode_to_json(&self.mode),
        })
    }

    /// Inverse of [`DistanceMatrix::to_json`].
    pub fn from_json(doc: &Json) -> Result<Self, SystemError> {
        let bad = |path: &str, msg: &str| SystemError::new(path, msg);
        let mode = mode_from_json(doc.get("mode").ok_or_else(|| bad("$", "missing field `mode`"))?, "$.mode")?;
        let value = |v: &Json, path: &str| -> Result<Value, SystemError> {
            let s = v.as_str().ok_or_else(|| bad(path, "expected a string"))?;
            let v = Value::parse(s).map_err(|e| SystemError::new(path, e))?;
            Ok(mode.normalize(v))
        };
        let states: Vec<String> = doc["states"]
            .as_array()
            .ok_or_else(|| bad("$.states", "expected an array"))?
            .iter()
            .map(|s| s.as_str().map(String::from).ok_or_else(|| bad("$.states", "expected strings")))
            .collect::<Result<_, _>>()?;
        let rows = doc["entries"].as_array().ok_or_else(|| bad("$.entries", "expected an array"))?;
        if rows.len() != states.len() {
            return Err(bad("$.entries", "one row per state is required"));
        }
        let mut entries = Vec::with_capacity(rows.len());
        for (i, r) in rows.iter().enumerate() {
            let path = format!("$.entries[{i}]");
            let r = r.as_array().filter(|r| r.len() == states.len()).ok_or_else(|| bad(&path, "malformed row"))?;
            entries.push(r.iter().map(|v| value(v, &path)).collect::<Result<Vec<_>, _>>()?);
        }
        Ok(DistanceMatrix {
            states,
            entries,
            iterations: doc["iterations"].as_u64().ok_or_else(|| bad("$.iterations", "expected a count"))? as usize,
            converged: doc["converged"].as_bool().ok_or_else(|| bad("$.converged", "expected a boolean"))?,
            residual: value(&doc["residual"], "$.residual")?,
            method: doc["method"]
                .as_str()
                .and_then(|m| m.parse().ok())
                .ok_or_else(|| bad("$.method", "expected kantorovich or wasserstein"))?,
            mode,
        })
    }
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// The final matrix together with every iterate `e_0, e_1, …` (when traced)
/// and the successive differences `Δ_i = ‖e_i − e_{i−1}‖∞`.
#[derive(Debug, Clone, PartialEq)]
pub struct FixpointRun {
    pub matrix: DistanceMatrix,
    pub trace: Vec<Vec<Vec<Value>>>,
    pub residuals: Vec<Value>,
}

impl FixpointRun {
    /// `iteration,a,b,distance` rows, one per unordered pair and iterate.
    pub fn trace_csv(&self) -> String {
        let states = &self.matrix.states;
        let mut out = String::from("iteration,a,b,distance\n");
        for (k, e) in self.trace.iter().enumerate() {
            for i in 0..states.len() {
                for j in (i + 1)..states.len() {
                    let _ = writeln!(out, "{k},{},{},{}", csv_field(&states[i]), csv_field(&states[j]), e[i][j]);
                }
            }
        }
        out
    }
}

pub fn behavioral_distances(sys: &System, opts: &IterationOptions) -> Result<DistanceMatrix, FixpointError> {
    iterate(sys, opts).map(|run| run.matrix)
}

/// Run the iteration, stopping at an exact fixed point (exact mode), a change
/// below the tolerance (float mode) or after `max_iter` steps.
pub fn iterate(sys: &System, opts: &IterationOptions) -> Result<FixpointRun, FixpointError> {
    if opts.max_iter == 0 {
        return Err(FixpointError::ZeroIterations);
    }
    match opts.threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| FixpointError::Threads(e.to_string()))?
            .install(|| run(sys, opts)),
        None => run(sys, opts),
    }
}

fn run(sys: &System, opts: &IterationOptions) -> Result<FixpointRun, FixpointError> {
    let n = sys.len();
    let mode = sys.mode;
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|i| ((i + 1)..n).map(move |j| (i, j))).collect();
    let mut current = vec![vec![Value::zero(); n]; n];
    let mut trace = Vec::new();
    if opts.trace {
        trace.push(current.clone());
    }
    let mut residuals = Vec::new();
    let mut converged = n == 0;
    let mut iterations = 0;
    while !converged && iterations < opts.max_iter {
        let table = PseudometricTable::from_entries_unchecked(
            sys.states.clone(),
            sys.top.clone(),
            current.iter().flatten().cloned().collect(),
        );
        debug_assert!(table.check_axioms(mode.tolerance().max(1e-9)).is_ok());
        let values = pairs
            .par_iter()
            .map(|&(i, j)| {
                lift_validated(&sys.expr, &table, opts.method, &sys.alpha[i], &sys.alpha[j]).map(|v| mode.normalize(v))
            })
            .collect::<Result<Vec<_>, _>>()?;
        iterations += 1;
        let mut next = vec![vec![Value::zero(); n]; n];
        let mut delta = Value::zero();
        let mut same = true;
        for (&(i, j), v) in pairs.iter().zip(values) {
            if !current[i][j].le_tol(&v, mode.tolerance()) {
                return Err(FixpointError::NotMonotone {
                    iteration: iterations,
                    a: sys.states[i].clone(),
                    b: sys.states[j].clone(),
                });
            }
            same &= mode.same(&current[i][j], &v);
            delta = delta.max_of(dist_e(&current[i][j], &v));
            next[i][j] = v.clone();
            next[j][i] = v;
        }
        residuals.push(delta.clone());
        converged = match mode {
            NumericMode::Exact => delta.is_zero(),
            NumericMode::Float { tol } => same || delta.to_f64() < tol,
        };
        current = next;
        if opts.trace {
            trace.push(current.clone());
        }
    }
    let residual = residuals.last().cloned().unwrap_or_else(Value::zero);
    Ok(FixpointRun {
        matrix: DistanceMatrix {
            states: sys.states.clone(),
            entries: current,
            iterations,
            converged,
            residual,
            method: opts.method,
            mode,
        },
        trace,
        residuals,
    })
}

/// A partition of state indices; blocks are sorted and ordered by their
/// smallest element.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Partition {
    pub blocks: Vec<Vec<usize>>,
}

impl Partition {
    fn from_labels(labels: &[usize]) -> Self {
        let mut by_label: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for (s, &l) in labels.iter().enumerate() {
            by_label.entry(l).or_default().push(s);
        }
        let mut blocks: Vec<Vec<usize>> = by_label.into_values().collect();
        blocks.sort();
        Partition { blocks }
    }

    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    pub fn named(&self, states: &[String]) -> Vec<Vec<String>> {
        self.blocks
            .iter()
            .map(|b| b.iter().map(|&s| states[s].clone()).collect())
            .collect()
    }
}

/// Classes of `d(x, y) = 0` (exact) or `d(x, y) ≤ tol` (float).
pub fn kernel_partition(m: &DistanceMatrix) -> Result<Partition, FixpointError> {
    if !m.converged {
        return Err(FixpointError::NotConverged);
    }
    let n = m.len();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut [usize], x: usize) -> usize {
        let mut r = x;
        while parent[r] != r {
            r = parent[r];
        }
        parent[x] = r;
        r
    }
    for i in 0..n {
        for j in (i + 1)..n {
            let zero = match m.mode {
                NumericMode::Exact => m.entries[i][j].is_zero(),
                NumericMode::Float { tol } => m.entries[i][j].le_tol(&Value::zero(), tol),
            };
            if zero {
                let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                parent[a.max(b)] = a.min(b);
            }
        }
    }
    let labels: Vec<usize> = (0..n).map(|i| find(&mut parent, i)).collect();
    Ok(Partition::from_labels(&labels))
}

/// Probabilistic bisimilarity by partition refinement: states stay together
/// while they terminate with the same probability and move into every block
/// with the same probability.
pub fn bisimilarity_partition(p: &ProbTS) -> Partition {
    let n = p.states.len();
    let mut labels = vec![0usize; n];
    let mut count = usize::from(n > 0);
    loop {
        let mut signatures: BTreeMap<(usize, Rational, Vec<Rational>), usize> = BTreeMap::new();
        let mut next = vec![0usize; n];
        for s in 0..n {
            let masses = (0..count).map(|b| p.mass_into(s, |t| labels[t] == b)).collect();
            let key = (labels[s], p.terminate[s].clone(), masses);
            let fresh = signatures.len();
            next[s] = *signatures.entry(key).or_insert(fresh);
        }
        let refined = signatures.len();
        labels = next;
        if refined == count {
            return Partition::from_labels(&labels);
        }
        count = refined;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coalgebra::{from_metric_ts, from_prob_ts, MetricTS};
    use crate::numerics::{ratio, Top};
    use num_traits::{One, Zero};

    fn refusal_system() -> ProbTS {
        let half = ratio(1, 2);
        let eps = ratio(1, 20);
        ProbTS {
            states: ["x", "y", "u", "z"].map(String::from).to_vec(),
            transitions: vec![
                vec![(2, &half - &eps), (3, &half + &eps)],
                vec![(2, half.clone()), (3, half)],
                vec![(2, Rational::one())],
                vec![],
            ],
            terminate: vec![Rational::zero(), Rational::zero(), Rational::zero(), Rational::one()],
            discount: ratio(9, 10),
        }
    }

    fn metric_system() -> System {
        let values = [(0, 1), (2, 5), (7, 10), (0, 1), (1, 2), (1, 1)];
        let mut carrier: Vec<Rational> = values.iter().map(|&(a, b)| ratio(a, b)).collect();
        carrier.sort();
        carrier.dedup();
        let table = PseudometricTable::euclidean(
            carrier.iter().map(|q| (crate::numerics::format_rational(q), q.clone())).collect(),
            Top::Infinite,
        )
        .unwrap();
        let m = MetricTS {
            states: ["x1", "x2", "x3", "y1", "y2", "y3"].map(String::from).to_vec(),
            propositions: vec![("r".into(), table)],
            valuation: values
                .iter()
                .map(|&(a, b)| vec![carrier.binary_search(&ratio(a, b)).unwrap()])
                .collect(),
            tau: vec![vec![1, 2], vec![1], vec![2], vec![4, 5], vec![4], vec![5]],
        };
        from_metric_ts(&m).unwrap().with_mode(NumericMode::Exact)
    }

    #[test]
    fn refusal_example_exact() {
        let sys = from_prob_ts(&refusal_system()).unwrap().with_mode(NumericMode::Exact);
        let m = behavioral_distances(&sys, &IterationOptions::default()).unwrap();
        assert!(m.converged);
        assert_eq!(m.residual, Value::zero());
        assert_eq!(m.by_name("u", "z"), Some(&Value::ratio(1, 1)));
        assert_eq!(m.by_name("x", "y"), Some(&Value::ratio(9, 200)));
        assert_eq!(m.by_name("y", "x"), Some(&Value::ratio(9, 200)));
        let k = kernel_partition(&m).unwrap();
        assert_eq!(k.len(), 4);
    }

    #[test]
    fn metric_example_exact() {
        let m = behavioral_distances(&metric_system(), &IterationOptions::default()).unwrap();
        assert!(m.converged);
        assert!(m.iterations <= 4, "{}", m.iterations);
        for (a, b, v) in [
            ("x1", "y1", (3, 10)),
            ("x2", "y2", (1, 10)),
            ("x2", "y3", (3, 5)),
            ("x3", "y2", (1, 5)),
            ("x3", "y3", (3, 10)),
        ] {
            assert_eq!(m.by_name(a, b), Some(&Value::ratio(v.0, v.1)), "d({a},{b})");
        }
    }

    #[test]
    fn kantorovich_gives_the_same_matrix() {
        let opts = IterationOptions {
            method: LiftMethod::Kantorovich,
            ..Default::default()
        };
        let k = behavioral_distances(&metric_system(), &opts).unwrap();
        let w = behavioral_distances(&metric_system(), &IterationOptions::default()).unwrap();
        assert_eq!(k.entries, w.entries);
    }

    #[test]
    fn single_state() {
        let p = ProbTS {
            states: vec!["s".into()],
            transitions: vec![vec![]],
            terminate: vec![Rational::one()],
            discount: ratio(1, 2),
        };
        let m = behavioral_distances(&from_prob_ts(&p).unwrap(), &IterationOptions::default()).unwrap();
        assert_eq!(m.entries, vec![vec![Value::zero()]]);
        assert_eq!(m.iterations, 1);
        assert!(m.converged);
    }

    #[test]
    fn empty_system() {
        let p = ProbTS {
            states: vec![],
            transitions: vec![],
            terminate: vec![],
            discount: ratio(1, 2),
        };
        let m = behavioral_distances(&from_prob_ts(&p).unwrap(), &IterationOptions::default()).unwrap();
        assert!(m.is_empty() && m.converged);
        assert!(kernel_partition(&m).unwrap().is_empty());
    }

    #[test]
    fn exact_loops_report_non_convergence() {
        // d(a,b) = 1/2 + d(a,b)/4 approaches 2/3 without reaching it
        let p = ProbTS {
            states: vec!["a".into(), "b".into()],
            transitions: vec![vec![(0, Rational::one())], vec![(1, ratio(1, 2))]],
            terminate: vec![Rational::zero(), ratio(1, 2)],
            discount: ratio(1, 2),
        };
        let sys = from_prob_ts(&p).unwrap().with_mode(NumericMode::Exact);
        let opts = IterationOptions {
            max_iter: 20,
            trace: true,
            ..Default::default()
        };
        let run = iterate(&sys, &opts).unwrap();
        assert!(!run.matrix.converged);
        assert_eq!(run.matrix.iterations, 20);
        assert_eq!(run.trace.len(), 21);
        assert!(!run.matrix.residual.is_zero());
        assert!(matches!(kernel_partition(&run.matrix), Err(FixpointError::NotConverged)));
        for w in run.residuals.windows(2) {
            assert!(w[1] <= w[0].scale(&ratio(1, 2)));
        }
        let float = behavioral_distances(&sys.clone().with_mode(NumericMode::default()), &IterationOptions::default()).unwrap();
        assert!(float.converged);
    }

    #[test]
    fn bisimilarity_examples() {
        let b = bisimilarity_partition(&refusal_system());
        assert_eq!(b.len(), 4);
        let loops = ProbTS {
            states: vec!["a".into(), "b".into()],
            transitions: vec![vec![(0, Rational::one())], vec![(1, Rational::one())]],
            terminate: vec![Rational::zero(), Rational::zero()],
            discount: ratio(1, 2),
        };
        assert_eq!(bisimilarity_partition(&loops).blocks, vec![vec![0, 1]]);
        let m = behavioral_distances(&from_prob_ts(&loops).unwrap(), &IterationOptions::default()).unwrap();
        assert_eq!(kernel_partition(&m).unwrap().blocks, vec![vec![0, 1]]);
    }

    #[test]
    fn threads_do_not_change_results() {
        let sys = metric_system();
        let one = behavioral_distances(&sys, &IterationOptions { threads: Some(1), ..Default::default() }).unwrap();
        let four = behavioral_distances(&sys, &IterationOptions { threads: Some(4), ..Default::default() }).unwrap();
        assert_eq!(one, four);
    }

    #[test]
    fn json_and_csv() {
        let sys = from_prob_ts(&refusal_system()).unwrap();
        let m = behavioral_distances(&sys, &IterationOptions::default()).unwrap();
        assert_eq!(DistanceMatrix::from_json(&m.to_json()).unwrap(), m);
        let exact = behavioral_distances(&sys.with_mode(NumericMode::Exact), &IterationOptions::default()).unwrap();
        assert_eq!(DistanceMatrix::from_json(&exact.to_json()).unwrap(), exact);
        let csv = exact.to_csv();
        assert!(csv.starts_with(",x,y,u,z\n"));
        assert!(csv.lines().nth(1).unwrap().starts_with("x,0,9/200,"));
    }
}
