//! Finite coalgebras `α: X → FX` and the two concrete system classes that
//! compile to them.

mod json;

use std::collections::HashSet;
use std::sync::Arc;

use num_traits::{One, Signed, Zero};
use thiserror::Error;

use crate::functor::{ConstSpace, FStructure, FunctorExpr, PseudometricTable, ProductEval};
use crate::numerics::{format_rational, NumericMode, Rational, Top};

pub use json::{
    functor_from_json, functor_to_json, load_lift, load_metric_ts, load_prob_ts, load_system,
    load_system_str, load_system_with, mode_from_json, mode_to_json, serialize, structure_from_json,
    structure_to_json, table_from_json, table_to_json, LiftDocument,
};

/// A validation failure with a JSON-path-like location, e.g.
/// `$.transitions.x: weights sum to 9/10`.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{path}: {message}")]
pub struct SystemError {
    pub path: String,
    pub message: String,
}

impl SystemError {
    pub fn new(path: impl Into<String>, message: impl ToString) -> Self {
        SystemError {
            path: path.into(),
            message: message.to_string(),
        }
    }
}

/// A finite coalgebra: every state is mapped to an element of `F(states)`.
#[derive(Debug, Clone, PartialEq)]
pub struct System {
    pub states: Vec<String>,
    pub expr: FunctorExpr,
    pub alpha: Vec<FStructure>,
    pub top: Top,
    pub mode: NumericMode,
}

impl System {
    pub fn new(
        states: Vec<String>,
        expr: FunctorExpr,
        alpha: Vec<FStructure>,
        top: Top,
        mode: NumericMode,
    ) -> Result<Self, SystemError> {
        check_unique(&states, "$.states")?;
        expr.validate(&top).map_err(|e| SystemError::new("$.functor", e))?;
        if alpha.len() != states.len() {
            return Err(SystemError::new(
                "$.transitions",
                format!("{} states but {} transitions", states.len(), alpha.len()),
            ));
        }
        for (s, t) in states.iter().zip(&alpha) {
            t.validate(&expr, states.len())
                .map_err(|e| SystemError::new(format!("$.transitions.{s}"), e))?;
        }
        Ok(System {
            states,
            expr,
            alpha,
            top,
            mode,
        })
    }

    pub fn with_mode(mut self, mode: NumericMode) -> Self {
        self.mode = mode;
        self
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn state_index(&self, name: &str) -> Option<usize> {
        self.states.iter().position(|s| s == name)
    }
}

fn check_unique(names: &[String], path: &str) -> Result<(), SystemError> {
    let mut seen = HashSet::new();
    for (i, n) in names.iter().enumerate() {
        if !seen.insert(n.as_str()) {
            return Err(SystemError::new(format!("{path}[{i}]"), format!("duplicate name `{n}`")));
        }
    }
    Ok(())
}

/// A probabilistic transition system with termination: each state moves to
/// a successor or terminates, with probabilities summing to one.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbTS {
    pub states: Vec<String>,
    /// Successor indices with their probabilities, per state.
    pub transitions: Vec<Vec<(usize, Rational)>>,
    pub terminate: Vec<Rational>,
    pub discount: Rational,
}

impl ProbTS {
    pub fn validate(&self) -> Result<(), SystemError> {
        check_unique(&self.states, "$.states")?;
        let n = self.states.len();
        if !(self.discount.is_positive() && self.discount < Rational::one()) {
            return Err(SystemError::new(
                "$.discount",
                format!("discount must lie in (0,1), got {}", format_rational(&self.discount)),
            ));
        }
        if self.transitions.len() != n || self.terminate.len() != n {
            return Err(SystemError::new("$.transitions", "one entry per state is required"));
        }
        for (s, name) in self.states.iter().enumerate() {
            let path = format!("$.transitions.{name}");
            let mut total = self.terminate[s].clone();
            if total.is_negative() {
                return Err(SystemError::new(format!("$.terminate.{name}"), "negative probability"));
            }
            for (t, w) in &self.transitions[s] {
                if *t >= n {
                    return Err(SystemError::new(&path, format!("unknown successor index {t}")));
                }
                if w.is_negative() {
                    return Err(SystemError::new(&path, "negative probability"));
                }
                total += w;
            }
            if !total.is_one() {
                return Err(SystemError::new(
                    path,
                    format!("probabilities of state `{name}` sum to {}, not 1", format_rational(&total)),
                ));
            }
        }
        Ok(())
    }

    /// Probability of moving from `s` into the set `block`.
    pub fn mass_into(&self, s: usize, block: impl Fn(usize) -> bool) -> Rational {
        self.transitions[s]
            .iter()
            .filter(|(t, _)| block(*t))
            .fold(Rational::zero(), |acc, (_, w)| acc + w)
    }
}

/// The refusal composite `D(c·Id + 1)` with `⊤ = 1`; termination goes to
/// the `unit` branch.
pub fn from_prob_ts(p: &ProbTS) -> Result<System, SystemError> {
    p.validate()?;
    let alpha = (0..p.states.len())
        .map(|s| {
            let moves = p.transitions[s]
                .iter()
                .map(|(t, w)| (FStructure::left(FStructure::atom(*t)), w.clone()));
            let stop = (FStructure::right(FStructure::atom(0)), p.terminate[s].clone());
            FStructure::dist(moves.chain([stop]))
        })
        .collect();
    System::new(
        p.states.clone(),
        FunctorExpr::refusal(p.discount.clone(), Top::one()),
        alpha,
        Top::one(),
        NumericMode::default(),
    )
}

/// A transition system whose states carry valuations in pseudometric spaces.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricTS {
    pub states: Vec<String>,
    /// One distance table per proposition, under `⊤ = ∞`.
    pub propositions: Vec<(String, PseudometricTable)>,
    /// Per state, the atom index of each proposition.
    pub valuation: Vec<Vec<usize>>,
    /// Successor sets.
    pub tau: Vec<Vec<usize>>,
}

impl MetricTS {
    pub fn validate(&self) -> Result<(), SystemError> {
        check_unique(&self.states, "$.states")?;
        let names: Vec<String> = self.propositions.iter().map(|(n, _)| n.clone()).collect();
        check_unique(&names, "$.propositions")?;
        let n = self.states.len();
        for (name, table) in &self.propositions {
            if !table.top().is_infinite() {
                return Err(SystemError::new(format!("$.propositions.{name}"), "tables must use top = inf"));
            }
        }
        if self.valuation.len() != n || self.tau.len() != n {
            return Err(SystemError::new("$.valuation", "one entry per state is required"));
        }
        for (s, name) in self.states.iter().enumerate() {
            if self.valuation[s].len() != self.propositions.len() {
                return Err(SystemError::new(
                    format!("$.valuation.{name}"),
                    format!("expected {} propositions", self.propositions.len()),
                ));
            }
            for (k, &a) in self.valuation[s].iter().enumerate() {
                let (prop, table) = &self.propositions[k];
                if a >= table.len() {
                    return Err(SystemError::new(
                        format!("$.valuation.{name}.{prop}"),
                        format!("atom index {a} outside the carrier of `{prop}`"),
                    ));
                }
            }
            if let Some(t) = self.tau[s].iter().find(|&&t| t >= n) {
                return Err(SystemError::new(format!("$.successors.{name}"), format!("unknown state index {t}")));
            }
        }
        Ok(())
    }
}

/// `G × P_fin(Id)` under max with `⊤ = ∞`, where `G` is the product of the
/// proposition spaces, nested to the right.
pub fn from_metric_ts(m: &MetricTS) -> Result<System, SystemError> {
    m.validate()?;
    let spaces: Vec<Arc<ConstSpace>> = if m.propositions.is_empty() {
        vec![ConstSpace::unit(Top::Infinite)]
    } else {
        m.propositions
            .iter()
            .map(|(name, table)| ConstSpace::new(name.clone(), table.clone()))
            .collect()
    };
    let g = spaces
        .iter()
        .rev()
        .map(|s| FunctorExpr::constant(s.clone()))
        .reduce(|acc, c| FunctorExpr::product(c, acc, ProductEval::Max))
        .expect("at least one space");
    let expr = FunctorExpr::product(g, FunctorExpr::finpow(FunctorExpr::id()), ProductEval::Max);
    let alpha = (0..m.states.len())
        .map(|s| {
            let atoms: Vec<usize> = if m.propositions.is_empty() {
                vec![0]
            } else {
                m.valuation[s].clone()
            };
            let g = atoms
                .into_iter()
                .rev()
                .map(FStructure::atom)
                .reduce(|acc, a| FStructure::pair(a, acc))
                .expect("at least one atom");
            FStructure::pair(g, FStructure::set(m.tau[s].iter().map(|&t| FStructure::atom(t))))
        })
        .collect();
    System::new(m.states.clone(), expr, alpha, Top::Infinite, NumericMode::default())
}
