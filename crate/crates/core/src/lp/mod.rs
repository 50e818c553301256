//! Exact-rational linear programming.
//!
//! [`solve`] is a dense two-phase tableau simplex using Bland's rule, so it
//! terminates on degenerate problems. [`solve_transportation`] handles the
//! balanced transportation problem that underlies the Wasserstein distance
//! between distributions.

mod simplex;
mod transport;

use num_traits::Zero;
use thiserror::Error;

use crate::numerics::Rational;

pub use transport::{
    solve_transportation, solve_transportation_network, solve_transportation_simplex,
    TransportPlan, TransportationInstance,
};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LpError {
    #[error("linear program is infeasible")]
    Infeasible,
    #[error("linear program is unbounded")]
    Unbounded,
    #[error("malformed linear program: {0}")]
    Malformed(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    Le,
    Eq,
    Ge,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Maximize,
    Minimize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Constraint {
    pub coeffs: Vec<Rational>,
    pub relation: Relation,
    pub rhs: Rational,
}

/// Box bounds `lo ≤ x ≤ hi`; `hi = None` means no upper bound.
#[derive(Debug, Clone, PartialEq)]
pub struct VarBound {
    pub lo: Rational,
    pub hi: Option<Rational>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearProgram {
    pub bounds: Vec<VarBound>,
    pub constraints: Vec<Constraint>,
    pub objective: Vec<Rational>,
    pub sense: Sense,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub value: Rational,
    pub witness: Vec<Rational>,
}

impl LinearProgram {
    pub fn new(sense: Sense, objective: Vec<Rational>) -> Self {
        let n = objective.len();
        LinearProgram {
            bounds: vec![
                VarBound {
                    lo: Rational::zero(),
                    hi: None
                };
                n
            ],
            constraints: Vec::new(),
            objective,
            sense,
        }
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn set_bounds(&mut self, var: usize, lo: Rational, hi: Option<Rational>) {
        self.bounds[var] = VarBound { lo, hi };
    }

    pub fn add_constraint(&mut self, coeffs: Vec<Rational>, relation: Relation, rhs: Rational) {
        self.constraints.push(Constraint {
            coeffs,
            relation,
            rhs,
        });
    }

    /// Add `Σ coeff·x relation rhs` given as sparse `(var, coeff)` terms.
    pub fn add_sparse(&mut self, terms: &[(usize, Rational)], relation: Relation, rhs: Rational) {
        let mut coeffs = vec![Rational::zero(); self.num_vars()];
        for (j, c) in terms {
            coeffs[*j] += c;
        }
        self.add_constraint(coeffs, relation, rhs);
    }

    pub fn validate(&self) -> Result<(), LpError> {
        let n = self.num_vars();
        if self.bounds.len() != n {
            return Err(LpError::Malformed(format!(
                "{} bounds for {n} variables",
                self.bounds.len()
            )));
        }
        for (i, c) in self.constraints.iter().enumerate() {
            if c.coeffs.len() != n {
                return Err(LpError::Malformed(format!(
                    "constraint {i} has {} coefficients, expected {n}",
                    c.coeffs.len()
                )));
            }
        }
        for (j, b) in self.bounds.iter().enumerate() {
            if let Some(hi) = &b.hi {
                if *hi < b.lo {
                    return Err(LpError::Malformed(format!("variable {j} has lo > hi")));
                }
            }
        }
        Ok(())
    }

    pub fn objective_at(&self, x: &[Rational]) -> Rational {
        self.objective
            .iter()
            .zip(x)
            .fold(Rational::zero(), |acc, (c, v)| acc + c * v)
    }

    /// Whether `x` satisfies every bound and constraint exactly.
    pub fn is_feasible(&self, x: &[Rational]) -> bool {
        if x.len() != self.num_vars() {
            return false;
        }
        let bounds_ok = self.bounds.iter().zip(x).all(|(b, v)| {
            *v >= b.lo && b.hi.as_ref().is_none_or(|hi| v <= hi)
        });
        bounds_ok
            && self.constraints.iter().all(|c| {
                let lhs = c
                    .coeffs
                    .iter()
                    .zip(x)
                    .fold(Rational::zero(), |acc, (a, v)| acc + a * v);
                match c.relation {
                    Relation::Le => lhs <= c.rhs,
                    Relation::Eq => lhs == c.rhs,
                    Relation::Ge => lhs >= c.rhs,
                }
            })
    }
}

/// Solve a bounded LP exactly. The returned witness is an optimal vertex.
pub fn solve(lp: &LinearProgram) -> Result<LpSolution, LpError> {
    lp.validate()?;
    simplex::solve(lp)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{int, ratio};
    use proptest::prelude::*;

    fn unit_box(n: usize, sense: Sense, obj: Vec<Rational>) -> LinearProgram {
        let mut lp = LinearProgram::new(sense, obj);
        for j in 0..n {
            lp.set_bounds(j, int(0), Some(int(1)));
        }
        lp
    }

    #[test]
    fn single_variable_box() {
        let lp = unit_box(1, Sense::Maximize, vec![int(1)]);
        let sol = solve(&lp).unwrap();
        assert_eq!(sol.value, int(1));
        assert_eq!(sol.witness, vec![int(1)]);
    }

    #[test]
    fn simplex_constraint() {
        let mut lp = unit_box(2, Sense::Maximize, vec![int(1), int(1)]);
        lp.add_constraint(vec![int(1), int(1)], Relation::Le, int(1));
        let sol = solve(&lp).unwrap();
        assert_eq!(sol.value, int(1));
        assert!(lp.is_feasible(&sol.witness));
    }

    // Vertices of {0 ≤ f ≤ 1, |f(a) - f(b)| ≤ 1/3} enumerated by hand:
    // (0,0) (1/3,0) (0,1/3) (1,1) (1,2/3) (2/3,1). The objective
    // f(a)·(1/2 - 1) + f(b)·(1/2 - 0) = (f(b) - f(a))/2 peaks at 1/6.
    #[test]
    fn kantorovich_two_points() {
        let mut lp = unit_box(2, Sense::Maximize, vec![ratio(-1, 2), ratio(1, 2)]);
        lp.add_constraint(vec![int(1), int(-1)], Relation::Le, ratio(1, 3));
        lp.add_constraint(vec![int(-1), int(1)], Relation::Le, ratio(1, 3));
        let vertices = [
            (int(0), int(0)),
            (ratio(1, 3), int(0)),
            (int(0), ratio(1, 3)),
            (int(1), int(1)),
            (int(1), ratio(2, 3)),
            (ratio(2, 3), int(1)),
        ];
        let best = vertices
            .iter()
            .map(|(a, b)| lp.objective_at(&[a.clone(), b.clone()]))
            .max()
            .unwrap();
        assert_eq!(best, ratio(1, 6));
        assert_eq!(solve(&lp).unwrap().value, best);
    }

    #[test]
    fn infeasible_and_unbounded() {
        let mut lp = unit_box(1, Sense::Maximize, vec![int(1)]);
        lp.add_constraint(vec![int(1)], Relation::Ge, int(2));
        assert_eq!(solve(&lp), Err(LpError::Infeasible));

        let lp = LinearProgram::new(Sense::Maximize, vec![int(1)]);
        assert_eq!(solve(&lp), Err(LpError::Unbounded));
    }

    #[test]
    fn minimize_with_equalities_and_shifted_bounds() {
        // min x + 2y  s.t. x + y = 3, x ≤ 2, y ≥ 1/2
        let mut lp = LinearProgram::new(Sense::Minimize, vec![int(1), int(2)]);
        lp.set_bounds(0, int(0), Some(int(2)));
        lp.set_bounds(1, ratio(1, 2), None);
        lp.add_constraint(vec![int(1), int(1)], Relation::Eq, int(3));
        let sol = solve(&lp).unwrap();
        assert_eq!(sol.value, int(4));
        assert_eq!(sol.witness, vec![int(2), int(1)]);
    }

    #[test]
    fn redundant_equalities() {
        // x + y = 1 stated twice, plus its double
        let mut lp = unit_box(2, Sense::Maximize, vec![int(2), int(1)]);
        lp.add_constraint(vec![int(1), int(1)], Relation::Eq, int(1));
        lp.add_constraint(vec![int(1), int(1)], Relation::Eq, int(1));
        lp.add_constraint(vec![int(2), int(2)], Relation::Eq, int(2));
        assert_eq!(solve(&lp).unwrap().value, int(2));
    }

    #[test]
    fn malformed_is_rejected() {
        let mut lp = unit_box(2, Sense::Maximize, vec![int(1), int(1)]);
        lp.constraints.push(Constraint {
            coeffs: vec![int(1)],
            relation: Relation::Le,
            rhs: int(1),
        });
        assert!(matches!(solve(&lp), Err(LpError::Malformed(_))));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        // The witness is feasible and attains the reported value.
        #[test]
        fn witness_attains_value(
            obj in proptest::collection::vec(-5i64..6, 3),
            rows in proptest::collection::vec((proptest::collection::vec(-3i64..4, 3), 0i64..6, 0u8..3), 0..4),
        ) {
            let mut lp = unit_box(3, Sense::Maximize, obj.iter().map(|&c| int(c)).collect());
            for (coeffs, rhs, rel) in rows {
                let rel = match rel { 0 => Relation::Le, 1 => Relation::Ge, _ => Relation::Eq };
                lp.add_constraint(coeffs.iter().map(|&c| int(c)).collect(), rel, int(rhs));
            }
            match solve(&lp) {
                Ok(sol) => {
                    prop_assert!(lp.is_feasible(&sol.witness));
                    prop_assert_eq!(lp.objective_at(&sol.witness), sol.value);
                }
                Err(e) => prop_assert_eq!(e, LpError::Infeasible),
            }
        }
    }
}
