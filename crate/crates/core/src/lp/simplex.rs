use num_traits::{One, Signed, Zero};

use super::{LinearProgram, LpError, LpSolution, Relation, Sense};
use crate::numerics::Rational;

#[derive(Clone, Copy, PartialEq, Eq)]
enum ColKind {
    Structural,
    Slack,
    Artificial,
}

/// Dense tableau `B⁻¹A | B⁻¹b` over the shifted variables `x' = x - lo`.
struct Tableau {
    rows: Vec<Vec<Rational>>,
    rhs: Vec<Rational>,
    basis: Vec<usize>,
    kinds: Vec<ColKind>,
}

impl Tableau {
    fn ncols(&self) -> usize {
        self.kinds.len()
    }

    fn pivot(&mut self, r: usize, q: usize) {
        let p = self.rows[r][q].clone();
        if !p.is_one() {
            for v in self.rows[r].iter_mut() {
                if !v.is_zero() {
                    *v /= &p;
                }
            }
            self.rhs[r] /= &p;
        }
        let pivot_row = self.rows[r].clone();
        let nz: Vec<usize> = (0..pivot_row.len())
            .filter(|&j| !pivot_row[j].is_zero())
            .collect();
        let pivot_rhs = self.rhs[r].clone();
        for i in 0..self.rows.len() {
            if i == r || self.rows[i][q].is_zero() {
                continue;
            }
            let f = self.rows[i][q].clone();
            for &j in &nz {
                let delta = &f * &pivot_row[j];
                self.rows[i][j] -= delta;
            }
            if !pivot_rhs.is_zero() {
                self.rhs[i] -= &f * &pivot_rhs;
            }
        }
        self.basis[r] = q;
    }

    fn reduced_costs(&self, cost: &[Rational]) -> Vec<Rational> {
        let mut red = cost.to_vec();
        for (i, &b) in self.basis.iter().enumerate() {
            let cb = &cost[b];
            if cb.is_zero() {
                continue;
            }
            for (j, a) in self.rows[i].iter().enumerate() {
                if !a.is_zero() {
                    red[j] -= cb * a;
                }
            }
        }
        red
    }

    /// Maximize `cost · x'` from the current basic feasible solution using
    /// Bland's rule. Columns with `allowed[j] = false` never enter.
    fn run(&mut self, cost: &[Rational], allowed: &[bool]) -> Result<(), LpError> {
        loop {
            let red = self.reduced_costs(cost);
            let entering = (0..self.ncols())
                .find(|&j| allowed[j] && red[j].is_positive() && !self.basis.contains(&j));
            let Some(q) = entering else {
                return Ok(());
            };
            let mut leave: Option<(usize, Rational)> = None;
            for i in 0..self.rows.len() {
                let a = &self.rows[i][q];
                if !a.is_positive() {
                    continue;
                }
                let ratio = &self.rhs[i] / a;
                leave = match leave {
                    None => Some((i, ratio)),
                    Some((k, best)) => {
                        if ratio < best || (ratio == best && self.basis[i] < self.basis[k]) {
                            Some((i, ratio))
                        } else {
                            Some((k, best))
                        }
                    }
                };
            }
            match leave {
                None => return Err(LpError::Unbounded),
                Some((r, _)) => self.pivot(r, q),
            }
        }
    }
}

pub(super) fn solve(lp: &LinearProgram) -> Result<LpSolution, LpError> {
    let n = lp.num_vars();

    // Rows over shifted variables, upper bounds become explicit rows.
    let mut rows: Vec<(Vec<Rational>, Relation, Rational)> = Vec::new();
    for c in &lp.constraints {
        let shift = c
            .coeffs
            .iter()
            .zip(&lp.bounds)
            .fold(Rational::zero(), |acc, (a, b)| acc + a * &b.lo);
        rows.push((c.coeffs.clone(), c.relation, &c.rhs - shift));
    }
    for (j, b) in lp.bounds.iter().enumerate() {
        if let Some(hi) = &b.hi {
            let mut coeffs = vec![Rational::zero(); n];
            coeffs[j] = Rational::one();
            rows.push((coeffs, Relation::Le, hi - &b.lo));
        }
    }
    for (coeffs, rel, rhs) in rows.iter_mut() {
        if rhs.is_negative() {
            for a in coeffs.iter_mut() {
                *a = -a.clone();
            }
            *rhs = -rhs.clone();
            *rel = match rel {
                Relation::Le => Relation::Ge,
                Relation::Ge => Relation::Le,
                Relation::Eq => Relation::Eq,
            };
        }
    }

    let m = rows.len();
    let n_slack = rows.iter().filter(|r| r.1 != Relation::Eq).count();
    let n_art = rows.iter().filter(|r| r.1 != Relation::Le).count();
    let ncols = n + n_slack + n_art;
    let mut kinds = vec![ColKind::Structural; n];
    kinds.extend(std::iter::repeat_n(ColKind::Slack, n_slack));
    kinds.extend(std::iter::repeat_n(ColKind::Artificial, n_art));

    let mut t = Tableau {
        rows: Vec::with_capacity(m),
        rhs: Vec::with_capacity(m),
        basis: Vec::with_capacity(m),
        kinds,
    };
    let (mut next_slack, mut next_art) = (n, n + n_slack);
    for (coeffs, rel, rhs) in rows {
        let mut row = coeffs;
        row.resize(ncols, Rational::zero());
        match rel {
            Relation::Le => {
                row[next_slack] = Rational::one();
                t.basis.push(next_slack);
                next_slack += 1;
            }
            Relation::Ge => {
                row[next_slack] = -Rational::one();
                next_slack += 1;
                row[next_art] = Rational::one();
                t.basis.push(next_art);
                next_art += 1;
            }
            Relation::Eq => {
                row[next_art] = Rational::one();
                t.basis.push(next_art);
                next_art += 1;
            }
        }
        t.rows.push(row);
        t.rhs.push(rhs);
    }

    if n_art > 0 {
        let cost: Vec<Rational> = t
            .kinds
            .iter()
            .map(|k| {
                if *k == ColKind::Artificial {
                    -Rational::one()
                } else {
                    Rational::zero()
                }
            })
            .collect();
        let allowed = vec![true; ncols];
        t.run(&cost, &allowed)?;
        let infeasibility = t
            .basis
            .iter()
            .zip(&t.rhs)
            .filter(|(b, _)| t.kinds[**b] == ColKind::Artificial)
            .fold(Rational::zero(), |acc, (_, v)| acc + v);
        if infeasibility.is_positive() {
            return Err(LpError::Infeasible);
        }
        // Drive remaining (zero-level) artificials out, dropping redundant rows.
        let mut i = 0;
        while i < t.rows.len() {
            if t.kinds[t.basis[i]] != ColKind::Artificial {
                i += 1;
                continue;
            }
            let replacement =
                (0..ncols).find(|&j| t.kinds[j] != ColKind::Artificial && !t.rows[i][j].is_zero());
            match replacement {
                Some(q) => {
                    t.pivot(i, q);
                    i += 1;
                }
                None => {
                    t.rows.remove(i);
                    t.rhs.remove(i);
                    t.basis.remove(i);
                }
            }
        }
    }

    let mut cost = vec![Rational::zero(); ncols];
    for (j, c) in lp.objective.iter().enumerate() {
        cost[j] = match lp.sense {
            Sense::Maximize => c.clone(),
            Sense::Minimize => -c.clone(),
        };
    }
    let allowed: Vec<bool> = t.kinds.iter().map(|k| *k != ColKind::Artificial).collect();
    t.run(&cost, &allowed)?;

    let mut witness: Vec<Rational> = lp.bounds.iter().map(|b| b.lo.clone()).collect();
    for (i, &b) in t.basis.iter().enumerate() {
        if b < n {
            witness[b] += &t.rhs[i];
        }
    }
    let value = lp.objective_at(&witness);
    Ok(LpSolution { value, witness })
}
