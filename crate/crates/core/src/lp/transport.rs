use std::collections::VecDeque;

use num_traits::{Signed, Zero};

use super::{solve, LinearProgram, LpError, Relation, Sense};
use crate::numerics::{Rational, Value};

/// A balanced transportation problem. Infinite costs mark forbidden cells.
#[derive(Debug, Clone, PartialEq)]
pub struct TransportationInstance {
    pub supply: Vec<Rational>,
    pub demand: Vec<Rational>,
    pub cost: Vec<Vec<Value>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TransportPlan {
    pub value: Value,
    pub plan: Vec<Vec<Rational>>,
}

impl TransportationInstance {
    pub fn validate(&self) -> Result<(), LpError> {
        let (m, n) = (self.supply.len(), self.demand.len());
        if m == 0 || n == 0 {
            return Err(LpError::Malformed("empty supply or demand".into()));
        }
        if self.cost.len() != m || self.cost.iter().any(|r| r.len() != n) {
            return Err(LpError::Malformed(format!("cost matrix is not {m}x{n}")));
        }
        if self.supply.iter().chain(&self.demand).any(|v| v.is_negative()) {
            return Err(LpError::Malformed("negative supply or demand".into()));
        }
        let s: Rational = self.supply.iter().sum();
        let d: Rational = self.demand.iter().sum();
        if s != d {
            return Err(LpError::Malformed(format!(
                "supply total {s} differs from demand total {d}"
            )));
        }
        Ok(())
    }

    fn all_exact(&self) -> bool {
        self.cost.iter().flatten().all(Value::is_exact)
    }

    /// `Σ cost·plan` with `0·∞ = 0`.
    pub fn plan_cost(&self, plan: &[Vec<Rational>]) -> Value {
        let mut total = Rational::zero();
        for (i, row) in plan.iter().enumerate() {
            for (j, x) in row.iter().enumerate() {
                if x.is_zero() {
                    continue;
                }
                match self.cost[i][j].to_rational() {
                    Some(c) => total += c * x,
                    None => return Value::Infinity,
                }
            }
        }
        Value::from_computed(total, self.all_exact())
    }

    /// The independent coupling `supply ⊗ demand / total`.
    fn product_plan(&self) -> Vec<Vec<Rational>> {
        let total: Rational = self.supply.iter().sum();
        self.supply
            .iter()
            .map(|s| {
                self.demand
                    .iter()
                    .map(|d| {
                        if total.is_zero() {
                            Rational::zero()
                        } else {
                            s * d / &total
                        }
                    })
                    .collect()
            })
            .collect()
    }
}

/// Minimum-cost coupling. Uses the network simplex when every cost is finite,
/// the general simplex otherwise.
pub fn solve_transportation(inst: &TransportationInstance) -> Result<TransportPlan, LpError> {
    inst.validate()?;
    if inst.cost.iter().flatten().all(|c| !c.is_infinite()) {
        solve_transportation_network(inst)
    } else {
        solve_transportation_simplex(inst)
    }
}

/// Reduction to the general simplex: one variable per finite-cost cell.
pub fn solve_transportation_simplex(
    inst: &TransportationInstance,
) -> Result<TransportPlan, LpError> {
    inst.validate()?;
    let (m, n) = (inst.supply.len(), inst.demand.len());
    let cells: Vec<(usize, usize, Rational)> = (0..m)
        .flat_map(|i| (0..n).map(move |j| (i, j)))
        .filter_map(|(i, j)| inst.cost[i][j].to_rational().map(|c| (i, j, c)))
        .collect();
    let mut lp = LinearProgram::new(
        Sense::Minimize,
        cells.iter().map(|(_, _, c)| c.clone()).collect(),
    );
    for i in 0..m {
        let terms: Vec<_> = cells
            .iter()
            .enumerate()
            .filter(|(_, (r, _, _))| *r == i)
            .map(|(k, _)| (k, Rational::from_integer(1.into())))
            .collect();
        lp.add_sparse(&terms, Relation::Eq, inst.supply[i].clone());
    }
    for j in 0..n {
        let terms: Vec<_> = cells
            .iter()
            .enumerate()
            .filter(|(_, (_, c, _))| *c == j)
            .map(|(k, _)| (k, Rational::from_integer(1.into())))
            .collect();
        lp.add_sparse(&terms, Relation::Eq, inst.demand[j].clone());
    }
    match solve(&lp) {
        Ok(sol) => {
            let mut plan = vec![vec![Rational::zero(); n]; m];
            for ((i, j, _), x) in cells.iter().zip(sol.witness) {
                plan[*i][*j] = x;
            }
            let value = inst.plan_cost(&plan);
            Ok(TransportPlan { value, plan })
        }
        // Every coupling uses a forbidden cell.
        Err(LpError::Infeasible) => Ok(TransportPlan {
            value: Value::Infinity,
            plan: inst.product_plan(),
        }),
        Err(e) => Err(e),
    }
}

/// Transportation simplex on the bipartite supply/demand graph. The basis is
/// a spanning tree of `m + n - 1` cells; pivots follow Bland's rule on the
/// cell index `i·n + j`. Requires finite costs.
pub fn solve_transportation_network(
    inst: &TransportationInstance,
) -> Result<TransportPlan, LpError> {
    inst.validate()?;
    let (m, n) = (inst.supply.len(), inst.demand.len());
    let mut cost = vec![vec![Rational::zero(); n]; m];
    for i in 0..m {
        for j in 0..n {
            cost[i][j] = inst.cost[i][j].to_rational().ok_or_else(|| {
                LpError::Malformed("network simplex needs finite costs".into())
            })?;
        }
    }

    // Northwest-corner start; always yields m + n - 1 connected cells.
    let mut flow = vec![vec![Rational::zero(); n]; m];
    let mut basic = vec![vec![false; n]; m];
    let mut s = inst.supply.clone();
    let mut d = inst.demand.clone();
    let (mut i, mut j) = (0, 0);
    loop {
        let x = if s[i] < d[j] { s[i].clone() } else { d[j].clone() };
        s[i] -= &x;
        d[j] -= &x;
        flow[i][j] = x;
        basic[i][j] = true;
        if i == m - 1 && j == n - 1 {
            break;
        }
        if j == n - 1 || (s[i].is_zero() && i < m - 1) {
            i += 1;
        } else {
            j += 1;
        }
    }

    loop {
        // Potentials u_i + v_j = c_ij on the tree, u_0 = 0.
        let mut u: Vec<Option<Rational>> = vec![None; m];
        let mut v: Vec<Option<Rational>> = vec![None; n];
        u[0] = Some(Rational::zero());
        let mut queue = VecDeque::from([Node::Row(0)]);
        while let Some(node) = queue.pop_front() {
            match node {
                Node::Row(r) => {
                    let ur = u[r].clone().expect("visited row has a potential");
                    for c in 0..n {
                        if basic[r][c] && v[c].is_none() {
                            v[c] = Some(&cost[r][c] - &ur);
                            queue.push_back(Node::Col(c));
                        }
                    }
                }
                Node::Col(c) => {
                    let vc = v[c].clone().expect("visited column has a potential");
                    for r in 0..m {
                        if basic[r][c] && u[r].is_none() {
                            u[r] = Some(&cost[r][c] - &vc);
                            queue.push_back(Node::Row(r));
                        }
                    }
                }
            }
        }
        let u: Vec<Rational> = u.into_iter().map(|x| x.expect("basis spans all rows")).collect();
        let v: Vec<Rational> = v.into_iter().map(|x| x.expect("basis spans all columns")).collect();

        let entering = (0..m * n).map(|k| (k / n, k % n)).find(|&(r, c)| {
            !basic[r][c] && (&cost[r][c] - &u[r] - &v[c]).is_negative()
        });
        let Some((er, ec)) = entering else {
            break;
        };

        // Tree path from row `er` to column `ec`; the cycle closes through
        // the entering cell. Cells on the path alternate -, +, -, ...
        let path = tree_path(&basic, er, ec);
        let minus: Vec<(usize, usize)> = path.iter().step_by(2).copied().collect();
        let theta = minus
            .iter()
            .map(|&(r, c)| flow[r][c].clone())
            .min()
            .expect("cycle has a minus cell");
        let (lr, lc) = *minus
            .iter()
            .filter(|&&(r, c)| flow[r][c] == theta)
            .min_by_key(|&&(r, c)| r * n + c)
            .expect("minimum is attained");
        for (k, &(r, c)) in path.iter().enumerate() {
            if k % 2 == 0 {
                flow[r][c] -= &theta;
            } else {
                flow[r][c] += &theta;
            }
        }
        flow[er][ec] += &theta;
        basic[er][ec] = true;
        basic[lr][lc] = false;
    }

    let value = inst.plan_cost(&flow);
    Ok(TransportPlan { value, plan: flow })
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Node {
    Row(usize),
    Col(usize),
}

/// Basic cells on the unique tree path from row `from` to column `to`,
/// ordered starting at the row end.
fn tree_path(basic: &[Vec<bool>], from: usize, to: usize) -> Vec<(usize, usize)> {
    let (m, n) = (basic.len(), basic[0].len());
    // parent pointers in a BFS rooted at Row(from)
    let mut row_parent: Vec<Option<usize>> = vec![None; m];
    let mut col_parent: Vec<Option<usize>> = vec![None; n];
    let mut seen_row = vec![false; m];
    let mut seen_col = vec![false; n];
    seen_row[from] = true;
    let mut queue = VecDeque::from([Node::Row(from)]);
    while let Some(node) = queue.pop_front() {
        match node {
            Node::Row(r) => {
                for c in 0..n {
                    if basic[r][c] && !seen_col[c] {
                        seen_col[c] = true;
                        col_parent[c] = Some(r);
                        queue.push_back(Node::Col(c));
                    }
                }
            }
            Node::Col(c) => {
                for r in 0..m {
                    if basic[r][c] && !seen_row[r] {
                        seen_row[r] = true;
                        row_parent[r] = Some(c);
                        queue.push_back(Node::Row(r));
                    }
                }
            }
        }
    }
    let mut path = Vec::new();
    let mut c = to;
    loop {
        let r = col_parent[c].expect("tree is spanning");
        path.push((r, c));
        if r == from {
            break;
        }
        c = row_parent[r].expect("tree is spanning");
        path.push((r, c));
    }
    // collected from the column end; the first cell touching `to` must be a
    // minus cell, which is already at an even index counted from that end
    path
}
