//! Small dense linear programs for the Frank-Wolfe subproblems.
//!
//! [`solve_lp`] is a two-phase tableau simplex with Dantzig pricing that falls
//! back to Bland's rule after a run of degenerate pivots. It always returns a
//! vertex. [`solve_diagonal_lp`] solves the diagonal-step LP (lower bounds plus
//! a single trace cap) in closed form.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Absolute feasibility tolerance for returned points.
pub const FEASIBILITY_TOL: f64 = 1e-9;

const PIVOT_TOL: f64 = 1e-11;
const COST_TOL: f64 = 1e-11;
/// Consecutive degenerate pivots before switching to Bland's rule.
const DEGENERATE_LIMIT: usize = 50;
const MAX_PIVOTS: usize = 100_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Sense {
    Le,
    Ge,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Constraint {
    pub coeffs: Vec<f64>,
    pub sense: Sense,
    pub rhs: f64,
}

impl Constraint {
    pub fn le(coeffs: Vec<f64>, rhs: f64) -> Self {
        Self {
            coeffs,
            sense: Sense::Le,
            rhs,
        }
    }

    pub fn ge(coeffs: Vec<f64>, rhs: f64) -> Self {
        Self {
            coeffs,
            sense: Sense::Ge,
            rhs,
        }
    }

    /// Signed violation of the constraint at `x` (positive when violated).
    pub fn violation(&self, x: &[f64]) -> f64 {
        let lhs: f64 = self.coeffs.iter().zip(x).map(|(a, b)| a * b).sum();
        match self.sense {
            Sense::Le => lhs - self.rhs,
            Sense::Ge => self.rhs - lhs,
        }
    }
}

/// Minimize `objective . x` subject to the constraints and variable bounds.
/// Bounds may be infinite.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearProgram {
    pub objective: Vec<f64>,
    pub constraints: Vec<Constraint>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub point: Vec<f64>,
    pub objective_value: f64,
    pub status: LpStatus,
}

impl LpSolution {
    fn infeasible(n: usize) -> Self {
        Self {
            point: vec![f64::NAN; n],
            objective_value: f64::NAN,
            status: LpStatus::Infeasible,
        }
    }

    fn unbounded(n: usize) -> Self {
        Self {
            point: vec![f64::NAN; n],
            objective_value: f64::NEG_INFINITY,
            status: LpStatus::Unbounded,
        }
    }
}

impl LinearProgram {
    /// A program with free variables and no constraints.
    pub fn new(objective: Vec<f64>) -> Self {
        let n = objective.len();
        Self {
            objective,
            constraints: Vec::new(),
            lower: vec![f64::NEG_INFINITY; n],
            upper: vec![f64::INFINITY; n],
        }
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn with_bounds(mut self, lower: Vec<f64>, upper: Vec<f64>) -> Self {
        self.lower = lower;
        self.upper = upper;
        self
    }

    pub fn push(&mut self, c: Constraint) {
        self.constraints.push(c);
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.num_vars();
        if n == 0 {
            return Err(Error::InvalidArgument("LP has no variables".into()));
        }
        for len in [self.lower.len(), self.upper.len()] {
            if len != n {
                return Err(Error::DimensionMismatch { expected: n, found: len });
            }
        }
        if self.objective.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidArgument("LP objective must be finite".into()));
        }
        for c in &self.constraints {
            if c.coeffs.len() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    found: c.coeffs.len(),
                });
            }
            if c.coeffs.iter().any(|a| !a.is_finite()) || !c.rhs.is_finite() {
                return Err(Error::InvalidArgument("LP constraint must be finite".into()));
            }
        }
        for i in 0..n {
            let (l, u) = (self.lower[i], self.upper[i]);
            if l.is_nan() || u.is_nan() || l == f64::INFINITY || u == f64::NEG_INFINITY {
                return Err(Error::InvalidArgument(format!("invalid bounds for variable {i}")));
            }
            let constrained = self.constraints.iter().any(|c| c.coeffs[i] != 0.0);
            if !constrained && !l.is_finite() && !u.is_finite() {
                return Err(Error::InvalidArgument(format!(
                    "variable {i} has no finite bound and appears in no constraint"
                )));
            }
        }
        Ok(())
    }

    /// Largest violation over every constraint and finite bound at `x`.
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        let mut worst = 0.0_f64;
        for c in &self.constraints {
            worst = worst.max(c.violation(x));
        }
        for (i, &xi) in x.iter().enumerate() {
            worst = worst.max(self.lower[i] - xi).max(xi - self.upper[i]);
        }
        worst
    }

    /// Number of constraints and finite bounds holding with equality at `x`
    /// (within `tol`).
    pub fn active_count(&self, x: &[f64], tol: f64) -> usize {
        let mut count = self
            .constraints
            .iter()
            .filter(|c| c.violation(x).abs() <= tol)
            .count();
        for (i, &xi) in x.iter().enumerate() {
            if self.lower[i].is_finite() && (xi - self.lower[i]).abs() <= tol {
                count += 1;
            }
            if self.upper[i].is_finite() && (xi - self.upper[i]).abs() <= tol {
                count += 1;
            }
        }
        count
    }

    pub fn objective_at(&self, x: &[f64]) -> f64 {
        self.objective.iter().zip(x).map(|(a, b)| a * b).sum()
    }
}

/// How an original variable is expressed through non-negative tableau columns.
#[derive(Debug, Clone, Copy)]
enum VarMap {
    /// `x = offset + y`
    Shifted { col: usize, offset: f64 },
    /// `x = offset - y`
    Reflected { col: usize, offset: f64 },
    /// `x = y_plus - y_minus`
    Split { plus: usize, minus: usize },
}

struct Tableau {
    /// `rows x (cols + 1)`; the last column holds the right-hand side.
    rows: Vec<Vec<f64>>,
    basis: Vec<usize>,
    cols: usize,
}

impl Tableau {
    fn rhs(&self, r: usize) -> f64 {
        self.rows[r][self.cols]
    }

    fn pivot(&mut self, pr: usize, pc: usize, cost: &mut [f64]) {
        let width = self.cols + 1;
        let p = self.rows[pr][pc];
        for v in self.rows[pr].iter_mut() {
            *v /= p;
        }
        let pivot_row = self.rows[pr].clone();
        for (r, row) in self.rows.iter_mut().enumerate() {
            if r == pr {
                continue;
            }
            let f = row[pc];
            if f != 0.0 {
                for j in 0..width {
                    row[j] -= f * pivot_row[j];
                }
                row[pc] = 0.0;
            }
        }
        let f = cost[pc];
        if f != 0.0 {
            for j in 0..width {
                cost[j] -= f * pivot_row[j];
            }
            cost[pc] = 0.0;
        }
        self.basis[pr] = pc;
    }

    /// Runs primal simplex on `cost` (reduced-cost row, last entry is minus the
    /// objective value). Returns `false` if unbounded.
    fn optimize(&mut self, cost: &mut [f64], allowed: &[bool]) -> Result<bool> {
        let mut degenerate_run = 0;
        for _ in 0..MAX_PIVOTS {
            let bland = degenerate_run >= DEGENERATE_LIMIT;
            let entering = if bland {
                (0..self.cols).find(|&j| allowed[j] && cost[j] < -COST_TOL)
            } else {
                (0..self.cols)
                    .filter(|&j| allowed[j] && cost[j] < -COST_TOL)
                    .min_by(|&a, &b| cost[a].total_cmp(&cost[b]).then(a.cmp(&b)))
            };
            let Some(pc) = entering else {
                return Ok(true);
            };

            let mut leave: Option<(usize, f64)> = None;
            for r in 0..self.rows.len() {
                let a = self.rows[r][pc];
                if a > PIVOT_TOL {
                    let ratio = self.rhs(r).max(0.0) / a;
                    leave = match leave {
                        None => Some((r, ratio)),
                        Some((br, best)) => {
                            if ratio < best - 1e-12 * best.abs().max(1.0)
                                || (ratio <= best + 1e-12 * best.abs().max(1.0)
                                    && self.basis[r] < self.basis[br])
                            {
                                Some((r, ratio))
                            } else {
                                Some((br, best))
                            }
                        }
                    };
                }
            }
            let Some((pr, ratio)) = leave else {
                return Ok(false);
            };
            if ratio <= 1e-12 {
                degenerate_run += 1;
            } else {
                degenerate_run = 0;
            }
            self.pivot(pr, pc, cost);
        }
        Err(Error::InvalidArgument(format!(
            "simplex exceeded {MAX_PIVOTS} pivots"
        )))
    }
}

/// Solves `lp` to a vertex optimum, or reports infeasibility/unboundedness.
pub fn solve_lp(lp: &LinearProgram) -> Result<LpSolution> {
    lp.validate()?;
    let n = lp.num_vars();

    // variable substitution so that every tableau column is non-negative
    let mut maps = Vec::with_capacity(n);
    let mut ycols = 0;
    let mut bound_rows: Vec<(usize, f64)> = Vec::new();
    for i in 0..n {
        let (l, u) = (lp.lower[i], lp.upper[i]);
        if l.is_finite() {
            maps.push(VarMap::Shifted { col: ycols, offset: l });
            if u.is_finite() {
                bound_rows.push((ycols, u - l));
            }
            ycols += 1;
        } else if u.is_finite() {
            maps.push(VarMap::Reflected { col: ycols, offset: u });
            ycols += 1;
        } else {
            maps.push(VarMap::Split {
                plus: ycols,
                minus: ycols + 1,
            });
            ycols += 2;
        }
    }
    if bound_rows.iter().any(|&(_, width)| width < -FEASIBILITY_TOL) {
        return Ok(LpSolution::infeasible(n));
    }

    // rows in y-space: (coeffs, sense, rhs)
    let mut rows: Vec<(Vec<f64>, Sense, f64)> = Vec::new();
    for c in &lp.constraints {
        let mut a = vec![0.0; ycols];
        let mut rhs = c.rhs;
        for (i, &ci) in c.coeffs.iter().enumerate() {
            if ci == 0.0 {
                continue;
            }
            match maps[i] {
                VarMap::Shifted { col, offset } => {
                    a[col] += ci;
                    rhs -= ci * offset;
                }
                VarMap::Reflected { col, offset } => {
                    a[col] -= ci;
                    rhs -= ci * offset;
                }
                VarMap::Split { plus, minus } => {
                    a[plus] += ci;
                    a[minus] -= ci;
                }
            }
        }
        rows.push((a, c.sense, rhs));
    }
    for &(col, width) in &bound_rows {
        let mut a = vec![0.0; ycols];
        a[col] = 1.0;
        rows.push((a, Sense::Le, width.max(0.0)));
    }
    for (a, sense, rhs) in rows.iter_mut() {
        if *rhs < 0.0 {
            a.iter_mut().for_each(|v| *v = -*v);
            *rhs = -*rhs;
            *sense = match sense {
                Sense::Le => Sense::Ge,
                Sense::Ge => Sense::Le,
            };
        }
    }

    let m = rows.len();
    let n_slack = m;
    let n_art = rows.iter().filter(|r| r.1 == Sense::Ge).count();
    let cols = ycols + n_slack + n_art;
    let mut tab = Tableau {
        rows: Vec::with_capacity(m),
        basis: Vec::with_capacity(m),
        cols,
    };
    let mut art = ycols + n_slack;
    for (r, (a, sense, rhs)) in rows.iter().enumerate() {
        let mut row = vec![0.0; cols + 1];
        row[..ycols].copy_from_slice(a);
        row[cols] = *rhs;
        match sense {
            Sense::Le => {
                row[ycols + r] = 1.0;
                tab.basis.push(ycols + r);
            }
            Sense::Ge => {
                row[ycols + r] = -1.0;
                row[art] = 1.0;
                tab.basis.push(art);
                art += 1;
            }
        }
        tab.rows.push(row);
    }
    let is_art = |j: usize| j >= ycols + n_slack;

    // phase one
    if n_art > 0 {
        let mut cost = vec![0.0; cols + 1];
        for j in (ycols + n_slack)..cols {
            cost[j] = 1.0;
        }
        for r in 0..m {
            if is_art(tab.basis[r]) {
                for j in 0..=cols {
                    cost[j] -= tab.rows[r][j];
                }
            }
        }
        let allowed = vec![true; cols];
        tab.optimize(&mut cost, &allowed)?;
        let scale = rows.iter().fold(1.0_f64, |acc, r| acc.max(r.2.abs()));
        if -cost[cols] > FEASIBILITY_TOL * scale {
            return Ok(LpSolution::infeasible(n));
        }
        // drive remaining artificials out of the basis
        let mut r = 0;
        while r < tab.rows.len() {
            if is_art(tab.basis[r]) {
                let pc = (0..ycols + n_slack)
                    .filter(|&j| tab.rows[r][j].abs() > 1e-9)
                    .max_by(|&a, &b| tab.rows[r][a].abs().total_cmp(&tab.rows[r][b].abs()));
                match pc {
                    Some(pc) => {
                        let mut dummy = vec![0.0; cols + 1];
                        tab.pivot(r, pc, &mut dummy);
                    }
                    None => {
                        // redundant row
                        tab.rows.remove(r);
                        tab.basis.remove(r);
                        continue;
                    }
                }
            }
            r += 1;
        }
    }

    // phase two
    let mut c_y = vec![0.0; cols + 1];
    for (i, &ci) in lp.objective.iter().enumerate() {
        match maps[i] {
            VarMap::Shifted { col, .. } => c_y[col] += ci,
            VarMap::Reflected { col, .. } => c_y[col] -= ci,
            VarMap::Split { plus, minus } => {
                c_y[plus] += ci;
                c_y[minus] -= ci;
            }
        }
    }
    let mut cost = c_y.clone();
    for r in 0..tab.rows.len() {
        let cb = c_y[tab.basis[r]];
        if cb != 0.0 {
            for j in 0..=cols {
                cost[j] -= cb * tab.rows[r][j];
            }
        }
    }
    let allowed: Vec<bool> = (0..cols).map(|j| !is_art(j)).collect();
    if !tab.optimize(&mut cost, &allowed)? {
        return Ok(LpSolution::unbounded(n));
    }

    let mut y = vec![0.0; cols];
    for (r, &b) in tab.basis.iter().enumerate() {
        y[b] = tab.rhs(r).max(0.0);
    }
    let point: Vec<f64> = maps
        .iter()
        .map(|map| match *map {
            VarMap::Shifted { col, offset } => offset + y[col],
            VarMap::Reflected { col, offset } => offset - y[col],
            VarMap::Split { plus, minus } => y[plus] - y[minus],
        })
        .zip(lp.lower.iter().zip(&lp.upper))
        .map(|(x, (&lo, &hi))| x.min(hi).max(lo))
        .collect();
    let objective_value = lp.objective_at(&point);

    let violation = lp.max_violation(&point);
    if violation > FEASIBILITY_TOL {
        log::warn!("simplex point violates constraints by {violation:e}");
    }
    Ok(LpSolution {
        point,
        objective_value,
        status: LpStatus::Optimal,
    })
}

/// Closed-form vertex of `min g.x` s.t. `x >= lower`, `sum x <= cap`.
///
/// Every variable sits at its lower bound and the remaining slack goes to the
/// most negative gradient entry (lowest index on ties), or nowhere when no
/// entry is negative.
pub fn solve_diagonal_lp(gradient: &[f64], lower_bounds: &[f64], trace_cap: f64) -> Result<LpSolution> {
    if gradient.len() != lower_bounds.len() {
        return Err(Error::DimensionMismatch {
            expected: gradient.len(),
            found: lower_bounds.len(),
        });
    }
    if gradient.is_empty() {
        return Err(Error::InvalidArgument("LP has no variables".into()));
    }
    if gradient.iter().chain(lower_bounds).any(|v| !v.is_finite()) || !trace_cap.is_finite() {
        return Err(Error::InvalidArgument("diagonal LP data must be finite".into()));
    }
    let total: f64 = lower_bounds.iter().sum();
    if total > trace_cap + 1e-12 * trace_cap.abs().max(1.0) {
        return Ok(LpSolution::infeasible(gradient.len()));
    }
    let mut point = lower_bounds.to_vec();
    let slack = (trace_cap - total).max(0.0);
    let best = gradient
        .iter()
        .enumerate()
        .filter(|(_, g)| **g < 0.0)
        .min_by(|a, b| a.1.total_cmp(b.1).then(a.0.cmp(&b.0)));
    if let Some((i, _)) = best {
        point[i] += slack;
    }
    let objective_value = gradient.iter().zip(&point).map(|(a, b)| a * b).sum();
    Ok(LpSolution {
        point,
        objective_value,
        status: LpStatus::Optimal,
    })
}

/// Closed-form vertex of `min c.y` s.t. `lower <= y <= upper`, `sum y <= budget`.
///
/// Starting from the lower bounds, the remaining budget fills variables in
/// order of increasing cost (lowest index on ties), each up to its upper
/// bound, while the cost is negative. Upper bounds may be infinite.
pub fn solve_box_knapsack(cost: &[f64], lower: &[f64], upper: &[f64], budget: f64) -> Result<LpSolution> {
    let n = cost.len();
    for len in [lower.len(), upper.len()] {
        if len != n {
            return Err(Error::DimensionMismatch { expected: n, found: len });
        }
    }
    if n == 0 {
        return Err(Error::InvalidArgument("LP has no variables".into()));
    }
    if cost.iter().chain(lower).any(|v| !v.is_finite()) || upper.iter().any(|v| v.is_nan()) || !budget.is_finite() {
        return Err(Error::InvalidArgument("knapsack LP data must be finite".into()));
    }
    let total: f64 = lower.iter().sum();
    let scale = lower.iter().fold(budget.abs(), |a, l| a.max(l.abs())).max(1.0);
    if lower.iter().zip(upper).any(|(l, u)| l > u) || total > budget + 1e-12 * scale {
        return Ok(LpSolution::infeasible(n));
    }
    let mut point = lower.to_vec();
    let mut slack = (budget - total).max(0.0);
    let mut order: Vec<usize> = (0..n).filter(|&i| cost[i] < 0.0).collect();
    order.sort_by(|&a, &b| cost[a].total_cmp(&cost[b]).then(a.cmp(&b)));
    for i in order {
        if slack <= 0.0 {
            break;
        }
        let add = (upper[i] - lower[i]).min(slack);
        point[i] += add;
        slack -= add;
    }
    let objective_value = cost.iter().zip(&point).map(|(a, b)| a * b).sum();
    Ok(LpSolution {
        point,
        objective_value,
        status: LpStatus::Optimal,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn knapsack_matches_simplex() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(21);
        for _ in 0..300 {
            let n = rng.random_range(1..10);
            let cost: Vec<f64> = (0..n).map(|_| rng.random_range(-2.0..2.0)).collect();
            let lower: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..0.5)).collect();
            let upper: Vec<f64> = lower
                .iter()
                .map(|l| if rng.random_bool(0.2) { f64::INFINITY } else { l + rng.random_range(0.0..1.0) })
                .collect();
            let budget = lower.iter().sum::<f64>() + rng.random_range(-0.2..2.0);
            let closed = solve_box_knapsack(&cost, &lower, &upper, budget).unwrap();
            let mut lp = LinearProgram::new(cost.clone()).with_bounds(lower.clone(), upper.clone());
            lp.push(Constraint::le(vec![1.0; n], budget));
            let simplex = solve_lp(&lp).unwrap();
            assert_eq!(closed.status, simplex.status);
            if closed.status == LpStatus::Optimal {
                assert!((closed.objective_value - simplex.objective_value).abs() <= 1e-9);
                assert!(lp.max_violation(&closed.point) <= 1e-12);
            }
        }
        let sol = solve_box_knapsack(&[-1.0, -3.0, 2.0], &[0.0, 0.0, 0.5], &[1.0, 0.25, 1.0], 1.0).unwrap();
        assert_eq!(sol.point, vec![0.25, 0.25, 0.5]);
    }

    #[test]
    fn lower_bounds_active() {
        let mut lp = LinearProgram::new(vec![1.0, 1.0]);
        lp.push(Constraint::ge(vec![1.0, 0.0], 1.0));
        lp.push(Constraint::ge(vec![0.0, 1.0], 2.0));
        lp.push(Constraint::le(vec![1.0, 1.0], 10.0));
        let sol = solve_lp(&lp).unwrap();
        assert_eq!(sol.status, LpStatus::Optimal);
        assert_relative_eq!(sol.point[0], 1.0, epsilon = 1e-12);
        assert_relative_eq!(sol.point[1], 2.0, epsilon = 1e-12);
        assert_relative_eq!(sol.objective_value, 3.0, epsilon = 1e-12);
    }

    #[test]
    fn single_variable_upper() {
        let mut lp = LinearProgram::new(vec![-1.0]);
        lp.push(Constraint::le(vec![1.0], 5.0));
        lp.push(Constraint::ge(vec![1.0], 0.0));
        let sol = solve_lp(&lp).unwrap();
        assert_eq!(sol.status, LpStatus::Optimal);
        assert_relative_eq!(sol.point[0], 5.0);
        assert_relative_eq!(sol.objective_value, -5.0);
    }

    #[test]
    fn infeasible_and_unbounded() {
        let mut lp = LinearProgram::new(vec![1.0]);
        lp.push(Constraint::ge(vec![1.0], 3.0));
        lp.push(Constraint::le(vec![1.0], 2.0));
        assert_eq!(solve_lp(&lp).unwrap().status, LpStatus::Infeasible);

        let mut lp = LinearProgram::new(vec![-1.0, 0.0]);
        lp.push(Constraint::ge(vec![1.0, -1.0], 0.0));
        lp.push(Constraint::le(vec![0.0, 1.0], 1.0));
        assert_eq!(solve_lp(&lp).unwrap().status, LpStatus::Unbounded);

        let lp = LinearProgram::new(vec![1.0]).with_bounds(vec![2.0], vec![1.0]);
        assert_eq!(solve_lp(&lp).unwrap().status, LpStatus::Infeasible);
    }

    #[test]
    fn bounds_of_every_kind() {
        // x0 in [1, 3], x1 <= 4, x2 free but tied by constraints
        let mut lp = LinearProgram::new(vec![-1.0, -1.0, 1.0])
            .with_bounds(vec![1.0, f64::NEG_INFINITY, f64::NEG_INFINITY], vec![3.0, 4.0, f64::INFINITY]);
        lp.push(Constraint::ge(vec![0.0, 0.0, 1.0], -2.0));
        lp.push(Constraint::ge(vec![0.0, 1.0, 0.0], -10.0));
        let sol = solve_lp(&lp).unwrap();
        assert_eq!(sol.status, LpStatus::Optimal);
        assert_relative_eq!(sol.point[0], 3.0, epsilon = 1e-12);
        assert_relative_eq!(sol.point[1], 4.0, epsilon = 1e-12);
        assert_relative_eq!(sol.point[2], -2.0, epsilon = 1e-12);
    }

    #[test]
    fn degenerate_vertex() {
        // several constraints meet at the optimum (0, 0)
        let mut lp = LinearProgram::new(vec![1.0, 1.0]).with_bounds(vec![0.0, 0.0], vec![1.0, 1.0]);
        lp.push(Constraint::ge(vec![1.0, 1.0], 0.0));
        lp.push(Constraint::ge(vec![1.0, -1.0], 0.0));
        lp.push(Constraint::ge(vec![-1.0, 1.0], 0.0));
        let sol = solve_lp(&lp).unwrap();
        assert_eq!(sol.status, LpStatus::Optimal);
        assert!(sol.objective_value.abs() < 1e-12);
        assert!(lp.active_count(&sol.point, 1e-9) >= 2);
    }

    #[test]
    fn malformed_programs_rejected() {
        let mut lp = LinearProgram::new(vec![1.0, 1.0]);
        lp.push(Constraint::le(vec![1.0], 1.0));
        assert!(matches!(solve_lp(&lp), Err(Error::DimensionMismatch { .. })));

        let lp = LinearProgram::new(vec![1.0, 1.0]).with_bounds(vec![0.0, f64::NEG_INFINITY], vec![1.0, f64::INFINITY]);
        assert!(solve_lp(&lp).is_err());
    }

    #[test]
    fn diagonal_lp_examples() {
        let sol = solve_diagonal_lp(&[-1.0, -3.0, 2.0], &[1.0, 1.0, 1.0], 6.0).unwrap();
        assert_eq!(sol.point, vec![1.0, 4.0, 1.0]);

        let sol = solve_diagonal_lp(&[1.0, 0.5, 2.0], &[1.0, 2.0, 3.0], 10.0).unwrap();
        assert_eq!(sol.point, vec![1.0, 2.0, 3.0]);

        let sol = solve_diagonal_lp(&[-1.0, -1.0], &[2.0, 2.0], 4.0).unwrap();
        assert_eq!(sol.point, vec![2.0, 2.0]);

        let sol = solve_diagonal_lp(&[-1.0, -1.0], &[2.0, 2.0], 5.0).unwrap();
        assert_eq!(sol.point, vec![3.0, 2.0]);

        let sol = solve_diagonal_lp(&[-1.0, -1.0], &[3.0, 2.0], 4.0).unwrap();
        assert_eq!(sol.status, LpStatus::Infeasible);

        assert!(solve_diagonal_lp(&[1.0], &[1.0, 2.0], 4.0).is_err());
    }

    #[test]
    fn diagonal_lp_agrees_with_simplex_on_example() {
        let (g, lb, cap) = ([-1.0, -3.0, 2.0], [1.0, 1.0, 1.0], 6.0);
        let mut lp = LinearProgram::new(g.to_vec()).with_bounds(lb.to_vec(), vec![f64::INFINITY; 3]);
        lp.push(Constraint::le(vec![1.0; 3], cap));
        let a = solve_lp(&lp).unwrap();
        let b = solve_diagonal_lp(&g, &lb, cap).unwrap();
        assert_relative_eq!(a.objective_value, b.objective_value, epsilon = 1e-9);
        assert_eq!(a.point, b.point);
    }
}
