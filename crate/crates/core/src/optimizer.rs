//! Projection-free metric learning over graph metric matrices.
//!
//! The loop alternates a Frank-Wolfe pass over the diagonal with
//! block-coordinate Frank-Wolfe passes over one off-diagonal column at a time.
//! Positive definiteness is never projected onto: each pass keeps the scaled
//! Gershgorin left-ends of `S M S^-1` above `rho`, with `S = diag(1/v)` taken
//! from the first eigenvector `v` of the incumbent. Refreshing `S` from the
//! incumbent keeps it feasible because its left-ends then all equal
//! `lambda_min`.

use serde::{Deserialize, Serialize};

use crate::eigen::{self, EigenPair};
use crate::error::{Error, Result};
use crate::linalg::{
    alignment_scalars, scaled_left_ends, scaled_radius, validate_graph_metric, GershgorinScalars,
    GraphMetric, SymmetricMatrix, DEFAULT_PD_TOL,
};
use crate::lp::{self, LpStatus};
#[cfg(test)]
use crate::lp::{Constraint, LinearProgram};
use crate::objective::{LineRestriction, Objective};

/// Slack allowed on `rho` when checking the scaled disc constraints.
pub const FEASIBILITY_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StepRule {
    /// Exact minimization of the objective on the segment toward the LP vertex.
    LineSearch,
    /// `gamma_k = 2 / (k + 2)`.
    Diminishing,
}

impl std::str::FromStr for StepRule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "line_search" => Ok(StepRule::LineSearch),
            "diminishing" => Ok(StepRule::Diminishing),
            other => Err(Error::Config(format!("unknown step rule `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizerConfig {
    /// Upper bound `C` on the trace.
    pub trace_cap: f64,
    /// Margin `rho` kept between every scaled disc left-end and zero.
    pub rho: f64,
    /// Initial off-diagonal magnitude and the floor kept on one edge per column.
    pub epsilon: f64,
    pub fw_max_iters: usize,
    pub outer_max_iters: usize,
    pub bcd_sweeps: usize,
    pub obj_rel_tol: f64,
    pub fw_step: StepRule,
    /// LOBPCG residual tolerance for the scalar updates.
    pub eig_tol: f64,
    pub eig_max_iters: usize,
}

impl OptimizerConfig {
    /// Defaults for `k` features: `C = K`, `rho = 1e-4 C/K`, `epsilon = 1e-3 C/K`.
    pub fn for_dim(k: usize) -> Self {
        Self::with_trace_cap(k, k as f64)
    }

    pub fn with_trace_cap(k: usize, trace_cap: f64) -> Self {
        let unit = trace_cap / k.max(1) as f64;
        Self {
            trace_cap,
            rho: 1e-4 * unit,
            epsilon: 1e-3 * unit,
            fw_max_iters: 100,
            outer_max_iters: 50,
            bcd_sweeps: 1,
            obj_rel_tol: 1e-6,
            fw_step: StepRule::LineSearch,
            eig_tol: 1e-11,
            eig_max_iters: eigen::DEFAULT_MAX_ITERS,
        }
    }

    pub fn validate(&self, k: usize) -> Result<()> {
        let positive = [
            ("trace_cap", self.trace_cap),
            ("rho", self.rho),
            ("epsilon", self.epsilon),
            ("obj_rel_tol", self.obj_rel_tol),
            ("eig_tol", self.eig_tol),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Config(format!("{name} must be positive and finite, got {v}")));
            }
        }
        for (name, v) in [
            ("fw_max_iters", self.fw_max_iters),
            ("outer_max_iters", self.outer_max_iters),
            ("bcd_sweeps", self.bcd_sweeps),
            ("eig_max_iters", self.eig_max_iters),
        ] {
            if v == 0 {
                return Err(Error::Config(format!("{name} must be positive")));
            }
        }
        let unit = self.trace_cap / k as f64;
        if !(self.rho < unit) {
            return Err(Error::Config(format!(
                "rho = {} must be below C/K = {unit}",
                self.rho
            )));
        }
        if !(unit > 2.0 * self.epsilon + self.rho) {
            return Err(Error::Config(format!(
                "C/K = {unit} must exceed 2 epsilon + rho = {}",
                2.0 * self.epsilon + self.rho
            )));
        }
        Ok(())
    }
}

/// Where an iterate was produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Diagonal,
    OffDiagonal { col: usize },
}

/// Observes intermediate optimizer states. All methods default to no-ops.
pub trait Monitor {
    /// Called right after the alignment scalars are refreshed.
    fn scalars_updated(&mut self, _state: &OptimizerState) {}

    /// Called for every accepted Frank-Wolfe iterate.
    fn iterate(&mut self, _stage: Stage, _matrix: &SymmetricMatrix) {}
}

pub struct NoMonitor;

impl Monitor for NoMonitor {}

#[derive(Debug, Clone)]
pub struct OptimizerState {
    pub metric: GraphMetric,
    /// Scalars defining the current linear constraints.
    pub scalars: GershgorinScalars,
    /// Eigenpair the scalars were derived from.
    pub eigpair: EigenPair,
    pub objective_trace: Vec<f64>,
    pub iteration: usize,
    /// LOBPCG iteration counts, one per scalar update.
    pub lobpcg_iterations: Vec<usize>,
    /// Frank-Wolfe gap at the end of the last step.
    pub last_fw_gap: f64,
}

impl OptimizerState {
    /// Starts from a certified metric with scalars aligned to it.
    pub fn new(metric: GraphMetric, objective: &dyn Objective) -> Result<Self> {
        let scalars = alignment_scalars(&metric)?;
        let eigpair = certificate_pair(&metric);
        let q = objective.value(metric.matrix())?;
        Ok(Self {
            metric,
            scalars,
            eigpair,
            objective_trace: vec![q],
            iteration: 0,
            lobpcg_iterations: Vec::new(),
            last_fw_gap: 0.0,
        })
    }

    pub fn objective(&self) -> f64 {
        *self.objective_trace.last().expect("trace starts non-empty")
    }
}

fn certificate_pair(metric: &GraphMetric) -> EigenPair {
    let vector = metric.eigvec().to_vec();
    let residual = eigen::residual_norm(metric.matrix(), metric.lambda_min(), &vector);
    EigenPair {
        value: metric.lambda_min(),
        vector,
        residual,
    }
}

/// One row of the per-outer-iteration trace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iteration: usize,
    pub objective: f64,
    pub lambda_min: f64,
    pub trace: f64,
    pub fw_gap: f64,
}

#[derive(Debug, Clone)]
pub struct LearnedMetric {
    pub metric: GraphMetric,
    pub objective_trace: Vec<f64>,
    pub records: Vec<IterationRecord>,
}

/// Certifies `matrix` with LOBPCG started from `warm`, falling back to the
/// dense solver when LOBPCG does not converge.
fn certify(
    matrix: SymmetricMatrix,
    warm: &[f64],
    cfg: &OptimizerConfig,
) -> Result<(GraphMetric, usize)> {
    let (pair, iterations) =
        match eigen::smallest_eigenpair_lobpcg(&matrix, Some(warm), cfg.eig_tol, cfg.eig_max_iters) {
            Ok(sol) => (sol.pair, sol.iterations),
            Err(Error::NoConvergence { iterations, best }) => {
                log::debug!(
                    "LOBPCG stopped at residual {:e} after {iterations} iterations; using dense solver",
                    best.residual
                );
                (eigen::smallest_eigenpair_dense(&matrix)?, iterations)
            }
            Err(e) => return Err(e),
        };
    match GraphMetric::certify(matrix.clone(), &pair, DEFAULT_PD_TOL) {
        Ok(metric) => Ok((metric, iterations)),
        Err(rejection) if !rejection.is_disconnected() => {
            // a warm start can land on a higher eigenpair
            log::debug!("LOBPCG pair rejected ({rejection}); using dense solver");
            let dense = eigen::smallest_eigenpair_dense(&matrix)?;
            let metric = GraphMetric::certify(matrix, &dense, DEFAULT_PD_TOL).map_err(Error::Rejected)?;
            Ok((metric, iterations))
        }
        Err(rejection) => Err(Error::Rejected(rejection)),
    }
}

/// `C/K` on the diagonal and `-epsilon` on the path graph `j = i +- 1`.
pub fn init_metric(cfg: &OptimizerConfig, k: usize) -> Result<GraphMetric> {
    if k < 2 {
        return Err(Error::InvalidArgument(format!("need at least 2 features, got {k}")));
    }
    cfg.validate(k)?;
    let d = cfg.trace_cap / k as f64;
    let m = SymmetricMatrix::from_fn(k, |i, j| {
        if i == j {
            d
        } else if j == i + 1 {
            -cfg.epsilon
        } else {
            0.0
        }
    })?;
    validate_graph_metric(&m, DEFAULT_PD_TOL)
}

/// Recomputes the first eigenpair (warm-started from the previous one) and
/// resets the scalars to `1 / v`.
pub fn update_scalars(state: OptimizerState, cfg: &OptimizerConfig) -> Result<OptimizerState> {
    let matrix = state.metric.matrix().clone();
    let (metric, iterations) = certify(matrix, &state.eigpair.vector, cfg)?;
    let scalars = alignment_scalars(&metric)?;
    let left = scaled_left_ends(metric.matrix(), &scalars)?;
    let margin = left.iter().cloned().fold(f64::INFINITY, f64::min);
    if margin < cfg.rho - FEASIBILITY_SLACK {
        return Err(Error::Certification(format!(
            "incumbent violates refreshed disc constraints: margin {margin} < rho {}",
            cfg.rho
        )));
    }
    let eigpair = certificate_pair(&metric);
    let mut lobpcg_iterations = state.lobpcg_iterations;
    lobpcg_iterations.push(iterations);
    Ok(OptimizerState {
        metric,
        scalars,
        eigpair,
        lobpcg_iterations,
        ..state
    })
}

/// Minimizes the convex restriction `phi` on `[0, 1]`, returning the step.
fn exact_step(line: &dyn LineRestriction, phi0: f64) -> f64 {
    match line.slope(0.0) {
        Some(s0) => {
            if !(s0 < 0.0) {
                return 0.0;
            }
            let s1 = line.slope(1.0).unwrap_or(f64::NAN);
            if !(s1 > 0.0) {
                return 1.0;
            }
            // Illinois regula falsi on the monotone slope
            let (mut lo, mut hi, mut flo, mut fhi) = (0.0_f64, 1.0_f64, s0, s1);
            let mut side = 0;
            let mut t = 0.5;
            for _ in 0..200 {
                t = (lo * fhi - hi * flo) / (fhi - flo);
                if !(t > lo && t < hi) {
                    t = 0.5 * (lo + hi);
                }
                let ft = line.slope(t).unwrap_or(f64::NAN);
                if ft == 0.0 || hi - lo < 1e-14 || ft.is_nan() {
                    break;
                }
                if ft < 0.0 {
                    lo = t;
                    flo = ft;
                    if side == -1 {
                        fhi *= 0.5;
                    }
                    side = -1;
                } else {
                    hi = t;
                    fhi = ft;
                    if side == 1 {
                        flo *= 0.5;
                    }
                    side = 1;
                }
                if ft.abs() <= 1e-13 * s0.abs() {
                    break;
                }
            }
            t
        }
        None => {
            let ratio = 0.5 * (5.0_f64.sqrt() - 1.0);
            let (mut a, mut b) = (0.0_f64, 1.0_f64);
            let mut c = b - ratio * (b - a);
            let mut d = a + ratio * (b - a);
            let (mut fc, mut fd) = (line.value(c), line.value(d));
            while b - a > 1e-10 {
                if fc < fd {
                    b = d;
                    d = c;
                    fd = fc;
                    c = b - ratio * (b - a);
                    fc = line.value(c);
                } else {
                    a = c;
                    c = d;
                    fc = fd;
                    d = a + ratio * (b - a);
                    fd = line.value(d);
                }
            }
            let t = 0.5 * (a + b);
            let candidates = [(t, line.value(t)), (1.0, line.value(1.0)), (0.0, phi0)];
            candidates
                .into_iter()
                .min_by(|x, y| x.1.total_cmp(&y.1))
                .map(|x| x.0)
                .unwrap_or(0.0)
        }
    }
}

/// Step length toward the LP vertex for Frank-Wolfe iteration `k`.
fn step_length(
    objective: &dyn Objective,
    m: &SymmetricMatrix,
    direction: &SymmetricMatrix,
    q: f64,
    rule: StepRule,
    k: usize,
) -> Result<f64> {
    Ok(match rule {
        StepRule::Diminishing => 2.0 / (k as f64 + 2.0),
        StepRule::LineSearch => {
            let line = objective.line(m, direction)?;
            exact_step(line.as_ref(), q)
        }
    })
}

fn gap_tolerance(cfg: &OptimizerConfig, q: f64) -> f64 {
    cfg.obj_rel_tol * q.abs().max(1.0)
}

/// Outcome of accepting or rejecting a Frank-Wolfe move.
enum Move {
    Accepted(SymmetricMatrix, f64),
    Stalled,
}

fn try_move(
    objective: &dyn Objective,
    m: &SymmetricMatrix,
    direction: &SymmetricMatrix,
    gamma: f64,
    q: f64,
    rule: StepRule,
) -> Result<Move> {
    if !(gamma > 0.0) {
        return Ok(Move::Stalled);
    }
    let k = m.dim();
    let next = SymmetricMatrix::from_fn(k, |i, j| {
        let d = direction.get(i, j);
        if d == 0.0 {
            m.get(i, j)
        } else {
            m.get(i, j) + gamma * d
        }
    })?;
    let q_next = objective.value(&next)?;
    if rule == StepRule::LineSearch && !(q_next <= q) {
        return Ok(Move::Stalled);
    }
    Ok(Move::Accepted(next, q_next))
}

/// Frank-Wolfe on the diagonal under the scaled disc constraints and the
/// trace cap. Off-diagonal entries stay fixed.
pub fn diagonal_step(
    state: OptimizerState,
    objective: &dyn Objective,
    cfg: &OptimizerConfig,
) -> Result<OptimizerState> {
    diagonal_step_monitored(state, objective, cfg, &mut NoMonitor)
}

pub fn diagonal_step_monitored(
    state: OptimizerState,
    objective: &dyn Objective,
    cfg: &OptimizerConfig,
    monitor: &mut dyn Monitor,
) -> Result<OptimizerState> {
    let mut m = state.metric.matrix().clone();
    let k = m.dim();
    let s = &state.scalars;
    let lower: Vec<f64> = (0..k).map(|i| scaled_radius(&m, s, i, None) + cfg.rho).collect();
    let mut q = objective.value(&m)?;
    let mut gap = 0.0;
    let mut moved = false;

    for it in 0..cfg.fw_max_iters {
        let grad = objective.grad_diag(&m)?;
        let sol = lp::solve_diagonal_lp(&grad, &lower, cfg.trace_cap)?;
        if sol.status != LpStatus::Optimal {
            return Err(Error::Infeasible(format!(
                "diagonal LP: lower bounds sum to {} but trace cap is {}; check rho and trace_cap",
                lower.iter().sum::<f64>(),
                cfg.trace_cap
            )));
        }
        let x = m.diagonal();
        gap = x
            .iter()
            .zip(&sol.point)
            .zip(&grad)
            .map(|((xi, vi), gi)| (xi - vi) * gi)
            .sum();
        if gap <= gap_tolerance(cfg, q) {
            break;
        }
        let direction = SymmetricMatrix::from_diagonal(
            &x.iter().zip(&sol.point).map(|(xi, vi)| vi - xi).collect::<Vec<_>>(),
        )?;
        let gamma = step_length(objective, &m, &direction, q, cfg.fw_step, it)?;
        match try_move(objective, &m, &direction, gamma, q, cfg.fw_step)? {
            Move::Accepted(next, q_next) => {
                if !within_discs(&next, &state.scalars, cfg)? {
                    log::warn!("diagonal step left the scaled disc region; stopping");
                    break;
                }
                m = next;
                q = q_next;
                moved = true;
                monitor.iterate(Stage::Diagonal, &m);
            }
            Move::Stalled => break,
        }
    }

    let metric = if moved {
        certify(m, state.metric.eigvec(), cfg)?.0
    } else {
        state.metric
    };
    let mut objective_trace = state.objective_trace;
    objective_trace.push(q);
    Ok(OptimizerState {
        metric,
        objective_trace,
        last_fw_gap: gap,
        ..state
    })
}

/// Rows whose entry in column `col` must stay at or below `-epsilon`.
///
/// The graph keeping only edges of magnitude about `epsilon` or more, with
/// node `col` removed, splits into components; one row per component is
/// chosen, the one whose current entry in `col` is largest in magnitude
/// (lowest row on ties). When that graph is connected this is the single
/// largest-magnitude row.
fn anchor_rows(m: &SymmetricMatrix, col: usize, epsilon: f64) -> Vec<usize> {
    let k = m.dim();
    let threshold = epsilon * (1.0 - 1e-6);
    let mut seen = vec![false; k];
    seen[col] = true;
    let mut anchors = Vec::new();
    for start in 0..k {
        if seen[start] {
            continue;
        }
        seen[start] = true;
        let mut comp = vec![start];
        let mut stack = vec![start];
        while let Some(u) = stack.pop() {
            for v in 0..k {
                if !seen[v] && m.get(u, v).abs() >= threshold {
                    seen[v] = true;
                    comp.push(v);
                    stack.push(v);
                }
            }
        }
        comp.sort_unstable();
        let best = comp
            .iter()
            .copied()
            .max_by(|&a, &b| m.get(a, col).abs().total_cmp(&m.get(b, col).abs()).then(b.cmp(&a)))
            .expect("component is non-empty");
        anchors.push(best);
    }
    anchors.sort_unstable();
    anchors
}

/// Feasible region of the column LP in the scaled variables
/// `y_r = |m[r][col]| * s_col / s_r`, `r != col` ascending.
///
/// Row `col` of the scaled discs becomes `sum_r y_r <= m_cc - rho`, row `r`
/// bounds `y_r` alone, and the anchors and sign constraints become lower
/// bounds, so every vertex is a fractional knapsack solution.
struct ColumnRegion {
    rows: Vec<usize>,
    /// `s_col / s_r`.
    ratio: Vec<f64>,
    lower: Vec<f64>,
    upper: Vec<f64>,
    budget: f64,
}

impl ColumnRegion {
    fn new(m: &SymmetricMatrix, s: &GershgorinScalars, cfg: &OptimizerConfig, col: usize, anchors: &[usize]) -> Self {
        let rows: Vec<usize> = (0..m.dim()).filter(|&r| r != col).collect();
        let ratio: Vec<f64> = rows.iter().map(|&r| s.ratio(col, r)).collect();
        let mut lower = Vec::with_capacity(rows.len());
        let mut upper = Vec::with_capacity(rows.len());
        for (&r, &q) in rows.iter().zip(&ratio) {
            // row r: s_r |x_r| / s_col <= m_rr - rho - (rest of row r's scaled radius)
            let room = m.get(r, r) - cfg.rho - scaled_radius(m, s, r, Some(col));
            upper.push(room * q * q);
            lower.push(if anchors.contains(&r) { cfg.epsilon * q } else { 0.0 });
        }
        Self {
            rows,
            ratio,
            lower,
            upper,
            budget: m.get(col, col) - cfg.rho,
        }
    }

    fn to_x(&self, y: &[f64]) -> Vec<f64> {
        y.iter().zip(&self.ratio).map(|(y, q)| -y / q).collect()
    }

    fn to_y(&self, x: &[f64]) -> Vec<f64> {
        x.iter().zip(&self.ratio).map(|(x, q)| -x * q).collect()
    }

    /// Largest constraint violation of `x`, relative to each constraint's scale.
    fn violation(&self, x: &[f64]) -> f64 {
        let y = self.to_y(x);
        let mut worst = (y.iter().sum::<f64>() - self.budget) / self.budget.abs().max(1.0);
        for ((yi, lo), hi) in y.iter().zip(&self.lower).zip(&self.upper) {
            worst = worst
                .max((lo - yi) / lo.abs().max(1.0))
                .max((yi - hi) / hi.abs().max(1.0));
        }
        worst
    }

    /// Minimizer of `grad . x` over the region, in the `x` variables.
    fn vertex(&self, grad: &[f64]) -> Result<Option<Vec<f64>>> {
        let cost: Vec<f64> = grad.iter().zip(&self.ratio).map(|(g, q)| -g / q).collect();
        let sol = lp::solve_box_knapsack(&cost, &self.lower, &self.upper, self.budget)?;
        Ok((sol.status == LpStatus::Optimal).then(|| self.to_x(&sol.point)))
    }
}

/// The same region as [`ColumnRegion`] as a general LP in `x_r = m[r][col]`.
#[cfg(test)]
fn column_program(
    m: &SymmetricMatrix,
    s: &GershgorinScalars,
    cfg: &OptimizerConfig,
    col: usize,
    anchors: &[usize],
) -> LinearProgram {
    let k = m.dim();
    let rows: Vec<usize> = (0..k).filter(|&r| r != col).collect();
    let mut lower = Vec::with_capacity(k - 1);
    let mut upper = Vec::with_capacity(k - 1);
    for &r in &rows {
        let room = m.get(r, r) - cfg.rho - scaled_radius(m, s, r, Some(col));
        lower.push(-s.ratio(col, r) * room);
        upper.push(if anchors.contains(&r) { -cfg.epsilon } else { 0.0 });
    }
    let mut lp = LinearProgram::new(vec![0.0; k - 1]).with_bounds(lower, upper);
    let coeffs = rows.iter().map(|&r| -s.ratio(col, r)).collect();
    lp.push(Constraint::le(coeffs, m.get(col, col) - cfg.rho));
    lp
}

/// Frank-Wolfe over the off-diagonal entries of column `col` (mirrored into
/// row `col`). Skips the column, leaving the state unchanged, if its LP is
/// infeasible.
pub fn offdiag_step(
    state: OptimizerState,
    objective: &dyn Objective,
    cfg: &OptimizerConfig,
    col: usize,
) -> Result<OptimizerState> {
    offdiag_step_monitored(state, objective, cfg, col, &mut NoMonitor)
}

pub fn offdiag_step_monitored(
    state: OptimizerState,
    objective: &dyn Objective,
    cfg: &OptimizerConfig,
    col: usize,
    monitor: &mut dyn Monitor,
) -> Result<OptimizerState> {
    let mut m = state.metric.matrix().clone();
    let k = m.dim();
    if col >= k {
        return Err(Error::IndexOutOfRange { index: col, dim: k });
    }
    let anchors = anchor_rows(&m, col, cfg.epsilon);
    let region = ColumnRegion::new(&m, &state.scalars, cfg, col, &anchors);
    let rows = &region.rows;

    let x0: Vec<f64> = rows.iter().map(|&r| m.get(r, col)).collect();
    let violation = region.violation(&x0);
    if violation > 1e-6 {
        log::warn!("column {col}: incumbent violates its constraints by {violation:e}; skipping");
        return Ok(state);
    }

    let mut q = objective.value(&m)?;
    let mut gap = 0.0;
    let mut moved = false;
    for it in 0..cfg.fw_max_iters {
        let grad = objective.grad_offdiag_col(&m, col)?;
        let Some(vertex) = region.vertex(&grad)? else {
            log::warn!("column {col}: LP is infeasible; skipping column");
            return Ok(state);
        };
        let x: Vec<f64> = rows.iter().map(|&r| m.get(r, col)).collect();
        gap = x
            .iter()
            .zip(&vertex)
            .zip(&grad)
            .map(|((xi, vi), gi)| (xi - vi) * gi)
            .sum();
        if gap <= gap_tolerance(cfg, q) {
            break;
        }
        let mut direction = SymmetricMatrix::zeros(k)?;
        for ((&r, xi), vi) in rows.iter().zip(&x).zip(&vertex) {
            direction.set(r, col, vi - xi);
        }
        let gamma = step_length(objective, &m, &direction, q, cfg.fw_step, it)?;
        match try_move(objective, &m, &direction, gamma, q, cfg.fw_step)? {
            Move::Accepted(mut next, q_next) => {
                // vertices are non-positive; remove roundoff above zero
                for &r in rows {
                    if next.get(r, col) > 0.0 {
                        next.set(r, col, 0.0);
                    }
                }
                if !within_discs(&next, &state.scalars, cfg)? {
                    log::warn!("column {col}: step left the scaled disc region; stopping");
                    break;
                }
                m = next;
                q = q_next;
                moved = true;
                monitor.iterate(Stage::OffDiagonal { col }, &m);
            }
            Move::Stalled => break,
        }
    }

    let metric = if moved {
        certify(m, state.metric.eigvec(), cfg)?.0
    } else {
        state.metric
    };
    let mut objective_trace = state.objective_trace;
    objective_trace.push(q);
    Ok(OptimizerState {
        metric,
        objective_trace,
        last_fw_gap: gap,
        ..state
    })
}

/// Whether every scaled left-end is at least `rho` and the trace within `C`,
/// up to [`FEASIBILITY_SLACK`].
fn within_discs(m: &SymmetricMatrix, s: &GershgorinScalars, cfg: &OptimizerConfig) -> Result<bool> {
    let left = scaled_left_ends(m, s)?;
    Ok(left.iter().all(|&e| e >= cfg.rho - FEASIBILITY_SLACK)
        && m.trace() <= cfg.trace_cap + FEASIBILITY_SLACK)
}

/// Learns a graph metric minimizing `objective` under `tr(M) <= C`.
pub fn learn_metric(objective: &dyn Objective, cfg: &OptimizerConfig) -> Result<LearnedMetric> {
    learn_metric_monitored(objective, cfg, &mut NoMonitor)
}

pub fn learn_metric_monitored(
    objective: &dyn Objective,
    cfg: &OptimizerConfig,
    monitor: &mut dyn Monitor,
) -> Result<LearnedMetric> {
    let k = objective.dim();
    let metric = init_metric(cfg, k)?;
    let mut state = OptimizerState::new(metric, objective)?;
    let mut records = Vec::new();

    for outer in 0..cfg.outer_max_iters {
        let q_start = state.objective();

        state = update_scalars(state, cfg)?;
        monitor.scalars_updated(&state);
        state = diagonal_step_monitored(state, objective, cfg, monitor)?;
        for _ in 0..cfg.bcd_sweeps {
            for col in 0..k {
                state = update_scalars(state, cfg)?;
                monitor.scalars_updated(&state);
                state = offdiag_step_monitored(state, objective, cfg, col, monitor)?;
            }
        }
        state.iteration = outer + 1;

        let dense = eigen::smallest_eigenpair_dense(state.metric.matrix())?;
        if dense.value < cfg.rho - FEASIBILITY_SLACK {
            return Err(Error::Certification(format!(
                "iterate has lambda_min {} below rho {}",
                dense.value, cfg.rho
            )));
        }

        let q_end = state.objective();
        let record = IterationRecord {
            iteration: state.iteration,
            objective: q_end,
            lambda_min: state.metric.lambda_min(),
            trace: state.metric.matrix().trace(),
            fw_gap: state.last_fw_gap,
        };
        log::debug!(
            "iteration={} objective={:e} lambda_min={:e} trace={} fw_gap={:e}",
            record.iteration,
            record.objective,
            record.lambda_min,
            record.trace,
            record.fw_gap
        );
        records.push(record);

        if (q_start - q_end).abs() <= cfg.obj_rel_tol * q_start.abs().max(f64::MIN_POSITIVE) {
            break;
        }
    }

    Ok(LearnedMetric {
        metric: state.metric,
        objective_trace: state.objective_trace,
        records,
    })
}
