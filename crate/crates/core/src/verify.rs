//! Property checks on random instances, shared by the `verify` command and
//! the test suites. Each check returns the measured quantity; callers decide
//! what tolerance to hold it to.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;

use crate::eigen::{smallest_eigenpair_dense, smallest_eigenpair_lobpcg, DEFAULT_MAX_ITERS, DEFAULT_TOL};
use crate::error::Result;
use crate::linalg::{alignment_scalars, scaled_left_ends, GraphMetric, SymmetricMatrix, CONNECTIVITY_EPS};
use crate::lp::{solve_diagonal_lp, solve_lp, Constraint, LinearProgram};
use crate::objective::{Objective, ObjectiveContext};
use crate::optimizer::{learn_metric_monitored, Monitor, OptimizerConfig, OptimizerState, Stage};
use crate::random::{random_features, random_graph_metric, random_signs, two_cluster_instance};

/// Spread of the scaled left-ends under `s = 1/v`, relative to `max(1, lambda_min)`.
pub fn alignment_spread(g: &GraphMetric) -> Result<f64> {
    let s = alignment_scalars(g)?;
    let left = scaled_left_ends(g.matrix(), &s)?;
    let hi = left.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let lo = left.iter().cloned().fold(f64::INFINITY, f64::min);
    Ok((hi - lo) / g.lambda_min().max(1.0))
}

/// Smallest entry of the sign-normalized first eigenvector from the dense solver.
pub fn min_eigvec_entry(m: &SymmetricMatrix) -> Result<f64> {
    let v = smallest_eigenpair_dense(m)?.vector;
    let sign = if v.iter().sum::<f64>() < 0.0 { -1.0 } else { 1.0 };
    Ok(v.iter().map(|x| sign * x).fold(f64::INFINITY, f64::min))
}

/// `|lambda_lobpcg - lambda_dense|` from a cold start.
pub fn lobpcg_gap(m: &SymmetricMatrix) -> Result<f64> {
    let dense = smallest_eigenpair_dense(m)?.value;
    let iterative = smallest_eigenpair_lobpcg(m, None, DEFAULT_TOL, DEFAULT_MAX_ITERS)?.pair.value;
    Ok((dense - iterative).abs())
}

/// Objective gap between the closed-form diagonal LP and the simplex on a
/// random instance.
pub fn diagonal_lp_gap(rng: &mut ChaCha8Rng) -> Result<f64> {
    let k = rng.random_range(1..16);
    let g: Vec<f64> = (0..k).map(|_| StandardNormal.sample(rng)).collect();
    let lower: Vec<f64> = (0..k).map(|_| rng.random_range(0.0..1.0)).collect();
    let cap = lower.iter().sum::<f64>() + rng.random_range(0.0..3.0);
    let closed = solve_diagonal_lp(&g, &lower, cap)?;
    let mut lp = LinearProgram::new(g).with_bounds(lower, vec![f64::INFINITY; k]);
    lp.push(Constraint::le(vec![1.0; k], cap));
    let simplex = solve_lp(&lp)?;
    Ok((closed.objective_value - simplex.objective_value).abs())
}

/// A random objective with a random graph metric to evaluate it at.
pub fn random_objective(rng: &mut ChaCha8Rng) -> Result<(ObjectiveContext, SymmetricMatrix)> {
    let n = rng.random_range(4..30);
    let k = rng.random_range(2..8);
    let features = random_features(rng, n, k);
    let z = random_signs(rng, n);
    let ctx = ObjectiveContext::new(&features, &z)?;
    let m = random_graph_metric(rng, k)?.matrix().scale(0.3 / k as f64);
    Ok((ctx, m))
}

/// Largest relative deviation of the analytic gradient (diagonal and every
/// off-diagonal column) from central differences.
pub fn gradient_error(ctx: &ObjectiveContext, m: &SymmetricMatrix) -> Result<f64> {
    let k = m.dim();
    let h = 1e-5 * m.max_abs().max(1e-3);
    let fd = |i: usize, j: usize| -> Result<f64> {
        let mut plus = m.clone();
        plus.set(i, j, m.get(i, j) + h);
        let mut minus = m.clone();
        minus.set(i, j, m.get(i, j) - h);
        Ok((ctx.value(&plus)? - ctx.value(&minus)?) / (2.0 * h))
    };
    let mut analytic = ctx.grad_diag(m)?;
    let mut numeric = (0..k).map(|i| fd(i, i)).collect::<Result<Vec<_>>>()?;
    for col in 0..k {
        analytic.extend(ctx.grad_offdiag_col(m, col)?);
        for r in (0..k).filter(|&r| r != col) {
            numeric.push(fd(r, col)?);
        }
    }
    let scale = analytic.iter().fold(0.0_f64, |a, g| a.max(g.abs()));
    if scale == 0.0 {
        return Ok(numeric.iter().fold(0.0_f64, |a, g| a.max(g.abs())));
    }
    let worst = analytic
        .iter()
        .zip(&numeric)
        .fold(0.0_f64, |a, (x, y)| a.max((x - y).abs()));
    Ok(worst / scale)
}

/// Worst-case feasibility figures collected over one optimizer run.
#[derive(Debug, Clone, Default, Serialize)]
pub struct FeasibilityStats {
    pub scalar_updates: usize,
    pub iterates: usize,
    /// `min(scaled left-end) - rho` right after each scalar update, minimized.
    pub min_update_margin: f64,
    /// Largest `|scaled left-end - lambda_min|` right after a scalar update.
    pub max_alignment_error: f64,
    /// `min(dense lambda_min) - rho` over all iterates.
    pub min_iterate_margin: f64,
    /// `max(trace) - C` over all iterates.
    pub max_trace_excess: f64,
    pub max_offdiag: f64,
    pub disconnected_iterates: usize,
    /// Largest single-step increase of the objective trace.
    pub max_objective_increase: f64,
}

struct FeasibilityMonitor<'a> {
    cfg: &'a OptimizerConfig,
    stats: FeasibilityStats,
    error: Option<crate::error::Error>,
}

impl Monitor for FeasibilityMonitor<'_> {
    fn scalars_updated(&mut self, state: &OptimizerState) {
        self.stats.scalar_updates += 1;
        match scaled_left_ends(state.metric.matrix(), &state.scalars) {
            Ok(left) => {
                for e in left {
                    self.stats.min_update_margin = self.stats.min_update_margin.min(e - self.cfg.rho);
                    self.stats.max_alignment_error =
                        self.stats.max_alignment_error.max((e - state.metric.lambda_min()).abs());
                }
            }
            Err(e) => self.error = Some(e),
        }
        self.check(state.metric.matrix());
    }

    fn iterate(&mut self, _stage: Stage, m: &SymmetricMatrix) {
        self.stats.iterates += 1;
        self.check(m);
    }
}

impl FeasibilityMonitor<'_> {
    fn check(&mut self, m: &SymmetricMatrix) {
        match smallest_eigenpair_dense(m) {
            Ok(p) => self.stats.min_iterate_margin = self.stats.min_iterate_margin.min(p.value - self.cfg.rho),
            Err(e) => self.error = Some(e),
        }
        self.stats.max_trace_excess = self.stats.max_trace_excess.max(m.trace() - self.cfg.trace_cap);
        let k = m.dim();
        for i in 0..k {
            for j in i + 1..k {
                self.stats.max_offdiag = self.stats.max_offdiag.max(m.get(i, j));
            }
        }
        if !m.is_connected(CONNECTIVITY_EPS) {
            self.stats.disconnected_iterates += 1;
        }
    }
}

/// Runs the optimizer on `objective`, checking every scalar update and iterate.
pub fn optimizer_feasibility(objective: &dyn Objective, cfg: &OptimizerConfig) -> Result<FeasibilityStats> {
    let mut monitor = FeasibilityMonitor {
        cfg,
        stats: FeasibilityStats {
            min_update_margin: f64::INFINITY,
            min_iterate_margin: f64::INFINITY,
            max_trace_excess: f64::NEG_INFINITY,
            max_offdiag: f64::NEG_INFINITY,
            ..Default::default()
        },
        error: None,
    };
    let learned = learn_metric_monitored(objective, cfg, &mut monitor)?;
    if let Some(e) = monitor.error {
        return Err(e);
    }
    let mut stats = monitor.stats;
    stats.max_objective_increase = learned
        .objective_trace
        .windows(2)
        .map(|w| w[1] - w[0])
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(stats)
}

/// A small two-cluster learning problem with its default configuration.
pub fn random_learning_problem(rng: &mut ChaCha8Rng) -> Result<(ObjectiveContext, OptimizerConfig)> {
    let n = rng.random_range(10..30);
    let k = rng.random_range(2..7);
    let (_, _, ctx) = two_cluster_instance(rng, n, k, 1.0)?;
    Ok((ctx, OptimizerConfig::for_dim(k)))
}

/// Matrices and the preceding eigenvector at each scalar update of one run.
#[derive(Default)]
pub struct ScalarUpdateLog {
    pub matrices: Vec<SymmetricMatrix>,
    pub eigvecs: Vec<Vec<f64>>,
}

impl Monitor for ScalarUpdateLog {
    fn scalars_updated(&mut self, state: &OptimizerState) {
        self.matrices.push(state.metric.matrix().clone());
        self.eigvecs.push(state.eigpair.vector.clone());
    }
}

/// LOBPCG iteration counts on the scalar-update matrices of one run: warm
/// started from the previous update's eigenvector, and cold started.
pub fn warm_start_counts(log: &ScalarUpdateLog, tol: f64, limit: usize) -> Result<(Vec<usize>, Vec<usize>)> {
    let mut warm = Vec::new();
    let mut cold = Vec::new();
    for i in 1..log.matrices.len().min(limit + 1) {
        let m = &log.matrices[i];
        let count = |start: Option<&[f64]>| -> Result<usize> {
            match smallest_eigenpair_lobpcg(m, start, tol, DEFAULT_MAX_ITERS) {
                Ok(s) => Ok(s.iterations),
                Err(crate::error::Error::NoConvergence { iterations, .. }) => Ok(iterations),
                Err(e) => Err(e),
            }
        };
        warm.push(count(Some(&log.eigvecs[i - 1]))?);
        cold.push(count(None)?);
    }
    Ok((warm, cold))
}

/// One line of `verify` output.
#[derive(Debug, Clone, Serialize)]
pub struct CheckResult {
    pub name: String,
    pub cases: usize,
    pub worst: f64,
    pub tolerance: f64,
    pub passed: bool,
}

impl std::fmt::Display for CheckResult {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "{} {:<28} cases={:<5} worst={:.3e} tol={:.1e}",
            if self.passed { "PASS" } else { "FAIL" },
            self.name,
            self.cases,
            self.worst,
            self.tolerance
        )
    }
}

fn check(name: &str, cases: usize, worst: f64, tolerance: f64) -> CheckResult {
    CheckResult {
        name: name.into(),
        cases,
        worst,
        tolerance,
        passed: worst <= tolerance,
    }
}

/// Runs every property on `instances` random instances.
pub fn run_all(seed: u64, instances: usize) -> Result<Vec<CheckResult>> {
    use rand::SeedableRng;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();

    let mut spread = 0.0_f64;
    let mut positivity = f64::INFINITY;
    let mut eig_gap = 0.0_f64;
    for _ in 0..instances {
        let k = rng.random_range(2..=30);
        let g = random_graph_metric(&mut rng, k)?;
        spread = spread.max(alignment_spread(&g)?);
        positivity = positivity.min(min_eigvec_entry(g.matrix())?);
        eig_gap = eig_gap.max(lobpcg_gap(g.matrix())?);
    }
    out.push(check("disc alignment spread", instances, spread, 1e-8));
    out.push(check("eigenvector positivity", instances, 1e-10 - positivity, 0.0));
    out.push(check("lobpcg vs dense", instances, eig_gap, 1e-8));

    let mut lp_gap = 0.0_f64;
    for _ in 0..instances {
        lp_gap = lp_gap.max(diagonal_lp_gap(&mut rng)?);
    }
    out.push(check("diagonal lp vs simplex", instances, lp_gap, 1e-9));

    let mut grad = 0.0_f64;
    for _ in 0..instances {
        let (ctx, m) = random_objective(&mut rng)?;
        grad = grad.max(gradient_error(&ctx, &m)?);
    }
    out.push(check("gradient vs finite diff", instances, grad, 1e-5));

    let runs = instances.clamp(1, 20);
    let mut margin = f64::INFINITY;
    let mut iterate_margin = f64::INFINITY;
    let mut trace_excess = f64::NEG_INFINITY;
    let mut increase = f64::NEG_INFINITY;
    for _ in 0..runs {
        let (ctx, cfg) = random_learning_problem(&mut rng)?;
        let stats = optimizer_feasibility(&ctx, &cfg)?;
        margin = margin.min(stats.min_update_margin);
        iterate_margin = iterate_margin.min(stats.min_iterate_margin);
        trace_excess = trace_excess.max(stats.max_trace_excess);
        increase = increase.max(stats.max_objective_increase);
    }
    out.push(check("margin after scalar update", runs, -margin, 1e-9));
    out.push(check("iterate lambda_min margin", runs, -iterate_margin, 1e-9));
    out.push(check("trace excess", runs, trace_excess, 1e-9));
    out.push(check("objective increase", runs, increase, 1e-10));
    Ok(out)
}
