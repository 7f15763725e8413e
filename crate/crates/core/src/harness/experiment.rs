use std::fmt::Write as _;
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::dataset::{standardize, Dataset};
use crate::classify::{argmax_lowest, graph_classify, knn_class_share, DEFAULT_K};
use crate::error::{Error, Result};
use crate::linalg::GraphMetric;
use crate::objective::ObjectiveContext;
use crate::optimizer::{learn_metric, OptimizerConfig, StepRule};

/// Name of the generator used for shuffles; echoed in reports.
pub const PRNG_NAME: &str = "ChaCha8 (rand_chacha, seed_from_u64)";

const MAX_RESTRATIFY: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClassifierKind {
    Knn,
    Graph,
}

impl ClassifierKind {
    pub fn name(self) -> &'static str {
        match self {
            ClassifierKind::Knn => "knn",
            ClassifierKind::Graph => "graph",
        }
    }
}

impl std::str::FromStr for ClassifierKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "knn" => Ok(ClassifierKind::Knn),
            "graph" => Ok(ClassifierKind::Graph),
            other => Err(Error::Config(format!("unknown classifier `{other}`"))),
        }
    }
}

/// Optimizer parameters that may be left to their dimension-dependent defaults.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OptimizerSettings {
    pub trace_cap: Option<f64>,
    pub rho: Option<f64>,
    pub epsilon: Option<f64>,
    pub fw_max_iters: Option<usize>,
    pub outer_max_iters: Option<usize>,
    pub bcd_sweeps: Option<usize>,
    pub obj_rel_tol: Option<f64>,
    pub fw_step: Option<StepRule>,
}

impl OptimizerSettings {
    /// Fills unset values with the defaults for `k` features.
    pub fn resolve(&self, k: usize) -> Result<OptimizerConfig> {
        let mut cfg = match self.trace_cap {
            Some(c) => OptimizerConfig::with_trace_cap(k, c),
            None => OptimizerConfig::for_dim(k),
        };
        if let Some(v) = self.rho {
            cfg.rho = v;
        }
        if let Some(v) = self.epsilon {
            cfg.epsilon = v;
        }
        if let Some(v) = self.fw_max_iters {
            cfg.fw_max_iters = v;
        }
        if let Some(v) = self.outer_max_iters {
            cfg.outer_max_iters = v;
        }
        if let Some(v) = self.bcd_sweeps {
            cfg.bcd_sweeps = v;
        }
        if let Some(v) = self.obj_rel_tol {
            cfg.obj_rel_tol = v;
        }
        if let Some(v) = self.fw_step {
            cfg.fw_step = v;
        }
        cfg.validate(k)?;
        Ok(cfg)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub optimizer: OptimizerSettings,
    pub classifiers: Vec<ClassifierKind>,
    /// Neighbours for kNN.
    pub k: usize,
    pub seeds: Vec<u64>,
    pub folds: usize,
    pub standardize: bool,
    /// Include wall-clock time in the report (breaks bit-identical output).
    pub timing: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            optimizer: OptimizerSettings::default(),
            classifiers: vec![ClassifierKind::Graph, ClassifierKind::Knn],
            k: DEFAULT_K,
            seeds: (0..50).collect(),
            folds: 2,
            standardize: true,
            timing: false,
        }
    }
}

/// Parses `a..b` (inclusive), `a..=b`, a single seed, or a comma list.
pub fn parse_seeds(s: &str) -> Result<Vec<u64>> {
    let bad = || Error::Config(format!("cannot parse seeds `{s}`; expected a..b, a single seed, or a list"));
    let num = |t: &str| t.trim().parse::<u64>().map_err(|_| bad());
    if let Some((a, b)) = s.split_once("..") {
        let b = b.strip_prefix('=').unwrap_or(b);
        let (a, b) = (num(a)?, num(b)?);
        if a > b {
            return Err(bad());
        }
        return Ok((a..=b).collect());
    }
    s.split(',').map(num).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub seed: u64,
    pub fold: usize,
    pub classifier: ClassifierKind,
    pub test_size: usize,
    pub misclassified: usize,
    pub error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassifierSummary {
    pub classifier: ClassifierKind,
    pub runs: usize,
    pub mean_error: f64,
    /// Sample standard deviation of the per-run errors.
    pub std_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfigEcho {
    pub optimizer: OptimizerConfig,
    pub k: usize,
    pub seeds: Vec<u64>,
    pub folds: usize,
    pub classifiers: Vec<ClassifierKind>,
    pub standardize: bool,
    pub prng: String,
    pub split: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RuntimeStats {
    pub metrics_learned: usize,
    pub outer_iterations: usize,
    pub restratified_seeds: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wall_seconds: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub dataset: String,
    pub num_samples: usize,
    pub num_features: usize,
    pub num_classes: usize,
    pub config: ConfigEcho,
    pub runs: Vec<RunRecord>,
    pub summary: Vec<ClassifierSummary>,
    pub runtime: RuntimeStats,
}

impl ExperimentReport {
    pub fn summary_for(&self, classifier: ClassifierKind) -> Option<&ClassifierSummary> {
        self.summary.iter().find(|s| s.classifier == classifier)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn to_table(&self) -> String {
        let mut out = String::new();
        let c = &self.config;
        let seeds = match (c.seeds.first(), c.seeds.last()) {
            (Some(a), Some(b)) if c.seeds.len() > 1 && c.seeds.windows(2).all(|w| w[1] == w[0] + 1) => {
                format!("{a}..{b}")
            }
            _ => format!("{:?}", c.seeds),
        };
        let _ = writeln!(
            out,
            "dataset {}: {} samples, {} features, {} classes",
            self.dataset, self.num_samples, self.num_features, self.num_classes
        );
        let _ = writeln!(
            out,
            "seeds {seeds}, {} folds, k = {}, standardize = {}",
            c.folds, c.k, c.standardize
        );
        let o = &c.optimizer;
        let _ = writeln!(
            out,
            "C = {}, rho = {:e}, epsilon = {:e}, step = {:?}",
            o.trace_cap, o.rho, o.epsilon, o.fw_step
        );
        let _ = writeln!(out);
        let _ = writeln!(out, "{:<12}{:>6}{:>14}{:>10}", "classifier", "runs", "mean error", "std");
        for s in &self.summary {
            let _ = writeln!(
                out,
                "{:<12}{:>6}{:>13.2}%{:>9.2}%",
                s.classifier.name(),
                s.runs,
                100.0 * s.mean_error,
                100.0 * s.std_error
            );
        }
        if let Some(t) = self.runtime.wall_seconds {
            let _ = writeln!(out, "\n{} metrics learned in {t:.1} s", self.runtime.metrics_learned);
        }
        out
    }
}

/// Per-class fold assignment: each class is shuffled and dealt round-robin,
/// continuing where the previous class stopped so fold sizes stay balanced.
pub fn stratified_folds(
    labels: &[usize],
    num_classes: usize,
    folds: usize,
    rng: &mut ChaCha8Rng,
) -> Vec<Vec<usize>> {
    let mut out = vec![Vec::new(); folds];
    let mut next = 0;
    for c in 0..num_classes {
        let mut idx: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == c).collect();
        idx.shuffle(rng);
        for i in idx {
            out[next].push(i);
            next = (next + 1) % folds;
        }
    }
    for f in &mut out {
        f.sort_unstable();
    }
    out
}

fn folds_usable(labels: &[usize], num_classes: usize, folds: &[Vec<usize>]) -> bool {
    folds.iter().all(|test| {
        let mut in_test = vec![false; labels.len()];
        test.iter().for_each(|&i| in_test[i] = true);
        let mut present = vec![false; num_classes];
        (0..labels.len())
            .filter(|&i| !in_test[i])
            .for_each(|i| present[labels[i]] = true);
        !test.is_empty() && present.iter().all(|&p| p)
    })
}

struct FoldOutcome {
    records: Vec<RunRecord>,
    metrics_learned: usize,
    outer_iterations: usize,
}

/// One-vs-all metrics for every class, learned on the training fold only.
fn learn_class_metrics(
    train: &[Vec<f64>],
    labels: &[usize],
    num_classes: usize,
    cfg: &OptimizerConfig,
) -> Result<(Vec<GraphMetric>, usize)> {
    let mut metrics: Vec<GraphMetric> = Vec::with_capacity(num_classes);
    let mut outer = 0;
    for c in 0..num_classes {
        // with two classes the second problem only flips signs, which the
        // objective cannot see
        if num_classes == 2 && c == 1 {
            let first = metrics[0].clone();
            metrics.push(first);
            continue;
        }
        let z: Vec<f64> = labels.iter().map(|&l| if l == c { 1.0 } else { -1.0 }).collect();
        let ctx = ObjectiveContext::new(train, &z)?;
        let learned = learn_metric(&ctx, cfg)?;
        outer += learned.records.len();
        metrics.push(learned.metric);
    }
    Ok((metrics, outer))
}

/// Predicted classes of `test` from one-vs-all graph propagation over the
/// joint train + test graph.
pub fn graph_predict(
    train: &[Vec<f64>],
    labels: &[usize],
    test: &[Vec<f64>],
    metrics: &[&GraphMetric],
) -> Result<Vec<usize>> {
    let all: Vec<&[f64]> = train.iter().chain(test).map(Vec::as_slice).collect();
    let mut scores = vec![vec![0.0; metrics.len()]; test.len()];
    for (c, metric) in metrics.iter().enumerate() {
        let known: Vec<(usize, f64)> = labels
            .iter()
            .enumerate()
            .map(|(i, &l)| (i, if l == c { 1.0 } else { -1.0 }))
            .collect();
        let z = graph_classify(&all, &known, metric.matrix())?;
        for (t, s) in scores.iter_mut().enumerate() {
            s[c] = z[train.len() + t];
        }
    }
    Ok(scores.into_iter().map(argmax_lowest).collect())
}

/// Predicted classes of `test`: class `c` scores the share of its `k` nearest
/// training points (under metric `c`) that belong to `c`.
pub fn knn_predict(
    train: &[Vec<f64>],
    labels: &[usize],
    test: &[Vec<f64>],
    metrics: &[&GraphMetric],
    k: usize,
) -> Result<Vec<usize>> {
    test.iter()
        .map(|q| {
            let shares = metrics
                .iter()
                .enumerate()
                .map(|(c, m)| knn_class_share(train, labels, q, m.matrix(), k, c))
                .collect::<Result<Vec<f64>>>()?;
            Ok(argmax_lowest(shares))
        })
        .collect()
}

fn run_fold(
    dataset: &Dataset,
    cfg: &ExperimentConfig,
    opt: &OptimizerConfig,
    seed: u64,
    fold: usize,
    test_idx: &[usize],
) -> Result<FoldOutcome> {
    let mut in_test = vec![false; dataset.num_samples()];
    test_idx.iter().for_each(|&i| in_test[i] = true);
    let train_idx: Vec<usize> = (0..dataset.num_samples()).filter(|&i| !in_test[i]).collect();
    let (mut xtr, ytr) = dataset.subset(&train_idx);
    let (mut xte, yte) = dataset.subset(test_idx);
    if cfg.standardize {
        (xtr, xte, _) = standardize(&xtr, &xte)?;
    }
    if cfg.classifiers.contains(&ClassifierKind::Knn) && cfg.k > xtr.len() {
        return Err(Error::Config(format!(
            "k = {} exceeds the training fold size {}",
            cfg.k,
            xtr.len()
        )));
    }
    let (metrics, outer_iterations) = learn_class_metrics(&xtr, &ytr, dataset.num_classes, opt)?;
    let metric_refs: Vec<&GraphMetric> = metrics.iter().collect();

    let mut records = Vec::new();
    for &kind in &cfg.classifiers {
        let predicted = match kind {
            ClassifierKind::Graph => graph_predict(&xtr, &ytr, &xte, &metric_refs)?,
            ClassifierKind::Knn => knn_predict(&xtr, &ytr, &xte, &metric_refs, cfg.k)?,
        };
        let misclassified = predicted.iter().zip(&yte).filter(|(p, y)| p != y).count();
        records.push(RunRecord {
            seed,
            fold,
            classifier: kind,
            test_size: yte.len(),
            misclassified,
            error: misclassified as f64 / yte.len() as f64,
        });
    }
    Ok(FoldOutcome {
        records,
        metrics_learned: if dataset.num_classes == 2 { 1 } else { dataset.num_classes },
        outer_iterations,
    })
}

fn summarize(runs: &[RunRecord], classifiers: &[ClassifierKind]) -> Vec<ClassifierSummary> {
    let mut kinds = classifiers.to_vec();
    kinds.sort_unstable();
    kinds.dedup();
    kinds
        .into_iter()
        .map(|kind| {
            let errors: Vec<f64> = runs.iter().filter(|r| r.classifier == kind).map(|r| r.error).collect();
            let n = errors.len();
            let mean = errors.iter().sum::<f64>() / n.max(1) as f64;
            let var = if n > 1 {
                errors.iter().map(|e| (e - mean).powi(2)).sum::<f64>() / (n - 1) as f64
            } else {
                0.0
            };
            ClassifierSummary {
                classifier: kind,
                runs: n,
                mean_error: mean,
                std_error: var.sqrt(),
            }
        })
        .collect()
}

/// Repeated stratified cross validation with one-vs-all metrics learned per
/// training fold.
pub fn run_experiment(dataset: &Dataset, cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    let start = Instant::now();
    if cfg.folds < 2 {
        return Err(Error::Config(format!("need at least 2 folds, got {}", cfg.folds)));
    }
    if cfg.seeds.is_empty() {
        return Err(Error::Config("no seeds given".into()));
    }
    if cfg.classifiers.is_empty() {
        return Err(Error::Config("no classifiers selected".into()));
    }
    if cfg.k == 0 {
        return Err(Error::Config("k must be positive".into()));
    }
    dataset.check_for_cv(cfg.folds)?;
    let opt = cfg.optimizer.resolve(dataset.num_features())?;

    let mut jobs = Vec::new();
    let mut restratified = 0;
    for &seed in &cfg.seeds {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut attempt = 0;
        let folds = loop {
            let folds = stratified_folds(&dataset.labels, dataset.num_classes, cfg.folds, &mut rng);
            if folds_usable(&dataset.labels, dataset.num_classes, &folds) {
                break folds;
            }
            attempt += 1;
            if attempt == MAX_RESTRATIFY {
                return Err(Error::Dataset(format!(
                    "seed {seed}: no stratified split keeps every class in every training fold"
                )));
            }
        };
        if attempt > 0 {
            restratified += 1;
        }
        for (f, test) in folds.into_iter().enumerate() {
            jobs.push((seed, f, test));
        }
    }

    let outcomes = jobs
        .par_iter()
        .map(|(seed, fold, test)| run_fold(dataset, cfg, &opt, *seed, *fold, test))
        .collect::<Result<Vec<_>>>()?;

    let mut runs = Vec::new();
    let mut metrics_learned = 0;
    let mut outer_iterations = 0;
    for o in outcomes {
        runs.extend(o.records);
        metrics_learned += o.metrics_learned;
        outer_iterations += o.outer_iterations;
    }
    let summary = summarize(&runs, &cfg.classifiers);
    Ok(ExperimentReport {
        dataset: dataset.name.clone(),
        num_samples: dataset.num_samples(),
        num_features: dataset.num_features(),
        num_classes: dataset.num_classes,
        config: ConfigEcho {
            optimizer: opt,
            k: cfg.k,
            seeds: cfg.seeds.clone(),
            folds: cfg.folds,
            classifiers: cfg.classifiers.clone(),
            standardize: cfg.standardize,
            prng: PRNG_NAME.into(),
            split: "stratified".into(),
        },
        runs,
        summary,
        runtime: RuntimeStats {
            metrics_learned,
            outer_iterations,
            restratified_seeds: restratified,
            wall_seconds: cfg.timing.then(|| start.elapsed().as_secs_f64()),
        },
    })
}
