use std::path::Path;

use serde::{Deserialize, Serialize};

use super::dataset::{Dataset, Scaler};
use super::experiment::{graph_predict, ClassifierKind, OptimizerSettings};
use crate::classify::knn_classify;
use crate::error::{Error, Result};
use crate::linalg::{validate_graph_metric, GraphMetric, SymmetricMatrix, DEFAULT_PD_TOL};
use crate::objective::ObjectiveContext;
use crate::optimizer::{learn_metric, IterationRecord, OptimizerConfig};

/// A learned metric as stored on disk.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricFile {
    pub dim: usize,
    /// Row-major `dim * dim` entries.
    pub entries: Vec<f64>,
    pub lambda_min: f64,
    pub config: OptimizerConfig,
    /// Class treated as `+1` while learning.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub positive_class: Option<String>,
    /// Feature scaling applied before the metric.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scaler: Option<Scaler>,
}

impl MetricFile {
    pub fn new(metric: &GraphMetric, config: OptimizerConfig) -> Self {
        Self {
            dim: metric.dim(),
            entries: metric.matrix().to_row_major(),
            lambda_min: metric.lambda_min(),
            config,
            positive_class: None,
            scaler: None,
        }
    }

    pub fn matrix(&self) -> Result<SymmetricMatrix> {
        SymmetricMatrix::from_row_major(self.dim, &self.entries)
    }

    /// Re-certifies the stored matrix.
    pub fn metric(&self) -> Result<GraphMetric> {
        validate_graph_metric(&self.matrix()?, DEFAULT_PD_TOL)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: Self = serde_json::from_str(text)?;
        if file.entries.len() != file.dim * file.dim {
            return Err(Error::DimensionMismatch {
                expected: file.dim * file.dim,
                found: file.entries.len(),
            });
        }
        Ok(file)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_json()? + "\n")?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    fn scale<'a>(&self, rows: &'a [Vec<f64>]) -> std::borrow::Cow<'a, [Vec<f64>]> {
        match &self.scaler {
            Some(s) => s.transform(rows).into(),
            None => rows.into(),
        }
    }
}

/// Learns a metric on the whole dataset for `positive_class` against the rest.
pub fn learn_one_vs_rest(
    dataset: &Dataset,
    positive_class: &str,
    settings: &OptimizerSettings,
    standardize: bool,
) -> Result<(MetricFile, Vec<IterationRecord>)> {
    let class = dataset
        .class_names
        .iter()
        .position(|c| c == positive_class)
        .ok_or_else(|| {
            Error::Config(format!(
                "class `{positive_class}` not in dataset (classes: {})",
                dataset.class_names.join(", ")
            ))
        })?;
    let cfg = settings.resolve(dataset.num_features())?;
    let scaler = if standardize { Some(Scaler::fit(&dataset.features)?) } else { None };
    let features = match &scaler {
        Some(s) => s.transform(&dataset.features),
        None => dataset.features.clone(),
    };
    let z: Vec<f64> = dataset.labels.iter().map(|&l| if l == class { 1.0 } else { -1.0 }).collect();
    let ctx = ObjectiveContext::new(&features, &z)?;
    let learned = learn_metric(&ctx, &cfg)?;
    let mut file = MetricFile::new(&learned.metric, cfg);
    file.positive_class = Some(positive_class.to_string());
    file.scaler = scaler;
    Ok((file, learned.records))
}

/// Class indices of `query` rows with `train` as the labelled set.
///
/// kNN takes a majority vote; the graph classifier propagates every class
/// one-vs-all over the joint graph and picks the highest score. Both use the
/// single stored metric.
pub fn predict(
    file: &MetricFile,
    train: &Dataset,
    query: &[Vec<f64>],
    classifier: ClassifierKind,
    k: usize,
) -> Result<Vec<usize>> {
    let metric = file.metric()?;
    if train.num_features() != file.dim {
        return Err(Error::DimensionMismatch {
            expected: file.dim,
            found: train.num_features(),
        });
    }
    let xtr = file.scale(&train.features);
    let xq = file.scale(query);
    match classifier {
        ClassifierKind::Knn => xq
            .iter()
            .map(|q| knn_classify(&xtr, &train.labels, q, metric.matrix(), k))
            .collect(),
        ClassifierKind::Graph => {
            let metrics = vec![&metric; train.num_classes];
            graph_predict(&xtr, &train.labels, &xq, &metrics)
        }
    }
}
