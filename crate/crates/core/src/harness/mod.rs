//! Dataset ingestion, cross-validation experiments, and metric files.

pub mod dataset;
pub mod experiment;
pub mod metric_file;

pub use dataset::{load_csv, load_query, read_csv, standardize, Dataset, LabelColumn, Scaler};
pub use experiment::{
    parse_seeds, run_experiment, ClassifierKind, ExperimentConfig, ExperimentReport, OptimizerSettings, RunRecord,
};
pub use metric_file::{learn_one_vs_rest, predict, MetricFile};
