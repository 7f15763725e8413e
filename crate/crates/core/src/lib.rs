//! Graph metric learning: Gershgorin-constrained Frank-Wolfe over generalized
//! graph Laplacians, plus the classifiers and experiment harness built on it.

pub mod classify;
pub mod eigen;
pub mod error;
pub mod harness;
pub mod linalg;
pub mod lp;
pub mod objective;
pub mod optimizer;
pub mod random;
pub mod verify;

pub use classify::{graph_classify, knn_classify, LabeledGraph};
pub use eigen::{smallest_eigenpair_dense, smallest_eigenpair_lobpcg, EigenPair, LobpcgSolution};
pub use error::{Error, Result};
pub use linalg::{
    alignment_scalars, edge_weight, gershgorin_left_ends, mahalanobis, scaled_left_ends,
    validate_graph_metric, GershgorinScalars, GraphMetric, Rejection, SymmetricMatrix, Violation,
};
pub use lp::{solve_diagonal_lp, solve_lp, Constraint, LinearProgram, LpSolution, LpStatus, Sense};
pub use objective::{Objective, ObjectiveContext};
pub use optimizer::{learn_metric, LearnedMetric, OptimizerConfig, StepRule};
