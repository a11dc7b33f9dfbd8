//! Splits, confusion matrices, the five classification metrics and report tables.

pub mod metrics;
pub mod report;
pub mod split;

use thiserror::Error;

pub use metrics::{confusion, evaluate, metrics, ClassMetrics, ConfusionMatrix, MetricsReport};
pub use report::{parse_metrics_csv, Evaluation, MetricRow, Report, Section};
pub use split::{split_dataset, Holdout, Split, SplitMode, SplitSpec};

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("label {label} outside 0..{classes}")]
    Label { label: usize, classes: usize },
    #[error("nothing to evaluate")]
    EmptyEvaluation,
    #[error("split: {0}")]
    Split(String),
    #[error("report format: {0}")]
    Format(String),
}
