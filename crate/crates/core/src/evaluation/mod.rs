//! Confusion-matrix metrics and stratified k-fold cross-validation.

pub mod cv;
pub mod folds;
pub mod metrics;

pub use cv::{cross_validate, cross_validate_with_plan, fold_seed, train_fold, CvSummary};
pub use folds::{make_folds, FoldPlan};
pub use metrics::{confusion, metrics, ConfusionCounts, Metric, MetricSet};
