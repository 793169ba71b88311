//! Classifier evaluation: confusion-matrix metrics, ROC/AUC, stratified
//! folds, the cross-validation driver and gradient saliency maps.

mod cv;
mod folds;
mod metrics;
mod roc;
mod saliency;

pub use cv::{cross_validate, CvReport, FoldResult, LabeledDataset, MetricSummary, Summary};
pub use folds::{stratified_folds, FoldAssignment};
pub use metrics::{confusion, format_metric, metrics, ConfusionMatrix, MetricsReport};
pub use roc::{mann_whitney_auc, roc_and_auc, RocCurve};
pub use saliency::{class_score_gradient, saliency_map, saliency_projection, Image2d};
