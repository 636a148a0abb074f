//! Single-hidden-layer feed-forward classifier, cross-validated grid search
//! and the threshold/rank metrics used for the traditional comparison.

mod activation;
mod grid;
mod metrics;
mod network;

pub use activation::Activation;
pub use grid::{fold_assignment, grid_search_train, CellScore, GridSearchOutcome, HyperGrid};
pub use metrics::{auc, metrics_from_scores, traditional_metrics, MetricsReport};
pub use network::{train_network, Hyperparameters, Prediction, TrainConfig, TrainedModel, MODEL_SCHEMA_VERSION};
