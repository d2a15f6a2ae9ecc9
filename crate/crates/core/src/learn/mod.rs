//! Gradient engine, models, training and evaluation.

mod checkpoint;
mod gradcheck;
mod metrics;
mod model;
pub mod tape;
mod train;

pub use checkpoint::{load_checkpoint, save_checkpoint, Checkpoint, TensorRecord};
pub use gradcheck::{check_gradients, GradCheck};
pub use metrics::{accuracy, grouped_accuracy_of, pearson, predictions, GroupedAccuracy};
pub use model::{
    ada_propagation, appnp_propagation, build_forward, forward_model, gat_layer, smoothness_scores, Architecture,
    AttentionVectors, Dense, Dropout, Forward, ModelInput, ModelParams,
};
pub use tape::{Gradients, Neighborhoods, SparseOperand, Tape, Var};
pub use train::{
    correlation_on_labeled, evaluate, grouped_accuracy, learned_smoothness, model_features, model_input, train,
    Metrics, Optimizer, TrainConfig, TrainOutcome,
};

/// Pearson correlation between smoothness factors and local label smoothness.
pub fn smoothness_correlation(c: &[f64], ls: &[f64]) -> crate::Result<f64> {
    pearson(c, ls)
}
