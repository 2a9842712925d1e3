//! Neural approximation of the per-obstacle repulsive gradient.
//!
//! Training data comes from a grid over obstacle configurations relative
//! to a fixed robot, labelled with the exact tube gradient. A small ReLU
//! network learns the map and is composed at runtime by summing one
//! inference per obstacle report, so the obstacle count is never fixed at
//! training time.

use thiserror::Error;

mod control;
mod data;
mod features;
mod mlp;
pub(crate) mod model;
mod train;

pub use control::{infer, nn_control, nn_descent};
pub use data::{generate_training_data, AxisSpec, Dataset, GridSpec, LoadError, GRID_SPEC_VERSION};
pub use features::{featurize, from_obstacle_frame, to_obstacle_frame, FEATURE_DIM, FEATURE_NAMES};
pub use mlp::{Gradients, Layer, Mlp};
pub use model::{FeatureScaling, GradientNet, LabelCodec, MODEL_FORMAT_VERSION};
pub use train::{
    dataset_mse, encode_dataset, fit_gradient_net, grid_scaling, split_indices, subset_mse, train,
    EpochLoss, Optimizer, TrainConfig, TrainReport, TRAIN_CONFIG_VERSION,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NnError {
    #[error("invalid layer sizes {0:?}")]
    InvalidArchitecture(Vec<usize>),
    #[error("invalid grid spec: {field}: {reason}")]
    InvalidGrid { field: &'static str, reason: String },
    #[error("invalid training config: {0}")]
    InvalidConfig(String),
    #[error("training data is empty")]
    EmptyData,
    #[error("input has {found} features, network expects {expected}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("training diverged at epoch {epoch} (loss {loss})")]
    TrainingDiverged { epoch: usize, loss: f64 },
    #[error("out of domain: {0}")]
    OutOfDomain(String),
    #[error("malformed file at byte {offset}: {message}")]
    Format { offset: usize, message: String },
    #[error("unsupported format version {found} (expected {expected})")]
    UnsupportedVersion { found: u32, expected: u32 },
}
