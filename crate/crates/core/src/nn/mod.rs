//! From-scratch neural core in double precision.
//!
//! The classifier is a sentence-style CNN over the reduced 18×13 matrix: six
//! full-width filters (two each of heights 5, 6 and 7), ReLU, max-over-time
//! pooling, and a dense 6→2 softmax head. Gradients are computed by hand.

mod cnn;
mod gradcheck;
mod io;
mod layers;
mod optim;
mod train;

use thiserror::Error;

pub use cnn::{
    backward, conv_forward, forward, loss, max_over_time, max_over_time_backward, predict,
    Activation, CnnModel, CnnParams, ConvFilter, ForwardCache, Grid, Prediction, FILTERS_PER_HEIGHT,
    FILTER_HEIGHTS, NUM_CLASSES, NUM_FILTERS,
};
pub use gradcheck::{gradient_check, GradCheck};
pub use io::{load_model, model_from_str, model_to_string, save_model, FORMAT_VERSION, MAGIC};
pub use layers::{cross_entropy, glorot_limit, relu, softmax, softmax_cross_entropy_grad, Dense, PROB_FLOOR};
pub use optim::{Optimizer, OptimizerKind, ADAM_BETA1, ADAM_BETA2, ADAM_EPSILON};
pub use train::{train, train_model, EpochStats, Example, TrainConfig, TrainHistory};

#[derive(Debug, Error)]
pub enum NnError {
    #[error("shape error: {0}")]
    Shape(String),
    #[error("cannot pool an empty feature map")]
    EmptyMap,
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("model file: {0}")]
    FormatVersion(String),
    #[error("model file line {line}: {message}")]
    Format { line: usize, message: String },
    #[error("model file: {0}")]
    Io(#[from] std::io::Error),
}

/// Flat views of a model's parameter tensors, in a fixed order. Gradients
/// share the parameter type, so optimizers pair tensors by position.
pub trait Parameters {
    fn tensors(&self) -> Vec<&[f64]>;
    fn tensors_mut(&mut self) -> Vec<&mut [f64]>;

    fn num_parameters(&self) -> usize {
        self.tensors().iter().map(|t| t.len()).sum()
    }
}
