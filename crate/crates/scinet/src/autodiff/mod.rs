//! Minimal reverse-mode automatic differentiation for dense networks.

pub mod nn;
pub mod optim;
pub mod tape;

pub use nn::{dense_forward, Activation, DenseLayerParams, Mlp, MlpLeaves};
pub use optim::{sgd_step, AdamState, Optimizer};
pub use tape::{elu, elu_prime, wrap_to_pi, NodeId, Tape};
