//! Exact closed-form simulators for the four physics settings, plus the
//! dataset container format. All generators are pure functions of
//! (seed, sample index).

pub mod collision;
pub mod dataset;
pub mod pendulum;
pub mod qubit;
pub mod solar;

pub use dataset::{Dataset, DatasetMeta, GENERATOR_VERSION};
pub use qubit::{born_probability, haar_state, Completeness};
