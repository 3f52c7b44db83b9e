//! SciNet: a question-conditioned beta-VAE that learns minimal physical
//! representations, with exact simulators for four toy physics settings and
//! tools for reading off what the latent neurons store.

pub mod analysis;
pub mod autodiff;
pub mod datagen;
pub mod error;
pub mod model;
pub mod rng;
pub mod train;

pub use error::{Error, Result};
