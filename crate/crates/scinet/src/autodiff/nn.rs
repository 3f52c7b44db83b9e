//! Dense feed-forward layers over the tape.

use ndarray::{Array1, Array2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::tape::{elu, NodeId, Tape};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Activation {
    Elu { alpha: f64 },
    Identity,
}

/// Parameters of one fully connected layer. Weights are `[out, in]`,
/// biases are a `1 x out` row.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseLayerParams {
    pub weights: Array2<f64>,
    pub biases: Array2<f64>,
    pub activation: Activation,
}

impl DenseLayerParams {
    pub fn new(weights: Array2<f64>, biases: Array2<f64>, activation: Activation) -> Result<Self> {
        let (out_dim, _) = weights.dim();
        if biases.dim() != (1, out_dim) {
            return Err(Error::dim("dense layer biases", out_dim, biases.len()));
        }
        if let Activation::Elu { alpha } = activation {
            if alpha <= 0.0 {
                return Err(Error::config(format!("elu alpha must be > 0, got {alpha}")));
            }
        }
        Ok(DenseLayerParams {
            weights,
            biases,
            activation,
        })
    }

    pub fn input_dim(&self) -> usize {
        self.weights.dim().1
    }

    pub fn output_dim(&self) -> usize {
        self.weights.dim().0
    }
}

/// Forward pass through one layer without recording.
pub fn dense_forward(input: &Array1<f64>, layer: &DenseLayerParams) -> Result<Array1<f64>> {
    if input.len() != layer.input_dim() {
        return Err(Error::dim("dense_forward", layer.input_dim(), input.len()));
    }
    let mut out = layer.weights.dot(input);
    out += &layer.biases.row(0);
    apply_activation(&mut out, layer.activation);
    Ok(out)
}

fn apply_activation(out: &mut Array1<f64>, activation: Activation) {
    if let Activation::Elu { alpha } = activation {
        out.mapv_inplace(|z| elu(z, alpha));
    }
}

/// A stack of dense layers; hidden layers use ELU, the output layer is linear.
#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    pub layers: Vec<DenseLayerParams>,
}

/// Tape leaves for one staged [`Mlp`], aligned with its layers.
#[derive(Debug, Clone)]
pub struct MlpLeaves {
    pub layers: Vec<(NodeId, NodeId)>,
}

impl Mlp {
    /// Random initialization: weights uniform in +/- sqrt(6 / (fan_in + fan_out)),
    /// biases zero. Deterministic for a given seed.
    pub fn init(sizes: &[usize], alpha: f64, seed: u64) -> Result<Self> {
        if sizes.len() < 2 {
            return Err(Error::config(
                "layer size list must contain input and output".to_string(),
            ));
        }
        if sizes.contains(&0) {
            return Err(Error::config("layer sizes must be positive".to_string()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut layers = Vec::with_capacity(sizes.len() - 1);
        for (i, window) in sizes.windows(2).enumerate() {
            let (fan_in, fan_out) = (window[0], window[1]);
            let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
            let weights = Array2::from_shape_fn((fan_out, fan_in), |_| {
                rng.gen_range(-limit..limit)
            });
            let biases = Array2::zeros((1, fan_out));
            let activation = if i + 2 == sizes.len() {
                Activation::Identity
            } else {
                Activation::Elu { alpha }
            };
            layers.push(DenseLayerParams::new(weights, biases, activation)?);
        }
        Ok(Mlp { layers })
    }

    pub fn input_dim(&self) -> usize {
        self.layers.first().map_or(0, DenseLayerParams::input_dim)
    }

    pub fn output_dim(&self) -> usize {
        self.layers.last().map_or(0, DenseLayerParams::output_dim)
    }

    pub fn param_count(&self) -> usize {
        self.layers
            .iter()
            .map(|l| l.weights.len() + l.biases.len())
            .sum()
    }

    /// Forward pass without recording, for evaluation. Routed through the
    /// batched kernel so single-sample and batched results are bit-identical.
    pub fn eval(&self, input: &Array1<f64>) -> Result<Array1<f64>> {
        let row = input.clone().insert_axis(ndarray::Axis(0));
        let out = self.eval_batch(&row)?;
        Ok(out.row(0).to_owned())
    }

    /// Batched forward pass without recording; rows are samples.
    pub fn eval_batch(&self, input: &Array2<f64>) -> Result<Array2<f64>> {
        if input.dim().1 != self.input_dim() {
            return Err(Error::dim("mlp eval_batch", self.input_dim(), input.dim().1));
        }
        let mut x = input.clone();
        for layer in &self.layers {
            let mut out = x.dot(&layer.weights.t());
            out += &layer.biases;
            if let Activation::Elu { alpha } = layer.activation {
                out.mapv_inplace(|z| elu(z, alpha));
            }
            x = out;
        }
        Ok(x)
    }

    /// Put all parameters on the tape as leaves. Staging once and running
    /// [`Mlp::forward_staged`] several times shares the weights across calls.
    pub fn stage(&self, tape: &mut Tape) -> MlpLeaves {
        let layers = self
            .layers
            .iter()
            .map(|l| (tape.leaf(l.weights.clone()), tape.leaf(l.biases.clone())))
            .collect();
        MlpLeaves { layers }
    }

    /// Recorded forward pass through staged parameters.
    pub fn forward_staged(
        &self,
        tape: &mut Tape,
        leaves: &MlpLeaves,
        input: NodeId,
    ) -> Result<NodeId> {
        let mut x = input;
        for (layer, &(w, b)) in self.layers.iter().zip(&leaves.layers) {
            x = tape.linear(x, w, b)?;
            if let Activation::Elu { alpha } = layer.activation {
                x = tape.elu(x, alpha)?;
            }
        }
        Ok(x)
    }

    /// Flat views of all parameter tensors, weights before biases per layer.
    pub fn tensors(&self) -> Vec<&Array2<f64>> {
        self.layers
            .iter()
            .flat_map(|l| [&l.weights, &l.biases])
            .collect()
    }

    pub fn tensors_mut(&mut self) -> Vec<&mut Array2<f64>> {
        self.layers
            .iter_mut()
            .flat_map(|l| [&mut l.weights, &mut l.biases])
            .collect()
    }
}
