//! First-order optimizers over flat lists of parameter tensors.

use ndarray::Array2;

use crate::error::{Error, Result};

/// Plain gradient descent: `p <- p - lr * g` elementwise.
pub fn sgd_step(params: &mut [&mut Array2<f64>], grads: &[Array2<f64>], lr: f64) -> Result<()> {
    check_aligned(params, grads)?;
    for (p, g) in params.iter_mut().zip(grads) {
        **p -= &g.mapv(|v| v * lr);
    }
    Ok(())
}

/// Adam moment accumulators, one entry per parameter tensor.
#[derive(Debug, Clone)]
pub struct AdamState {
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub step: u64,
    first_moment: Vec<Array2<f64>>,
    second_moment: Vec<Array2<f64>>,
}

impl AdamState {
    pub fn new(beta1: f64, beta2: f64, epsilon: f64) -> Result<Self> {
        if epsilon <= 0.0 {
            return Err(Error::config(format!("adam epsilon must be > 0, got {epsilon}")));
        }
        if !(0.0..1.0).contains(&beta1) || !(0.0..1.0).contains(&beta2) {
            return Err(Error::config("adam decay rates must lie in (0,1)".to_string()));
        }
        Ok(AdamState {
            beta1,
            beta2,
            epsilon,
            step: 0,
            first_moment: Vec::new(),
            second_moment: Vec::new(),
        })
    }

    /// Bias-corrected adaptive moment update.
    pub fn step(
        &mut self,
        params: &mut [&mut Array2<f64>],
        grads: &[Array2<f64>],
        lr: f64,
    ) -> Result<()> {
        check_aligned(params, grads)?;
        if self.first_moment.is_empty() {
            self.first_moment = grads.iter().map(|g| Array2::zeros(g.raw_dim())).collect();
            self.second_moment = grads.iter().map(|g| Array2::zeros(g.raw_dim())).collect();
        } else if self.first_moment.len() != grads.len() {
            return Err(Error::dim("adam state", self.first_moment.len(), grads.len()));
        }
        self.step += 1;
        let t = self.step as f64;
        let bc1 = 1.0 - self.beta1.powf(t);
        let bc2 = 1.0 - self.beta2.powf(t);
        for (i, (p, g)) in params.iter_mut().zip(grads).enumerate() {
            let m = &mut self.first_moment[i];
            let v = &mut self.second_moment[i];
            m.zip_mut_with(g, |m, &g| *m = self.beta1 * *m + (1.0 - self.beta1) * g);
            v.zip_mut_with(g, |v, &g| *v = self.beta2 * *v + (1.0 - self.beta2) * g * g);
            ndarray::Zip::from(&mut **p)
                .and(&*m)
                .and(&*v)
                .for_each(|p, &m, &v| {
                    let m_hat = m / bc1;
                    let v_hat = v / bc2;
                    *p -= lr * m_hat / (v_hat.sqrt() + self.epsilon);
                });
        }
        Ok(())
    }
}

/// Optimizer selection; state is carried across training phases.
#[derive(Debug, Clone)]
pub enum Optimizer {
    Sgd,
    Adam(AdamState),
}

impl Optimizer {
    /// Adam with the default decay rates.
    pub fn adam_default() -> Self {
        Optimizer::Adam(AdamState::new(0.9, 0.999, 1e-8).expect("defaults are valid"))
    }

    pub fn step(
        &mut self,
        params: &mut [&mut Array2<f64>],
        grads: &[Array2<f64>],
        lr: f64,
    ) -> Result<()> {
        match self {
            Optimizer::Sgd => sgd_step(params, grads, lr),
            Optimizer::Adam(state) => state.step(params, grads, lr),
        }
    }
}

fn check_aligned(params: &[&mut Array2<f64>], grads: &[Array2<f64>]) -> Result<()> {
    if params.len() != grads.len() {
        return Err(Error::dim("optimizer tensors", params.len(), grads.len()));
    }
    for (p, g) in params.iter().zip(grads) {
        if p.raw_dim() != g.raw_dim() {
            return Err(Error::dim("optimizer tensor shape", p.len(), g.len()));
        }
    }
    Ok(())
}
