//! Underdamped pendulum: `x(t) = A0 exp(-b t / 2m) cos(omega t + delta0)`
//! with `omega = sqrt(kappa/m) sqrt(1 - b^2 / (4 m kappa))`, for
//! `m = 1 kg`, `A0 = 1 m`, `delta0 = 0`.

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::dataset::{Dataset, DatasetMeta, GENERATOR_VERSION};
use crate::error::{Error, Result};
use crate::rng::substream;

pub const OBS_POINTS: usize = 50;
pub const OBS_T_MAX: f64 = 5.0;
pub const QUESTION_T_MAX: f64 = 10.0;
pub const KAPPA_RANGE: (f64, f64) = (5.0, 10.0);
pub const DAMPING_RANGE: (f64, f64) = (0.5, 1.0);

/// Closed-form position at time `t` (m = 1, A0 = 1, delta0 = 0).
pub fn position(kappa: f64, b: f64, t: f64) -> f64 {
    let omega = kappa.sqrt() * (1.0 - b * b / (4.0 * kappa)).sqrt();
    (-b / 2.0 * t).exp() * (omega * t).cos()
}

/// Observation vector: positions at 50 equally spaced times in [0, 5] s.
pub fn observation(kappa: f64, b: f64) -> Vec<f64> {
    (0..OBS_POINTS)
        .map(|i| {
            let t = OBS_T_MAX * i as f64 / (OBS_POINTS - 1) as f64;
            position(kappa, b, t)
        })
        .collect()
}

pub struct PendulumSample {
    pub kappa: f64,
    pub b: f64,
    pub t_pred: f64,
    pub observation: Vec<f64>,
    pub answer: f64,
}

/// Regenerate a single sample, bit-identical to the bulk run.
pub fn sample(seed: u64, index: u64) -> PendulumSample {
    let mut rng = ChaCha8Rng::seed_from_u64(substream(seed, index));
    let kappa = rng.gen_range(KAPPA_RANGE.0..KAPPA_RANGE.1);
    let b = rng.gen_range(DAMPING_RANGE.0..DAMPING_RANGE.1);
    let t_pred = rng.gen_range(0.0..QUESTION_T_MAX);
    PendulumSample {
        kappa,
        b,
        t_pred,
        observation: observation(kappa, b),
        answer: position(kappa, b, t_pred),
    }
}

pub fn generate(n: usize, seed: u64) -> Result<Dataset> {
    if n == 0 {
        return Err(Error::config("sample count must be positive"));
    }
    let mut observations = Array2::zeros((n, OBS_POINTS));
    let mut questions = Array2::zeros((n, 1));
    let mut answers = Array2::zeros((n, 1));
    let mut ground_truth = Array2::zeros((n, 2));
    for i in 0..n {
        let s = sample(seed, i as u64);
        for (j, &x) in s.observation.iter().enumerate() {
            observations[(i, j)] = x;
        }
        questions[(i, 0)] = s.t_pred;
        answers[(i, 0)] = s.answer;
        ground_truth[(i, 0)] = s.kappa;
        ground_truth[(i, 1)] = s.b;
    }
    Ok(Dataset {
        meta: DatasetMeta {
            example: "pendulum".into(),
            generator_version: GENERATOR_VERSION.into(),
            seed,
            n,
            obs_dim: OBS_POINTS,
            question_dim: 1,
            answer_dim: 1,
            answer_steps: 1,
            ground_truth_columns: vec!["kappa".into(), "b".into()],
        },
        observations,
        questions,
        answers,
        ground_truth,
    })
}
