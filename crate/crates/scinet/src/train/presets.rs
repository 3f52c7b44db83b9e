//! Canonical experiment configurations: network shapes, training schedules,
//! dataset sizes, and evaluation conventions for each physics example.

use crate::datagen::{collision, pendulum, qubit, solar, Completeness, Dataset};
use crate::error::{Error, Result};
use crate::model::{RecurrentSpec, SciNetSpec};
use crate::train::{AnswerMetric, TrainPhase};

/// Everything needed to reproduce one experiment end to end.
#[derive(Debug, Clone)]
pub struct ExperimentPreset {
    pub name: &'static str,
    pub spec: SciNetSpec,
    pub phases: Vec<TrainPhase>,
    pub n_train: usize,
    pub n_test: usize,
    pub metric: AnswerMetric,
    /// RMSE denominator: oscillation amplitude, rod radius, 1 for
    /// probabilities, 2 pi for angles.
    pub rmse_normalizer: f64,
    /// Latent widths scanned when estimating the intrinsic dimension.
    pub sweep_widths: Vec<usize>,
}

pub const PRESET_NAMES: [&str; 5] = ["pendulum", "collision", "qubit1", "qubit2", "solar"];

pub fn preset(name: &str) -> Result<ExperimentPreset> {
    match name {
        "pendulum" => Ok(pendulum_preset()),
        "collision" => Ok(collision_preset()),
        "qubit1" => Ok(qubit_preset(1)),
        "qubit2" => Ok(qubit_preset(2)),
        "solar" => Ok(solar_preset()),
        other => Err(Error::config(format!(
            "unknown experiment {other:?}; expected one of {PRESET_NAMES:?}"
        ))),
    }
}

/// Generate the full train/test data for a preset, split deterministically.
pub fn generate_data(p: &ExperimentPreset, seed: u64) -> Result<(Dataset, Dataset)> {
    let n = p.n_train + p.n_test;
    let full = match p.name {
        "pendulum" => pendulum::generate(n, seed)?,
        "collision" => collision::generate(n, seed)?,
        "qubit1" => qubit::generate(n, seed, 1, Completeness::Full)?,
        "qubit2" => qubit::generate(n, seed, 2, Completeness::Full)?,
        "solar" => solar::generate(n, seed)?,
        other => return Err(Error::config(format!("unknown experiment {other:?}"))),
    };
    full.split(p.n_train)
}

fn pendulum_preset() -> ExperimentPreset {
    ExperimentPreset {
        name: "pendulum",
        spec: SciNetSpec {
            obs_dim: 50,
            question_dim: 1,
            latent_dim: 3,
            answer_dim: 1,
            encoder_layers: vec![500, 100],
            decoder_layers: vec![100, 100],
            recurrent: None,
        },
        phases: vec![TrainPhase {
            learning_rate: 1e-3,
            epochs: 1000,
            batch_size: 512,
            beta: 1e-3,
            answer_steps: None,
        }],
        n_train: 95_000,
        n_test: 5_000,
        metric: AnswerMetric::Squared,
        rmse_normalizer: 1.0,
        sweep_widths: (0..=5).collect(),
    }
}

fn collision_preset() -> ExperimentPreset {
    ExperimentPreset {
        name: "collision",
        spec: SciNetSpec {
            obs_dim: collision::OBS_DIM,
            question_dim: collision::QUESTION_DIM,
            latent_dim: 1,
            answer_dim: 2,
            encoder_layers: vec![150, 100],
            decoder_layers: vec![100, 150],
            recurrent: None,
        },
        phases: vec![
            TrainPhase {
                learning_rate: 5e-4,
                epochs: 100,
                batch_size: 500,
                beta: 0.0,
                answer_steps: None,
            },
            TrainPhase {
                learning_rate: 1e-4,
                epochs: 50,
                batch_size: 500,
                beta: 0.0,
                answer_steps: None,
            },
        ],
        n_train: 490_000,
        n_test: 10_000,
        metric: AnswerMetric::Squared,
        rmse_normalizer: collision::RADIUS,
        sweep_widths: (0..=5).collect(),
    }
}

fn qubit_preset(n_qubits: usize) -> ExperimentPreset {
    let m = qubit::measurements_per_set(n_qubits);
    let (name, latent_dim, encoder_first, n_train, n_test, sweep_max): (
        &'static str,
        usize,
        usize,
        usize,
        usize,
        usize,
    ) = match n_qubits {
        1 => ("qubit1", 2, 100, 95_000, 5_000, 5),
        2 => ("qubit2", 6, 300, 490_000, 10_000, 9),
        _ => unreachable!("presets cover one and two qubits"),
    };
    ExperimentPreset {
        name,
        spec: SciNetSpec {
            obs_dim: m,
            question_dim: m,
            latent_dim,
            answer_dim: 1,
            encoder_layers: vec![encoder_first, 100],
            decoder_layers: vec![100, 100],
            recurrent: None,
        },
        phases: vec![
            TrainPhase {
                learning_rate: 1e-3,
                epochs: 250,
                batch_size: 512,
                beta: 1e-4,
                answer_steps: None,
            },
            TrainPhase {
                learning_rate: 1e-4,
                epochs: 50,
                batch_size: 512,
                beta: 1e-4,
                answer_steps: None,
            },
        ],
        n_train,
        n_test,
        metric: AnswerMetric::Squared,
        rmse_normalizer: 1.0,
        sweep_widths: (0..=sweep_max).collect(),
    }
}

fn solar_preset() -> ExperimentPreset {
    let schedule: [(f64, usize, usize, f64, usize); 5] = [
        // (lr, epochs, batch, beta, answer_steps)
        (1e-4, 3000, 256, 0.1, 20),
        (5e-5, 3000, 1024, 0.01, 20),
        (5e-5, 3000, 1024, 0.01, 50),
        (1e-5, 3000, 2048, 0.001, 50),
        (1e-5, 3000, 2048, 0.001, 50),
    ];
    ExperimentPreset {
        name: "solar",
        spec: SciNetSpec {
            obs_dim: 2,
            question_dim: 0,
            latent_dim: 2,
            answer_dim: 2,
            encoder_layers: vec![100, 100],
            decoder_layers: vec![100, 100],
            recurrent: Some(RecurrentSpec {
                n_steps: solar::ANSWER_STEPS,
            }),
        },
        phases: schedule
            .iter()
            .map(|&(lr, epochs, batch, beta, steps)| TrainPhase {
                learning_rate: lr,
                epochs,
                batch_size: batch,
                beta,
                answer_steps: Some(steps),
            })
            .collect(),
        n_train: 95_000,
        n_test: 5_000,
        metric: AnswerMetric::WrappedAngle,
        rmse_normalizer: 2.0 * std::f64::consts::PI,
        sweep_widths: (0..=4).collect(),
    }
}
