//! Simulated weekly observations of the Sun and Mars as seen from Earth,
//! assuming circular heliocentric orbits. One sample is a random start epoch
//! with the geocentric angles at that epoch as observation and the angles at
//! the following weekly epochs as the answer series.

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::dataset::{Dataset, DatasetMeta, GENERATOR_VERSION};
use crate::error::{Error, Result};
use crate::rng::substream;

pub const EPOCHS: usize = 3665;
/// Answer series length stored per sample; training may use a prefix.
pub const ANSWER_STEPS: usize = 50;
pub const R_EARTH: f64 = 1.0;
pub const R_MARS: f64 = 1.524;
/// rad/week for 365.25- and 687-day periods.
pub const OMEGA_EARTH: f64 = 2.0 * std::f64::consts::PI / 52.18;
pub const OMEGA_MARS: f64 = 2.0 * std::f64::consts::PI / 98.14;

const TWO_PI: f64 = 2.0 * std::f64::consts::PI;

fn reduce(angle: f64) -> f64 {
    angle.rem_euclid(TWO_PI)
}

/// Geocentric angles (theta_M, theta_S) from heliocentric angles.
pub fn geocentric(phi_e: f64, phi_m: f64) -> (f64, f64) {
    let theta_s = reduce(phi_e + std::f64::consts::PI);
    let theta_m = reduce(f64::atan2(
        R_MARS * phi_m.sin() - R_EARTH * phi_e.sin(),
        R_MARS * phi_m.cos() - R_EARTH * phi_e.cos(),
    ));
    (theta_m, theta_s)
}

/// The full simulated ephemeris: heliocentric and geocentric angles per week.
pub struct Ephemeris {
    pub phi_e: Vec<f64>,
    pub phi_m: Vec<f64>,
    pub theta_m: Vec<f64>,
    pub theta_s: Vec<f64>,
}

pub fn simulate(seed: u64) -> Ephemeris {
    let mut rng = ChaCha8Rng::seed_from_u64(substream(seed, u64::MAX));
    let phi_e0 = rng.gen_range(0.0..TWO_PI);
    let phi_m0 = rng.gen_range(0.0..TWO_PI);
    let mut eph = Ephemeris {
        phi_e: Vec::with_capacity(EPOCHS),
        phi_m: Vec::with_capacity(EPOCHS),
        theta_m: Vec::with_capacity(EPOCHS),
        theta_s: Vec::with_capacity(EPOCHS),
    };
    for t in 0..EPOCHS {
        let phi_e = reduce(phi_e0 + OMEGA_EARTH * t as f64);
        let phi_m = reduce(phi_m0 + OMEGA_MARS * t as f64);
        let (theta_m, theta_s) = geocentric(phi_e, phi_m);
        eph.phi_e.push(phi_e);
        eph.phi_m.push(phi_m);
        eph.theta_m.push(theta_m);
        eph.theta_s.push(theta_s);
    }
    eph
}

/// Start epoch for one sample; epochs too close to the end are resampled so
/// the full answer series fits.
pub fn start_epoch(seed: u64, index: u64) -> usize {
    let mut rng = ChaCha8Rng::seed_from_u64(substream(seed, index));
    loop {
        let t0 = rng.gen_range(0..EPOCHS);
        if t0 + ANSWER_STEPS < EPOCHS {
            return t0;
        }
    }
}

pub fn generate(n: usize, seed: u64) -> Result<Dataset> {
    if n == 0 {
        return Err(Error::config("sample count must be positive"));
    }
    let eph = simulate(seed);
    let mut observations = Array2::zeros((n, 2));
    let questions = Array2::zeros((n, 0));
    let mut answers = Array2::zeros((n, 2 * ANSWER_STEPS));
    let mut ground_truth = Array2::zeros((n, 2));
    for i in 0..n {
        let t0 = start_epoch(seed, i as u64);
        observations[(i, 0)] = eph.theta_m[t0];
        observations[(i, 1)] = eph.theta_s[t0];
        for step in 0..ANSWER_STEPS {
            let t = t0 + 1 + step;
            answers[(i, 2 * step)] = eph.theta_m[t];
            answers[(i, 2 * step + 1)] = eph.theta_s[t];
        }
        ground_truth[(i, 0)] = eph.phi_e[t0];
        ground_truth[(i, 1)] = eph.phi_m[t0];
    }
    Ok(Dataset {
        meta: DatasetMeta {
            example: "solar".into(),
            generator_version: GENERATOR_VERSION.into(),
            seed,
            n,
            obs_dim: 2,
            question_dim: 0,
            answer_dim: 2,
            answer_steps: ANSWER_STEPS,
            ground_truth_columns: vec!["phi_E".into(), "phi_M".into()],
        },
        observations,
        questions,
        answers,
        ground_truth,
    })
}
