//! Two-body collision with angular momentum conservation. A particle on a
//! rod of radius r = 1 m rotates about the origin and is hit at (0, r) by a
//! free particle; the post-collision angular velocity follows from
//! `J = m_rot r^2 w - r m_free (v_free)_x`, which is conserved.
//!
//! Conventions (the sampling ranges are ours): collision at time t_c > 0 at
//! (0, r); rod phase fixed so q_rot(t_c) = (0, r); free particle travels on
//! a straight line through (0, r) reached at t_c.

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::dataset::{Dataset, DatasetMeta, GENERATOR_VERSION};
use crate::error::{Error, Result};
use crate::rng::substream;

pub const RADIUS: f64 = 1.0;
pub const NOISE_SIGMA: f64 = 0.01;
pub const POINTS_PER_TRACK: usize = 5;
/// Post-collision question/prediction times lie in (t_c, t_c + 3].
pub const POST_WINDOW: f64 = 3.0;
const MIN_COLLISION_TIME: f64 = 0.2;
const MAX_COLLISION_TIME: f64 = 5.0;

pub const OBS_DIM: usize = 2 * 3 * POINTS_PER_TRACK;
pub const QUESTION_DIM: usize = 1 + 3 * POINTS_PER_TRACK;

/// Rod particle position at time `t` given the collision time and the
/// angular velocity in effect.
pub fn rod_position(omega: f64, t: f64, t_c: f64) -> (f64, f64) {
    let phase = omega * (t - t_c) + std::f64::consts::FRAC_PI_2;
    (RADIUS * phase.cos(), RADIUS * phase.sin())
}

/// Free particle on the straight line through (0, r) at `t_c`.
pub fn free_position(v: (f64, f64), t: f64, t_c: f64) -> (f64, f64) {
    (v.0 * (t - t_c), RADIUS + v.1 * (t - t_c))
}

/// Total angular momentum `m_rot r^2 w - r m_free v_x` (unit masses).
pub fn angular_momentum(omega: f64, v_x: f64) -> f64 {
    RADIUS * RADIUS * omega - RADIUS * v_x
}

/// Post-collision angular velocity from momentum transfer.
pub fn omega_after(omega: f64, v_x: f64, v_x_prime: f64) -> f64 {
    omega + (v_x_prime - v_x) / RADIUS
}

#[derive(Debug, Clone)]
pub struct CollisionSample {
    pub omega: f64,
    pub omega_prime: f64,
    pub v_free: (f64, f64),
    pub v_free_prime: (f64, f64),
    pub t_c: f64,
    pub x0: f64,
    pub j: f64,
    pub t_pred: f64,
    /// Noisy inputs as fed to the model.
    pub observation: Vec<f64>,
    pub question: Vec<f64>,
    pub answer: (f64, f64),
    /// Pre-noise copies for invariant checks.
    pub observation_clean: Vec<f64>,
    pub question_clean: Vec<f64>,
}

/// Regenerate one sample, bit-identical to the bulk run.
pub fn sample(seed: u64, index: u64) -> CollisionSample {
    let mut rng = ChaCha8Rng::seed_from_u64(substream(seed, index));
    let noise = Normal::new(0.0, NOISE_SIGMA).expect("sigma > 0");

    // Rejection-sample a configuration with a usable collision time.
    let (omega, v_free, x0, t_c) = loop {
        let omega = rng.gen_range(-2.0..2.0);
        let speed = rng.gen_range(0.5..3.0);
        let angle = rng.gen_range(0.0..std::f64::consts::PI); // into the upper half-plane
        let v = (speed * angle.cos(), speed * angle.sin());
        let x0 = rng.gen_range(-2.0..2.0);
        let t_c = -x0 / v.0;
        if (MIN_COLLISION_TIME..=MAX_COLLISION_TIME).contains(&t_c) {
            break (omega, v, x0, t_c);
        }
    };
    let speed_prime = rng.gen_range(0.5..3.0);
    let angle_prime = rng.gen_range(0.0..2.0 * std::f64::consts::PI);
    let v_free_prime = (
        speed_prime * angle_prime.cos(),
        speed_prime * angle_prime.sin(),
    );
    let omega_prime = omega_after(omega, v_free.0, v_free_prime.0);
    let j = angular_momentum(omega, v_free.0);

    let mut sorted_times = |lo: f64, hi: f64| -> Vec<f64> {
        let mut ts: Vec<f64> = (0..POINTS_PER_TRACK).map(|_| rng.gen_range(lo..hi)).collect();
        ts.sort_by(|a, b| a.partial_cmp(b).expect("finite times"));
        ts
    };
    let rot_times = sorted_times(0.0, t_c);
    let free_times = sorted_times(0.0, t_c);
    let post_times = sorted_times(t_c, t_c + POST_WINDOW);
    let t_pred = rng.gen_range(t_c..t_c + POST_WINDOW);

    let mut observation_clean = Vec::with_capacity(OBS_DIM);
    for &t in &rot_times {
        let (x, y) = rod_position(omega, t, t_c);
        observation_clean.extend_from_slice(&[t, x, y]);
    }
    for &t in &free_times {
        let (x, y) = free_position(v_free, t, t_c);
        observation_clean.extend_from_slice(&[t, x, y]);
    }
    let mut question_clean = Vec::with_capacity(QUESTION_DIM);
    question_clean.push(t_pred);
    for &t in &post_times {
        let (x, y) = free_position(v_free_prime, t, t_c);
        question_clean.extend_from_slice(&[t, x, y]);
    }
    let answer = rod_position(omega_prime, t_pred, t_c);

    // Noise on positions only, never on times or answers.
    let noisy = |clean: &[f64], skip_leading: usize, rng: &mut ChaCha8Rng| -> Vec<f64> {
        clean
            .iter()
            .enumerate()
            .map(|(i, &v)| {
                if i < skip_leading || (i - skip_leading).is_multiple_of(3) {
                    v
                } else {
                    v + noise.sample(rng)
                }
            })
            .collect()
    };
    let observation = noisy(&observation_clean, 0, &mut rng);
    let question = noisy(&question_clean, 1, &mut rng);

    CollisionSample {
        omega,
        omega_prime,
        v_free,
        v_free_prime,
        t_c,
        x0,
        j,
        t_pred,
        observation,
        question,
        answer,
        observation_clean,
        question_clean,
    }
}

pub fn generate(n: usize, seed: u64) -> Result<Dataset> {
    if n == 0 {
        return Err(Error::config("sample count must be positive"));
    }
    let mut observations = Array2::zeros((n, OBS_DIM));
    let mut questions = Array2::zeros((n, QUESTION_DIM));
    let mut answers = Array2::zeros((n, 2));
    let mut ground_truth = Array2::zeros((n, 1));
    for i in 0..n {
        let s = sample(seed, i as u64);
        for (j, &v) in s.observation.iter().enumerate() {
            observations[(i, j)] = v;
        }
        for (j, &v) in s.question.iter().enumerate() {
            questions[(i, j)] = v;
        }
        answers[(i, 0)] = s.answer.0;
        answers[(i, 1)] = s.answer.1;
        ground_truth[(i, 0)] = s.j;
    }
    Ok(Dataset {
        meta: DatasetMeta {
            example: "collision".into(),
            generator_version: GENERATOR_VERSION.into(),
            seed,
            n,
            obs_dim: OBS_DIM,
            question_dim: QUESTION_DIM,
            answer_dim: 2,
            answer_steps: 1,
            ground_truth_columns: vec!["J".into()],
        },
        observations,
        questions,
        answers,
        ground_truth,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hand_evaluated_conservation_case() {
        // omega=1, v=(2,0), v'=(1,0): J = 1 - 2 = -1, omega' = 0, J' = -1
        let j = angular_momentum(1.0, 2.0);
        assert_eq!(j, -1.0);
        let op = omega_after(1.0, 2.0, 1.0);
        assert_eq!(op, 0.0);
        let j_after = angular_momentum(op, 1.0);
        assert_eq!(j_after, -1.0);
    }

    #[test]
    fn unchanged_velocity_keeps_omega() {
        assert_eq!(omega_after(1.3, 0.8, 0.8), 1.3);
    }

    #[test]
    fn momentum_conserved_exactly_per_sample() {
        for i in 0..500 {
            let s = sample(5, i);
            let before = angular_momentum(s.omega, s.v_free.0);
            let after = angular_momentum(s.omega_prime, s.v_free_prime.0);
            assert!((before - after).abs() < 1e-12);
            assert!((before - s.j).abs() < 1e-12);
        }
    }

    #[test]
    fn rod_points_lie_on_circle() {
        let s = sample(11, 0);
        for chunk in s.observation_clean.chunks(3).take(POINTS_PER_TRACK) {
            let (x, y) = (chunk[1], chunk[2]);
            assert!((x * x + y * y - RADIUS * RADIUS).abs() < 1e-9);
        }
        let (ax, ay) = s.answer;
        assert!((ax * ax + ay * ay - RADIUS * RADIUS).abs() < 1e-9);
    }

    #[test]
    fn free_track_passes_through_collision_point() {
        let s = sample(11, 4);
        let (x, y) = free_position(s.v_free, s.t_c, s.t_c);
        assert!((x.abs()) < 1e-12 && (y - RADIUS).abs() < 1e-12);
        assert!(s.t_c > 0.0);
    }

    #[test]
    fn noise_touches_positions_only() {
        let s = sample(2, 7);
        for (i, (&noisy, &clean)) in s.observation.iter().zip(&s.observation_clean).enumerate() {
            if i % 3 == 0 {
                assert_eq!(noisy, clean, "time entry {i} must be noiseless");
            }
        }
        assert_eq!(s.question[0], s.question_clean[0], "t_pred is noiseless");
        for (i, (&noisy, &clean)) in s.question.iter().zip(&s.question_clean).enumerate().skip(1) {
            if (i - 1) % 3 == 0 {
                assert_eq!(noisy, clean, "time entry {i} must be noiseless");
            }
        }
        // some position got perturbed
        assert_ne!(s.observation, s.observation_clean);
    }

    #[test]
    fn generate_matches_single_samples() {
        let ds = generate(10, 21).unwrap();
        let s = sample(21, 6);
        for j in 0..OBS_DIM {
            assert_eq!(ds.observations[(6, j)], s.observation[j]);
        }
        assert_eq!(ds.ground_truth[(6, 0)], s.j);
    }
}
