//! Quantum tomography data: Born-rule outcome probabilities of binary
//! projective measurements on Haar-random pure states of one or two qubits.

use ndarray::Array2;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::dataset::{Dataset, DatasetMeta, GENERATOR_VERSION};
use crate::error::{Error, Result};
use crate::rng::substream;

/// Reference measurements per set: 10 for one qubit, 30 for two qubits.
pub fn measurements_per_set(n_qubits: usize) -> usize {
    match n_qubits {
        1 => 10,
        _ => 30,
    }
}

/// Restriction on the state-parameterizing measurement set M1.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Completeness {
    /// Haar-random measurements; tomographically complete with probability 1.
    Full,
    /// Measurements restricted to random real superpositions of `k`
    /// orthonormal states; incomplete for k < dim (and for real k = dim).
    RealSubspace { k: usize },
}

/// Haar-uniform pure state: i.i.d. standard complex Gaussian entries,
/// normalized.
pub fn haar_state(dim: usize, rng: &mut ChaCha8Rng) -> Vec<Complex64> {
    let mut psi: Vec<Complex64> = (0..dim)
        .map(|_| {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            Complex64::new(re, im)
        })
        .collect();
    normalize(&mut psi);
    psi
}

fn normalize(v: &mut [Complex64]) {
    let norm = v.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
    for c in v.iter_mut() {
        *c /= norm;
    }
}

/// Born rule: probability of outcome 0, `|<omega|psi>|^2`.
pub fn born_probability(omega: &[Complex64], psi: &[Complex64]) -> Result<f64> {
    if omega.len() != psi.len() {
        return Err(Error::dim("born_probability", omega.len(), psi.len()));
    }
    let amp: Complex64 = omega
        .iter()
        .zip(psi)
        .map(|(w, p)| w.conj() * p)
        .sum();
    Ok(amp.norm_sqr())
}

/// Orthonormalize `count` Haar-random vectors by Gram-Schmidt.
fn random_orthonormal_set(dim: usize, count: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<Complex64>> {
    let mut basis: Vec<Vec<Complex64>> = Vec::with_capacity(count);
    while basis.len() < count {
        let mut v = haar_state(dim, rng);
        for e in &basis {
            let overlap: Complex64 = e.iter().zip(&v).map(|(e, v)| e.conj() * v).sum();
            for (vi, ei) in v.iter_mut().zip(e) {
                *vi -= overlap * ei;
            }
        }
        let norm = v.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        if norm < 1e-8 {
            continue; // numerically degenerate draw
        }
        for c in v.iter_mut() {
            *c /= norm;
        }
        basis.push(v);
    }
    basis
}

/// Draw a measurement set of `count` vectors.
fn measurement_set(
    dim: usize,
    count: usize,
    completeness: Completeness,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<Vec<Complex64>>> {
    match completeness {
        Completeness::Full => Ok((0..count).map(|_| haar_state(dim, rng)).collect()),
        Completeness::RealSubspace { k } => {
            if k == 0 || k > dim {
                return Err(Error::config(format!(
                    "subspace dimension k={k} must lie in 1..={dim}"
                )));
            }
            let basis = random_orthonormal_set(dim, k, rng);
            Ok((0..count)
                .map(|_| {
                    let coeffs: Vec<f64> =
                        (0..k).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
                    let mut v = vec![Complex64::new(0.0, 0.0); dim];
                    for (c, e) in coeffs.iter().zip(&basis) {
                        for (vi, ei) in v.iter_mut().zip(e) {
                            *vi += Complex64::new(*c, 0.0) * ei;
                        }
                    }
                    normalize(&mut v);
                    v
                })
                .collect())
        }
    }
}

/// The fixed measurement sets used by one dataset. M1 parameterizes states,
/// M2 parameterizes question measurements (always Haar).
pub struct MeasurementSets {
    pub m1: Vec<Vec<Complex64>>,
    pub m2: Vec<Vec<Complex64>>,
}

pub fn draw_measurement_sets(
    seed: u64,
    n_qubits: usize,
    completeness: Completeness,
) -> Result<MeasurementSets> {
    let dim = 1 << n_qubits;
    let count = measurements_per_set(n_qubits);
    let mut rng1 = ChaCha8Rng::seed_from_u64(substream(seed, u64::MAX));
    let m1 = measurement_set(dim, count, completeness, &mut rng1)?;
    let mut rng2 = ChaCha8Rng::seed_from_u64(substream(seed, u64::MAX - 1));
    let m2 = measurement_set(dim, count, Completeness::Full, &mut rng2)?;
    Ok(MeasurementSets { m1, m2 })
}

pub struct QubitSample {
    pub psi: Vec<Complex64>,
    pub omega: Vec<Complex64>,
    pub observation: Vec<f64>,
    pub question: Vec<f64>,
    pub answer: f64,
}

/// Regenerate one sample against fixed measurement sets.
pub fn sample(seed: u64, index: u64, sets: &MeasurementSets, dim: usize) -> Result<QubitSample> {
    let mut rng = ChaCha8Rng::seed_from_u64(substream(seed, index));
    let psi = haar_state(dim, &mut rng);
    let omega = haar_state(dim, &mut rng);
    let observation = sets
        .m1
        .iter()
        .map(|alpha| born_probability(alpha, &psi))
        .collect::<Result<Vec<f64>>>()?;
    let question = sets
        .m2
        .iter()
        .map(|beta| born_probability(beta, &omega))
        .collect::<Result<Vec<f64>>>()?;
    let answer = born_probability(&omega, &psi)?;
    Ok(QubitSample {
        psi,
        omega,
        observation,
        question,
        answer,
    })
}

pub fn generate(n: usize, seed: u64, n_qubits: usize, completeness: Completeness) -> Result<Dataset> {
    if n == 0 {
        return Err(Error::config("sample count must be positive"));
    }
    if !(1..=2).contains(&n_qubits) {
        return Err(Error::config("n_qubits must be 1 or 2"));
    }
    let dim = 1 << n_qubits;
    let sets = draw_measurement_sets(seed, n_qubits, completeness)?;
    let count = measurements_per_set(n_qubits);

    let mut observations = Array2::zeros((n, count));
    let mut questions = Array2::zeros((n, count));
    let mut answers = Array2::zeros((n, 1));
    let mut ground_truth = Array2::zeros((n, 2 * dim));
    for i in 0..n {
        let s = sample(seed, i as u64, &sets, dim)?;
        for (j, &p) in s.observation.iter().enumerate() {
            observations[(i, j)] = p;
        }
        for (j, &p) in s.question.iter().enumerate() {
            questions[(i, j)] = p;
        }
        answers[(i, 0)] = s.answer;
        for (j, c) in s.psi.iter().enumerate() {
            ground_truth[(i, j)] = c.re;
            ground_truth[(i, dim + j)] = c.im;
        }
    }
    let mut gt_columns = Vec::new();
    for j in 0..dim {
        gt_columns.push(format!("psi_re_{j}"));
    }
    for j in 0..dim {
        gt_columns.push(format!("psi_im_{j}"));
    }
    let example = match (n_qubits, completeness) {
        (1, Completeness::Full) => "qubit1".to_string(),
        (2, Completeness::Full) => "qubit2".to_string(),
        (q, Completeness::RealSubspace { k }) => format!("qubit{q}_subspace{k}"),
        _ => unreachable!(),
    };
    Ok(Dataset {
        meta: DatasetMeta {
            example,
            generator_version: GENERATOR_VERSION.into(),
            seed,
            n,
            obs_dim: count,
            question_dim: count,
            answer_dim: 1,
            answer_steps: 1,
            ground_truth_columns: gt_columns,
        },
        observations,
        questions,
        answers,
        ground_truth,
    })
}
