//! Acceptance checks for the five physics experiments plus the always-on
//! property suite.
//!
//! Criteria 1-6 train full-size models with the shipped presets; each takes
//! hours of CPU time, so they are `#[ignore]`d and meant to be run explicitly:
//!
//! ```text
//! cargo test --release --test acceptance -- --ignored --test-threads 1
//! ```
//!
//! The property suite (criterion 7) runs with every `cargo test`.

use std::sync::OnceLock;

use ndarray::{Array1, Array2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use scinet::analysis::{
    activation_map, collapsed_latent_detect, estimate_dimension, grid_2d, latent_sweep_jobs,
    linear_fit, pearson, pendulum_inverse, solar_inverse, COLLAPSE_FRACTION_DEFAULT,
};
use scinet::autodiff::{Mlp, Tape};
use scinet::datagen::{
    born_probability, collision, haar_state, pendulum, qubit, solar, Completeness,
};
use scinet::model::{loss_beta_vae, LatentState, SciNetModel};
use scinet::train::presets::{generate_data, preset, ExperimentPreset};
use scinet::train::{evaluate_rmse, train, AnswerMetric, TrainOptions, TrainPhase};

const DATA_SEED: u64 = 1;
const MODEL_SEED: u64 = 2;
const TRAIN_SEED: u64 = 3;
const SWEEP_SEED: u64 = 4;

// Tolerances, pinned.
const PENDULUM_RMSE_MAX: f64 = 0.03;
const COLLISION_RMSE_MAX: f64 = 0.06;
const COLLISION_J_R2_MIN: f64 = 0.95;
const PEARSON_STRONG: f64 = 0.9;
const PEARSON_WEAK: f64 = 0.3;
const QUBIT1_WIDTH2_IMPROVEMENT: f64 = 0.5;
const QUBIT2_PLATEAU_IMPROVEMENT: f64 = 0.3;
const INCOMPLETE_RMSE_FACTOR: f64 = 2.0;
const SOLAR_RMSE_MAX: f64 = 0.008;
const SOLAR_PLANE_R2_MIN: f64 = 0.95;

fn jobs() -> usize {
    std::thread::available_parallelism().map_or(1, std::num::NonZeroUsize::get)
}

fn train_preset(p: &ExperimentPreset) -> (SciNetModel, f64) {
    let (train_data, test_data) = generate_data(p, DATA_SEED).expect("generation succeeds");
    let mut model = SciNetModel::new(p.spec.clone(), MODEL_SEED).expect("valid spec");
    train(
        &mut model,
        &train_data,
        &p.phases,
        TrainOptions {
            seed: TRAIN_SEED,
            metric: p.metric,
            ..Default::default()
        },
    )
    .expect("training completes");
    let rmse = evaluate_rmse(&model, &test_data, p.metric, p.rmse_normalizer)
        .expect("evaluation succeeds");
    (model, rmse)
}

fn pendulum_trained() -> &'static (SciNetModel, f64) {
    static CACHE: OnceLock<(SciNetModel, f64)> = OnceLock::new();
    CACHE.get_or_init(|| train_preset(&preset("pendulum").unwrap()))
}

#[test]
#[ignore = "full-scale training run (hours); run with --ignored"]
fn criterion_1_pendulum_accuracy() {
    let (_, rmse) = pendulum_trained();
    let pass = *rmse <= PENDULUM_RMSE_MAX;
    println!(
        "criterion 1 (pendulum accuracy): {} rmse={rmse:.5} (max {PENDULUM_RMSE_MAX})",
        if pass { "PASS" } else { "FAIL" }
    );
    assert!(pass);
}

#[test]
#[ignore = "full-scale training run (hours); run with --ignored"]
fn criterion_2_pendulum_representation() {
    let (model, _) = pendulum_trained();
    let grid = grid_2d((5.0, 10.0), (0.5, 1.0), 20, 20).unwrap();
    let map = activation_map(model, &["kappa", "b"], &grid, &pendulum_inverse).unwrap();
    let collapsed = collapsed_latent_detect(&map.activations, COLLAPSE_FRACTION_DEFAULT).unwrap();
    let kappa: Vec<f64> = map.params.column(0).to_vec();
    let b: Vec<f64> = map.params.column(1).to_vec();
    let mut corr = Vec::new();
    for j in 0..3 {
        let latent: Vec<f64> = map.activations.column(j).to_vec();
        let ck = pearson(&latent, &kappa).unwrap_or(0.0).abs();
        let cb = pearson(&latent, &b).unwrap_or(0.0).abs();
        corr.push((j, ck, cb));
    }
    let active: Vec<&(usize, f64, f64)> =
        corr.iter().filter(|(j, _, _)| !collapsed.contains(j)).collect();
    let kappa_neuron = active
        .iter()
        .any(|&&(_, ck, cb)| ck > PEARSON_STRONG && cb < PEARSON_WEAK);
    let b_neuron = active
        .iter()
        .any(|&&(_, ck, cb)| cb > PEARSON_STRONG && ck < PEARSON_WEAK);
    let pass = collapsed.len() == 1 && active.len() == 2 && kappa_neuron && b_neuron;
    println!(
        "criterion 2 (pendulum representation): {} collapsed={collapsed:?} correlations={corr:?}",
        if pass { "PASS" } else { "FAIL" }
    );
    assert!(pass);
}

#[test]
#[ignore = "full-scale training run (hours); run with --ignored"]
fn criterion_3_collision_conserved_quantity() {
    let p = preset("collision").unwrap();
    let (train_data, test_data) = generate_data(&p, DATA_SEED).unwrap();
    let mut model = SciNetModel::new(p.spec.clone(), MODEL_SEED).unwrap();
    train(
        &mut model,
        &train_data,
        &p.phases,
        TrainOptions {
            seed: TRAIN_SEED,
            metric: p.metric,
            ..Default::default()
        },
    )
    .unwrap();
    let rmse = evaluate_rmse(&model, &test_data, p.metric, p.rmse_normalizer).unwrap();
    let activations =
        scinet::analysis::latent_activations(&model, &test_data.observations).unwrap();
    let latent = activations.column(0).to_owned();
    let fit = linear_fit(&test_data.ground_truth, latent.view()).unwrap();
    let pass = rmse <= COLLISION_RMSE_MAX && fit.r_squared >= COLLISION_J_R2_MIN;
    println!(
        "criterion 3 (collision): {} rmse={rmse:.5} (max {COLLISION_RMSE_MAX}) J-fit r2={:.4} (min {COLLISION_J_R2_MIN})",
        if pass { "PASS" } else { "FAIL" },
        fit.r_squared
    );
    assert!(pass);
}

fn best_curve(report: &scinet::analysis::SweepReport) -> Vec<f64> {
    report
        .best_per_width
        .iter()
        .map(|&(_, b)| b.expect("at least one trial per width succeeded"))
        .collect()
}

#[test]
#[ignore = "full-scale sweep (many training runs); run with --ignored"]
fn criterion_4_qubit_dimension_detection() {
    let p1 = preset("qubit1").unwrap();
    let (train1, test1) = generate_data(&p1, DATA_SEED).unwrap();
    let widths1: Vec<usize> = (0..=5).collect();
    let report1 =
        latent_sweep_jobs(&p1, &widths1, 3, SWEEP_SEED, &train1, &test1, jobs()).unwrap();
    let curve1 = best_curve(&report1);
    let est1 = estimate_dimension(&widths1, &curve1, 0.7).unwrap();
    let drop_ok = {
        let best_ge2 = curve1[2..].iter().cloned().fold(f64::INFINITY, f64::min);
        best_ge2 <= QUBIT1_WIDTH2_IMPROVEMENT * curve1[1]
    };
    let one_ok = (est1.dimension == 2 || est1.dimension == 3) && drop_ok;
    println!(
        "criterion 4a (1-qubit dimension): {} dimension={} curve={curve1:?}",
        if one_ok { "PASS" } else { "FAIL" },
        est1.dimension
    );

    let p2 = preset("qubit2").unwrap();
    let (train2, test2) = generate_data(&p2, DATA_SEED).unwrap();
    let widths2: Vec<usize> = (0..=9).collect();
    let report2 =
        latent_sweep_jobs(&p2, &widths2, 3, SWEEP_SEED, &train2, &test2, jobs()).unwrap();
    let curve2 = best_curve(&report2);
    let est2 = estimate_dimension(&widths2, &curve2, 0.7).unwrap();
    let plateau_ok = curve2[6..]
        .windows(2)
        .all(|w| w[1] >= (1.0 - QUBIT2_PLATEAU_IMPROVEMENT) * w[0]);
    let two_ok = (est2.dimension == 6 || est2.dimension == 7) && plateau_ok;
    println!(
        "criterion 4b (2-qubit dimension): {} dimension={} curve={curve2:?}",
        if two_ok { "PASS" } else { "FAIL" },
        est2.dimension
    );
    assert!(one_ok && two_ok);
}

#[test]
#[ignore = "full-scale sweep (many training runs); run with --ignored"]
fn criterion_5_tomographic_incompleteness() {
    // 1 qubit: restricted state tomography keeps the error high at every width
    let p1 = preset("qubit1").unwrap();
    let (ctrain, ctest) = generate_data(&p1, DATA_SEED).unwrap();
    let widths: Vec<usize> = (0..=5).collect();
    let complete =
        latent_sweep_jobs(&p1, &widths, 3, SWEEP_SEED, &ctrain, &ctest, jobs()).unwrap();
    let complete_at_2 = complete.best_per_width[2].1.unwrap();

    let n1 = p1.n_train + p1.n_test;
    let sub = qubit::generate(n1, DATA_SEED, 1, Completeness::RealSubspace { k: 2 }).unwrap();
    let (strain, stest) = sub.split(p1.n_train).unwrap();
    let restricted =
        latent_sweep_jobs(&p1, &widths, 3, SWEEP_SEED, &strain, &stest, jobs()).unwrap();
    let restricted_best = best_curve(&restricted)
        .into_iter()
        .fold(f64::INFINITY, f64::min);
    let one_ok = restricted_best >= INCOMPLETE_RMSE_FACTOR * complete_at_2;
    println!(
        "criterion 5a (1-qubit incompleteness): {} restricted best={restricted_best:.5} complete@2={complete_at_2:.5}",
        if one_ok { "PASS" } else { "FAIL" }
    );

    // 2 qubits: growing the measured subspace from k=2 to k=3 helps
    let p2 = preset("qubit2").unwrap();
    let n2 = p2.n_train + p2.n_test;
    let mut rmse_k = Vec::new();
    for k in [2usize, 3] {
        let ds = qubit::generate(n2, DATA_SEED, 2, Completeness::RealSubspace { k }).unwrap();
        let (train_data, test_data) = ds.split(p2.n_train).unwrap();
        let mut model = SciNetModel::new(p2.spec.clone(), MODEL_SEED).unwrap();
        train(
            &mut model,
            &train_data,
            &p2.phases,
            TrainOptions {
                seed: TRAIN_SEED,
                metric: p2.metric,
                ..Default::default()
            },
        )
        .unwrap();
        rmse_k.push(evaluate_rmse(&model, &test_data, p2.metric, p2.rmse_normalizer).unwrap());
    }
    let two_ok = rmse_k[1] < rmse_k[0];
    println!(
        "criterion 5b (2-qubit subspace growth): {} k=2 rmse={:.5} k=3 rmse={:.5}",
        if two_ok { "PASS" } else { "FAIL" },
        rmse_k[0],
        rmse_k[1]
    );
    assert!(one_ok && two_ok);
}

#[test]
#[ignore = "full-scale training run (days on one core); run with --ignored"]
fn criterion_6_heliocentric_representation() {
    let p = preset("solar").unwrap();
    let (model, rmse) = train_preset(&p);
    let rmse_ok = rmse <= SOLAR_RMSE_MAX;

    // plane fit on a wrap-free chart of the torus
    let lo = std::f64::consts::FRAC_PI_2;
    let hi = 3.0 * std::f64::consts::FRAC_PI_2;
    let grid = grid_2d((lo, hi), (lo, hi), 20, 20).unwrap();
    let map = activation_map(&model, &["phi_E", "phi_M"], &grid, &solar_inverse).unwrap();
    let mut r2 = Vec::new();
    for j in 0..map.activations.dim().1 {
        let latent = map.activations.column(j).to_owned();
        let fit = linear_fit(&map.params, latent.view()).unwrap();
        r2.push(fit.r_squared);
    }
    let planes_ok = r2.iter().all(|&v| v >= SOLAR_PLANE_R2_MIN);
    let pass = rmse_ok && planes_ok;
    println!(
        "criterion 6 (heliocentric): {} rmse={rmse:.5} (max {SOLAR_RMSE_MAX}) plane r2={r2:?} (min {SOLAR_PLANE_R2_MIN})",
        if pass { "PASS" } else { "FAIL" }
    );
    assert!(pass);
}

// ---------------------------------------------------------------------------
// Criterion 7: property suites, always runnable.
// ---------------------------------------------------------------------------

#[test]
fn criterion_7_gradient_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let mut worst: f64 = 0.0;
    for net in 0..100 {
        let depth = rng.gen_range(2..4);
        let sizes: Vec<usize> = (0..=depth).map(|_| rng.gen_range(1..5)).collect();
        let mlp = Mlp::init(&sizes, 1.0, 1000 + net).unwrap();
        let input = Array2::from_shape_fn((2, sizes[0]), |_| rng.gen_range(-1.5..1.5));

        let mut tape = Tape::new();
        let leaves = mlp.stage(&mut tape);
        let x = tape.leaf(input.clone());
        let out = mlp.forward_staged(&mut tape, &leaves, x).unwrap();
        let sq = tape.mul(out, out).unwrap();
        let loss = tape.sum(sq);
        tape.backward(loss).unwrap();

        let loss_of = |m: &Mlp| -> f64 {
            m.eval_batch(&input)
                .unwrap()
                .iter()
                .map(|v| v * v)
                .sum()
        };
        let t = rng.gen_range(0..2 * (sizes.len() - 1));
        let id = leaves.layers[t / 2].0;
        let id = if t % 2 == 1 { leaves.layers[t / 2].1 } else { id };
        let g = tape.grad(id).clone();
        let (rows, cols) = g.dim();
        let (i, j) = (rng.gen_range(0..rows), rng.gen_range(0..cols));
        let h = 1e-6;
        let mut plus = mlp.clone();
        plus.tensors_mut()[t][(i, j)] += h;
        let mut minus = mlp.clone();
        minus.tensors_mut()[t][(i, j)] -= h;
        let numeric = (loss_of(&plus) - loss_of(&minus)) / (2.0 * h);
        let analytic = g[(i, j)];
        let rel = (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-8);
        worst = worst.max(rel);
        assert!(rel < 1e-4, "net {net}: rel err {rel}");
    }
    println!("criterion 7 (gradient check): PASS worst rel err {worst:.2e}");
}

#[test]
fn criterion_7_collision_conservation_ten_thousand_samples() {
    for i in 0..10_000u64 {
        let s = collision::sample(7, i);
        let before = collision::angular_momentum(s.omega, s.v_free.0);
        let after = collision::angular_momentum(s.omega_prime, s.v_free_prime.0);
        assert!(
            (before - after).abs() < 1e-12,
            "sample {i}: {before} vs {after}"
        );
    }
    println!("criterion 7 (J conservation): PASS 10000 samples within 1e-12");
}

#[test]
fn criterion_7_pendulum_ode_residual() {
    let dt = 1e-4;
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..200 {
        let kappa = rng.gen_range(5.0..10.0);
        let b = rng.gen_range(0.5..1.0);
        let t = rng.gen_range(0.1..10.0);
        let xm = pendulum::position(kappa, b, t - dt);
        let x0 = pendulum::position(kappa, b, t);
        let xp = pendulum::position(kappa, b, t + dt);
        let xdd = (xp - 2.0 * x0 + xm) / (dt * dt);
        let xd = (xp - xm) / (2.0 * dt);
        let residual = xdd + b * xd + kappa * x0;
        assert!(
            residual.abs() < 1e-3 * kappa,
            "residual {residual} at kappa={kappa} b={b} t={t}"
        );
    }
    println!("criterion 7 (pendulum ODE): PASS residual < 1e-3 kappa");
}

#[test]
fn criterion_7_born_rule_invariances() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..200 {
        let dim = if rng.gen_bool(0.5) { 2 } else { 4 };
        let psi = haar_state(dim, &mut rng);
        let omega = haar_state(dim, &mut rng);
        let p = born_probability(&omega, &psi).unwrap();
        assert!((0.0..=1.0 + 1e-12).contains(&p));
        // global phase invariance
        let phase =
            num_complex::Complex64::from_polar(1.0, rng.gen_range(0.0..std::f64::consts::TAU));
        let psi_rot: Vec<num_complex::Complex64> = psi.iter().map(|a| a * phase).collect();
        let p_rot = born_probability(&omega, &psi_rot).unwrap();
        assert!((p - p_rot).abs() < 1e-10);
        // self-overlap normalization
        assert!((born_probability(&psi, &psi).unwrap() - 1.0).abs() < 1e-10);
    }
    println!("criterion 7 (Born rule): PASS invariance and normalization");
}

#[test]
fn criterion_7_sun_angle_identity() {
    let eph = solar::simulate(13);
    for t in 0..solar::EPOCHS {
        let diff = (eph.theta_s[t] - eph.phi_e[t] - std::f64::consts::PI)
            .rem_euclid(2.0 * std::f64::consts::PI);
        assert!(diff < 1e-9 || 2.0 * std::f64::consts::PI - diff < 1e-9);
    }
    println!("criterion 7 (sun angle identity): PASS over {} epochs", solar::EPOCHS);
}

#[test]
fn criterion_7_loss_hand_values() {
    // pred 1, true 0, mu (1, 0), log_sigma (0, 0), beta 2:
    // recon = 1; reg term = sum(2 ls - mu^2 - e^{2 ls}) = (-2) + (-1) = -3
    // loss = 1 - (2/2)(-3) = 4
    let state = LatentState {
        mu: Array1::from(vec![1.0, 0.0]),
        log_sigma: Array1::from(vec![0.0, 0.0]),
        z: Array1::zeros(2),
    };
    let pred = Array1::from(vec![1.0]);
    let truth = Array1::from(vec![0.0]);
    let loss = loss_beta_vae(&pred, &truth, &state, 2.0).unwrap();
    assert!((loss - 4.0).abs() < 1e-12);
    let at_zero = loss_beta_vae(&pred, &truth, &state, 0.0).unwrap();
    assert!((at_zero - 1.0).abs() < 1e-12);
    println!("criterion 7 (loss hand values): PASS");
}

#[test]
fn criterion_7_bit_determinism() {
    let gen_a = pendulum::generate(50, 31).unwrap().to_bytes().unwrap();
    let gen_b = pendulum::generate(50, 31).unwrap().to_bytes().unwrap();
    assert_eq!(gen_a, gen_b, "generation must be bit-deterministic");

    let run = || {
        let ds = pendulum::generate(30, 31).unwrap();
        let spec = scinet::model::SciNetSpec {
            obs_dim: 50,
            question_dim: 1,
            latent_dim: 3,
            answer_dim: 1,
            encoder_layers: vec![16],
            decoder_layers: vec![16],
            recurrent: None,
        };
        let mut model = SciNetModel::new(spec, 5).unwrap();
        train(
            &mut model,
            &ds,
            &[TrainPhase {
                learning_rate: 1e-3,
                epochs: 4,
                batch_size: 10,
                beta: 1e-3,
                answer_steps: None,
            }],
            TrainOptions {
                seed: 6,
                metric: AnswerMetric::Squared,
                ..Default::default()
            },
        )
        .unwrap();
        model.to_bytes().unwrap()
    };
    assert_eq!(run(), run(), "training must be bit-deterministic");
    println!("criterion 7 (bit determinism): PASS");
}
