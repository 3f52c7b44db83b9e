//! Finite-difference validation of the reverse-mode gradients, including the
//! regularizer terms and the weight-shared recurrent decoder.

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use scinet::autodiff::{Mlp, Tape};
use scinet::model::{RecurrentSpec, SciNetModel, SciNetSpec};

const FD_STEP: f64 = 1e-6;
const REL_TOL: f64 = 1e-4;

fn relative_error(analytic: f64, numeric: f64) -> f64 {
    let scale = analytic.abs().max(numeric.abs()).max(1e-8);
    (analytic - numeric).abs() / scale
}

/// Scalar loss of an MLP on a fixed batch: sum of squared outputs.
fn mlp_loss(mlp: &Mlp, input: &Array2<f64>) -> f64 {
    let out = mlp.eval_batch(input).unwrap();
    out.iter().map(|v| v * v).sum()
}

fn mlp_loss_node(mlp: &Mlp, input: &Array2<f64>, tape: &mut Tape) -> (scinet::autodiff::NodeId, Vec<scinet::autodiff::NodeId>) {
    let leaves = mlp.stage(tape);
    let x = tape.leaf(input.clone());
    let out = mlp.forward_staged(tape, &leaves, x).unwrap();
    let sq = tape.mul(out, out).unwrap();
    let loss = tape.sum(sq);
    let ids = leaves
        .layers
        .iter()
        .flat_map(|&(w, b)| [w, b])
        .collect();
    (loss, ids)
}

#[test]
fn random_networks_match_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for net in 0..100 {
        let depth = rng.gen_range(2..4);
        let sizes: Vec<usize> = (0..=depth).map(|_| rng.gen_range(1..5)).collect();
        let mlp = Mlp::init(&sizes, 1.0, net).unwrap();
        let batch = rng.gen_range(1..4);
        let input = Array2::from_shape_fn((batch, sizes[0]), |_| rng.gen_range(-1.5..1.5));

        let mut tape = Tape::new();
        let (loss, ids) = mlp_loss_node(&mlp, &input, &mut tape);
        tape.backward(loss).unwrap();
        let grads: Vec<Array2<f64>> = ids.iter().map(|&id| tape.grad(id).clone()).collect();

        // Probe a few random coordinates of a random parameter tensor.
        for _ in 0..3 {
            let t = rng.gen_range(0..grads.len());
            let (rows, cols) = grads[t].dim();
            let (i, j) = (rng.gen_range(0..rows), rng.gen_range(0..cols));
            let mut plus = mlp.clone();
            plus.tensors_mut()[t][(i, j)] += FD_STEP;
            let mut minus = mlp.clone();
            minus.tensors_mut()[t][(i, j)] -= FD_STEP;
            let numeric = (mlp_loss(&plus, &input) - mlp_loss(&minus, &input)) / (2.0 * FD_STEP);
            let analytic = grads[t][(i, j)];
            let err = relative_error(analytic, numeric);
            assert!(
                err < REL_TOL,
                "net {net} tensor {t} ({i},{j}): analytic {analytic} vs numeric {numeric} (rel {err})"
            );
        }
    }
}

#[test]
fn regularizer_gradient_vanishes_at_standard_normal() {
    // d/dmu [-(b/2)(2 ls - mu^2 - e^{2 ls})] = b mu = 0 at mu = 0
    // d/dls [...] = -(b/2)(2 - 2 e^{2 ls}) = 0 at ls = 0
    let beta = 0.37;
    let mut tape = Tape::new();
    let mu = tape.leaf(Array2::zeros((2, 3)));
    let ls = tape.leaf(Array2::zeros((2, 3)));
    let two_ls = tape.scale(ls, 2.0);
    let sigma_sq = tape.exp(two_ls);
    let mu_sq = tape.mul(mu, mu).unwrap();
    let inner = tape.sub(two_ls, mu_sq).unwrap();
    let inner = tape.sub(inner, sigma_sq).unwrap();
    let total = tape.sum(inner);
    let reg = tape.scale(total, -beta / 2.0);
    tape.backward(reg).unwrap();
    for &g in tape.grad(mu).iter().chain(tape.grad(ls).iter()) {
        assert!(g.abs() < 1e-14, "gradient {g} should vanish");
    }
}

fn recurrent_loss(model: &SciNetModel, obs: &Array2<f64>, eps: &Array2<f64>, steps: usize) -> f64 {
    let mut tape = Tape::new();
    let staged = model.stage(&mut tape);
    let q = Array2::zeros((obs.dim().0, 0));
    let out = model
        .forward_batch(&mut tape, &staged, obs, &q, eps, steps)
        .unwrap();
    let mut total = 0.0;
    for &a in &out.answers {
        total += tape.value(a).iter().map(|v| v * v).sum::<f64>();
    }
    total
}

#[test]
fn recurrent_shared_decoder_gradients_match_finite_differences() {
    let spec = SciNetSpec {
        obs_dim: 2,
        question_dim: 0,
        latent_dim: 2,
        answer_dim: 2,
        encoder_layers: vec![6],
        decoder_layers: vec![6],
        recurrent: Some(RecurrentSpec { n_steps: 3 }),
    };
    let model = SciNetModel::new(spec, 8).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let obs = Array2::from_shape_fn((3, 2), |_| rng.gen_range(-1.0..1.0));
    let eps = Array2::from_shape_fn((3, 2), |_| rng.gen_range(-0.5..0.5));
    let steps = 3;

    let mut tape = Tape::new();
    let staged = model.stage(&mut tape);
    let q = Array2::zeros((3, 0));
    let out = model
        .forward_batch(&mut tape, &staged, &obs, &q, &eps, steps)
        .unwrap();
    let mut loss = None;
    for &a in &out.answers {
        let sq = tape.mul(a, a).unwrap();
        let s = tape.sum(sq);
        loss = Some(match loss {
            Some(prev) => tape.add(prev, s).unwrap(),
            None => s,
        });
    }
    let loss = loss.unwrap();
    tape.backward(loss).unwrap();
    let ids = staged.param_ids();
    let grads: Vec<Array2<f64>> = ids.iter().map(|&id| tape.grad(id).clone()).collect();

    // Probe every tensor (decoder weights accumulate over all steps; the
    // shift vector accumulates over steps 2..n).
    for (t, grad) in grads.iter().enumerate() {
        let (rows, cols) = grad.dim();
        let (i, j) = (rows / 2, cols / 2);
        let mut plus = model.clone();
        plus.param_tensors_mut()[t][(i, j)] += FD_STEP;
        let mut minus = model.clone();
        minus.param_tensors_mut()[t][(i, j)] -= FD_STEP;
        let numeric =
            (recurrent_loss(&plus, &obs, &eps, steps) - recurrent_loss(&minus, &obs, &eps, steps))
                / (2.0 * FD_STEP);
        let analytic = grads[t][(i, j)];
        let err = relative_error(analytic, numeric);
        assert!(
            err < REL_TOL,
            "tensor {t} ({i},{j}): analytic {analytic} vs numeric {numeric} (rel {err})"
        );
    }
}
