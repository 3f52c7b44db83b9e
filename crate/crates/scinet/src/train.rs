//! Mini-batch training loop with multi-phase schedules, evaluation metrics,
//! and the experiment presets.

pub mod presets;

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::autodiff::{wrap_to_pi, NodeId, Optimizer, Tape};
use crate::datagen::Dataset;
use crate::error::{Error, Result};
use crate::model::SciNetModel;
use crate::rng::substream;

/// How answer residuals are measured.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum AnswerMetric {
    /// Plain squared differences.
    Squared,
    /// Residuals wrapped into (-pi, pi] before squaring; used for angles.
    WrappedAngle,
}

/// One stage of a training schedule.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainPhase {
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub beta: f64,
    /// Answer-series prefix used this phase; `None` means the dataset's full
    /// series (1 for feed-forward examples).
    #[serde(default)]
    pub answer_steps: Option<usize>,
}

impl TrainPhase {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::config("learning rate must be positive and finite"));
        }
        if self.batch_size == 0 {
            return Err(Error::config("batch size must be >= 1"));
        }
        if !(self.beta >= 0.0 && self.beta.is_finite()) {
            return Err(Error::config("beta must be finite and >= 0"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub phase: usize,
    pub mean_batch_loss: f64,
}

#[derive(Debug, Clone, Default)]
pub struct Metrics {
    pub epoch_losses: Vec<f64>,
    pub wall_clock_seconds: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OptimizerChoice {
    Adam,
    Sgd,
}

pub struct TrainOptions<'a> {
    pub seed: u64,
    pub optimizer: OptimizerChoice,
    pub metric: AnswerMetric,
    /// Called once per epoch with the loss record.
    pub on_epoch: Option<&'a mut dyn FnMut(&EpochRecord)>,
}

impl Default for TrainOptions<'_> {
    fn default() -> Self {
        TrainOptions {
            seed: 0,
            optimizer: OptimizerChoice::Adam,
            metric: AnswerMetric::Squared,
            on_epoch: None,
        }
    }
}

/// Seeded permutation of `0..n` split into `batch_size` chunks (the last may
/// be short). Every index appears exactly once.
pub fn make_batches(n: usize, batch_size: usize, epoch_seed: u64) -> Result<Vec<Vec<usize>>> {
    if n == 0 {
        return Err(Error::config("cannot batch an empty dataset"));
    }
    if batch_size == 0 || batch_size > n {
        return Err(Error::config(format!(
            "batch size {batch_size} must lie in 1..={n}"
        )));
    }
    let mut indices: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(epoch_seed);
    // Fisher-Yates
    for i in (1..n).rev() {
        let j = rng.gen_range(0..=i);
        indices.swap(i, j);
    }
    Ok(indices.chunks(batch_size).map(<[usize]>::to_vec).collect())
}

/// Execute the phases in order on `model`. Optimizer state carries across
/// phases; everything is deterministic in `options.seed`.
pub fn train(
    model: &mut SciNetModel,
    dataset: &Dataset,
    phases: &[TrainPhase],
    mut options: TrainOptions,
) -> Result<Metrics> {
    dataset.validate()?;
    check_dims(model, dataset)?;
    for phase in phases {
        phase.validate()?;
    }
    let start = std::time::Instant::now();
    let mut optimizer = match options.optimizer {
        OptimizerChoice::Adam => Optimizer::adam_default(),
        OptimizerChoice::Sgd => Optimizer::Sgd,
    };
    let mut metrics = Metrics::default();
    let mut global_epoch = 0usize;
    for (phase_idx, phase) in phases.iter().enumerate() {
        let n_steps = resolve_steps(model, dataset, phase.answer_steps)?;
        for _ in 0..phase.epochs {
            let shuffle_seed = substream(options.seed, global_epoch as u64);
            let eps_seed = substream(options.seed, (1 << 40) | global_epoch as u64);
            let mut eps_rng = ChaCha8Rng::seed_from_u64(eps_seed);
            let batches = make_batches(dataset.len(), phase.batch_size, shuffle_seed)?;
            let mut epoch_loss = 0.0;
            for (batch_idx, batch) in batches.iter().enumerate() {
                let loss = train_batch(
                    model,
                    dataset,
                    batch,
                    phase,
                    n_steps,
                    options.metric,
                    &mut optimizer,
                    &mut eps_rng,
                )?;
                if !loss.is_finite() {
                    return Err(Error::Diverged {
                        epoch: global_epoch,
                        batch: batch_idx,
                    });
                }
                epoch_loss += loss;
            }
            let record = EpochRecord {
                epoch: global_epoch,
                phase: phase_idx,
                mean_batch_loss: epoch_loss / batches.len() as f64,
            };
            if let Some(cb) = options.on_epoch.as_mut() {
                cb(&record);
            }
            metrics.epoch_losses.push(record.mean_batch_loss);
            global_epoch += 1;
        }
    }
    metrics.wall_clock_seconds = start.elapsed().as_secs_f64();
    Ok(metrics)
}

#[allow(clippy::too_many_arguments)]
fn train_batch(
    model: &mut SciNetModel,
    dataset: &Dataset,
    batch: &[usize],
    phase: &TrainPhase,
    n_steps: usize,
    metric: AnswerMetric,
    optimizer: &mut Optimizer,
    eps_rng: &mut ChaCha8Rng,
) -> Result<f64> {
    let b = batch.len();
    let gather = |src: &Array2<f64>| -> Array2<f64> {
        let mut out = Array2::zeros((b, src.dim().1));
        for (row, &idx) in batch.iter().enumerate() {
            out.row_mut(row).assign(&src.row(idx));
        }
        out
    };
    let obs = gather(&dataset.observations);
    let questions = gather(&dataset.questions);
    let answers = gather(&dataset.answers);
    let latent = model.spec.latent_dim;
    let mut eps = Array2::zeros((b, latent));
    for v in eps.iter_mut() {
        *v = eps_rng.sample(StandardNormal);
    }

    let mut tape = Tape::new();
    let staged = model.stage(&mut tape);
    let out = model.forward_batch(&mut tape, &staged, &obs, &questions, &eps, n_steps)?;
    let loss_node = build_loss(
        &mut tape,
        &out.answers,
        &answers,
        dataset.meta.answer_dim,
        out.mu,
        out.log_sigma,
        phase.beta,
        metric,
        b,
    )?;
    let loss = tape.value(loss_node)[(0, 0)];
    tape.backward(loss_node)?;
    let param_ids = staged.param_ids();
    let grads: Vec<Array2<f64>> = param_ids.iter().map(|&id| tape.grad(id).clone()).collect();
    let mut params = model.param_tensors_mut();
    optimizer.step(&mut params, &grads, phase.learning_rate)?;
    Ok(loss)
}

/// Mean over the batch of: summed squared residuals over all steps plus the
/// beta regularizer on the initial latent.
#[allow(clippy::too_many_arguments)]
fn build_loss(
    tape: &mut Tape,
    predictions: &[NodeId],
    answers: &Array2<f64>,
    answer_dim: usize,
    mu: Option<NodeId>,
    log_sigma: Option<NodeId>,
    beta: f64,
    metric: AnswerMetric,
    batch: usize,
) -> Result<NodeId> {
    let mut total: Option<NodeId> = None;
    for (step, &pred) in predictions.iter().enumerate() {
        let target = answers
            .slice(ndarray::s![.., step * answer_dim..(step + 1) * answer_dim])
            .to_owned();
        let target_leaf = tape.leaf(target);
        let mut diff = tape.sub(pred, target_leaf)?;
        if metric == AnswerMetric::WrappedAngle {
            diff = tape.wrap_angle(diff);
        }
        let sq = tape.mul(diff, diff)?;
        let s = tape.sum(sq);
        total = Some(match total {
            Some(t) => tape.add(t, s)?,
            None => s,
        });
    }
    let mut loss = tape.scale(total.expect("at least one step"), 1.0 / batch as f64);
    if beta > 0.0 {
        if let (Some(mu), Some(ls)) = (mu, log_sigma) {
            let two_ls = tape.scale(ls, 2.0);
            let sigma_sq = tape.exp(two_ls);
            let mu_sq = tape.mul(mu, mu)?;
            let inner = tape.sub(two_ls, mu_sq)?;
            let inner = tape.sub(inner, sigma_sq)?;
            let total_reg = tape.sum(inner);
            let reg = tape.scale(total_reg, -beta / (2.0 * batch as f64));
            loss = tape.add(loss, reg)?;
        }
    }
    Ok(loss)
}

fn check_dims(model: &SciNetModel, dataset: &Dataset) -> Result<()> {
    if dataset.meta.obs_dim != model.spec.obs_dim {
        return Err(Error::dim("dataset obs_dim", model.spec.obs_dim, dataset.meta.obs_dim));
    }
    if dataset.meta.question_dim != model.spec.question_dim {
        return Err(Error::dim(
            "dataset question_dim",
            model.spec.question_dim,
            dataset.meta.question_dim,
        ));
    }
    if dataset.meta.answer_dim != model.spec.answer_dim {
        return Err(Error::dim(
            "dataset answer_dim",
            model.spec.answer_dim,
            dataset.meta.answer_dim,
        ));
    }
    Ok(())
}

fn resolve_steps(model: &SciNetModel, dataset: &Dataset, requested: Option<usize>) -> Result<usize> {
    let available = dataset.meta.answer_steps;
    let steps = match requested {
        Some(s) => s,
        None => {
            if model.spec.recurrent.is_some() {
                available
            } else {
                1
            }
        }
    };
    if steps == 0 || steps > available {
        return Err(Error::config(format!(
            "answer_steps {steps} must lie in 1..={available}"
        )));
    }
    if model.spec.recurrent.is_none() && steps != 1 {
        return Err(Error::config("feed-forward models use a single answer step"));
    }
    Ok(steps)
}

/// Batched evaluation-mode predictions (`eps = 0`), all answer steps.
pub fn predict(model: &SciNetModel, dataset: &Dataset) -> Result<Array2<f64>> {
    check_dims(model, dataset)?;
    let steps = if model.spec.recurrent.is_some() {
        dataset.meta.answer_steps
    } else {
        1
    };
    let n = dataset.len();
    let d = model.spec.latent_dim;
    let mu = if d > 0 {
        let head = model
            .encoder()
            .expect("latent_dim > 0")
            .eval_batch(&dataset.observations)?;
        head.slice(ndarray::s![.., ..d]).to_owned()
    } else {
        Array2::zeros((n, 0))
    };
    let answer_dim = model.spec.answer_dim;
    let mut predictions = Array2::zeros((n, answer_dim * steps));
    if model.spec.recurrent.is_some() {
        let shift = model.shift().expect("recurrent model has a shift").clone();
        let mut r = mu;
        for step in 0..steps {
            let out = model.decoder().eval_batch(&r)?;
            predictions
                .slice_mut(ndarray::s![.., step * answer_dim..(step + 1) * answer_dim])
                .assign(&out);
            if step + 1 < steps {
                r += &shift;
            }
        }
    } else {
        let mut dec_in = Array2::zeros((n, d + model.spec.question_dim));
        dec_in.slice_mut(ndarray::s![.., ..d]).assign(&mu);
        dec_in
            .slice_mut(ndarray::s![.., d..])
            .assign(&dataset.questions);
        let out = model.decoder().eval_batch(&dec_in)?;
        predictions.assign(&out);
    }
    Ok(predictions)
}

/// Test RMSE over all answer components at `eps = 0`, normalized by
/// `normalizer` (amplitude, radius, 1 for probabilities, 2 pi for angles).
pub fn evaluate_rmse(
    model: &SciNetModel,
    dataset: &Dataset,
    metric: AnswerMetric,
    normalizer: f64,
) -> Result<f64> {
    if dataset.is_empty() {
        return Err(Error::config("cannot evaluate on an empty dataset"));
    }
    let predictions = predict(model, dataset)?;
    let mut total = 0.0;
    let mut count = 0usize;
    for (p, t) in predictions.iter().zip(dataset.answers.iter()) {
        let mut diff = p - t;
        if metric == AnswerMetric::WrappedAngle {
            diff = wrap_to_pi(diff);
        }
        let scaled = diff / normalizer;
        total += scaled * scaled;
        count += 1;
    }
    Ok((total / count as f64).sqrt())
}
