//! Post-training interpretation: latent-width sweeps with intrinsic-dimension
//! estimation, latent activation maps over ground-truth parameter grids,
//! linear fits, and collapsed-latent detection.

use ndarray::{Array2, ArrayView1};
use serde::Serialize;

use crate::datagen::{pendulum, solar, Dataset};
use crate::error::{Error, Result};
use crate::model::{SciNetModel, SciNetSpec};
use crate::rng::substream;
use crate::train::presets::ExperimentPreset;
use crate::train::{evaluate_rmse, train, OptimizerChoice, TrainOptions};

/// Default knee threshold for [`estimate_dimension`].
pub const KNEE_RATIO_DEFAULT: f64 = 0.7;
/// A latent is collapsed when its activation spread is below this fraction of
/// the widest latent's spread.
pub const COLLAPSE_FRACTION_DEFAULT: f64 = 0.05;

/// One trained trial in a latent-width sweep.
#[derive(Debug, Clone, Serialize)]
pub struct SweepRow {
    pub latent_dim: usize,
    pub trial: usize,
    pub model_seed: u64,
    pub train_seed: u64,
    pub test_rmse: Option<f64>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepReport {
    pub rows: Vec<SweepRow>,
    /// Minimum test RMSE over trials, per width; `None` if every trial failed.
    pub best_per_width: Vec<(usize, Option<f64>)>,
    pub estimated_dimension: Option<usize>,
    pub plateau_found: bool,
}

impl SweepReport {
    /// Per-trial rows as CSV with a header line.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("latent_dim,trial,model_seed,train_seed,test_rmse,error\n");
        for row in &self.rows {
            let rmse = row
                .test_rmse
                .map_or_else(String::new, |v| format!("{v}"));
            let err = row.error.as_deref().unwrap_or("");
            out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                row.latent_dim, row.trial, row.model_seed, row.train_seed, rmse, err
            ));
        }
        out
    }
}

/// Latent activations (mean vectors) tabulated over a ground-truth grid.
#[derive(Debug, Clone, Serialize)]
pub struct ActivationMap {
    pub param_names: Vec<String>,
    /// One grid point per row.
    pub params: Array2<f64>,
    /// mu per latent, aligned with `params` rows.
    pub activations: Array2<f64>,
}

impl ActivationMap {
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for name in &self.param_names {
            out.push_str(name);
            out.push(',');
        }
        let latents = self.activations.dim().1;
        for j in 0..latents {
            out.push_str(&format!("latent{j}"));
            if j + 1 < latents {
                out.push(',');
            }
        }
        out.push('\n');
        for i in 0..self.params.dim().0 {
            for v in self.params.row(i) {
                out.push_str(&format!("{v},"));
            }
            let row = self.activations.row(i);
            for (j, v) in row.iter().enumerate() {
                out.push_str(&format!("{v}"));
                if j + 1 < latents {
                    out.push(',');
                }
            }
            out.push('\n');
        }
        out
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct LinearFit {
    pub coefficients: Vec<f64>,
    pub intercept: f64,
    /// NaN when the design matrix is rank deficient.
    pub r_squared: f64,
    pub rank_deficient: bool,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct DimensionEstimate {
    pub dimension: usize,
    /// False when the curve never stops improving and the rule fell back to
    /// the last width.
    pub plateau_found: bool,
}

/// Smallest width from which on every additional latent improves the error by
/// less than `1 - ratio_threshold` (i.e. all later ratios stay above the
/// threshold). Falls back to the last width, unflagged, if no such plateau
/// exists.
pub fn estimate_dimension(
    widths: &[usize],
    errors: &[f64],
    ratio_threshold: f64,
) -> Result<DimensionEstimate> {
    if widths.is_empty() || widths.len() != errors.len() {
        return Err(Error::config("need one error per width, at least one width"));
    }
    if widths.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::config("widths must be strictly increasing"));
    }
    if errors.iter().any(|e| !e.is_finite() || *e < 0.0) {
        return Err(Error::config("errors must be finite and non-negative"));
    }
    let k = errors.len();
    for (start, &width) in widths.iter().enumerate() {
        let plateau = (start..k - 1).all(|j| errors[j + 1] >= ratio_threshold * errors[j]);
        if plateau {
            return Ok(DimensionEstimate {
                dimension: width,
                plateau_found: start < k - 1 || k == 1,
            });
        }
    }
    Ok(DimensionEstimate {
        dimension: widths[k - 1],
        plateau_found: false,
    })
}

/// Train `trials` independent models per width and tabulate test RMSE.
/// Divergence is recorded per trial rather than aborting the sweep.
pub fn latent_sweep(
    preset: &ExperimentPreset,
    widths: &[usize],
    trials: usize,
    base_seed: u64,
    train_data: &Dataset,
    test_data: &Dataset,
) -> Result<SweepReport> {
    latent_sweep_jobs(preset, widths, trials, base_seed, train_data, test_data, 1)
}

/// [`latent_sweep`] with trials distributed over `jobs` worker threads.
/// Trials are fully seeded, so the report is identical for any job count.
#[allow(clippy::too_many_arguments)]
pub fn latent_sweep_jobs(
    preset: &ExperimentPreset,
    widths: &[usize],
    trials: usize,
    base_seed: u64,
    train_data: &Dataset,
    test_data: &Dataset,
    jobs: usize,
) -> Result<SweepReport> {
    if trials == 0 {
        return Err(Error::config("trials must be >= 1"));
    }
    if jobs == 0 {
        return Err(Error::config("jobs must be >= 1"));
    }
    if widths.is_empty() || widths.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::config("widths must be non-empty and strictly increasing"));
    }
    let mut tasks = Vec::with_capacity(widths.len() * trials);
    for &width in widths {
        for trial in 0..trials {
            tasks.push((width, trial));
        }
    }
    let next = std::sync::atomic::AtomicUsize::new(0);
    let results: Vec<std::sync::Mutex<Option<SweepRow>>> =
        tasks.iter().map(|_| std::sync::Mutex::new(None)).collect();
    let worker = |_: usize| {
        loop {
            let i = next.fetch_add(1, std::sync::atomic::Ordering::SeqCst);
            let Some(&(width, trial)) = tasks.get(i) else {
                break;
            };
            let tag = ((width as u64) << 20) | trial as u64;
            let model_seed = substream(base_seed, tag);
            let train_seed = substream(base_seed, tag | (1 << 50));
            let spec = SciNetSpec {
                latent_dim: width,
                ..preset.spec.clone()
            };
            let outcome = run_trial(
                &spec,
                preset,
                model_seed,
                train_seed,
                train_data,
                test_data,
            );
            let (test_rmse, error) = match outcome {
                Ok(rmse) => (Some(rmse), None),
                Err(e) => (None, Some(e.to_string())),
            };
            *results[i].lock().expect("no poisoned trial") = Some(SweepRow {
                latent_dim: width,
                trial,
                model_seed,
                train_seed,
                test_rmse,
                error,
            });
        }
    };
    if jobs == 1 {
        worker(0);
    } else {
        std::thread::scope(|scope| {
            let worker = &worker;
            for w in 0..jobs.min(tasks.len()) {
                scope.spawn(move || worker(w));
            }
        });
    }
    let rows: Vec<SweepRow> = results
        .into_iter()
        .map(|cell| cell.into_inner().expect("no poisoned trial").expect("all tasks ran"))
        .collect();
    let best_per_width: Vec<(usize, Option<f64>)> = widths
        .iter()
        .map(|&w| {
            let best = rows
                .iter()
                .filter(|r| r.latent_dim == w)
                .filter_map(|r| r.test_rmse)
                .fold(None, |acc: Option<f64>, v| {
                    Some(acc.map_or(v, |a| a.min(v)))
                });
            (w, best)
        })
        .collect();
    let curve: Option<Vec<f64>> = best_per_width.iter().map(|&(_, b)| b).collect();
    let (estimated_dimension, plateau_found) = match curve {
        Some(errors) => {
            let est = estimate_dimension(widths, &errors, KNEE_RATIO_DEFAULT)?;
            (Some(est.dimension), est.plateau_found)
        }
        None => (None, false),
    };
    Ok(SweepReport {
        rows,
        best_per_width,
        estimated_dimension,
        plateau_found,
    })
}

fn run_trial(
    spec: &SciNetSpec,
    preset: &ExperimentPreset,
    model_seed: u64,
    train_seed: u64,
    train_data: &Dataset,
    test_data: &Dataset,
) -> Result<f64> {
    let mut model = SciNetModel::new(spec.clone(), model_seed)?;
    train(
        &mut model,
        train_data,
        &preset.phases,
        TrainOptions {
            seed: train_seed,
            optimizer: OptimizerChoice::Adam,
            metric: preset.metric,
            on_epoch: None,
        },
    )?;
    evaluate_rmse(&model, test_data, preset.metric, preset.rmse_normalizer)
}

/// Latent mean vectors for a batch of observations.
pub fn latent_activations(model: &SciNetModel, observations: &Array2<f64>) -> Result<Array2<f64>> {
    let d = model.spec.latent_dim;
    if d == 0 {
        return Ok(Array2::zeros((observations.dim().0, 0)));
    }
    let head = model
        .encoder()
        .expect("latent_dim > 0")
        .eval_batch(observations)?;
    Ok(head.slice(ndarray::s![.., ..d]).to_owned())
}

/// Cartesian product of two evenly spaced axes, row-major in the first axis.
pub fn grid_2d(a: (f64, f64), b: (f64, f64), na: usize, nb: usize) -> Result<Array2<f64>> {
    if na < 2 || nb < 2 {
        return Err(Error::config("grid needs at least 2 points per axis"));
    }
    let mut grid = Array2::zeros((na * nb, 2));
    for i in 0..na {
        let va = a.0 + (a.1 - a.0) * i as f64 / (na - 1) as f64;
        for j in 0..nb {
            let vb = b.0 + (b.1 - b.0) * j as f64 / (nb - 1) as f64;
            grid[(i * nb + j, 0)] = va;
            grid[(i * nb + j, 1)] = vb;
        }
    }
    Ok(grid)
}

/// Noiseless observation for ground-truth (kappa, b).
pub fn pendulum_inverse(params: &[f64]) -> Result<Vec<f64>> {
    if params.len() != 2 {
        return Err(Error::config("pendulum ground truth is (kappa, b)"));
    }
    Ok(pendulum::observation(params[0], params[1]))
}

/// Noiseless observation (theta_M, theta_S) for heliocentric (phi_E, phi_M).
pub fn solar_inverse(params: &[f64]) -> Result<Vec<f64>> {
    if params.len() != 2 {
        return Err(Error::config("solar ground truth is (phi_E, phi_M)"));
    }
    let (theta_m, theta_s) = solar::geocentric(params[0], params[1]);
    Ok(vec![theta_m, theta_s])
}

/// Tabulate per-latent activations over a ground-truth grid. The generator
/// maps one grid row to the noiseless observation vector.
pub fn activation_map(
    model: &SciNetModel,
    param_names: &[&str],
    param_grid: &Array2<f64>,
    inverse_generator: &dyn Fn(&[f64]) -> Result<Vec<f64>>,
) -> Result<ActivationMap> {
    let (n, arity) = param_grid.dim();
    if n == 0 {
        return Err(Error::config("grid must not be empty"));
    }
    if arity != param_names.len() {
        return Err(Error::dim("grid arity", param_names.len(), arity));
    }
    let mut observations = Array2::zeros((n, model.spec.obs_dim));
    for i in 0..n {
        let row: Vec<f64> = param_grid.row(i).to_vec();
        let obs = inverse_generator(&row)?;
        if obs.len() != model.spec.obs_dim {
            return Err(Error::dim("generated observation", model.spec.obs_dim, obs.len()));
        }
        for (j, v) in obs.into_iter().enumerate() {
            observations[(i, j)] = v;
        }
    }
    let activations = latent_activations(model, &observations)?;
    Ok(ActivationMap {
        param_names: param_names.iter().map(ToString::to_string).collect(),
        params: param_grid.clone(),
        activations,
    })
}

/// Ordinary least squares of `y` on the columns of `x` plus an intercept.
/// A rank-deficient design is flagged and leaves `r_squared` as NaN.
#[allow(clippy::needless_range_loop)]
pub fn linear_fit(x: &Array2<f64>, y: ArrayView1<f64>) -> Result<LinearFit> {
    let (n, p) = x.dim();
    if y.len() != n {
        return Err(Error::dim("response length", n, y.len()));
    }
    if n < p + 1 {
        return Err(Error::config(format!(
            "need at least {} points for {p} predictors",
            p + 1
        )));
    }
    // Normal equations over [1 | x].
    let m = p + 1;
    let mut ata = vec![vec![0.0f64; m]; m];
    let mut atb = vec![0.0f64; m];
    let design = |row: usize, col: usize| -> f64 {
        if col == 0 {
            1.0
        } else {
            x[(row, col - 1)]
        }
    };
    for r in 0..n {
        for i in 0..m {
            let di = design(r, i);
            atb[i] += di * y[r];
            for j in 0..m {
                ata[i][j] += di * design(r, j);
            }
        }
    }
    let solution = solve_symmetric(&mut ata, &mut atb);
    let Some(beta) = solution else {
        return Ok(LinearFit {
            coefficients: vec![0.0; p],
            intercept: 0.0,
            r_squared: f64::NAN,
            rank_deficient: true,
        });
    };
    let mean_y = y.iter().sum::<f64>() / n as f64;
    let mut ss_res = 0.0;
    let mut ss_tot = 0.0;
    for r in 0..n {
        let mut pred = beta[0];
        for j in 0..p {
            pred += beta[j + 1] * x[(r, j)];
        }
        ss_res += (y[r] - pred).powi(2);
        ss_tot += (y[r] - mean_y).powi(2);
    }
    // Constant response: zero explained variance by convention.
    let r_squared = if ss_tot == 0.0 {
        0.0
    } else {
        (1.0 - ss_res / ss_tot).clamp(0.0, 1.0)
    };
    Ok(LinearFit {
        coefficients: beta[1..].to_vec(),
        intercept: beta[0],
        r_squared,
        rank_deficient: false,
    })
}

/// Gaussian elimination with partial pivoting; `None` on rank deficiency.
#[allow(clippy::needless_range_loop)]
fn solve_symmetric(a: &mut [Vec<f64>], b: &mut [f64]) -> Option<Vec<f64>> {
    let m = b.len();
    let scale = a
        .iter()
        .flat_map(|row| row.iter())
        .fold(0.0f64, |acc, v| acc.max(v.abs()));
    let tol = 1e-10 * scale.max(1.0);
    for col in 0..m {
        let pivot_row = (col..m)
            .max_by(|&i, &j| a[i][col].abs().partial_cmp(&a[j][col].abs()).expect("finite"))?;
        if a[pivot_row][col].abs() < tol {
            return None;
        }
        a.swap(col, pivot_row);
        b.swap(col, pivot_row);
        for row in col + 1..m {
            let factor = a[row][col] / a[col][col];
            for k in col..m {
                a[row][k] -= factor * a[col][k];
            }
            b[row] -= factor * b[col];
        }
    }
    let mut x = vec![0.0; m];
    for col in (0..m).rev() {
        let mut v = b[col];
        for k in col + 1..m {
            v -= a[col][k] * x[k];
        }
        x[col] = v / a[col][col];
    }
    Some(x)
}

/// Pearson correlation coefficient; errors on fewer than 2 points or a
/// zero-variance input.
pub fn pearson(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::dim("correlation inputs", x.len(), y.len()));
    }
    if x.len() < 2 {
        return Err(Error::config("correlation needs at least 2 points"));
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (&a, &b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx).powi(2);
        syy += (b - my).powi(2);
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::config("correlation undefined for constant input"));
    }
    Ok(sxy / (sxx * syy).sqrt())
}

/// Indices of latents whose activation standard deviation falls below
/// `fraction` of the largest per-latent standard deviation.
pub fn collapsed_latent_detect(activations: &Array2<f64>, fraction: f64) -> Result<Vec<usize>> {
    let (n, d) = activations.dim();
    if n < 2 {
        return Err(Error::config("need at least 2 grid points to measure spread"));
    }
    if !(0.0..1.0).contains(&fraction) {
        return Err(Error::config("collapse fraction must lie in [0, 1)"));
    }
    let stds: Vec<f64> = (0..d)
        .map(|j| {
            let col = activations.column(j);
            let mean = col.sum() / n as f64;
            (col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n as f64).sqrt()
        })
        .collect();
    let max = stds.iter().cloned().fold(0.0f64, f64::max);
    if max == 0.0 {
        // every latent is flat
        return Ok((0..d).collect());
    }
    Ok(stds
        .iter()
        .enumerate()
        .filter(|(_, &s)| s < fraction * max)
        .map(|(i, _)| i)
        .collect())
}
