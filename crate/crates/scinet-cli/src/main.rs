//! Command-line front end: dataset generation, training, evaluation, latent
//! sweeps, and representation analysis as reproducible experiment runs.
//!
//! Exit codes: 0 success, 1 runtime failure, 2 usage error.

use std::io::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use ndarray::Array2;
use serde::Deserialize;
use serde_json::json;

use scinet::analysis;
use scinet::datagen::{collision, pendulum, qubit, solar, Completeness, Dataset};
use scinet::model::SciNetModel;
use scinet::rng::substream;
use scinet::train::presets::{preset, ExperimentPreset, PRESET_NAMES};
use scinet::train::{
    evaluate_rmse, train, AnswerMetric, EpochRecord, OptimizerChoice, TrainOptions, TrainPhase,
};

#[derive(Parser)]
#[command(name = "scinet", version, about = "Question-conditioned latent models for physics toy problems")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a dataset file.
    Generate(GenerateArgs),
    /// Train a preset model and write it to disk.
    Train(TrainArgs),
    /// Evaluate a saved model on a dataset; prints RMSE as JSON.
    Eval(EvalArgs),
    /// Train across latent widths and report the error curve.
    Sweep(SweepArgs),
    /// Activation maps, linear fits, and collapsed-latent report.
    Analyze(AnalyzeArgs),
}

#[derive(Args)]
struct GenerateArgs {
    /// Experiment name.
    #[arg(long, value_parser = PRESET_NAMES)]
    example: String,
    /// Number of samples.
    #[arg(long)]
    n: usize,
    #[arg(long, env = "SCINET_SEED", default_value_t = 0)]
    seed: u64,
    /// Restrict the qubit state-measurement set to a real k-dim subspace.
    #[arg(long)]
    subspace: Option<usize>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct TrainArgs {
    #[arg(long, value_parser = PRESET_NAMES)]
    preset: String,
    /// Train on an existing dataset file instead of generating one.
    #[arg(long)]
    data: Option<PathBuf>,
    #[arg(long, env = "SCINET_SEED", default_value_t = 0)]
    seed: u64,
    /// JSON overrides for the preset (spec, phases, n_train, n_test).
    #[arg(long)]
    config: Option<String>,
    /// Per-epoch JSON metrics destination (default: stderr).
    #[arg(long)]
    metrics: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    data: PathBuf,
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long, value_parser = PRESET_NAMES)]
    preset: String,
    /// Inclusive latent-width range, e.g. 0..5.
    #[arg(long)]
    widths: Option<String>,
    #[arg(long, default_value_t = 3)]
    trials: usize,
    /// Parallel training jobs.
    #[arg(long, default_value_t = default_jobs())]
    jobs: usize,
    #[arg(long, env = "SCINET_SEED", default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    config: Option<String>,
    /// Output prefix; writes <out>.csv and <out>.json.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct AnalyzeArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long, value_parser = PRESET_NAMES)]
    preset: String,
    /// Dataset whose ground-truth columns the latents are fitted against.
    #[arg(long)]
    data: Option<PathBuf>,
    /// Grid resolution per axis for activation maps.
    #[arg(long, default_value_t = 20)]
    grid: usize,
    /// Output prefix; writes <out>_map.csv (when a map applies) and <out>_fits.json.
    #[arg(long)]
    out: PathBuf,
}

/// Preset overrides supplied via `--config`; unknown keys are rejected.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RunConfig {
    spec: Option<SpecOverride>,
    phases: Option<Vec<PhaseConfig>>,
    n_train: Option<usize>,
    n_test: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct SpecOverride {
    latent_dim: Option<usize>,
    encoder_layers: Option<Vec<usize>>,
    decoder_layers: Option<Vec<usize>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct PhaseConfig {
    learning_rate: f64,
    epochs: usize,
    batch_size: usize,
    beta: f64,
    #[serde(default)]
    answer_steps: Option<usize>,
}

enum CliError {
    Usage(String),
    Runtime(String),
}

impl<E: std::fmt::Display> From<E> for CliError {
    fn from(e: E) -> Self {
        CliError::Runtime(e.to_string())
    }
}

type CliResult<T> = Result<T, CliError>;

fn default_jobs() -> usize {
    std::thread::available_parallelism().map_or(1, std::num::NonZeroUsize::get)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Generate(args) => cmd_generate(&args),
        Command::Train(args) => cmd_train(&args),
        Command::Eval(args) => cmd_eval(&args),
        Command::Sweep(args) => cmd_sweep(&args),
        Command::Analyze(args) => cmd_analyze(&args),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(CliError::Usage(msg)) => {
            eprintln!("usage error: {msg}\nRun `scinet --help` for usage.");
            ExitCode::from(2)
        }
    }
}

fn generate_dataset(example: &str, n: usize, seed: u64, subspace: Option<usize>) -> CliResult<Dataset> {
    if subspace.is_some() && !example.starts_with("qubit") {
        return Err(CliError::Usage(
            "--subspace applies only to the qubit examples".into(),
        ));
    }
    let completeness = match subspace {
        Some(k) => Completeness::RealSubspace { k },
        None => Completeness::Full,
    };
    let ds = match example {
        "pendulum" => pendulum::generate(n, seed)?,
        "collision" => collision::generate(n, seed)?,
        "qubit1" => qubit::generate(n, seed, 1, completeness)?,
        "qubit2" => qubit::generate(n, seed, 2, completeness)?,
        "solar" => solar::generate(n, seed)?,
        other => return Err(CliError::Usage(format!("unknown example {other:?}"))),
    };
    Ok(ds)
}

fn cmd_generate(args: &GenerateArgs) -> CliResult<()> {
    let ds = generate_dataset(&args.example, args.n, args.seed, args.subspace)?;
    ds.write(&args.out)?;
    println!("{}", serde_json::to_string(&ds.meta)?);
    Ok(())
}

fn apply_config(preset: &mut ExperimentPreset, config: Option<&str>) -> CliResult<()> {
    let Some(text) = config else { return Ok(()) };
    let cfg: RunConfig = serde_json::from_str(text)
        .map_err(|e| CliError::Usage(format!("invalid --config: {e}")))?;
    if let Some(spec) = cfg.spec {
        if let Some(v) = spec.latent_dim {
            preset.spec.latent_dim = v;
        }
        if let Some(v) = spec.encoder_layers {
            preset.spec.encoder_layers = v;
        }
        if let Some(v) = spec.decoder_layers {
            preset.spec.decoder_layers = v;
        }
    }
    if let Some(phases) = cfg.phases {
        preset.phases = phases
            .into_iter()
            .map(|p| TrainPhase {
                learning_rate: p.learning_rate,
                epochs: p.epochs,
                batch_size: p.batch_size,
                beta: p.beta,
                answer_steps: p.answer_steps,
            })
            .collect();
    }
    if let Some(v) = cfg.n_train {
        preset.n_train = v;
    }
    if let Some(v) = cfg.n_test {
        preset.n_test = v;
    }
    preset.spec.validate()?;
    Ok(())
}

/// Train/test data for a preset run: loaded from a file (split by the
/// preset's test fraction) or generated in place.
fn resolve_data(
    p: &ExperimentPreset,
    data: Option<&PathBuf>,
    data_seed: u64,
) -> CliResult<(Dataset, Dataset)> {
    match data {
        Some(path) => {
            let ds = Dataset::read(path)?;
            let n_test = (ds.len() / 20).max(1);
            if n_test >= ds.len() {
                return Err(CliError::Runtime(format!(
                    "dataset {} too small to split",
                    path.display()
                )));
            }
            Ok(ds.split(ds.len() - n_test)?)
        }
        None => Ok(scinet::train::presets::generate_data(p, data_seed)?),
    }
}

fn cmd_train(args: &TrainArgs) -> CliResult<()> {
    let mut p = preset(&args.preset)?;
    apply_config(&mut p, args.config.as_deref())?;
    let data_seed = substream(args.seed, 101);
    let init_seed = substream(args.seed, 102);
    let train_seed = substream(args.seed, 103);
    let (train_data, test_data) = resolve_data(&p, args.data.as_ref(), data_seed)?;

    let mut model = SciNetModel::new(p.spec.clone(), init_seed)?;
    model.provenance = json!({
        "preset": p.name,
        "seed": args.seed,
        "data": args.data.as_ref().map(|d| d.display().to_string()),
    });
    let mut sink: Box<dyn std::io::Write> = match &args.metrics {
        Some(path) => Box::new(std::fs::File::create(path).map_err(|e| {
            CliError::Runtime(format!("cannot open metrics file {}: {e}", path.display()))
        })?),
        None => Box::new(std::io::stderr()),
    };
    let mut on_epoch = |record: &EpochRecord| {
        if let Ok(line) = serde_json::to_string(record) {
            let _ = writeln!(sink, "{line}");
        }
    };
    let metrics = train(
        &mut model,
        &train_data,
        &p.phases,
        TrainOptions {
            seed: train_seed,
            optimizer: OptimizerChoice::Adam,
            metric: p.metric,
            on_epoch: Some(&mut on_epoch),
        },
    )?;
    model.save(&args.out)?;
    let rmse = evaluate_rmse(&model, &test_data, p.metric, p.rmse_normalizer)?;
    println!(
        "{}",
        json!({
            "preset": p.name,
            "epochs": metrics.epoch_losses.len(),
            "final_loss": metrics.epoch_losses.last(),
            "test_rmse": rmse,
            "wall_clock_seconds": metrics.wall_clock_seconds,
            "model": args.out.display().to_string(),
        })
    );
    Ok(())
}

/// Evaluation conventions inferred from the dataset family.
fn metric_for(example: &str) -> (AnswerMetric, f64) {
    if example.starts_with("solar") {
        (AnswerMetric::WrappedAngle, 2.0 * std::f64::consts::PI)
    } else {
        (AnswerMetric::Squared, 1.0)
    }
}

fn cmd_eval(args: &EvalArgs) -> CliResult<()> {
    let model = SciNetModel::load(&args.model)?;
    let ds = Dataset::read(&args.data)?;
    let (metric, normalizer) = metric_for(&ds.meta.example);
    let rmse = evaluate_rmse(&model, &ds, metric, normalizer)?;
    println!(
        "{}",
        json!({
            "example": ds.meta.example,
            "n": ds.len(),
            "rmse": rmse,
            "normalizer": normalizer,
        })
    );
    Ok(())
}

fn parse_widths(text: &str) -> CliResult<Vec<usize>> {
    let (lo, hi) = text
        .split_once("..")
        .ok_or_else(|| CliError::Usage(format!("--widths expects A..B, got {text:?}")))?;
    let lo: usize = lo
        .trim()
        .parse()
        .map_err(|_| CliError::Usage(format!("bad width bound {lo:?}")))?;
    let hi: usize = hi
        .trim()
        .trim_start_matches('=')
        .parse()
        .map_err(|_| CliError::Usage(format!("bad width bound {hi:?}")))?;
    if hi < lo {
        return Err(CliError::Usage(format!("empty width range {text:?}")));
    }
    Ok((lo..=hi).collect())
}

fn cmd_sweep(args: &SweepArgs) -> CliResult<()> {
    let mut p = preset(&args.preset)?;
    apply_config(&mut p, args.config.as_deref())?;
    let widths = match &args.widths {
        Some(text) => parse_widths(text)?,
        None => p.sweep_widths.clone(),
    };
    let data_seed = substream(args.seed, 101);
    let sweep_seed = substream(args.seed, 104);
    let (train_data, test_data) = scinet::train::presets::generate_data(&p, data_seed)?;
    let report = analysis::latent_sweep_jobs(
        &p,
        &widths,
        args.trials,
        sweep_seed,
        &train_data,
        &test_data,
        args.jobs,
    )?;
    let csv_path = args.out.with_extension("csv");
    let json_path = args.out.with_extension("json");
    std::fs::write(&csv_path, report.to_csv())?;
    std::fs::write(&json_path, serde_json::to_string_pretty(&report)?)?;
    println!(
        "{}",
        json!({
            "preset": p.name,
            "rows": report.rows.len(),
            "estimated_dimension": report.estimated_dimension,
            "plateau_found": report.plateau_found,
            "csv": csv_path.display().to_string(),
            "json": json_path.display().to_string(),
        })
    );
    Ok(())
}

fn fit_summary(activations: &Array2<f64>, params: &Array2<f64>, names: &[String]) -> CliResult<serde_json::Value> {
    let mut fits = Vec::new();
    for j in 0..activations.dim().1 {
        let col = activations.column(j).to_owned();
        let fit = analysis::linear_fit(params, col.view())?;
        let mut correlations = serde_json::Map::new();
        for (k, name) in names.iter().enumerate() {
            let gt: Vec<f64> = params.column(k).to_vec();
            let latent: Vec<f64> = col.to_vec();
            let corr = analysis::pearson(&latent, &gt).unwrap_or(0.0);
            correlations.insert(name.clone(), json!(corr));
        }
        fits.push(json!({
            "latent": j,
            "coefficients": fit.coefficients,
            "intercept": fit.intercept,
            "r_squared": if fit.r_squared.is_nan() { serde_json::Value::Null } else { json!(fit.r_squared) },
            "rank_deficient": fit.rank_deficient,
            "pearson": correlations,
        }));
    }
    let collapsed = analysis::collapsed_latent_detect(activations, analysis::COLLAPSE_FRACTION_DEFAULT)?;
    Ok(json!({ "fits": fits, "collapsed_latents": collapsed }))
}

fn cmd_analyze(args: &AnalyzeArgs) -> CliResult<()> {
    let model = SciNetModel::load(&args.model)?;
    let mut summary = serde_json::Map::new();
    summary.insert("preset".into(), json!(args.preset));

    // Grid-based activation map for the examples with an invertible
    // observation model.
    let map = match args.preset.as_str() {
        "pendulum" => {
            let grid = analysis::grid_2d((5.0, 10.0), (0.5, 1.0), args.grid, args.grid)?;
            Some(analysis::activation_map(
                &model,
                &["kappa", "b"],
                &grid,
                &analysis::pendulum_inverse,
            )?)
        }
        "solar" => {
            // Fits are restricted to a wrap-free chart of the torus.
            let lo = std::f64::consts::FRAC_PI_2;
            let hi = 3.0 * std::f64::consts::FRAC_PI_2;
            let grid = analysis::grid_2d((lo, hi), (lo, hi), args.grid, args.grid)?;
            summary.insert("chart_bounds".into(), json!([lo, hi]));
            Some(analysis::activation_map(
                &model,
                &["phi_E", "phi_M"],
                &grid,
                &analysis::solar_inverse,
            )?)
        }
        _ => None,
    };
    if let Some(map) = &map {
        let map_path = sibling(&args.out, "_map.csv");
        std::fs::write(&map_path, map.to_csv())?;
        summary.insert("map".into(), json!(map_path.display().to_string()));
        summary.insert(
            "grid".into(),
            fit_summary(&map.activations, &map.params, &map.param_names)?,
        );
    }

    // Dataset-based fits against the hidden ground-truth columns.
    if let Some(path) = &args.data {
        let ds = Dataset::read(path)?;
        let activations = analysis::latent_activations(&model, &ds.observations)?;
        summary.insert(
            "data".into(),
            fit_summary(&activations, &ds.ground_truth, &ds.meta.ground_truth_columns)?,
        );
    }

    let fits_path = sibling(&args.out, "_fits.json");
    std::fs::write(&fits_path, serde_json::to_string_pretty(&summary)?)?;
    println!(
        "{}",
        json!({
            "fits": fits_path.display().to_string(),
            "map": map.is_some(),
        })
    );
    Ok(())
}

fn sibling(prefix: &std::path::Path, suffix: &str) -> PathBuf {
    let mut name = prefix
        .file_name()
        .map_or_else(String::new, |n| n.to_string_lossy().into_owned());
    name.push_str(suffix);
    prefix.with_file_name(name)
}
