//! `emlab` — deterministic experiment harness for the `emlab` library.
//!
//! Subcommands run multi-trial solver experiments, signal-strength sweeps,
//! basin-of-attraction scans, projected stochastic-gradient runs, and
//! contraction/stability diagnostics, writing CSV tables and SVG plots
//! whose bytes depend only on the configuration.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Deserialize;

use emlab::config::{Algo, SolverConfig, StepSchedule};
use emlab::error::Error;
use emlab::exp::{
    emit_svg, run_conditions, run_experiment, run_roc, run_sgd_experiment, run_snr_sweep,
    ExperimentSpec, InitStyle, Model, PlotSpec,
};
use emlab::missing::prob_bound;

const EXIT_IO: i32 = 1;
const EXIT_INVALID_CONFIG: i32 = 2;
const EXIT_NUMERICAL: i32 = 3;

#[derive(Parser)]
#[command(
    name = "emlab",
    version,
    about = "Experiment harness: EM-family solvers on three latent-variable models"
)]
struct Cli {
    /// JSON config file whose keys mirror the flags (snake_case);
    /// command-line flags override file values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Multi-trial batch-solver experiment: writes trace.csv and summary.csv
    Run(CommonArgs),
    /// Fitted decay rates across a signal-to-noise grid: writes sweep.csv
    SnrSweep(SweepArgs),
    /// Basin-of-attraction scan over signal strengths: writes roc.csv
    Roc(RocArgs),
    /// Projected stochastic-gradient runs: writes trace.csv and sgd_summary.csv
    Sgd(CommonArgs),
    /// Contraction/stability diagnostics on a probe ball: writes conditions.csv
    Conditions(ConditionsArgs),
    /// Render a CSV column pair to a deterministic SVG line plot
    Plot(PlotArgs),
}

#[derive(Args, Clone, Default)]
struct CommonArgs {
    /// Model family: gmm, mor or missing
    #[arg(long)]
    model: Option<String>,
    /// Update rule: em, em-split, grad, grad-split or sgd
    #[arg(long)]
    algo: Option<String>,
    /// Parameter dimension
    #[arg(long)]
    d: Option<usize>,
    /// Samples per trial
    #[arg(long)]
    n: Option<usize>,
    /// Number of independent trials
    #[arg(long)]
    trials: Option<usize>,
    /// Iteration budget per trial
    #[arg(long)]
    iters: Option<usize>,
    /// Signal-to-noise ratio (truth norm over sigma)
    #[arg(long)]
    snr: Option<f64>,
    /// Noise scale sigma
    #[arg(long)]
    sigma: Option<f64>,
    /// Missingness probability (missing model only)
    #[arg(long)]
    omega: Option<f64>,
    /// Master seed behind every random stream
    #[arg(long)]
    seed: Option<u64>,
    /// Initialization radius as a fraction of the model's default radius
    #[arg(long)]
    init_radius_frac: Option<f64>,
    /// Initialization style: toward-theta-star or random-direction
    #[arg(long)]
    init_style: Option<String>,
    /// Step parameter: constant step for grad solvers, `a` in a/(xi*(t+2)) for sgd
    #[arg(long)]
    step: Option<f64>,
    /// Contraction constant xi in the sgd step schedule
    #[arg(long)]
    xi: Option<f64>,
    /// Output directory
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Clone)]
struct SweepArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Signal-to-noise grid, comma separated (default 1.5,2,3,5)
    #[arg(long, value_delimiter = ',')]
    grid: Option<Vec<f64>>,
}

#[derive(Args, Clone)]
struct RocArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Truth-norm grid, comma separated (default 1,2,4,8)
    #[arg(long, value_delimiter = ',')]
    grid: Option<Vec<f64>>,
    /// Initializations evaluated per candidate radius
    #[arg(long)]
    inits_per_radius: Option<usize>,
}

#[derive(Args, Clone)]
struct ConditionsArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Probe points on the sphere of the initialization radius
    #[arg(long)]
    num_probes: Option<usize>,
    /// Monte-Carlo sample size per operator evaluation (default: n)
    #[arg(long)]
    mc_n: Option<usize>,
}

#[derive(Args, Clone)]
struct PlotArgs {
    /// Input CSV file
    #[arg(long)]
    csv: Option<PathBuf>,
    /// Column plotted on the x axis
    #[arg(long)]
    x: Option<String>,
    /// Column plotted on the y axis
    #[arg(long)]
    y: Option<String>,
    /// Use a log-scaled y axis
    #[arg(long)]
    log_y: bool,
    /// Column whose values split the data into separate curves
    #[arg(long)]
    group_by: Option<String>,
    /// Output SVG path (default: the CSV path with an .svg extension)
    #[arg(long)]
    out: Option<PathBuf>,
}

/// JSON mirror of the flags; any key may be omitted, unknown keys are
/// rejected so typos surface as configuration errors.
#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    model: Option<String>,
    algo: Option<String>,
    d: Option<usize>,
    n: Option<usize>,
    trials: Option<usize>,
    iters: Option<usize>,
    snr: Option<f64>,
    sigma: Option<f64>,
    omega: Option<f64>,
    seed: Option<u64>,
    init_radius_frac: Option<f64>,
    init_style: Option<String>,
    step: Option<f64>,
    xi: Option<f64>,
    out: Option<PathBuf>,
    grid: Option<Vec<f64>>,
    inits_per_radius: Option<usize>,
    num_probes: Option<usize>,
    mc_n: Option<usize>,
    csv: Option<PathBuf>,
    x: Option<String>,
    y: Option<String>,
    log_y: Option<bool>,
    group_by: Option<String>,
}

fn load_config(path: &Option<PathBuf>) -> Result<FileConfig, Error> {
    let Some(path) = path else {
        return Ok(FileConfig::default());
    };
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Io {
            path: path.display().to_string(),
            source: e,
        })?;
    serde_json::from_str(&text).map_err(|e| {
        Error::InvalidConfig(format!("config file {}: {e}", path.display()))
    })
}

fn pick<T: Clone>(flag: &Option<T>, file: &Option<T>, default: T) -> T {
    flag.clone().or_else(|| file.clone()).unwrap_or(default)
}

fn pick_opt<T: Clone>(flag: &Option<T>, file: &Option<T>) -> Option<T> {
    flag.clone().or_else(|| file.clone())
}

/// Default `xi` for the decaying sgd schedule: the unit contraction
/// constant for the mixture-type models; for the missing-covariates model,
/// `1 - kappa` from its probabilistic contraction bound when that bound is
/// informative, and the unit fallback otherwise.
fn default_sgd_xi(model: Model, snr: f64, omega: f64) -> f64 {
    match model {
        Model::Gmm | Model::Mor => 1.0,
        Model::Missing => {
            let bound = prob_bound(snr, 1.0, omega);
            if bound.kappa < 1.0 {
                1.0 - bound.kappa
            } else {
                1.0
            }
        }
    }
}

fn build_spec(
    args: &CommonArgs,
    file: &FileConfig,
    default_algo: &str,
    default_iters: usize,
) -> Result<ExperimentSpec, Error> {
    let model: Model = pick(&args.model, &file.model, "gmm".to_string()).parse()?;
    let algo: Algo = pick(&args.algo, &file.algo, default_algo.to_string()).parse()?;
    let d = pick(&args.d, &file.d, 10);
    let n = pick(&args.n, &file.n, 1000);
    let trials = pick(&args.trials, &file.trials, 10);
    let iters = pick(&args.iters, &file.iters, default_iters);
    let sigma = pick(&args.sigma, &file.sigma, 1.0);
    let snr = pick(&args.snr, &file.snr, 2.0);
    let omega = pick(&args.omega, &file.omega, 0.2);
    let seed = pick(&args.seed, &file.seed, 0);
    let init_radius_frac = pick(&args.init_radius_frac, &file.init_radius_frac, 1.0);
    let init_style = match pick_opt(&args.init_style, &file.init_style) {
        Some(s) => s.parse()?,
        None => InitStyle::default_for(model),
    };
    let step = pick_opt(&args.step, &file.step);
    let xi = pick_opt(&args.xi, &file.xi);
    let out = pick(&args.out, &file.out, PathBuf::from("out"));

    let schedule = match algo {
        Algo::Em | Algo::EmSplit => None,
        Algo::Grad | Algo::GradSplit => Some(StepSchedule::Constant(step.unwrap_or(1.0))),
        Algo::Sgd => Some(StepSchedule::Decaying {
            a: step.unwrap_or(1.5),
            xi: xi.unwrap_or_else(|| default_sgd_xi(model, snr, omega)),
        }),
    };
    let spec = ExperimentSpec {
        model,
        algo: SolverConfig {
            algo,
            iters,
            step: schedule,
            projection: None,
            split_batches: algo.requires_split().then_some(iters),
        },
        d,
        n,
        trials,
        theta_norm: snr * sigma,
        sigma,
        omega: if model == Model::Missing { omega } else { 0.0 },
        init_radius_frac,
        init_style,
        master_seed: seed,
        output_dir: out,
    };
    spec.validate()?;
    Ok(spec)
}

/// Reports per-trial failures and the files written; decides the exit code.
fn finish(dir: &Path, produced: &[&str], completed: usize, failures: &[(usize, String)]) -> i32 {
    for (trial, msg) in failures {
        eprintln!("trial {trial} failed: {msg}");
    }
    if completed == 0 && !failures.is_empty() {
        eprintln!("all {} trials failed", failures.len());
        return EXIT_NUMERICAL;
    }
    for name in produced {
        println!("wrote {}", dir.join(name).display());
    }
    if !failures.is_empty() {
        println!(
            "completed {completed} trials, {} failed (see failures.csv)",
            failures.len()
        );
    }
    0
}

fn cmd_run(args: &CommonArgs, file: &FileConfig) -> Result<i32, Error> {
    let spec = build_spec(args, file, "em", 50)?;
    let report = run_experiment(&spec)?;
    for row in &report.rows {
        println!(
            "trial {}: kappa_fit={} plateau={} suggested_T={} seed={}",
            row.trial,
            row.summary.kappa_fit,
            row.summary.plateau,
            row.summary.suggested_t,
            row.seed
        );
    }
    let mut produced = vec!["trace.csv", "summary.csv"];
    if !report.failures.is_empty() {
        produced.push("failures.csv");
    }
    Ok(finish(
        &spec.output_dir,
        &produced,
        report.rows.len(),
        &report.failures,
    ))
}

fn cmd_snr_sweep(args: &SweepArgs, file: &FileConfig) -> Result<i32, Error> {
    let spec = build_spec(&args.common, file, "em", 50)?;
    let grid = pick(&args.grid, &file.grid, vec![1.5, 2.0, 3.0, 5.0]);
    let rows = run_snr_sweep(&spec, &grid)?;
    for row in &rows {
        println!(
            "snr={}: kappa_fit_mean={} kappa_fit_sd={}",
            row.snr, row.kappa_fit_mean, row.kappa_fit_sd
        );
    }
    if rows.iter().all(|r| r.kappa_fit_mean.is_nan()) {
        eprintln!("no trial produced a usable decay rate at any level");
        return Ok(EXIT_NUMERICAL);
    }
    println!("wrote {}", spec.output_dir.join("sweep.csv").display());
    Ok(0)
}

fn cmd_roc(args: &RocArgs, file: &FileConfig) -> Result<i32, Error> {
    let spec = build_spec(&args.common, file, "em", 50)?;
    let grid = pick(&args.grid, &file.grid, vec![1.0, 2.0, 4.0, 8.0]);
    let inits = pick(&args.inits_per_radius, &file.inits_per_radius, 100);
    let results = run_roc(&spec, &grid, inits)?;
    for r in &results {
        println!("theta_norm={}: radius_hat={}", r.theta_norm, r.radius_hat);
    }
    println!("wrote {}", spec.output_dir.join("roc.csv").display());
    Ok(0)
}

fn cmd_sgd(args: &CommonArgs, file: &FileConfig) -> Result<i32, Error> {
    let spec = build_spec(args, file, "sgd", 10_000)?;
    if spec.algo.algo != Algo::Sgd {
        return Err(Error::InvalidConfig(format!(
            "the sgd subcommand always runs the sgd algorithm; drop '--algo {}'",
            spec.algo.algo
        )));
    }
    let report = run_sgd_experiment(&spec)?;
    for row in &report.rows {
        println!(
            "trial {}: slope={} seed={}",
            row.trial, row.slope, row.seed
        );
    }
    let mut produced = vec!["trace.csv", "sgd_summary.csv"];
    if !report.failures.is_empty() {
        produced.push("failures.csv");
    }
    Ok(finish(
        &spec.output_dir,
        &produced,
        report.rows.len(),
        &report.failures,
    ))
}

fn cmd_conditions(args: &ConditionsArgs, file: &FileConfig) -> Result<i32, Error> {
    let spec = build_spec(&args.common, file, "em", 50)?;
    let num_probes = pick(&args.num_probes, &file.num_probes, 100);
    let mc_n = pick(&args.mc_n, &file.mc_n, spec.n);
    let est = run_conditions(&spec, num_probes, mc_n)?;
    println!(
        "lambda={} mu={} gamma_fos={} gamma_gs={} kappa={} (stderr {}) xi={} sigma_g_sq={}",
        est.lambda,
        est.mu,
        est.gamma_fos,
        est.gamma_gs,
        est.kappa,
        est.kappa_stderr,
        est.xi,
        est.sigma_g_sq
    );
    println!("wrote {}", spec.output_dir.join("conditions.csv").display());
    Ok(0)
}

fn cmd_plot(args: &PlotArgs, file: &FileConfig) -> Result<i32, Error> {
    let csv = pick_opt(&args.csv, &file.csv)
        .ok_or_else(|| Error::InvalidConfig("plot needs --csv (the input table)".into()))?;
    let x = pick_opt(&args.x, &file.x)
        .ok_or_else(|| Error::InvalidConfig("plot needs --x (the x-axis column)".into()))?;
    let y = pick_opt(&args.y, &file.y)
        .ok_or_else(|| Error::InvalidConfig("plot needs --y (the y-axis column)".into()))?;
    let out = pick_opt(&args.out, &file.out).unwrap_or_else(|| csv.with_extension("svg"));
    let plot = PlotSpec {
        x,
        y,
        log_y: args.log_y || file.log_y.unwrap_or(false),
        group_by: pick_opt(&args.group_by, &file.group_by),
    };
    emit_svg(&csv, &plot, &out)?;
    println!("wrote {}", out.display());
    Ok(0)
}

fn exit_code_for(e: &Error) -> i32 {
    match e {
        Error::InvalidConfig(_) | Error::MissingColumn { .. } | Error::EmptyCsv(_) => {
            EXIT_INVALID_CONFIG
        }
        Error::Io { .. } => EXIT_IO,
        _ => EXIT_NUMERICAL,
    }
}

fn dispatch(cli: &Cli) -> Result<i32, Error> {
    let file = load_config(&cli.config)?;
    match &cli.command {
        Command::Run(args) => cmd_run(args, &file),
        Command::SnrSweep(args) => cmd_snr_sweep(args, &file),
        Command::Roc(args) => cmd_roc(args, &file),
        Command::Sgd(args) => cmd_sgd(args, &file),
        Command::Conditions(args) => cmd_conditions(args, &file),
        Command::Plot(args) => cmd_plot(args, &file),
    }
}

fn main() {
    let cli = Cli::parse();
    let code = match dispatch(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code_for(&e)
        }
    };
    std::process::exit(code);
}
