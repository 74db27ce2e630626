//! Multi-trial experiment drivers: batch-solver runs with error traces and
//! per-trial summaries, signal-strength sweeps, stochastic-solver runs with
//! fitted power-law slopes, and condition estimation — all writing
//! deterministic CSV files.

use crate::config::{Algo, SolverConfig};
use crate::error::{Error, Result};
use crate::exp::csvio::{fmt_float, write_csv};
use crate::exp::rates::{compute_suggested_t, detect_plateau, fit_geometric_rate, least_squares_slope};
use crate::exp::{ExperimentSpec, InitStyle, Model, RunSummary};
use crate::population::{estimate_conditions, ConditionEstimate, ProbeSpec};
use crate::rng::{derive_stream, RngStream};
use crate::solver::{
    run_em, run_em_split, run_grad_em, run_grad_em_split, run_sgd_em, ModelOps, RunResult,
};
use crate::trace::Trace;
use crate::vector::ParamVec;

/// Numerical noise floor below which optimization errors are excluded from
/// rate fits.
pub(crate) const FIT_FLOOR: f64 = 1e-10;
/// Window for plateau detection (shrunk for very short traces).
pub(crate) const PLATEAU_WINDOW: usize = 5;

/// Builds the model bundle for `$spec` and evaluates `$body` with it bound
/// to `$ops`. A macro rather than a function because the three bundles have
/// different types and `ModelOps` is not object-safe.
macro_rules! with_model_ops {
    ($spec:expr, $ops:ident => $body:expr) => {{
        let spec = $spec;
        match spec.model {
            $crate::exp::Model::Gmm => {
                let $ops = $crate::gmm::GmmOps::new($crate::gmm::GmmOracle::new(
                    spec.theta_star(),
                    spec.sigma,
                ));
                $body
            }
            $crate::exp::Model::Mor => {
                let $ops = $crate::mor::MorOps::new($crate::mor::MorOracle::new(
                    spec.theta_star(),
                    spec.sigma,
                ));
                $body
            }
            $crate::exp::Model::Missing => {
                let $ops = $crate::missing::MissingOps::new($crate::missing::MissingOracle::new(
                    spec.theta_star(),
                    spec.sigma,
                    spec.omega,
                ));
                $body
            }
        }
    }};
}
pub(crate) use with_model_ops;

/// Draws an initial iterate on the sphere of `radius` around the truth.
pub(crate) fn draw_init(
    style: InitStyle,
    theta_star: &ParamVec,
    radius: f64,
    rng: &mut RngStream,
) -> ParamVec {
    let d = theta_star.dim();
    let u = loop {
        let u = rng.unit_vec(d);
        match style {
            InitStyle::RandomDirection => break u,
            InitStyle::TowardThetaStar => {
                if u.dot(theta_star) >= 0.0 {
                    break u;
                }
            }
        }
    };
    theta_star.add_scaled(radius, &u)
}

/// Runs the configured batch solver (the stochastic solver draws fresh
/// samples and has its own entry point).
pub(crate) fn run_batch_solver<M: ModelOps>(
    ops: &M,
    config: &SolverConfig,
    data: &M::Data,
    theta0: &ParamVec,
) -> Result<RunResult> {
    let step = || config.step.as_ref().expect("validated: step present");
    match config.algo {
        Algo::Em => run_em(ops, data, theta0, config.iters),
        Algo::EmSplit => run_em_split(ops, data, theta0, config.iters),
        Algo::Grad => run_grad_em(ops, data, theta0, step(), config.iters),
        Algo::GradSplit => run_grad_em_split(ops, data, theta0, step(), config.iters),
        Algo::Sgd => Err(Error::InvalidConfig(
            "the stochastic solver draws fresh samples per step; use the sgd entry point".into(),
        )),
    }
}

/// The optimization-error reference: the attracting optimum of the
/// configured update family on this dataset, found by iterating from the
/// truth until the update moves less than 1e-12 (capped at 500 steps).
pub(crate) fn reference_optimum<M: ModelOps>(
    ops: &M,
    config: &SolverConfig,
    data: &M::Data,
) -> Result<ParamVec> {
    let mut theta = ops.theta_star().clone();
    let gradient_family = matches!(config.algo, Algo::Grad | Algo::GradSplit);
    for t in 0..500 {
        let next = if gradient_family {
            let schedule = config.step.as_ref().expect("validated: step present");
            theta.add_scaled(schedule.step(t), &ops.q_grad(data, &theta, &theta)?)
        } else {
            ops.m_step(data, &theta)?
        };
        let moved = next.dist(&theta);
        theta = next;
        if moved < 1e-12 {
            break;
        }
    }
    Ok(theta)
}

/// One finished trial: its trace (errors attached) and fitted summary.
pub(crate) struct TrialTrace {
    pub trial: usize,
    pub seed: u64,
    pub trace: Trace,
    pub summary: RunSummary,
}

fn summarize(spec: &ExperimentSpec, trace: &Trace, init_error: f64) -> RunSummary {
    let opt = trace.opt_errors().expect("errors attached");
    let stat = trace.stat_errors().expect("errors attached");
    let kappa_fit = fit_geometric_rate(&opt, FIT_FLOOR).unwrap_or(f64::NAN);
    let window = PLATEAU_WINDOW.min(stat.len());
    let plateau = detect_plateau(&stat, window).expect("window fits");
    let usable = kappa_fit.is_finite() && kappa_fit > 0.0 && kappa_fit < 1.0;
    let suggested_t = if usable && plateau > 0.0 && init_error > 0.0 {
        compute_suggested_t(kappa_fit, init_error, plateau * (1.0 - kappa_fit))
    } else {
        // No usable geometric decay: suggest the budget that was run.
        spec.algo.iters.max(1)
    };
    RunSummary {
        kappa_fit,
        plateau,
        phi: spec.phi(),
        suggested_t,
    }
}

fn run_one_trial<M: ModelOps>(
    spec: &ExperimentSpec,
    ops: &M,
    trial: usize,
) -> Result<TrialTrace> {
    let mut data_rng = derive_stream(spec.master_seed, "trial-data", trial as u64);
    let seed = data_rng.seed_id();
    let mut init_rng = derive_stream(spec.master_seed, "trial-init", trial as u64);
    let data = ops.sample(spec.n, &mut data_rng);
    let theta0 = draw_init(
        spec.init_style,
        ops.theta_star(),
        spec.init_radius(),
        &mut init_rng,
    );
    let mut result = run_batch_solver(ops, &spec.algo, &data, &theta0)?;
    let reference = reference_optimum(ops, &spec.algo, &data)?;
    result.trace.attach_errors(&reference, ops.theta_star());
    let init_error = theta0.dist(ops.theta_star());
    let summary = summarize(spec, &result.trace, init_error);
    Ok(TrialTrace {
        trial,
        seed,
        trace: result.trace,
        summary,
    })
}

/// Runs every trial, collecting per-trial failures instead of aborting the
/// experiment.
fn run_trials<M: ModelOps>(
    spec: &ExperimentSpec,
    ops: &M,
) -> (Vec<TrialTrace>, Vec<(usize, String)>) {
    let mut done = Vec::new();
    let mut failures = Vec::new();
    for trial in 0..spec.trials {
        match run_one_trial(spec, ops, trial) {
            Ok(t) => done.push(t),
            Err(e) => failures.push((trial, e.to_string())),
        }
    }
    (done, failures)
}

/// A summary row for one completed trial.
#[derive(Clone, Debug)]
pub struct TrialRow {
    pub trial: usize,
    pub seed: u64,
    pub summary: RunSummary,
}

/// What a batch experiment produced: fitted rows for completed trials and
/// error strings for failed ones.
#[derive(Clone, Debug)]
pub struct ExperimentReport {
    pub rows: Vec<TrialRow>,
    pub failures: Vec<(usize, String)>,
}

fn trace_csv_rows(spec: &ExperimentSpec, trials: &[TrialTrace]) -> Vec<Vec<String>> {
    let mut rows = Vec::new();
    for t in trials {
        for rec in t.trace.records() {
            rows.push(vec![
                spec.model.as_str().to_string(),
                spec.algo.algo.as_str().to_string(),
                t.trial.to_string(),
                rec.t.to_string(),
                fmt_float(rec.opt_error.expect("errors attached")),
                fmt_float(rec.stat_error.expect("errors attached")),
            ]);
        }
    }
    rows
}

const TRACE_HEADER: [&str; 6] = ["model", "algo", "trial", "iter", "opt_error", "stat_error"];

fn write_failures(spec: &ExperimentSpec, failures: &[(usize, String)]) -> Result<()> {
    if failures.is_empty() {
        return Ok(());
    }
    let rows: Vec<Vec<String>> = failures
        .iter()
        .map(|(trial, msg)| vec![trial.to_string(), msg.clone()])
        .collect();
    write_csv(spec.output_dir.join("failures.csv"), &["trial", "error"], &rows)
}

/// Runs a batch-solver experiment and writes `trace.csv`, `summary.csv`,
/// and (only when trials fail) `failures.csv` into the output directory.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<ExperimentReport> {
    spec.validate()?;
    if spec.algo.algo == Algo::Sgd {
        return Err(Error::InvalidConfig(
            "stochastic runs use the sgd entry point, which owns the projection setup".into(),
        ));
    }
    let (trials, failures) = with_model_ops!(spec, ops => run_trials(spec, &ops));
    write_csv(
        spec.output_dir.join("trace.csv"),
        &TRACE_HEADER,
        &trace_csv_rows(spec, &trials),
    )?;
    let summary_rows: Vec<Vec<String>> = trials
        .iter()
        .map(|t| {
            vec![
                t.trial.to_string(),
                fmt_float(t.summary.kappa_fit),
                fmt_float(t.summary.plateau),
                t.summary.suggested_t.to_string(),
                t.seed.to_string(),
            ]
        })
        .collect();
    write_csv(
        spec.output_dir.join("summary.csv"),
        &["trial", "kappa_fit", "plateau", "suggested_T", "seed"],
        &summary_rows,
    )?;
    write_failures(spec, &failures)?;
    Ok(ExperimentReport {
        rows: trials
            .into_iter()
            .map(|t| TrialRow {
                trial: t.trial,
                seed: t.seed,
                summary: t.summary,
            })
            .collect(),
        failures,
    })
}

/// Aggregated decay rate at one signal-to-noise level.
#[derive(Clone, Copy, Debug)]
pub struct SweepRow {
    pub snr: f64,
    pub kappa_fit_mean: f64,
    pub kappa_fit_sd: f64,
}

/// Re-runs the experiment across a grid of signal-to-noise ratios (holding
/// `sigma` fixed and scaling the truth) and writes `sweep.csv` with the
/// mean and standard deviation of the fitted decay rate per level.
pub fn run_snr_sweep(spec: &ExperimentSpec, snr_grid: &[f64]) -> Result<Vec<SweepRow>> {
    spec.validate()?;
    if snr_grid.is_empty() {
        return Err(Error::InvalidConfig("signal-to-noise grid is empty".into()));
    }
    if let Some(bad) = snr_grid.iter().find(|v| !(v.is_finite() && **v > 0.0)) {
        return Err(Error::InvalidConfig(format!(
            "signal-to-noise values must be positive, got {bad}"
        )));
    }
    let mut out = Vec::with_capacity(snr_grid.len());
    for &snr in snr_grid {
        let sub = ExperimentSpec {
            theta_norm: snr * spec.sigma,
            ..spec.clone()
        };
        let (trials, _failures) = with_model_ops!(&sub, ops => run_trials(&sub, &ops));
        let kappas: Vec<f64> = trials
            .iter()
            .map(|t| t.summary.kappa_fit)
            .filter(|k| k.is_finite())
            .collect();
        let (mean, sd) = if kappas.is_empty() {
            (f64::NAN, f64::NAN)
        } else {
            let mean = kappas.iter().sum::<f64>() / kappas.len() as f64;
            let sd = if kappas.len() < 2 {
                0.0
            } else {
                (kappas.iter().map(|k| (k - mean) * (k - mean)).sum::<f64>()
                    / (kappas.len() - 1) as f64)
                    .sqrt()
            };
            (mean, sd)
        };
        out.push(SweepRow {
            snr,
            kappa_fit_mean: mean,
            kappa_fit_sd: sd,
        });
    }
    let rows: Vec<Vec<String>> = out
        .iter()
        .map(|r| {
            vec![
                fmt_float(r.snr),
                fmt_float(r.kappa_fit_mean),
                fmt_float(r.kappa_fit_sd),
            ]
        })
        .collect();
    write_csv(
        spec.output_dir.join("sweep.csv"),
        &["snr", "kappa_fit_mean", "kappa_fit_sd"],
        &rows,
    )?;
    Ok(out)
}

/// One stochastic trial: fitted log-log decay slope of the statistical
/// error.
#[derive(Clone, Copy, Debug)]
pub struct SgdRow {
    pub trial: usize,
    pub slope: f64,
    pub seed: u64,
}

/// What a stochastic experiment produced.
#[derive(Clone, Debug)]
pub struct SgdReport {
    pub rows: Vec<SgdRow>,
    pub failures: Vec<(usize, String)>,
}

/// Log-log slope of error against iteration, fitted over iterations
/// `[100, T]` (falling back to `[1, T]` for short runs; NaN when fewer than
/// three points exist). Zeros are clamped to 1e-16 before taking logs.
fn fit_loglog_slope(errors: &[f64]) -> f64 {
    let collect = |from: usize| -> Vec<(f64, f64)> {
        (from..errors.len())
            .map(|t| ((t as f64).ln(), errors[t].max(1e-16).ln()))
            .collect()
    };
    let mut points = collect(100.min(errors.len()));
    if points.len() < 3 {
        points = collect(1); // short run: use everything past the initial point
    }
    if points.len() < 3 {
        return f64::NAN;
    }
    least_squares_slope(&points)
}

/// Runs the projected stochastic solver for each trial and writes
/// `trace.csv` plus `sgd_summary.csv`.
///
/// Protocol: the initial iterate sits at distance `init_radius_frac·σ` from
/// the truth, the projection ball has diameter `4σ` around the initial
/// iterate (so the truth is comfortably inside), and each iteration
/// consumes one fresh sample. There is no finite-sample optimum in this
/// regime, so both error columns report distance to the truth.
pub fn run_sgd_experiment(spec: &ExperimentSpec) -> Result<SgdReport> {
    spec.validate()?;
    if spec.algo.algo != Algo::Sgd {
        return Err(Error::InvalidConfig(format!(
            "the sgd entry point requires the sgd algorithm, got '{}'",
            spec.algo.algo
        )));
    }
    let schedule = spec.algo.step.clone().expect("validated: step present");
    let radius = 4.0 * spec.sigma;
    let init_radius = spec.init_radius_frac * spec.sigma;
    with_model_ops!(spec, ops => {
        let star = ops.theta_star().clone();
        let mut trials = Vec::new();
        let mut failures = Vec::new();
        for trial in 0..spec.trials {
            let mut data_rng = derive_stream(spec.master_seed, "trial-data", trial as u64);
            let seed = data_rng.seed_id();
            let mut init_rng = derive_stream(spec.master_seed, "trial-init", trial as u64);
            let theta0 = draw_init(spec.init_style, &star, init_radius, &mut init_rng);
            match run_sgd_em(&ops, &theta0, radius, &schedule, spec.algo.iters, &mut data_rng) {
                Ok(mut result) => {
                    result.trace.attach_errors(&star, &star);
                    trials.push((trial, seed, result.trace));
                }
                Err(e) => failures.push((trial, e.to_string())),
            }
        }
        let mut trace_rows = Vec::new();
        let mut summary_rows = Vec::new();
        let mut rows = Vec::new();
        for (trial, seed, trace) in &trials {
            for rec in trace.records() {
                trace_rows.push(vec![
                    spec.model.as_str().to_string(),
                    spec.algo.algo.as_str().to_string(),
                    trial.to_string(),
                    rec.t.to_string(),
                    fmt_float(rec.opt_error.expect("errors attached")),
                    fmt_float(rec.stat_error.expect("errors attached")),
                ]);
            }
            let slope = fit_loglog_slope(&trace.stat_errors().expect("errors attached"));
            summary_rows.push(vec![
                trial.to_string(),
                fmt_float(slope),
                seed.to_string(),
            ]);
            rows.push(SgdRow {
                trial: *trial,
                slope,
                seed: *seed,
            });
        }
        write_csv(spec.output_dir.join("trace.csv"), &TRACE_HEADER, &trace_rows)?;
        write_csv(
            spec.output_dir.join("sgd_summary.csv"),
            &["trial", "slope", "seed"],
            &summary_rows,
        )?;
        write_failures(spec, &failures)?;
        Ok(SgdReport { rows, failures })
    })
}

/// Estimates all contraction/stability diagnostics for the spec's model
/// over the ball of the spec's initialization radius and writes a one-row
/// `conditions.csv`. The `stderr` column reports the contraction factor's
/// standard error (the quantity the table's inequalities are judged
/// against).
pub fn run_conditions(
    spec: &ExperimentSpec,
    num_probes: usize,
    mc_n: usize,
) -> Result<ConditionEstimate> {
    spec.validate()?;
    if mc_n < 1000 {
        return Err(Error::InvalidConfig(format!(
            "condition estimation needs a Monte-Carlo size of at least 1000, got {mc_n}"
        )));
    }
    if num_probes == 0 {
        return Err(Error::InvalidConfig("need at least one probe".into()));
    }
    let radius = spec.init_radius();
    let rng = derive_stream(spec.master_seed, "conditions", 0);
    let probe = ProbeSpec::new(radius, num_probes, mc_n, rng);
    let est = with_model_ops!(spec, ops => estimate_conditions(&ops, &probe))?;
    let snr_or_omega = match spec.model {
        Model::Missing => spec.omega,
        _ => spec.snr(),
    };
    let row = vec![
        spec.model.as_str().to_string(),
        fmt_float(snr_or_omega),
        fmt_float(radius),
        fmt_float(est.lambda),
        fmt_float(est.mu),
        fmt_float(est.gamma_fos),
        fmt_float(est.gamma_gs),
        fmt_float(est.kappa),
        fmt_float(est.xi),
        fmt_float(est.sigma_g_sq),
        fmt_float(est.kappa_stderr),
    ];
    write_csv(
        spec.output_dir.join("conditions.csv"),
        &[
            "model",
            "snr_or_omega",
            "radius",
            "lambda",
            "mu",
            "gamma_fos",
            "gamma_gs",
            "kappa_hat",
            "xi",
            "sigma_g_sq",
            "stderr",
        ],
        &[row],
    )?;
    Ok(est)
}
