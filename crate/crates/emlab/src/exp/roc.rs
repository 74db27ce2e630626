//! Basin-of-attraction measurement: the fraction of random initializations
//! that converge back to the truth, as a function of the initialization
//! radius, plus a bisection estimate of the largest radius whose success
//! fraction still clears a 90% bar.

use crate::config::Algo;
use crate::error::{Error, Result};
use crate::exp::csvio::{fmt_float, write_csv};
use crate::exp::rates::detect_plateau;
use crate::exp::runner::{draw_init, run_batch_solver, with_model_ops, PLATEAU_WINDOW};
use crate::exp::{ExperimentSpec, InitStyle};
use crate::rng::{derive_stream, RngStream};
use crate::solver::ModelOps;

/// Fraction of initializations that must converge for a radius to count as
/// inside the basin.
const SUCCESS_BAR: f64 = 0.9;
/// Number of bisection refinements of the basin radius.
const BISECTIONS: usize = 12;

/// Basin measurement for one signal strength.
#[derive(Clone, Debug)]
pub struct RocResult {
    pub theta_norm: f64,
    /// Largest evaluated radius whose success fraction cleared the bar.
    pub radius_hat: f64,
    /// `(radius, success fraction)` pairs in evaluation order, starting
    /// with the by-construction `(0, 1)` entry: a run initialized at the
    /// truth has nowhere better to go.
    pub success_fractions: Vec<(f64, f64)>,
}

fn success_fraction<M: ModelOps>(
    ops: &M,
    spec: &ExperimentSpec,
    data: &M::Data,
    radius: f64,
    inits: usize,
    threshold: f64,
    init_rng: &mut RngStream,
) -> f64 {
    let mut successes = 0usize;
    for _ in 0..inits {
        let theta0 = draw_init(
            InitStyle::RandomDirection,
            ops.theta_star(),
            radius,
            init_rng,
        );
        if let Ok(result) = run_batch_solver(ops, &spec.algo, data, &theta0) {
            if result.final_theta.dist(ops.theta_star()) <= threshold {
                successes += 1;
            }
        }
        // A failed solve cannot have converged; it counts against the radius.
    }
    successes as f64 / inits as f64
}

fn run_one_norm<M: ModelOps>(
    spec: &ExperimentSpec,
    ops: &M,
    grid_index: u64,
    inits_per_radius: usize,
) -> Result<RocResult> {
    let mut data_rng = derive_stream(spec.master_seed, "roc-data", grid_index);
    let data = ops.sample(spec.n, &mut data_rng);

    // Success threshold: a run counts as converged if it gets within twice
    // the accuracy the solver reaches when started at the truth itself
    // (its noise floor on this dataset), with an absolute floor so tiny
    // plateaus don't make the bar unreachable.
    let mut reference = run_batch_solver(ops, &spec.algo, &data, ops.theta_star())?;
    reference
        .trace
        .attach_errors(ops.theta_star(), ops.theta_star());
    let stat = reference.trace.stat_errors().expect("errors attached");
    let window = PLATEAU_WINDOW.min(stat.len());
    let reference_plateau = detect_plateau(&stat, window).expect("window fits");
    let threshold =
        (2.0 * reference_plateau).max(0.05 * spec.theta_norm + 0.05 * spec.sigma);

    let mut init_rng = derive_stream(spec.master_seed, "roc-init", grid_index);
    let mut fractions = vec![(0.0, 1.0)];
    let mut lo = 0.0;
    let mut hi = 2.0 * spec.theta_norm + 2.0 * spec.sigma;
    for _ in 0..BISECTIONS {
        let mid = 0.5 * (lo + hi);
        let frac = success_fraction(
            ops,
            spec,
            &data,
            mid,
            inits_per_radius,
            threshold,
            &mut init_rng,
        );
        fractions.push((mid, frac));
        if frac >= SUCCESS_BAR {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(RocResult {
        theta_norm: spec.theta_norm,
        radius_hat: lo,
        success_fractions: fractions,
    })
}

/// Measures the basin of attraction at each signal strength in
/// `theta_norm_grid` (same dataset and solver per strength, fresh random
/// directions per radius) and writes `roc.csv`.
pub fn run_roc(
    spec: &ExperimentSpec,
    theta_norm_grid: &[f64],
    inits_per_radius: usize,
) -> Result<Vec<RocResult>> {
    spec.validate()?;
    if spec.algo.algo == Algo::Sgd {
        return Err(Error::InvalidConfig(
            "basin measurement needs a batch solver; sgd draws fresh samples per step".into(),
        ));
    }
    if theta_norm_grid.is_empty() {
        return Err(Error::InvalidConfig("theta-norm grid is empty".into()));
    }
    if let Some(bad) = theta_norm_grid.iter().find(|v| !(v.is_finite() && **v > 0.0)) {
        return Err(Error::InvalidConfig(format!(
            "theta-norm values must be positive, got {bad}"
        )));
    }
    if inits_per_radius == 0 {
        return Err(Error::InvalidConfig(
            "need at least one initialization per radius".into(),
        ));
    }
    let mut results = Vec::with_capacity(theta_norm_grid.len());
    for (gi, &norm) in theta_norm_grid.iter().enumerate() {
        let sub = ExperimentSpec {
            theta_norm: norm,
            ..spec.clone()
        };
        let result = with_model_ops!(&sub, ops => {
            run_one_norm(&sub, &ops, gi as u64, inits_per_radius)
        })?;
        results.push(result);
    }
    let mut rows = Vec::new();
    for r in &results {
        for &(radius, frac) in &r.success_fractions {
            rows.push(vec![
                spec.model.as_str().to_string(),
                fmt_float(r.theta_norm),
                fmt_float(radius),
                fmt_float(frac),
                fmt_float(r.radius_hat),
            ]);
        }
    }
    write_csv(
        spec.output_dir.join("roc.csv"),
        &[
            "model",
            "theta_norm",
            "radius",
            "success_fraction",
            "radius_hat",
        ],
        &rows,
    )?;
    Ok(results)
}
