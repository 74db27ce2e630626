//! Experiment harness: multi-trial solver runs with error traces, geometric
//! rate and plateau fitting, radius-of-convergence search, condition
//! estimation, and deterministic CSV/SVG emission.

mod csvio;
mod rates;
mod roc;
mod runner;
mod svg;

pub use csvio::{read_csv, write_csv, CsvTable};
pub use rates::{compute_suggested_t, detect_plateau, fit_geometric_rate};
pub use roc::{run_roc, RocResult};
pub use runner::{
    run_conditions, run_experiment, run_sgd_experiment, run_snr_sweep, ExperimentReport, SgdReport,
    SgdRow, SweepRow, TrialRow,
};
pub use svg::{emit_svg, PlotSpec};

use crate::config::{Algo, SolverConfig};
use crate::error::{Error, Result};
use crate::vector::ParamVec;
use std::path::PathBuf;

/// The three latent-variable models the harness can exercise.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Model {
    /// Symmetric two-component Gaussian mixture.
    Gmm,
    /// Symmetric mixture of two linear regressions.
    Mor,
    /// Linear regression with covariates missing completely at random.
    Missing,
}

impl Model {
    pub fn as_str(self) -> &'static str {
        match self {
            Model::Gmm => "gmm",
            Model::Mor => "mor",
            Model::Missing => "missing",
        }
    }
}

impl std::fmt::Display for Model {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Model {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gmm" => Ok(Model::Gmm),
            "mor" => Ok(Model::Mor),
            "missing" => Ok(Model::Missing),
            other => Err(Error::InvalidConfig(format!(
                "unknown model '{other}' (expected gmm, mor, or missing)"
            ))),
        }
    }
}

/// How the initial iterate is placed on the sphere of the chosen radius
/// around the truth.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum InitStyle {
    /// Random unit direction re-drawn until it has nonnegative inner product
    /// with the truth — sidesteps the sign ambiguity of the symmetric
    /// mixtures.
    TowardThetaStar,
    /// Unrestricted random unit direction.
    RandomDirection,
}

impl InitStyle {
    /// Model defaults: the symmetric mixtures initialize toward the truth
    /// (their parameter is only sign-identifiable), the missing-covariates
    /// model has no such ambiguity.
    pub fn default_for(model: Model) -> Self {
        match model {
            Model::Gmm | Model::Mor => InitStyle::TowardThetaStar,
            Model::Missing => InitStyle::RandomDirection,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            InitStyle::TowardThetaStar => "toward-theta-star",
            InitStyle::RandomDirection => "random-direction",
        }
    }
}

impl std::str::FromStr for InitStyle {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "toward-theta-star" => Ok(InitStyle::TowardThetaStar),
            "random-direction" => Ok(InitStyle::RandomDirection),
            other => Err(Error::InvalidConfig(format!(
                "unknown init style '{other}' (expected toward-theta-star or random-direction)"
            ))),
        }
    }
}

/// Everything a multi-trial experiment needs: model, solver, problem sizes,
/// signal strength, initialization protocol, seed, and output location.
#[derive(Clone, Debug)]
pub struct ExperimentSpec {
    pub model: Model,
    pub algo: SolverConfig,
    pub d: usize,
    pub n: usize,
    pub trials: usize,
    /// Norm of the ground-truth parameter; the signal-to-noise ratio is
    /// `theta_norm / sigma`.
    pub theta_norm: f64,
    pub sigma: f64,
    /// Per-coordinate missingness probability (missing model only).
    pub omega: f64,
    /// Fraction of the model's default initialization radius, in (0, 1].
    pub init_radius_frac: f64,
    pub init_style: InitStyle,
    pub master_seed: u64,
    pub output_dir: PathBuf,
}

impl ExperimentSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if self.d == 0 {
            return bad("dimension must be at least 1".into());
        }
        if self.n == 0 {
            return bad("sample size must be at least 1".into());
        }
        if self.trials == 0 {
            return bad("need at least one trial".into());
        }
        if !(self.theta_norm.is_finite() && self.theta_norm > 0.0) {
            return bad(format!("theta norm must be positive, got {}", self.theta_norm));
        }
        if !(self.sigma.is_finite() && self.sigma > 0.0) {
            return bad(format!("sigma must be positive, got {}", self.sigma));
        }
        if !(0.0..1.0).contains(&self.omega) {
            return bad(format!("omega must lie in [0, 1), got {}", self.omega));
        }
        if !(self.init_radius_frac > 0.0 && self.init_radius_frac <= 1.0) {
            return bad(format!(
                "init-radius fraction must lie in (0, 1], got {}",
                self.init_radius_frac
            ));
        }
        if self.algo.iters == 0 && self.algo.algo.requires_split() {
            return bad("sample splitting needs at least one iteration".into());
        }
        match self.algo.algo {
            Algo::Em | Algo::EmSplit => {}
            Algo::Grad | Algo::GradSplit | Algo::Sgd => match &self.algo.step {
                None => {
                    return bad(format!(
                        "algorithm '{}' requires a step schedule",
                        self.algo.algo
                    ))
                }
                Some(s) => s.validate()?,
            },
        }
        Ok(())
    }

    /// Ground truth used by every trial: `(theta_norm/√d)·(1, …, 1)`.
    pub fn theta_star(&self) -> ParamVec {
        ParamVec::new(vec![self.theta_norm / (self.d as f64).sqrt(); self.d])
    }

    pub fn snr(&self) -> f64 {
        self.theta_norm / self.sigma
    }

    /// The model's default initialization/probe radius: `‖θ*‖/4` for the
    /// mixture, `‖θ*‖/32` for mixed regressions, `σ` for missing covariates
    /// (the unit-scale ball in noise units).
    pub fn default_init_radius(&self) -> f64 {
        match self.model {
            Model::Gmm => self.theta_norm / 4.0,
            Model::Mor => self.theta_norm / 32.0,
            Model::Missing => self.sigma,
        }
    }

    /// Radius actually used for initial iterates.
    pub fn init_radius(&self) -> f64 {
        self.init_radius_frac * self.default_init_radius()
    }

    /// The per-step sample-complexity scale of the model:
    /// `‖θ*‖·√(‖θ*‖² + σ²)` for the mixture and `√(σ² + ‖θ*‖²)` for the
    /// regression-type models.
    pub fn phi(&self) -> f64 {
        let s2 = self.sigma * self.sigma;
        let t2 = self.theta_norm * self.theta_norm;
        match self.model {
            Model::Gmm => self.theta_norm * (t2 + s2).sqrt(),
            Model::Mor | Model::Missing => (s2 + t2).sqrt(),
        }
    }
}

/// Per-trial fit results reported alongside each trace.
#[derive(Clone, Copy, Debug)]
pub struct RunSummary {
    /// Fitted geometric decay factor of the optimization error.
    pub kappa_fit: f64,
    /// Statistical-error floor the trajectory levels off at.
    pub plateau: f64,
    /// The model's sample-complexity scale (see [`ExperimentSpec::phi`]).
    pub phi: f64,
    /// Iterations sufficient to decay from the initial error to the plateau
    /// at the fitted rate.
    pub suggested_t: usize,
}
