//! Linear regression with covariates missing completely at random.
//!
//! Covariates are standard normal and responses follow `y = ⟨x, θ*⟩ + σ·v`,
//! but each covariate coordinate is independently masked with probability
//! `ω` after the response is generated. The E-step imputes the first and
//! second conditional moments of the full covariate vector; the M-step solves
//! the resulting normal equations.

use crate::error::{Error, Result};
use crate::linalg::{solve_spd, SymMat};
use crate::rng::RngStream;
use crate::solver::ModelOps;
use crate::vector::ParamVec;

/// Ground truth for sampling: regression vector, noise level, and
/// per-coordinate missingness probability.
#[derive(Clone, Debug)]
pub struct MissingOracle {
    pub theta_star: ParamVec,
    pub sigma: f64,
    pub omega: f64,
}

impl MissingOracle {
    pub fn new(theta_star: ParamVec, sigma: f64, omega: f64) -> Self {
        assert!(sigma.is_finite() && sigma > 0.0, "sigma must be positive");
        assert!(
            (0.0..=1.0).contains(&omega),
            "omega must lie in [0, 1], got {omega}"
        );
        MissingOracle {
            theta_star,
            sigma,
            omega,
        }
    }

    pub fn snr(&self) -> f64 {
        self.theta_star.norm() / self.sigma
    }
}

/// One observation: response, masked covariates (explicit zeros at masked
/// coordinates), and the mask itself.
#[derive(Clone, Debug)]
pub struct MissingSample {
    /// Covariates with masked coordinates stored as zero.
    pub x_obs: ParamVec,
    /// `observed[j]` is true when coordinate `j` was seen.
    pub observed: Vec<bool>,
    pub y: f64,
}

/// Observed draws; samples with every coordinate masked are retained.
#[derive(Clone, Debug)]
pub struct MissingData {
    pub samples: Vec<MissingSample>,
}

/// Draws `n` samples; the mask is drawn after the `(x, y)` pair, so the
/// response always reflects the complete covariate vector.
pub fn sample(oracle: &MissingOracle, n: usize, rng: &mut RngStream) -> MissingData {
    let d = oracle.theta_star.dim();
    let samples = (0..n)
        .map(|_| {
            let x = rng.normal_vec(d);
            let v = rng.normal();
            let y = x.dot(&oracle.theta_star) + oracle.sigma * v;
            let observed: Vec<bool> = (0..d).map(|_| rng.uniform() >= oracle.omega).collect();
            let mut x_obs = x;
            for j in 0..d {
                if !observed[j] {
                    x_obs[j] = 0.0;
                }
            }
            MissingSample { x_obs, observed, y }
        })
        .collect();
    MissingData { samples }
}

/// Which second-moment formula the E-step uses.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum SecondMoment {
    /// The classical update `Σ_θ = I_mis + μ μᵀ − μ_mis μ_misᵀ`. Its
    /// missing-missing block is exactly the identity, which understates the
    /// conditional second moment there; the population fixed point at `θ*`
    /// is unaffected, so this is the default everywhere.
    #[default]
    Classic,
    /// Uses the true conditional second moment: the missing-missing block
    /// becomes `I − m mᵀ/(σ² + ‖m‖²) + μ_mis μ_misᵀ`, i.e. the posterior
    /// covariance plus the outer product of the posterior mean.
    Exact,
}

/// Conditional moments of the full covariate vector given one observation.
#[derive(Clone, Debug)]
pub struct ImputedMoments {
    /// `E[x | x_obs, y]`.
    pub mu: ParamVec,
    /// The imputed second-moment matrix `Σ_θ` (style-dependent, see
    /// [`SecondMoment`]).
    pub second_moment: SymMat,
}

/// Per-sample quantities shared by every E-step formula.
struct Parts {
    /// Posterior mean of the full covariate vector.
    mu: ParamVec,
    /// `mu` restricted to the missing coordinates (zero elsewhere).
    mu_mis: ParamVec,
    /// `θ` restricted to the missing coordinates (zero elsewhere).
    m: ParamVec,
    /// `σ² + ‖m‖²`.
    denom: f64,
}

fn impute_parts(theta: &ParamVec, sample: &MissingSample, sigma: f64) -> Parts {
    let d = theta.dim();
    assert_eq!(sample.x_obs.dim(), d, "dimension mismatch in imputation");
    let mut m = ParamVec::zeros(d);
    for j in 0..d {
        if !sample.observed[j] {
            m[j] = theta[j];
        }
    }
    let denom = sigma * sigma + m.norm_sq();
    // ⟨θ, x_obs⟩ only touches observed coordinates because x_obs is zero at
    // masked ones.
    let c = (sample.y - theta.dot(&sample.x_obs)) / denom;
    let mu = sample.x_obs.add_scaled(c, &m);
    let mu_mis = m.scale(c);
    Parts {
        mu,
        mu_mis,
        m,
        denom,
    }
}

/// Imputes the conditional moments with the classical second-moment formula.
pub fn impute_moments(theta: &ParamVec, sample: &MissingSample, sigma: f64) -> ImputedMoments {
    impute_moments_with(theta, sample, sigma, SecondMoment::Classic)
}

/// Imputes the conditional moments with an explicit second-moment style.
pub fn impute_moments_with(
    theta: &ParamVec,
    sample: &MissingSample,
    sigma: f64,
    style: SecondMoment,
) -> ImputedMoments {
    let d = theta.dim();
    let parts = impute_parts(theta, sample, sigma);
    let mut s = SymMat::zeros(d);
    s.add_diag(
        (0..d).filter(|&j| !sample.observed[j]),
        1.0,
    );
    s.add_scaled_outer(1.0, &parts.mu);
    match style {
        SecondMoment::Classic => s.add_scaled_outer(-1.0, &parts.mu_mis),
        SecondMoment::Exact => s.add_scaled_outer(-1.0 / parts.denom, &parts.m),
    }
    ImputedMoments {
        mu: parts.mu,
        second_moment: s,
    }
}

fn check_nonempty(data: &MissingData) -> Result<()> {
    if data.samples.is_empty() {
        Err(Error::EmptyData)
    } else {
        Ok(())
    }
}

/// `Σ_θ θ'` without materializing the matrix: the second moment is a
/// diagonal plus a few rank-one terms, so the product is a handful of dots.
fn second_moment_times(
    parts: &Parts,
    sample: &MissingSample,
    theta_prime: &ParamVec,
    style: SecondMoment,
) -> ParamVec {
    let d = theta_prime.dim();
    let mut out = ParamVec::zeros(d);
    for j in 0..d {
        if !sample.observed[j] {
            out[j] = theta_prime[j];
        }
    }
    out.axpy(parts.mu.dot(theta_prime), &parts.mu);
    match style {
        SecondMoment::Classic => out.axpy(-parts.mu_mis.dot(theta_prime), &parts.mu_mis),
        SecondMoment::Exact => out.axpy(-parts.m.dot(theta_prime) / parts.denom, &parts.m),
    }
    out
}

/// Sample surrogate objective
/// `Q̂(θ'|θ) = (1/n) Σ [y ⟨μ, θ'⟩ − ½ θ'ᵀ Σ_θ θ']`.
pub fn q_value_with(
    data: &MissingData,
    theta_prime: &ParamVec,
    theta: &ParamVec,
    sigma: f64,
    style: SecondMoment,
) -> Result<f64> {
    check_nonempty(data)?;
    let n = data.samples.len() as f64;
    let mut total = 0.0;
    for s in &data.samples {
        let parts = impute_parts(theta, s, sigma);
        let quad = theta_prime.dot(&second_moment_times(&parts, s, theta_prime, style));
        total += s.y * parts.mu.dot(theta_prime) - 0.5 * quad;
    }
    Ok(total / n)
}

/// Gradient in the first argument: `(1/n) Σ [y μ − Σ_θ θ']`.
pub fn q_grad_with(
    data: &MissingData,
    theta_prime: &ParamVec,
    theta: &ParamVec,
    sigma: f64,
    style: SecondMoment,
) -> Result<ParamVec> {
    check_nonempty(data)?;
    let n = data.samples.len() as f64;
    let mut g = ParamVec::zeros(theta.dim());
    for s in &data.samples {
        let parts = impute_parts(theta, s, sigma);
        g.axpy(s.y, &parts.mu);
        g.axpy(-1.0, &second_moment_times(&parts, s, theta_prime, style));
    }
    Ok(g.scale(1.0 / n))
}

/// M-step: solves `(Σ_i Σ_θ,i) θ = Σ_i y_i μ_i` over the whole data set.
pub fn m_step_with(
    data: &MissingData,
    theta: &ParamVec,
    sigma: f64,
    style: SecondMoment,
) -> Result<ParamVec> {
    check_nonempty(data)?;
    let d = theta.dim();
    let mut normal = SymMat::zeros(d);
    let mut rhs = ParamVec::zeros(d);
    for s in &data.samples {
        let parts = impute_parts(theta, s, sigma);
        normal.add_diag((0..d).filter(|&j| !s.observed[j]), 1.0);
        normal.add_scaled_outer(1.0, &parts.mu);
        match style {
            SecondMoment::Classic => normal.add_scaled_outer(-1.0, &parts.mu_mis),
            SecondMoment::Exact => normal.add_scaled_outer(-1.0 / parts.denom, &parts.m),
        }
        rhs.axpy(s.y, &parts.mu);
    }
    solve_spd(&normal, &rhs)
}

/// Classical-style wrappers (the defaults used by solvers and the harness).
pub fn q_value(data: &MissingData, theta_prime: &ParamVec, theta: &ParamVec, sigma: f64) -> Result<f64> {
    q_value_with(data, theta_prime, theta, sigma, SecondMoment::Classic)
}

pub fn q_grad(
    data: &MissingData,
    theta_prime: &ParamVec,
    theta: &ParamVec,
    sigma: f64,
) -> Result<ParamVec> {
    q_grad_with(data, theta_prime, theta, sigma, SecondMoment::Classic)
}

pub fn m_step(data: &MissingData, theta: &ParamVec, sigma: f64) -> Result<ParamVec> {
    m_step_with(data, theta, sigma, SecondMoment::Classic)
}

/// The population contraction bound as a function of the missingness
/// probability, for scale parameters `ζ₁ ≥ ‖θ*‖/σ` and `ζ₂ ≥ r/σ`.
#[derive(Clone, Copy, Debug)]
pub struct ProbBound {
    /// `b = (ζ₁ + ζ₂)²`.
    pub b: f64,
    /// Largest missingness probability with a nontrivial guarantee:
    /// `ω_max = 1 / (1 + 2b(1 + b))`.
    pub omega_max: f64,
    /// Contraction factor `κ = (b + ω(1 + 2b(1 + b))) / (1 + b)`; values at
    /// or above 1 mean the bound is vacuous for this `ω`.
    pub kappa: f64,
}

/// Evaluates the contraction bound; `κ < 1` exactly when `ω < ω_max`.
pub fn prob_bound(zeta1: f64, zeta2: f64, omega: f64) -> ProbBound {
    assert!(zeta1 >= 0.0 && zeta2 >= 0.0, "scale parameters must be nonnegative");
    assert!((0.0..=1.0).contains(&omega), "omega must lie in [0, 1]");
    let b = (zeta1 + zeta2) * (zeta1 + zeta2);
    let growth = 1.0 + 2.0 * b * (1.0 + b);
    ProbBound {
        b,
        omega_max: 1.0 / growth,
        kappa: (b + omega * growth) / (1.0 + b),
    }
}

/// Bundles an oracle (plus a second-moment style) into the [`ModelOps`]
/// interface.
#[derive(Clone, Debug)]
pub struct MissingOps {
    pub oracle: MissingOracle,
    pub style: SecondMoment,
}

impl MissingOps {
    pub fn new(oracle: MissingOracle) -> Self {
        MissingOps {
            oracle,
            style: SecondMoment::Classic,
        }
    }

    pub fn with_style(oracle: MissingOracle, style: SecondMoment) -> Self {
        MissingOps { oracle, style }
    }
}

impl ModelOps for MissingOps {
    type Data = MissingData;

    fn dim(&self) -> usize {
        self.oracle.theta_star.dim()
    }

    fn theta_star(&self) -> &ParamVec {
        &self.oracle.theta_star
    }

    fn sample(&self, n: usize, rng: &mut RngStream) -> MissingData {
        sample(&self.oracle, n, rng)
    }

    fn len(&self, data: &MissingData) -> usize {
        data.samples.len()
    }

    fn batch(&self, data: &MissingData, start: usize, len: usize) -> MissingData {
        MissingData {
            samples: data.samples[start..start + len].to_vec(),
        }
    }

    fn m_step(&self, data: &MissingData, theta: &ParamVec) -> Result<ParamVec> {
        m_step_with(data, theta, self.oracle.sigma, self.style)
    }

    fn q_value(&self, data: &MissingData, theta_prime: &ParamVec, theta: &ParamVec) -> Result<f64> {
        q_value_with(data, theta_prime, theta, self.oracle.sigma, self.style)
    }

    fn q_grad(&self, data: &MissingData, theta_prime: &ParamVec, theta: &ParamVec) -> Result<ParamVec> {
        q_grad_with(data, theta_prime, theta, self.oracle.sigma, self.style)
    }

    fn q_curvature(&self, data: &MissingData, theta: &ParamVec) -> Result<SymMat> {
        check_nonempty(data)?;
        let d = self.dim();
        let n = data.samples.len() as f64;
        let mut h = SymMat::zeros(d);
        for s in &data.samples {
            let parts = impute_parts(theta, s, self.oracle.sigma);
            h.add_diag((0..d).filter(|&j| !s.observed[j]), 1.0);
            h.add_scaled_outer(1.0, &parts.mu);
            match self.style {
                SecondMoment::Classic => h.add_scaled_outer(-1.0, &parts.mu_mis),
                SecondMoment::Exact => h.add_scaled_outer(-1.0 / parts.denom, &parts.m),
            }
        }
        h.scale_assign(1.0 / n);
        Ok(h)
    }
}
