//! Symmetric two-component Gaussian mixture in `d` dimensions.
//!
//! Samples follow `y = s·θ* + σ·w` with a fair random sign `s` and standard
//! normal noise `w`, so the mixture components sit at `±θ*` with common
//! isotropic covariance `σ² I`. The E-step weight is the posterior probability
//! of the `+` component; the M-step is a weighted average in closed form.

use crate::error::{Error, Result};
use crate::linalg::SymMat;
use crate::rng::RngStream;
use crate::solver::ModelOps;
use crate::vector::ParamVec;

/// Ground truth for sampling: component center `θ*` and noise level `σ`.
#[derive(Clone, Debug)]
pub struct GmmOracle {
    pub theta_star: ParamVec,
    pub sigma: f64,
}

impl GmmOracle {
    pub fn new(theta_star: ParamVec, sigma: f64) -> Self {
        assert!(sigma.is_finite() && sigma > 0.0, "sigma must be positive");
        GmmOracle { theta_star, sigma }
    }

    /// Signal-to-noise ratio `‖θ*‖/σ`.
    pub fn snr(&self) -> f64 {
        self.theta_star.norm() / self.sigma
    }
}

/// Observed draws from the mixture.
#[derive(Clone, Debug)]
pub struct GmmData {
    pub samples: Vec<ParamVec>,
}

/// Draws `n` samples `y = s·θ* + σ·w`.
pub fn sample(oracle: &GmmOracle, n: usize, rng: &mut RngStream) -> GmmData {
    let d = oracle.theta_star.dim();
    let samples = (0..n)
        .map(|_| {
            let s = rng.sign();
            let w = rng.normal_vec(d);
            oracle.theta_star.scale(s).add_scaled(oracle.sigma, &w)
        })
        .collect();
    GmmData { samples }
}

/// Posterior weight of the `+θ` component:
/// `w_θ(y) = 1 / (1 + exp(−2⟨θ, y⟩/σ²))`.
///
/// Computed as `(1 + tanh(⟨θ, y⟩/σ²)) / 2`, which is the same function but
/// saturates cleanly and makes `w_{−θ}(y) = 1 − w_θ(y)` hold to the last bit.
pub fn weight(theta: &ParamVec, y: &ParamVec, sigma: f64) -> f64 {
    0.5 + 0.5 * signed_weight(theta, y, sigma)
}

/// `2 w_θ(y) − 1 = tanh(⟨θ, y⟩/σ²)`, the signed weight that enters the
/// M-step and gradient sums.
fn signed_weight(theta: &ParamVec, y: &ParamVec, sigma: f64) -> f64 {
    (theta.dot(y) / (sigma * sigma)).tanh()
}

/// Sample surrogate objective
/// `Q̂(θ'|θ) = −(1/2n) Σ [w_θ(y)‖y−θ'‖² + (1−w_θ(y))‖y+θ'‖²]`.
pub fn q_value(data: &GmmData, theta_prime: &ParamVec, theta: &ParamVec, sigma: f64) -> Result<f64> {
    if data.samples.is_empty() {
        return Err(Error::EmptyData);
    }
    let n = data.samples.len() as f64;
    let mut total = 0.0;
    for y in &data.samples {
        let w = weight(theta, y, sigma);
        total += w * y.sub(theta_prime).norm_sq() + (1.0 - w) * y.add(theta_prime).norm_sq();
    }
    Ok(-total / (2.0 * n))
}

/// Gradient of the surrogate in its first argument:
/// `∇Q̂(θ'|θ) = (1/n) Σ (2 w_θ(y) − 1) y − θ'`.
pub fn q_grad(
    data: &GmmData,
    theta_prime: &ParamVec,
    theta: &ParamVec,
    sigma: f64,
) -> Result<ParamVec> {
    if data.samples.is_empty() {
        return Err(Error::EmptyData);
    }
    let n = data.samples.len() as f64;
    let mut sum = ParamVec::zeros(theta.dim());
    for y in &data.samples {
        sum.axpy(signed_weight(theta, y, sigma), y);
    }
    Ok(sum.scale(1.0 / n).sub(theta_prime))
}

/// Closed-form M-step `M_n(θ) = (2/n) Σ w_θ(y) y − (1/n) Σ y`, accumulated
/// as `(1/n) Σ (2 w_θ(y) − 1) y` so that negating `θ` negates the result
/// exactly.
pub fn m_step(data: &GmmData, theta: &ParamVec, sigma: f64) -> Result<ParamVec> {
    if data.samples.is_empty() {
        return Err(Error::EmptyData);
    }
    let n = data.samples.len() as f64;
    let mut sum = ParamVec::zeros(theta.dim());
    for y in &data.samples {
        sum.axpy(signed_weight(theta, y, sigma), y);
    }
    Ok(sum.scale(1.0 / n))
}

/// Bundles an oracle into the [`ModelOps`] interface used by solvers and
/// estimators.
#[derive(Clone, Debug)]
pub struct GmmOps {
    pub oracle: GmmOracle,
}

impl GmmOps {
    pub fn new(oracle: GmmOracle) -> Self {
        GmmOps { oracle }
    }
}

impl ModelOps for GmmOps {
    type Data = GmmData;

    fn dim(&self) -> usize {
        self.oracle.theta_star.dim()
    }

    fn theta_star(&self) -> &ParamVec {
        &self.oracle.theta_star
    }

    fn sample(&self, n: usize, rng: &mut RngStream) -> GmmData {
        sample(&self.oracle, n, rng)
    }

    fn len(&self, data: &GmmData) -> usize {
        data.samples.len()
    }

    fn batch(&self, data: &GmmData, start: usize, len: usize) -> GmmData {
        GmmData {
            samples: data.samples[start..start + len].to_vec(),
        }
    }

    fn m_step(&self, data: &GmmData, theta: &ParamVec) -> Result<ParamVec> {
        m_step(data, theta, self.oracle.sigma)
    }

    fn q_value(&self, data: &GmmData, theta_prime: &ParamVec, theta: &ParamVec) -> Result<f64> {
        q_value(data, theta_prime, theta, self.oracle.sigma)
    }

    fn q_grad(&self, data: &GmmData, theta_prime: &ParamVec, theta: &ParamVec) -> Result<ParamVec> {
        q_grad(data, theta_prime, theta, self.oracle.sigma)
    }

    fn q_curvature(&self, data: &GmmData, _theta: &ParamVec) -> Result<SymMat> {
        if data.samples.is_empty() {
            return Err(Error::EmptyData);
        }
        // Q̂(·|θ) is an exact isotropic quadratic: its negative Hessian is the
        // identity regardless of the data or conditioning point.
        Ok(SymMat::identity(self.dim()))
    }
}
