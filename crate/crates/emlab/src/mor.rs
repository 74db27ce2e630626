//! Symmetric mixture of two linear regressions.
//!
//! Covariates are standard normal, responses follow `y = s⟨x, θ*⟩ + σ·v`
//! with a fair random sign `s` per sample: half the population regresses on
//! `θ*`, half on `−θ*`. The E-step weighs each sample's sign; the M-step is
//! a weighted least-squares solve against the unnormalized normal matrix
//! `Σ x xᵀ`.

use crate::error::{Error, Result};
use crate::linalg::{solve_spd, SymMat};
use crate::rng::RngStream;
use crate::solver::ModelOps;
use crate::vector::ParamVec;

/// Ground truth for sampling: regression vector `θ*` and noise level `σ`.
#[derive(Clone, Debug)]
pub struct MorOracle {
    pub theta_star: ParamVec,
    pub sigma: f64,
}

impl MorOracle {
    pub fn new(theta_star: ParamVec, sigma: f64) -> Self {
        assert!(sigma.is_finite() && sigma > 0.0, "sigma must be positive");
        MorOracle { theta_star, sigma }
    }

    pub fn snr(&self) -> f64 {
        self.theta_star.norm() / self.sigma
    }
}

/// One covariate/response pair.
#[derive(Clone, Debug)]
pub struct MorSample {
    pub x: ParamVec,
    pub y: f64,
}

/// Observed draws from the mixture of regressions.
#[derive(Clone, Debug)]
pub struct MorData {
    pub samples: Vec<MorSample>,
}

/// Draws `n` samples `x ~ N(0, I)`, `y = s⟨x, θ*⟩ + σ·v`.
pub fn sample(oracle: &MorOracle, n: usize, rng: &mut RngStream) -> MorData {
    let d = oracle.theta_star.dim();
    let samples = (0..n)
        .map(|_| {
            let x = rng.normal_vec(d);
            let s = rng.sign();
            let v = rng.normal();
            let y = s * x.dot(&oracle.theta_star) + oracle.sigma * v;
            MorSample { x, y }
        })
        .collect();
    MorData { samples }
}

/// Posterior weight of the `+θ` regression:
/// `w_θ(x, y) = 1 / (1 + exp(−2 y ⟨x, θ⟩/σ²))`, computed through `tanh` for
/// bit-exact sign symmetry.
pub fn weight(theta: &ParamVec, x: &ParamVec, y: f64, sigma: f64) -> f64 {
    0.5 + 0.5 * signed_weight(theta, x, y, sigma)
}

/// `2 w_θ(x, y) − 1 = tanh(y ⟨x, θ⟩/σ²)`.
fn signed_weight(theta: &ParamVec, x: &ParamVec, y: f64, sigma: f64) -> f64 {
    (y * x.dot(theta) / (sigma * sigma)).tanh()
}

/// Sample surrogate objective
/// `Q̂(θ'|θ) = −(1/2n) Σ [w(y−⟨x,θ'⟩)² + (1−w)(y+⟨x,θ'⟩)²]`.
pub fn q_value(data: &MorData, theta_prime: &ParamVec, theta: &ParamVec, sigma: f64) -> Result<f64> {
    if data.samples.is_empty() {
        return Err(Error::EmptyData);
    }
    let n = data.samples.len() as f64;
    let mut total = 0.0;
    for s in &data.samples {
        let w = weight(theta, &s.x, s.y, sigma);
        let fit = s.x.dot(theta_prime);
        total += w * (s.y - fit) * (s.y - fit) + (1.0 - w) * (s.y + fit) * (s.y + fit);
    }
    Ok(-total / (2.0 * n))
}

/// Gradient in the first argument:
/// `∇Q̂(θ'|θ) = (1/n) Σ [(2w − 1) y − ⟨x, θ'⟩] x`.
pub fn q_grad(
    data: &MorData,
    theta_prime: &ParamVec,
    theta: &ParamVec,
    sigma: f64,
) -> Result<ParamVec> {
    if data.samples.is_empty() {
        return Err(Error::EmptyData);
    }
    let n = data.samples.len() as f64;
    let mut sum = ParamVec::zeros(theta.dim());
    for s in &data.samples {
        let coeff = signed_weight(theta, &s.x, s.y, sigma) * s.y - s.x.dot(theta_prime);
        sum.axpy(coeff, &s.x);
    }
    Ok(sum.scale(1.0 / n))
}

/// M-step: solves `(Σ x xᵀ) θ = Σ (2w − 1) y x` with both sides left
/// unnormalized. Fewer samples than dimensions leaves the normal matrix
/// rank-deficient and the solve reports it as not positive definite.
pub fn m_step(data: &MorData, theta: &ParamVec, sigma: f64) -> Result<ParamVec> {
    if data.samples.is_empty() {
        return Err(Error::EmptyData);
    }
    let d = theta.dim();
    let mut normal = SymMat::zeros(d);
    let mut rhs = ParamVec::zeros(d);
    for s in &data.samples {
        normal.add_scaled_outer(1.0, &s.x);
        rhs.axpy(signed_weight(theta, &s.x, s.y, sigma) * s.y, &s.x);
    }
    solve_spd(&normal, &rhs)
}

/// Bundles an oracle into the [`ModelOps`] interface.
#[derive(Clone, Debug)]
pub struct MorOps {
    pub oracle: MorOracle,
}

impl MorOps {
    pub fn new(oracle: MorOracle) -> Self {
        MorOps { oracle }
    }
}

impl ModelOps for MorOps {
    type Data = MorData;

    fn dim(&self) -> usize {
        self.oracle.theta_star.dim()
    }

    fn theta_star(&self) -> &ParamVec {
        &self.oracle.theta_star
    }

    fn sample(&self, n: usize, rng: &mut RngStream) -> MorData {
        sample(&self.oracle, n, rng)
    }

    fn len(&self, data: &MorData) -> usize {
        data.samples.len()
    }

    fn batch(&self, data: &MorData, start: usize, len: usize) -> MorData {
        MorData {
            samples: data.samples[start..start + len].to_vec(),
        }
    }

    fn m_step(&self, data: &MorData, theta: &ParamVec) -> Result<ParamVec> {
        m_step(data, theta, self.oracle.sigma)
    }

    fn q_value(&self, data: &MorData, theta_prime: &ParamVec, theta: &ParamVec) -> Result<f64> {
        q_value(data, theta_prime, theta, self.oracle.sigma)
    }

    fn q_grad(&self, data: &MorData, theta_prime: &ParamVec, theta: &ParamVec) -> Result<ParamVec> {
        q_grad(data, theta_prime, theta, self.oracle.sigma)
    }

    fn q_curvature(&self, data: &MorData, _theta: &ParamVec) -> Result<SymMat> {
        if data.samples.is_empty() {
            return Err(Error::EmptyData);
        }
        let n = data.samples.len() as f64;
        let mut h = SymMat::zeros(self.dim());
        for s in &data.samples {
            h.add_scaled_outer(1.0 / n, &s.x);
        }
        Ok(h)
    }
}
