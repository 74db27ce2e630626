//! Iterative solvers: full-data EM, sample-splitting EM, their gradient
//! variants, and projected single-sample stochastic gradient ascent.
//!
//! Every solver is deterministic given its inputs and records the full
//! iterate trajectory in a [`Trace`], starting with the initial point.

use crate::config::{Algo, SolverConfig, StepSchedule};
use crate::error::{Error, Result};
use crate::linalg::SymMat;
use crate::rng::RngStream;
use crate::trace::Trace;
use crate::vector::{project_ball, BallSpec, ParamVec};

/// The operations a latent-variable model must expose to the solvers and
/// diagnostic estimators.
///
/// Invariants every implementation upholds:
/// - `m_step(data, θ)` returns the exact maximizer of `θ' ↦ q_value(data, θ', θ)`;
/// - `q_grad(data, θ', θ)` is the exact gradient of `q_value` in its first
///   argument;
/// - `q_curvature(data, θ)` is the (constant, `θ'`-independent) negative
///   Hessian of `θ' ↦ q_value(data, θ', θ)`.
pub trait ModelOps {
    /// The model's dataset type.
    type Data;

    /// Parameter dimension `d`.
    fn dim(&self) -> usize;

    /// Ground-truth parameter used for sampling and error reporting.
    fn theta_star(&self) -> &ParamVec;

    /// Draws `n` fresh samples from the generative model.
    fn sample(&self, n: usize, rng: &mut RngStream) -> Self::Data;

    /// Number of samples in `data`.
    fn len(&self, data: &Self::Data) -> usize;

    /// Copies the contiguous sample range `[start, start + len)`.
    fn batch(&self, data: &Self::Data, start: usize, len: usize) -> Self::Data;

    /// Exact maximizer of the surrogate objective given the conditioning
    /// point `theta`.
    fn m_step(&self, data: &Self::Data, theta: &ParamVec) -> Result<ParamVec>;

    /// Surrogate objective `Q̂(θ'|θ)` averaged over `data`.
    fn q_value(&self, data: &Self::Data, theta_prime: &ParamVec, theta: &ParamVec) -> Result<f64>;

    /// Gradient of `Q̂` in its first argument.
    fn q_grad(&self, data: &Self::Data, theta_prime: &ParamVec, theta: &ParamVec)
        -> Result<ParamVec>;

    /// Negative Hessian of `Q̂(·|θ)` (independent of `θ'` for all models
    /// here).
    fn q_curvature(&self, data: &Self::Data, theta: &ParamVec) -> Result<SymMat>;
}

/// Output of any solver run: the iterate trajectory, its endpoint, and an
/// echo of the configuration that produced it.
#[derive(Clone, Debug)]
pub struct RunResult {
    pub trace: Trace,
    pub final_theta: ParamVec,
    pub config: SolverConfig,
}

fn finish(trace: Trace, config: SolverConfig) -> RunResult {
    let final_theta = trace.last_theta().expect("trace holds the initial point").clone();
    RunResult {
        trace,
        final_theta,
        config,
    }
}

/// Full-data EM: `θ^{t+1} = M_n(θ^t)` for `iters` iterations.
pub fn run_em<M: ModelOps>(
    ops: &M,
    data: &M::Data,
    theta0: &ParamVec,
    iters: usize,
) -> Result<RunResult> {
    let mut trace = Trace::new();
    let mut theta = theta0.clone();
    trace.push(0, theta.clone());
    for t in 0..iters {
        theta = ops.m_step(data, &theta)?;
        trace.push(t + 1, theta.clone());
    }
    Ok(finish(trace, SolverConfig::em(iters)))
}

/// Batch boundaries for splitting `n` samples into `iters` equal contiguous
/// batches; the remainder `n − iters·⌊n/iters⌋` is discarded.
fn split_batch_size(n: usize, iters: usize) -> Result<usize> {
    let size = n / iters.max(1);
    if iters == 0 || size == 0 {
        return Err(Error::BatchTooSmall { n, batches: iters });
    }
    Ok(size)
}

/// Sample-splitting EM: iteration `t` applies the M-step to batch `t` only,
/// so each sample is consumed at most once.
pub fn run_em_split<M: ModelOps>(
    ops: &M,
    data: &M::Data,
    theta0: &ParamVec,
    iters: usize,
) -> Result<RunResult> {
    let size = split_batch_size(ops.len(data), iters)?;
    let mut trace = Trace::new();
    let mut theta = theta0.clone();
    trace.push(0, theta.clone());
    for t in 0..iters {
        let batch = ops.batch(data, t * size, size);
        theta = ops.m_step(&batch, &theta)?;
        trace.push(t + 1, theta.clone());
    }
    let config = SolverConfig {
        algo: Algo::EmSplit,
        iters,
        step: None,
        projection: None,
        split_batches: Some(iters),
    };
    Ok(finish(trace, config))
}

/// Gradient EM: `θ^{t+1} = θ^t + α_t ∇Q̂_n(θ^t|θ^t)` on the full data.
pub fn run_grad_em<M: ModelOps>(
    ops: &M,
    data: &M::Data,
    theta0: &ParamVec,
    schedule: &StepSchedule,
    iters: usize,
) -> Result<RunResult> {
    schedule.validate()?;
    let mut trace = Trace::new();
    let mut theta = theta0.clone();
    trace.push(0, theta.clone());
    for t in 0..iters {
        let g = ops.q_grad(data, &theta, &theta)?;
        theta = theta.add_scaled(schedule.step(t), &g);
        trace.push(t + 1, theta.clone());
    }
    let config = SolverConfig {
        algo: Algo::Grad,
        iters,
        step: Some(schedule.clone()),
        projection: None,
        split_batches: None,
    };
    Ok(finish(trace, config))
}

/// Sample-splitting gradient EM: one gradient step per disjoint batch.
pub fn run_grad_em_split<M: ModelOps>(
    ops: &M,
    data: &M::Data,
    theta0: &ParamVec,
    schedule: &StepSchedule,
    iters: usize,
) -> Result<RunResult> {
    schedule.validate()?;
    let size = split_batch_size(ops.len(data), iters)?;
    let mut trace = Trace::new();
    let mut theta = theta0.clone();
    trace.push(0, theta.clone());
    for t in 0..iters {
        let batch = ops.batch(data, t * size, size);
        let g = ops.q_grad(&batch, &theta, &theta)?;
        theta = theta.add_scaled(schedule.step(t), &g);
        trace.push(t + 1, theta.clone());
    }
    let config = SolverConfig {
        algo: Algo::GradSplit,
        iters,
        step: Some(schedule.clone()),
        projection: None,
        split_batches: Some(iters),
    };
    Ok(finish(trace, config))
}

/// Projected stochastic gradient ascent on the surrogate: each iteration
/// draws one fresh sample, takes a gradient step, and projects back onto the
/// ball of radius `radius / 2` centered at the initial point. Consumes
/// exactly `iters` samples from `rng`.
pub fn run_sgd_em<M: ModelOps>(
    ops: &M,
    theta0: &ParamVec,
    radius: f64,
    schedule: &StepSchedule,
    iters: usize,
    rng: &mut RngStream,
) -> Result<RunResult> {
    assert!(radius.is_finite() && radius > 0.0, "radius must be positive");
    schedule.validate()?;
    let ball = BallSpec::new(theta0.clone(), radius / 2.0);
    let mut trace = Trace::new();
    let mut theta = theta0.clone();
    trace.push(0, theta.clone());
    for t in 0..iters {
        let one = ops.sample(1, rng);
        let g = ops.q_grad(&one, &theta, &theta)?;
        let stepped = theta.add_scaled(schedule.step(t), &g);
        theta = project_ball(&stepped, &ball);
        trace.push(t + 1, theta.clone());
    }
    let config = SolverConfig {
        algo: Algo::Sgd,
        iters,
        step: Some(schedule.clone()),
        projection: Some(ball),
        split_batches: None,
    };
    Ok(finish(trace, config))
}
