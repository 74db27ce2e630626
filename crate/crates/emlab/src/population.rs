//! Monte-Carlo realizations of the population update maps and estimators of
//! the contraction/stability quantities that govern their convergence: the
//! contraction factor κ, the two gradient-stability parameters, strong
//! concavity λ and smoothness μ, the finite-sample deviation of the update
//! map, and the uniform single-sample gradient variance.
//!
//! Population expectations have no closed form for these models, so every
//! "population" quantity is realized as a large-sample empirical operator on
//! a freshly drawn, seeded dataset. Estimators that are compared against
//! each other (contraction vs. gradient-stability ratios, say) clone the
//! same probe specification, which makes them use identical probe points and
//! an identical shared dataset — common random numbers keep the comparisons
//! tight. Standard errors come from re-running the statistic on ten disjoint
//! sub-batches of the shared dataset.

use crate::error::Result;
use crate::rng::RngStream;
use crate::solver::ModelOps;
use crate::vector::ParamVec;

/// Which update map a population estimate realizes.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum PopKind {
    /// The maximization update `θ ↦ M(θ)`.
    Em,
    /// One ascent step `θ ↦ θ + α ∇Q(θ|θ)`.
    GradEm(f64),
    /// One ascent step on the oracle objective conditioned at the truth:
    /// `θ ↦ θ + α ∇Q(θ|θ*)`.
    OracleGradient(f64),
}

/// How probe points are placed around the truth.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum ProbeStyle {
    /// On the sphere of exactly the probe radius (worst-case style; the
    /// suprema being estimated are attained near the boundary in practice).
    #[default]
    FixedRadiusSphere,
    /// Uniformly inside the ball of the probe radius.
    UniformInBall,
}

/// Where and how densely to probe the neighborhood of the truth.
#[derive(Clone, Debug)]
pub struct ProbeSpec {
    /// Radius of the probed ball around `θ*`.
    pub radius: f64,
    /// Number of probe points.
    pub num_probes: usize,
    /// Samples in the shared Monte-Carlo dataset backing each operator
    /// evaluation; at least 1000.
    pub mc_n: usize,
    /// Stream that determines probes and data; estimators clone it, so one
    /// spec always reproduces one answer.
    pub rng: RngStream,
    pub probe_style: ProbeStyle,
}

impl ProbeSpec {
    pub fn new(radius: f64, num_probes: usize, mc_n: usize, rng: RngStream) -> Self {
        assert!(radius.is_finite() && radius > 0.0, "probe radius must be positive");
        assert!(num_probes >= 1, "need at least one probe");
        assert!(mc_n >= 1000, "Monte-Carlo size must be at least 1000, got {mc_n}");
        ProbeSpec {
            radius,
            num_probes,
            mc_n,
            rng,
            probe_style: ProbeStyle::FixedRadiusSphere,
        }
    }

    pub fn with_style(mut self, style: ProbeStyle) -> Self {
        self.probe_style = style;
        self
    }

    /// Draws the probe points around `center` from a clone of the spec's
    /// stream and returns the advanced stream, from which callers draw the
    /// shared dataset. Every estimator calls this first, so all estimators
    /// built from one spec see the same probes *and* the same data.
    fn draw_probes(&self, center: &ParamVec) -> (Vec<ParamVec>, RngStream) {
        let mut rng = self.rng.clone();
        let d = center.dim();
        let probes = (0..self.num_probes)
            .map(|_| {
                let u = rng.unit_vec(d);
                let scale = match self.probe_style {
                    ProbeStyle::FixedRadiusSphere => self.radius,
                    ProbeStyle::UniformInBall => {
                        self.radius * rng.uniform().powf(1.0 / d as f64)
                    }
                };
                center.add_scaled(scale, &u)
            })
            .collect();
        (probes, rng)
    }
}

/// Number of disjoint sub-batches behind every standard error.
const STDERR_BATCHES: usize = 10;

fn scalar_stderr(xs: &[f64]) -> f64 {
    let k = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / k;
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (k - 1.0);
    (var / k).sqrt()
}

/// Per-coordinate standard errors of the mean, aggregated in Euclidean norm.
fn vector_stderr(outs: &[ParamVec]) -> f64 {
    let k = outs.len() as f64;
    let d = outs[0].dim();
    let mut total = 0.0;
    for j in 0..d {
        let mean = outs.iter().map(|o| o[j]).sum::<f64>() / k;
        let var = outs.iter().map(|o| (o[j] - mean) * (o[j] - mean)).sum::<f64>() / (k - 1.0);
        total += var / k;
    }
    total.sqrt()
}

fn apply_kind<M: ModelOps>(
    ops: &M,
    data: &M::Data,
    theta: &ParamVec,
    kind: PopKind,
) -> Result<ParamVec> {
    match kind {
        PopKind::Em => ops.m_step(data, theta),
        PopKind::GradEm(alpha) => Ok(theta.add_scaled(alpha, &ops.q_grad(data, theta, theta)?)),
        PopKind::OracleGradient(alpha) => {
            Ok(theta.add_scaled(alpha, &ops.q_grad(data, theta, ops.theta_star())?))
        }
    }
}

/// A population update-map value with its Monte-Carlo uncertainty.
#[derive(Clone, Debug)]
pub struct PopEstimate {
    pub estimate: ParamVec,
    /// Euclidean aggregate of the per-coordinate standard errors.
    pub stderr: f64,
}

/// Evaluates the chosen population map at `theta` on `mc_n` fresh samples.
pub fn pop_operator<M: ModelOps>(
    ops: &M,
    theta: &ParamVec,
    kind: PopKind,
    mc_n: usize,
    rng: &mut RngStream,
) -> Result<PopEstimate> {
    assert!(mc_n >= 1000, "Monte-Carlo size must be at least 1000, got {mc_n}");
    let data = ops.sample(mc_n, rng);
    let estimate = apply_kind(ops, &data, theta, kind)?;
    let size = mc_n / STDERR_BATCHES;
    let outs = (0..STDERR_BATCHES)
        .map(|b| apply_kind(ops, &ops.batch(&data, b * size, size), theta, kind))
        .collect::<Result<Vec<_>>>()?;
    Ok(PopEstimate {
        estimate,
        stderr: vector_stderr(&outs),
    })
}

/// Worst-case contraction of a population map toward the truth over the
/// probed ball.
#[derive(Clone, Debug)]
pub struct ContractionEstimate {
    /// Largest observed ratio `‖Op(θ_p) − θ*‖ / ‖θ_p − θ*‖`.
    pub kappa_hat: f64,
    /// Batched standard error of the ratio at the maximizing probe.
    pub stderr: f64,
    pub per_probe: Vec<f64>,
}

fn ratio_toward_star<M: ModelOps>(
    ops: &M,
    data: &M::Data,
    probe: &ParamVec,
    kind: PopKind,
) -> Result<f64> {
    let star = ops.theta_star();
    let denom = probe.dist(star);
    if denom <= f64::MIN_POSITIVE {
        return Ok(0.0);
    }
    Ok(apply_kind(ops, data, probe, kind)?.dist(star) / denom)
}

/// Estimates the contraction factor of the chosen map over the probed ball.
pub fn estimate_contraction<M: ModelOps>(
    ops: &M,
    probe: &ProbeSpec,
    kind: PopKind,
) -> Result<ContractionEstimate> {
    let (probes, mut rng) = probe.draw_probes(ops.theta_star());
    let data = ops.sample(probe.mc_n, &mut rng);
    let per_probe = probes
        .iter()
        .map(|p| ratio_toward_star(ops, &data, p, kind))
        .collect::<Result<Vec<_>>>()?;
    let (argmax, kappa_hat) = per_probe
        .iter()
        .enumerate()
        .map(|(i, &r)| (i, r))
        .max_by(|a, b| a.1.total_cmp(&b.1))
        .expect("at least one probe");
    let size = probe.mc_n / STDERR_BATCHES;
    let ratios = (0..STDERR_BATCHES)
        .map(|b| ratio_toward_star(ops, &ops.batch(&data, b * size, size), &probes[argmax], kind))
        .collect::<Result<Vec<_>>>()?;
    Ok(ContractionEstimate {
        kappa_hat,
        stderr: scalar_stderr(&ratios),
        per_probe,
    })
}

/// Worst-case gradient-stability ratio over the probed ball.
#[derive(Clone, Debug)]
pub struct GammaEstimate {
    pub gamma_hat: f64,
    pub stderr: f64,
    pub per_probe: Vec<f64>,
}

/// Where the conditioning-mismatch gradient difference is evaluated.
#[derive(Clone, Copy)]
enum GammaStyle {
    /// First-order stability: at the mapped point `M(θ_p)`.
    AtMappedPoint,
    /// Gradient stability: at the probe itself.
    AtProbe,
}

fn gamma_ratio<M: ModelOps>(
    ops: &M,
    data: &M::Data,
    probe: &ParamVec,
    style: GammaStyle,
) -> Result<f64> {
    let star = ops.theta_star();
    let denom = probe.dist(star);
    if denom <= f64::MIN_POSITIVE {
        // The stability conditions hold trivially at the fixed point.
        return Ok(0.0);
    }
    let eval_at = match style {
        GammaStyle::AtMappedPoint => ops.m_step(data, probe)?,
        GammaStyle::AtProbe => probe.clone(),
    };
    let diff = ops
        .q_grad(data, &eval_at, star)?
        .sub(&ops.q_grad(data, &eval_at, probe)?);
    Ok(diff.norm() / denom)
}

fn estimate_gamma<M: ModelOps>(
    ops: &M,
    probe: &ProbeSpec,
    style: GammaStyle,
) -> Result<GammaEstimate> {
    let (probes, mut rng) = probe.draw_probes(ops.theta_star());
    let data = ops.sample(probe.mc_n, &mut rng);
    let per_probe = probes
        .iter()
        .map(|p| gamma_ratio(ops, &data, p, style))
        .collect::<Result<Vec<_>>>()?;
    let (argmax, gamma_hat) = per_probe
        .iter()
        .enumerate()
        .map(|(i, &r)| (i, r))
        .max_by(|a, b| a.1.total_cmp(&b.1))
        .expect("at least one probe");
    let size = probe.mc_n / STDERR_BATCHES;
    let ratios = (0..STDERR_BATCHES)
        .map(|b| gamma_ratio(ops, &ops.batch(&data, b * size, size), &probes[argmax], style))
        .collect::<Result<Vec<_>>>()?;
    Ok(GammaEstimate {
        gamma_hat,
        stderr: scalar_stderr(&ratios),
        per_probe,
    })
}

/// First-order-stability parameter: how much the gradient at the mapped
/// point `M(θ)` moves when its conditioning switches from `θ*` to `θ`,
/// relative to `‖θ − θ*‖`.
pub fn estimate_fos_gamma<M: ModelOps>(ops: &M, probe: &ProbeSpec) -> Result<GammaEstimate> {
    estimate_gamma(ops, probe, GammaStyle::AtMappedPoint)
}

/// Gradient-stability parameter: the same conditioning sensitivity evaluated
/// at the probe point itself.
pub fn estimate_gs_gamma<M: ModelOps>(ops: &M, probe: &ProbeSpec) -> Result<GammaEstimate> {
    estimate_gamma(ops, probe, GammaStyle::AtProbe)
}

/// Extreme curvature of the oracle surrogate `Q(·|θ*)`.
#[derive(Clone, Debug)]
pub struct ConcavityEstimate {
    /// Strong-concavity constant (smallest curvature eigenvalue).
    pub lambda_hat: f64,
    /// Smoothness constant (largest curvature eigenvalue).
    pub mu_hat: f64,
    pub lambda_stderr: f64,
    pub mu_stderr: f64,
}

/// Estimates the extreme eigenvalues of the curvature of `Q(·|θ*)`.
///
/// Naively taking the extreme eigenvalues of a Monte-Carlo average curvature
/// matrix is biased outward: the eigenvalue map feeds on sampling noise, and
/// with a `d × d` matrix at realistic sample sizes the bias exceeds the
/// standard error at every Monte-Carlo budget. Instead the sample is split:
/// the first half picks the extremal eigen-directions, the held-out second
/// half evaluates the quadratic form along them. The held-out quadratic form
/// is an unbiased linear statistic, so its batched standard error is honest.
pub fn estimate_concavity<M: ModelOps>(ops: &M, probe: &ProbeSpec) -> Result<ConcavityEstimate> {
    // Align the stream with the other estimators (they discard the probe
    // draws too), so one spec means one shared dataset everywhere.
    let (_probes, mut rng) = probe.draw_probes(ops.theta_star());
    let data = ops.sample(probe.mc_n, &mut rng);
    let star = ops.theta_star();
    let half = probe.mc_n / 2;
    let rest = probe.mc_n - half;

    let direction_curv = ops.q_curvature(&ops.batch(&data, 0, half), star)?;
    let (_vals, vecs) = direction_curv.eigen();
    let v_lo = &vecs[0];
    let v_hi = &vecs[ops.dim() - 1];

    let held_out = ops.q_curvature(&ops.batch(&data, half, rest), star)?;
    let q_lo = held_out.quad_form(v_lo);
    let q_hi = held_out.quad_form(v_hi);

    let size = rest / STDERR_BATCHES;
    let mut lo_batches = Vec::with_capacity(STDERR_BATCHES);
    let mut hi_batches = Vec::with_capacity(STDERR_BATCHES);
    for b in 0..STDERR_BATCHES {
        let curv = ops.q_curvature(&ops.batch(&data, half + b * size, size), star)?;
        lo_batches.push(curv.quad_form(v_lo));
        hi_batches.push(curv.quad_form(v_hi));
    }
    let (lambda_hat, mu_hat, lambda_stderr, mu_stderr) = if q_lo <= q_hi {
        (q_lo, q_hi, scalar_stderr(&lo_batches), scalar_stderr(&hi_batches))
    } else {
        (q_hi, q_lo, scalar_stderr(&hi_batches), scalar_stderr(&lo_batches))
    };
    Ok(ConcavityEstimate {
        lambda_hat,
        mu_hat,
        lambda_stderr,
        mu_stderr,
    })
}

/// Empirical deviation of the `n`-sample update map from its large-sample
/// reference, over probes and replicates.
#[derive(Clone, Debug)]
pub struct DeviationEstimate {
    pub n: usize,
    /// Largest observed `‖M_n(θ_p) − M_ref(θ_p)‖`.
    pub max_dev: f64,
    /// 95th percentile of the observed deviations.
    pub quantile95: f64,
    pub num_probes: usize,
    pub reps: usize,
}

/// Measures how far the `n`-sample maximization update strays from the
/// large-sample reference (built on `probe.mc_n` samples, which should be
/// much larger than `n`). Replicate datasets come from substreams keyed only
/// by the replicate index, so calls that differ in `n` alone see nested
/// sample prefixes — deviations are paired across `n` for rate comparisons.
pub fn estimate_deviation<M: ModelOps>(
    ops: &M,
    n: usize,
    probe: &ProbeSpec,
    reps: usize,
) -> Result<DeviationEstimate> {
    assert!(n >= 1, "need at least one sample per replicate");
    assert!(reps >= 1, "need at least one replicate");
    let (probes, mut rng) = probe.draw_probes(ops.theta_star());
    let ref_data = ops.sample(probe.mc_n, &mut rng);
    let references = probes
        .iter()
        .map(|p| ops.m_step(&ref_data, p))
        .collect::<Result<Vec<_>>>()?;

    let mut devs = Vec::with_capacity(reps * probes.len());
    for r in 0..reps {
        let mut rep_rng = rng.child("replicate", r as u64);
        let rep_data = ops.sample(n, &mut rep_rng);
        for (p, reference) in probes.iter().zip(&references) {
            devs.push(ops.m_step(&rep_data, p)?.dist(reference));
        }
    }
    devs.sort_by(f64::total_cmp);
    let k = devs.len();
    let q_idx = ((0.95 * k as f64).ceil() as usize).clamp(1, k) - 1;
    Ok(DeviationEstimate {
        n,
        max_dev: devs[k - 1],
        quantile95: devs[q_idx],
        num_probes: probes.len(),
        reps,
    })
}

/// Worst-case second moment of the single-sample ascent direction.
#[derive(Clone, Debug)]
pub struct VarianceEstimate {
    /// Max over probes of the mean squared single-sample gradient norm.
    pub sigma_g_sq: f64,
    pub stderr: f64,
    pub per_probe: Vec<f64>,
}

/// Estimates the uniform variance proxy driving stochastic-update rates:
/// `sup_θ E‖∇Q̂₁(θ|θ)‖²` over the probed ball, with `∇Q̂₁` the gradient on a
/// single fresh sample.
pub fn estimate_sgd_variance<M: ModelOps>(ops: &M, probe: &ProbeSpec) -> Result<VarianceEstimate> {
    let (probes, mut rng) = probe.draw_probes(ops.theta_star());
    let data = ops.sample(probe.mc_n, &mut rng);
    let mc_n = probe.mc_n;
    let mut per_probe = Vec::with_capacity(probes.len());
    for p in &probes {
        let mut total = 0.0;
        for i in 0..mc_n {
            total += ops.q_grad(&ops.batch(&data, i, 1), p, p)?.norm_sq();
        }
        per_probe.push(total / mc_n as f64);
    }
    let (argmax, sigma_g_sq) = per_probe
        .iter()
        .enumerate()
        .map(|(i, &r)| (i, r))
        .max_by(|a, b| a.1.total_cmp(&b.1))
        .expect("at least one probe");
    let size = mc_n / STDERR_BATCHES;
    let mut group_means = Vec::with_capacity(STDERR_BATCHES);
    for b in 0..STDERR_BATCHES {
        let mut total = 0.0;
        for i in b * size..(b + 1) * size {
            total += ops
                .q_grad(&ops.batch(&data, i, 1), &probes[argmax], &probes[argmax])?
                .norm_sq();
        }
        group_means.push(total / size as f64);
    }
    Ok(VarianceEstimate {
        sigma_g_sq,
        stderr: scalar_stderr(&group_means),
        per_probe,
    })
}

/// All contraction/stability diagnostics for one model and probe ball,
/// estimated on matched probes and a shared dataset.
#[derive(Clone, Debug)]
pub struct ConditionEstimate {
    pub lambda: f64,
    pub lambda_stderr: f64,
    pub mu: f64,
    pub mu_stderr: f64,
    pub gamma_fos: f64,
    pub gamma_fos_stderr: f64,
    pub gamma_gs: f64,
    pub gamma_gs_stderr: f64,
    /// Contraction of the maximization update, max over probes.
    pub kappa: f64,
    pub kappa_stderr: f64,
    /// Step-schedule constant `2λμ/(λ+μ) − γ_GS` implied by the estimates.
    pub xi: f64,
    pub sigma_g_sq: f64,
    pub sigma_g_stderr: f64,
}

/// Runs every estimator on one probe specification. Because each estimator
/// clones the spec's stream, all quantities share probes and data, so
/// cross-quantity inequalities can be checked at Monte-Carlo resolution.
pub fn estimate_conditions<M: ModelOps>(ops: &M, probe: &ProbeSpec) -> Result<ConditionEstimate> {
    let concavity = estimate_concavity(ops, probe)?;
    let fos = estimate_fos_gamma(ops, probe)?;
    let gs = estimate_gs_gamma(ops, probe)?;
    let contraction = estimate_contraction(ops, probe, PopKind::Em)?;
    let variance = estimate_sgd_variance(ops, probe)?;
    let (lambda, mu) = (concavity.lambda_hat, concavity.mu_hat);
    Ok(ConditionEstimate {
        lambda,
        lambda_stderr: concavity.lambda_stderr,
        mu,
        mu_stderr: concavity.mu_stderr,
        gamma_fos: fos.gamma_hat,
        gamma_fos_stderr: fos.stderr,
        gamma_gs: gs.gamma_hat,
        gamma_gs_stderr: gs.stderr,
        kappa: contraction.kappa_hat,
        kappa_stderr: contraction.stderr,
        xi: 2.0 * lambda * mu / (lambda + mu) - gs.gamma_hat,
        sigma_g_sq: variance.sigma_g_sq,
        sigma_g_stderr: variance.stderr,
    })
}
