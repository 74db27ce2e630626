//! Central-difference validation of every model's analytic surrogate
//! gradient: on randomized instances, `q_grad` must match finite
//! differences of `q_value` to high relative accuracy.

use emlab::gmm::{GmmOps, GmmOracle};
use emlab::missing::{MissingOps, MissingOracle, SecondMoment};
use emlab::mor::{MorOps, MorOracle};
use emlab::rng::{derive_stream, RngStream};
use emlab::solver::ModelOps;
use emlab::vector::ParamVec;

const INSTANCES: usize = 100;
const REL_TOL: f64 = 1e-6;

fn rand_dim(rng: &mut RngStream) -> usize {
    2 + (rng.uniform() * 5.0) as usize // 2..=6
}

fn rand_point(center: &ParamVec, spread: f64, rng: &mut RngStream) -> ParamVec {
    center.add_scaled(spread, &rng.normal_vec(center.dim()))
}

/// Largest relative gradient error over randomized `(data, θ', θ)` triples.
fn fd_gap<M: ModelOps>(ops: &M, n: usize, rng: &mut RngStream) -> f64 {
    let data = ops.sample(n, rng);
    let theta = rand_point(ops.theta_star(), 0.5, rng);
    let theta_prime = rand_point(&theta, 0.5, rng);
    let grad = ops.q_grad(&data, &theta_prime, &theta).unwrap();

    let d = ops.dim();
    let mut fd = Vec::with_capacity(d);
    for j in 0..d {
        let h = 1e-5 * theta_prime.as_slice()[j].abs().max(1.0);
        let mut plus = theta_prime.clone().into_vec();
        let mut minus = theta_prime.clone().into_vec();
        plus[j] += h;
        minus[j] -= h;
        let q_plus = ops.q_value(&data, &ParamVec::new(plus), &theta).unwrap();
        let q_minus = ops.q_value(&data, &ParamVec::new(minus), &theta).unwrap();
        fd.push((q_plus - q_minus) / (2.0 * h));
    }
    ParamVec::new(fd).sub(&grad).norm() / grad.norm().max(1.0)
}

fn check_instances<F>(label: &str, mut build: F)
where
    F: FnMut(&mut RngStream) -> Box<dyn FnOnce(&mut RngStream) -> f64>,
{
    for i in 0..INSTANCES {
        let mut rng = derive_stream(4242, label, i as u64);
        let run = build(&mut rng);
        let gap = run(&mut rng);
        assert!(
            gap <= REL_TOL,
            "{label} instance {i}: relative gradient gap {gap:.3e} exceeds {REL_TOL:.0e}"
        );
    }
}

#[test]
fn mixture_gradient_matches_finite_differences() {
    check_instances("fd-gmm", |rng| {
        let d = rand_dim(rng);
        let sigma = 0.5 + 1.5 * rng.uniform();
        let theta_star = rng.normal_vec(d).scale(1.5);
        let n = 5 + (rng.uniform() * 35.0) as usize;
        let ops = GmmOps::new(GmmOracle::new(theta_star, sigma));
        Box::new(move |rng| fd_gap(&ops, n, rng))
    });
}

#[test]
fn regression_mixture_gradient_matches_finite_differences() {
    check_instances("fd-mor", |rng| {
        let d = rand_dim(rng);
        let sigma = 0.5 + 1.5 * rng.uniform();
        let theta_star = rng.normal_vec(d).scale(1.5);
        let n = 5 + (rng.uniform() * 35.0) as usize;
        let ops = MorOps::new(MorOracle::new(theta_star, sigma));
        Box::new(move |rng| fd_gap(&ops, n, rng))
    });
}

#[test]
fn missing_covariates_gradient_matches_finite_differences() {
    for style in [SecondMoment::Classic, SecondMoment::Exact] {
        let label = match style {
            SecondMoment::Classic => "fd-missing-classic",
            SecondMoment::Exact => "fd-missing-exact",
        };
        check_instances(label, move |rng| {
            let d = rand_dim(rng);
            let sigma = 0.5 + 1.5 * rng.uniform();
            let omega = 0.6 * rng.uniform();
            let theta_star = rng.normal_vec(d).scale(1.5);
            let n = 5 + (rng.uniform() * 35.0) as usize;
            let ops = MissingOps::with_style(MissingOracle::new(theta_star, sigma, omega), style);
            Box::new(move |rng| fd_gap(&ops, n, rng))
        });
    }
}
