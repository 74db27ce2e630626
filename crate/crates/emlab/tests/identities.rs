//! Exact algebraic identities that hold on any dataset, checked on
//! randomized instances: the imputation shortcut against textbook Gaussian
//! conditioning, M-step stationarity, the surrogate ascent property, the
//! unit-step equivalence for the mixture model, and the no-missingness
//! reduction to least squares.

use emlab::config::StepSchedule;
use emlab::gmm::{GmmOps, GmmOracle};
use emlab::linalg::{solve_spd, SymMat};
use emlab::missing::{
    impute_moments_with, sample as missing_sample, MissingOps, MissingOracle, SecondMoment,
};
use emlab::mor::{MorOps, MorOracle};
use emlab::rng::{derive_stream, RngStream};
use emlab::solver::{run_em, run_grad_em, ModelOps};
use emlab::vector::ParamVec;

fn rand_instance(rng: &mut RngStream) -> (usize, usize, f64) {
    let d = 1 + (rng.uniform() * 6.0) as usize; // 1..=6
    let n = d + 4 + (rng.uniform() * 30.0) as usize;
    let sigma = 0.5 + 1.5 * rng.uniform();
    (d, n, sigma)
}

/// The O(d) mask-indexed imputation must agree entrywise with the explicit
/// block form of Gaussian conditioning: permute the coordinates into
/// (missing, observed), condition the missing block on (x_obs, y) with a
/// dense symmetric solve, and compare every entry of the imputed mean and
/// exact second moment.
#[test]
fn imputation_matches_block_form_gaussian_conditioning() {
    for i in 0..60u64 {
        let mut rng = derive_stream(515, "impute-block", i);
        let (d, _, sigma) = rand_instance(&mut rng);
        let omega = rng.uniform(); // any missingness rate, edge cases included
        let theta_star = rng.normal_vec(d).scale(1.5);
        let oracle = MissingOracle::new(theta_star, sigma, omega);
        let data = missing_sample(&oracle, 8, &mut rng);
        // Imputation is defined at an arbitrary parameter, not just θ*.
        let theta = rng.normal_vec(d).scale(1.2);

        for s in &data.samples {
            let got = impute_moments_with(&theta, s, sigma, SecondMoment::Exact);

            let obs: Vec<usize> = (0..d).filter(|&j| s.observed[j]).collect();
            let k = obs.len() + 1;
            // Joint covariance of (x_obs, y) under parameter θ:
            // identity on the x block, cov(x_j, y) = θ_j, var(y) = σ² + ‖θ‖².
            let mut joint = SymMat::zeros(k);
            let mut z = vec![0.0; k];
            for (a, &j) in obs.iter().enumerate() {
                joint.set_sym(a, a, 1.0);
                joint.set_sym(a, k - 1, theta.as_slice()[j]);
                z[a] = s.x_obs.as_slice()[j];
            }
            joint.set_sym(k - 1, k - 1, sigma * sigma + theta.norm_sq());
            z[k - 1] = s.y;

            let w = solve_spd(&joint, &ParamVec::new(z)).unwrap();
            let w_y = w.as_slice()[k - 1];
            let mut e_y = vec![0.0; k];
            e_y[k - 1] = 1.0;
            let g = solve_spd(&joint, &ParamVec::new(e_y)).unwrap().as_slice()[k - 1];

            // Conditional mean: observed coordinates pass through, missing
            // coordinates are θ_j · (weight on y).
            let mut mu = vec![0.0; d];
            for j in 0..d {
                mu[j] = if s.observed[j] {
                    s.x_obs.as_slice()[j]
                } else {
                    theta.as_slice()[j] * w_y
                };
            }
            for j in 0..d {
                let err = (got.mu.as_slice()[j] - mu[j]).abs();
                assert!(err <= 1e-12 * mu[j].abs().max(1.0), "mu[{j}] off by {err:.3e}");
            }
            // Conditional second moment, entrywise.
            for a in 0..d {
                for b in 0..d {
                    let want = match (s.observed[a], s.observed[b]) {
                        (true, true) => mu[a] * mu[b],
                        (true, false) | (false, true) => mu[a] * mu[b],
                        (false, false) => {
                            let delta = if a == b { 1.0 } else { 0.0 };
                            delta - g * theta.as_slice()[a] * theta.as_slice()[b]
                                + mu[a] * mu[b]
                        }
                    };
                    let have = got.second_moment.get(a, b);
                    let err = (have - want).abs();
                    assert!(
                        err <= 1e-12 * want.abs().max(1.0),
                        "second moment ({a},{b}) off by {err:.3e} (instance {i})"
                    );
                }
            }
        }
    }
}

fn ascent_holds<M: ModelOps>(ops: &M, n: usize, iters: usize, rng: &mut RngStream) {
    let data = ops.sample(n, rng);
    let theta0 = ops.theta_star().add_scaled(0.8, &rng.normal_vec(ops.dim()));
    let run = run_em(ops, &data, &theta0, iters).unwrap();
    let recs = run.trace.records();
    for pair in recs.windows(2) {
        let before = ops.q_value(&data, &pair[0].theta, &pair[0].theta).unwrap();
        let after = ops.q_value(&data, &pair[1].theta, &pair[0].theta).unwrap();
        assert!(
            after >= before - 1e-9 * before.abs(),
            "iteration {} decreased the surrogate: {before} -> {after}",
            pair[1].t
        );
    }
}

#[test]
fn every_em_iteration_ascends_the_surrogate_in_all_models() {
    for i in 0..20u64 {
        let mut rng = derive_stream(515, "ascent", i);
        let (d, n, sigma) = rand_instance(&mut rng);
        let n = n.max(d + 3);
        let theta_star = rng.normal_vec(d).scale(1.5);

        let gmm = GmmOps::new(GmmOracle::new(theta_star.clone(), sigma));
        ascent_holds(&gmm, n, 8, &mut rng);
        let mor = MorOps::new(MorOracle::new(theta_star.clone(), sigma));
        ascent_holds(&mor, n, 8, &mut rng);
        let missing = MissingOps::new(MissingOracle::new(theta_star, sigma, 0.3));
        ascent_holds(&missing, n, 8, &mut rng);
    }
}

fn stationarity_holds<M: ModelOps>(ops: &M, n: usize, rng: &mut RngStream) {
    let data = ops.sample(n, rng);
    let theta = ops.theta_star().add_scaled(0.7, &rng.normal_vec(ops.dim()));
    let maximizer = ops.m_step(&data, &theta).unwrap();
    let grad = ops.q_grad(&data, &maximizer, &theta).unwrap();
    assert!(
        grad.norm() <= 1e-10 * maximizer.norm().max(1.0),
        "gradient at the maximizer has norm {:.3e}",
        grad.norm()
    );
}

#[test]
fn the_m_step_is_a_stationary_point_of_its_surrogate() {
    for i in 0..100u64 {
        let mut rng = derive_stream(515, "stationary", i);
        let (d, n, sigma) = rand_instance(&mut rng);
        let n = n.max(d + 3);
        let theta_star = rng.normal_vec(d).scale(1.5);

        let gmm = GmmOps::new(GmmOracle::new(theta_star.clone(), sigma));
        stationarity_holds(&gmm, n, &mut rng);
        let mor = MorOps::new(MorOracle::new(theta_star.clone(), sigma));
        stationarity_holds(&mor, n, &mut rng);
        let missing = MissingOps::new(MissingOracle::new(theta_star, sigma, 0.3));
        stationarity_holds(&missing, n, &mut rng);
    }
}

#[test]
fn unit_step_gradient_ascent_reproduces_em_for_the_mixture() {
    for i in 0..10u64 {
        let mut rng = derive_stream(515, "unit-step", i);
        let (d, n, sigma) = rand_instance(&mut rng);
        let theta_star = rng.normal_vec(d).scale(2.0);
        let ops = GmmOps::new(GmmOracle::new(theta_star, sigma));
        let data = ops.sample(n, &mut rng);
        let theta0 = ops.theta_star().add_scaled(0.5, &rng.normal_vec(d));

        let em = run_em(&ops, &data, &theta0, 12).unwrap();
        let grad = run_grad_em(&ops, &data, &theta0, &StepSchedule::Constant(1.0), 12).unwrap();
        for (a, b) in em.trace.records().iter().zip(grad.trace.records()) {
            let gap = a.theta.dist(&b.theta);
            assert!(gap <= 1e-10, "iterate {} differs by {gap:.3e}", a.t);
        }
    }
}

#[test]
fn zero_missingness_m_step_is_ordinary_least_squares() {
    for i in 0..20u64 {
        let mut rng = derive_stream(515, "ols", i);
        let (d, n, sigma) = rand_instance(&mut rng);
        let n = n.max(d + 3);
        let theta_star = rng.normal_vec(d).scale(1.5);
        let ops = MissingOps::new(MissingOracle::new(theta_star, sigma, 0.0));
        let data = ops.sample(n, &mut rng);
        let theta = rng.normal_vec(d);
        let fitted = ops.m_step(&data, &theta).unwrap();

        // Independent least squares on the fully observed covariates.
        let mut xtx = SymMat::zeros(d);
        let mut xty = ParamVec::zeros(d);
        for s in &data.samples {
            xtx.add_scaled_outer(1.0 / n as f64, &s.x_obs);
            xty = xty.add_scaled(s.y / n as f64, &s.x_obs);
        }
        let ols = solve_spd(&xtx, &xty).unwrap();
        let gap = fitted.dist(&ols);
        assert!(gap <= 1e-10, "instance {i}: m-step differs from OLS by {gap:.3e}");
    }
}
