//! Solver configuration: algorithm choice, iteration budget, step schedules,
//! projection, and sample splitting.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::vector::BallSpec;

/// Which update rule a run uses.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Algo {
    /// Full-data EM: repeat the closed-form M-step on all samples.
    Em,
    /// Sample-splitting EM: one disjoint batch of the data per iteration.
    EmSplit,
    /// Gradient EM: ascend the sample surrogate with a constant step.
    Grad,
    /// Sample-splitting gradient EM.
    GradSplit,
    /// Projected stochastic gradient EM: one fresh sample per iteration.
    Sgd,
}

impl Algo {
    pub fn as_str(&self) -> &'static str {
        match self {
            Algo::Em => "em",
            Algo::EmSplit => "em-split",
            Algo::Grad => "grad",
            Algo::GradSplit => "grad-split",
            Algo::Sgd => "sgd",
        }
    }

    pub fn requires_step(&self) -> bool {
        matches!(self, Algo::Grad | Algo::GradSplit | Algo::Sgd)
    }

    pub fn requires_split(&self) -> bool {
        matches!(self, Algo::EmSplit | Algo::GradSplit)
    }
}

impl fmt::Display for Algo {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Algo {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "em" => Ok(Algo::Em),
            "em-split" => Ok(Algo::EmSplit),
            "grad" => Ok(Algo::Grad),
            "grad-split" => Ok(Algo::GradSplit),
            "sgd" => Ok(Algo::Sgd),
            other => Err(Error::InvalidConfig(format!(
                "unknown algorithm {other:?} (expected em, em-split, grad, grad-split or sgd)"
            ))),
        }
    }
}

/// Step-size schedule for gradient-based solvers.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum StepSchedule {
    /// The same step at every iteration.
    Constant(f64),
    /// `step(t) = a / (xi * (t + 2))`, the classic decay for stochastic
    /// gradient methods whose contraction constant is `xi`.
    Decaying { a: f64, xi: f64 },
}

impl StepSchedule {
    /// The step used at iteration `t` (0-based).
    pub fn step(&self, t: usize) -> f64 {
        match *self {
            StepSchedule::Constant(alpha) => alpha,
            StepSchedule::Decaying { a, xi } => a / (xi * (t as f64 + 2.0)),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            StepSchedule::Constant(alpha) => alpha.is_finite() && alpha > 0.0,
            StepSchedule::Decaying { a, xi } => {
                a.is_finite() && a > 0.0 && xi.is_finite() && xi > 0.0
            }
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidConfig(format!(
                "step schedule parameters must be positive and finite, got {self:?}"
            )))
        }
    }
}

/// A validated bundle of solver settings.
#[derive(Clone, Debug, PartialEq)]
pub struct SolverConfig {
    pub algo: Algo,
    /// Number of update steps; the trace then holds `iters + 1` records.
    pub iters: usize,
    /// Required for `grad`, `grad-split` and `sgd`.
    pub step: Option<StepSchedule>,
    /// Required for `sgd`: iterates are projected onto this ball.
    pub projection: Option<BallSpec>,
    /// Required for `em-split` and `grad-split`: number of disjoint batches,
    /// which must equal `iters` so each iteration sees fresh samples.
    pub split_batches: Option<usize>,
}

impl SolverConfig {
    /// A plain EM configuration with `iters` steps.
    pub fn em(iters: usize) -> Self {
        SolverConfig {
            algo: Algo::Em,
            iters,
            step: None,
            projection: None,
            split_batches: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.algo.requires_step() {
            match &self.step {
                None => {
                    return Err(Error::InvalidConfig(format!(
                        "algorithm {} requires a step schedule",
                        self.algo
                    )))
                }
                Some(s) => s.validate()?,
            }
        }
        if self.algo == Algo::Sgd && self.projection.is_none() {
            return Err(Error::InvalidConfig(
                "algorithm sgd requires a projection ball".to_string(),
            ));
        }
        if self.algo.requires_split() {
            match self.split_batches {
                None => {
                    return Err(Error::InvalidConfig(format!(
                        "algorithm {} requires split_batches",
                        self.algo
                    )))
                }
                Some(t) if t != self.iters => {
                    return Err(Error::InvalidConfig(format!(
                        "split_batches ({t}) must equal iters ({})",
                        self.iters
                    )))
                }
                Some(_) => {}
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::vector::ParamVec;

    #[test]
    fn algo_names_round_trip() {
        for algo in [Algo::Em, Algo::EmSplit, Algo::Grad, Algo::GradSplit, Algo::Sgd] {
            assert_eq!(algo.as_str().parse::<Algo>().unwrap(), algo);
        }
        assert!("EM".parse::<Algo>().is_err());
    }

    #[test]
    fn decaying_schedule_matches_hand_values() {
        let s = StepSchedule::Decaying { a: 1.5, xi: 0.5 };
        // a / (xi * (t + 2)): t = 0 -> 1.5 / 1.0, t = 8 -> 1.5 / 5.0.
        assert_eq!(s.step(0), 1.5);
        assert_eq!(s.step(8), 0.3);
        assert_eq!(StepSchedule::Constant(0.25).step(1000), 0.25);
    }

    #[test]
    fn validation_enforces_per_algorithm_requirements() {
        assert!(SolverConfig::em(10).validate().is_ok());

        let grad_missing_step = SolverConfig {
            algo: Algo::Grad,
            iters: 10,
            step: None,
            projection: None,
            split_batches: None,
        };
        assert!(grad_missing_step.validate().is_err());

        let sgd_missing_ball = SolverConfig {
            algo: Algo::Sgd,
            iters: 10,
            step: Some(StepSchedule::Decaying { a: 1.5, xi: 1.0 }),
            projection: None,
            split_batches: None,
        };
        assert!(sgd_missing_ball.validate().is_err());

        let sgd_ok = SolverConfig {
            projection: Some(BallSpec::new(ParamVec::zeros(2), 1.0)),
            ..sgd_missing_ball
        };
        assert!(sgd_ok.validate().is_ok());

        let split_mismatch = SolverConfig {
            algo: Algo::EmSplit,
            iters: 10,
            step: None,
            projection: None,
            split_batches: Some(5),
        };
        assert!(split_mismatch.validate().is_err());

        let split_ok = SolverConfig {
            split_batches: Some(10),
            ..split_mismatch
        };
        assert!(split_ok.validate().is_ok());

        let bad_step = SolverConfig {
            algo: Algo::Grad,
            iters: 3,
            step: Some(StepSchedule::Constant(-1.0)),
            projection: None,
            split_batches: None,
        };
        assert!(bad_step.validate().is_err());
    }
}
