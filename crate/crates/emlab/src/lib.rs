//! Expectation-maximization for three classical latent-variable models, with
//! the machinery needed to study *how fast* and *how far* the iterates move:
//!
//! * symmetric two-component Gaussian mixtures ([`gmm`]),
//! * symmetric mixtures of two linear regressions ([`mor`]),
//! * linear regression with covariates missing completely at random ([`missing`]).
//!
//! Each model exposes its E-step weights (or imputed moments), the sample
//! surrogate objective `Q̂`, its gradient, and the closed-form M-step. On top
//! of that the crate provides:
//!
//! * [`solver`] — full-data EM, sample-splitting EM, gradient EM (full-data
//!   and sample-splitting), and projected stochastic gradient EM;
//! * [`population`] — Monte-Carlo estimators of the curvature, gradient
//!   stability, contraction factor, step-size constant, finite-sample
//!   deviation, and stochastic gradient variance that govern the convergence
//!   of those solvers;
//! * [`exp`] — a deterministic experiment harness (trace/summary CSV files,
//!   SNR sweeps, basin-of-attraction scans, SVG plots) used by the `emlab`
//!   command-line tool.
//!
//! Everything is driven by named, counter-derived random streams
//! ([`rng::RngStream`]), so every experiment is reproducible to the byte.

pub mod config;
pub mod error;
pub mod exp;
pub mod gmm;
pub mod linalg;
pub mod missing;
pub mod mor;
pub mod population;
pub mod rng;
pub mod solver;
pub mod trace;
pub mod vector;

/// Guide chapters, compiled only while collecting documentation tests so
/// every code block in `book/` is checked against the current API.
#[cfg(doctest)]
pub mod book;

pub use config::{Algo, SolverConfig, StepSchedule};
pub use error::{Error, Result};
pub use linalg::{solve_spd, SymMat};
pub use rng::{derive_stream, RngStream};
pub use trace::{Trace, TraceRecord};
pub use vector::{project_ball, BallSpec, ParamVec};
