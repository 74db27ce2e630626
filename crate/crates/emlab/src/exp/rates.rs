//! Trajectory summaries: geometric decay rate, error floor, and the implied
//! iteration budget.

use crate::error::{Error, Result};

/// Fits the per-iteration geometric decay factor of an error sequence.
///
/// Entries at or below `floor` (the numerical noise floor) are excluded;
/// the remaining `(iteration, log error)` pairs — with their original
/// iteration indices — get a least-squares line, and the returned factor is
/// `e^slope`. At least three entries must survive the floor.
pub fn fit_geometric_rate(errors: &[f64], floor: f64) -> Result<f64> {
    assert!(floor > 0.0, "floor must be positive");
    let points: Vec<(f64, f64)> = errors
        .iter()
        .enumerate()
        .filter(|(_, &e)| e > floor)
        .map(|(i, &e)| (i as f64, e.ln()))
        .collect();
    if points.len() < 3 {
        return Err(Error::TooFewPoints {
            context: "geometric-rate fit",
            needed: 3,
            got: points.len(),
        });
    }
    Ok(least_squares_slope(&points).exp())
}

/// Least-squares slope of y against x.
pub(crate) fn least_squares_slope(points: &[(f64, f64)]) -> f64 {
    let k = points.len() as f64;
    let x_mean = points.iter().map(|p| p.0).sum::<f64>() / k;
    let y_mean = points.iter().map(|p| p.1).sum::<f64>() / k;
    let mut num = 0.0;
    let mut den = 0.0;
    for &(x, y) in points {
        num += (x - x_mean) * (y - y_mean);
        den += (x - x_mean) * (x - x_mean);
    }
    num / den
}

/// The level an error sequence has settled at: the median of its last
/// `window` entries.
pub fn detect_plateau(errors: &[f64], window: usize) -> Result<f64> {
    assert!(window >= 1, "window must be at least 1");
    if errors.len() < window {
        return Err(Error::TooFewPoints {
            context: "plateau detection",
            needed: window,
            got: errors.len(),
        });
    }
    let mut tail: Vec<f64> = errors[errors.len() - window..].to_vec();
    tail.sort_by(f64::total_cmp);
    let mid = window / 2;
    Ok(if window % 2 == 1 {
        tail[mid]
    } else {
        0.5 * (tail[mid - 1] + tail[mid])
    })
}

/// Iterations sufficient for a `kappa`-geometric decay to bring
/// `init_error` down to the scale of `deviation`: the smallest `T ≥
/// log_{1/κ}[(1−κ)·init_error/deviation]`, at least 1.
pub fn compute_suggested_t(kappa: f64, init_error: f64, deviation: f64) -> usize {
    assert!(kappa > 0.0 && kappa < 1.0, "kappa must lie in (0, 1), got {kappa}");
    assert!(init_error > 0.0, "initial error must be positive");
    assert!(deviation > 0.0, "deviation must be positive");
    let arg = (1.0 - kappa) * init_error / deviation;
    if arg <= 1.0 {
        return 1;
    }
    let t = arg.ln() / (1.0 / kappa).ln();
    // Back off by a relative epsilon so that analytically integral values
    // (which rounding can nudge just above the integer) are not bumped up.
    let adjusted = t - 1e-9 * t.abs().max(1.0);
    (adjusted.ceil() as usize).max(1)
}
