//! Property tests for the small deterministic building blocks: ball
//! projection, trajectory summaries, and CSV serialization.

use emlab::exp::{
    compute_suggested_t, detect_plateau, fit_geometric_rate, read_csv, write_csv,
};
use emlab::vector::{project_ball, BallSpec, ParamVec};
use proptest::prelude::*;

proptest! {
    /// The projection always lands inside the ball, is the identity on
    /// interior points, and is exactly idempotent.
    #[test]
    fn projection_lands_inside_and_is_idempotent(
        dim in 1usize..8,
        seed_point in prop::collection::vec(-100.0..100.0f64, 8),
        seed_center in prop::collection::vec(-100.0..100.0f64, 8),
        radius in 0.0..50.0f64,
    ) {
        let point = ParamVec::new(seed_point[..dim].to_vec());
        let center = ParamVec::new(seed_center[..dim].to_vec());
        let ball = BallSpec::new(center, radius);
        let projected = project_ball(&point, &ball);
        prop_assert!(ball.contains(&projected));
        if ball.contains(&point) {
            prop_assert_eq!(point.as_slice(), projected.as_slice());
        }
        let twice = project_ball(&projected, &ball);
        prop_assert_eq!(projected.as_slice(), twice.as_slice());
    }

    /// Fitting an exact geometric series recovers its ratio to floating-point
    /// accuracy, regardless of scale or length.
    #[test]
    fn geometric_series_rate_is_recovered(
        ratio in 0.05..0.95f64,
        scale in 0.1..10.0f64,
        len in 4usize..25,
    ) {
        let errors: Vec<f64> = (0..len).map(|t| scale * ratio.powi(t as i32)).collect();
        let fit = fit_geometric_rate(&errors, f64::MIN_POSITIVE).unwrap();
        prop_assert!(
            (fit - ratio).abs() <= 1e-9 * ratio,
            "fit {} vs ratio {}", fit, ratio
        );
    }

    /// The plateau is a median of the tail window: it lies between the tail's
    /// extremes, and a constant tail is reported exactly.
    #[test]
    fn plateau_is_a_tail_median(
        series in prop::collection::vec(1e-3..1e3f64, 5..40),
        constant in 1e-3..1e3f64,
        tail_len in 5usize..10,
    ) {
        let level = detect_plateau(&series, 5).unwrap();
        let tail = &series[series.len() - 5..];
        let lo = tail.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = tail.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        prop_assert!(level >= lo && level <= hi, "median {} outside [{}, {}]", level, lo, hi);

        let mut settled = series.clone();
        settled.extend(std::iter::repeat(constant).take(tail_len));
        prop_assert_eq!(detect_plateau(&settled, 5).unwrap(), constant);
    }

    /// The suggested iteration count is the smallest `T ≥ 1` with
    /// `(1/κ)^T ≥ (1−κ)·init/deviation`, up to a relative epsilon guarding
    /// the ceil.
    #[test]
    fn suggested_iterations_satisfy_the_defining_inequalities(
        kappa in 0.02..0.98f64,
        init in 1e-3..1e3f64,
        deviation in 1e-9..1e3f64,
    ) {
        let t = compute_suggested_t(kappa, init, deviation);
        prop_assert!(t >= 1);
        let arg = (1.0 - kappa) * init / deviation;
        if arg <= 1.0 {
            prop_assert_eq!(t, 1);
        } else {
            prop_assert!(
                arg * kappa.powi(t as i32) <= 1.0 + 1e-6,
                "T = {} is too small for arg {}", t, arg
            );
            if t > 1 {
                prop_assert!(
                    arg * kappa.powi(t as i32 - 1) >= 1.0 - 1e-6,
                    "T = {} is not minimal for arg {}", t, arg
                );
            }
        }
    }

    /// Writing and re-reading a table preserves every field, including ones
    /// that need quoting, and floats survive the text round trip exactly.
    #[test]
    fn csv_round_trips_fields_and_floats(
        rows in prop::collection::vec(
            ("[ -~]{0,12}", "[ -~]{0,12}", any::<f64>().prop_filter("finite", |v| v.is_finite())),
            0..8,
        ),
    ) {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("round_trip.csv");
        let encoded: Vec<Vec<String>> = rows
            .iter()
            .map(|(a, b, v)| vec![a.clone(), b.clone(), format!("{v}")])
            .collect();
        write_csv(&path, &["a", "b", "v"], &encoded).unwrap();
        let table = read_csv(&path).unwrap();
        prop_assert_eq!(&table.header, &["a", "b", "v"]);
        prop_assert_eq!(&table.rows, &encoded);
        for (row, (_, _, v)) in table.rows.iter().zip(&rows) {
            let back: f64 = row[2].parse().unwrap();
            prop_assert_eq!(back.to_bits(), v.to_bits());
        }
    }
}
