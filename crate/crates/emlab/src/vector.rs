//! Dense parameter vectors and Euclidean-ball projection.

use std::ops::{Index, IndexMut};

/// A dense real parameter vector.
///
/// All entries are finite; arithmetic preserves finiteness for finite inputs.
#[derive(Clone, Debug, PartialEq)]
pub struct ParamVec(Vec<f64>);

impl ParamVec {
    /// Wraps raw entries. Panics (in debug builds) on NaN or infinite entries.
    pub fn new(entries: Vec<f64>) -> Self {
        debug_assert!(
            entries.iter().all(|x| x.is_finite()),
            "parameter vector entries must be finite"
        );
        ParamVec(entries)
    }

    /// The zero vector in `d` dimensions.
    pub fn zeros(d: usize) -> Self {
        ParamVec(vec![0.0; d])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn iter(&self) -> std::slice::Iter<'_, f64> {
        self.0.iter()
    }

    pub fn dot(&self, other: &ParamVec) -> f64 {
        assert_eq!(self.dim(), other.dim(), "dimension mismatch in dot");
        self.0.iter().zip(&other.0).map(|(a, b)| a * b).sum()
    }

    pub fn norm_sq(&self) -> f64 {
        self.dot(self)
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    pub fn add(&self, other: &ParamVec) -> ParamVec {
        assert_eq!(self.dim(), other.dim(), "dimension mismatch in add");
        ParamVec(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    pub fn sub(&self, other: &ParamVec) -> ParamVec {
        assert_eq!(self.dim(), other.dim(), "dimension mismatch in sub");
        ParamVec(self.0.iter().zip(&other.0).map(|(a, b)| a - b).collect())
    }

    pub fn scale(&self, c: f64) -> ParamVec {
        ParamVec(self.0.iter().map(|a| c * a).collect())
    }

    /// `self + c * other`, the workhorse of every update rule.
    pub fn add_scaled(&self, c: f64, other: &ParamVec) -> ParamVec {
        assert_eq!(self.dim(), other.dim(), "dimension mismatch in add_scaled");
        ParamVec(
            self.0
                .iter()
                .zip(&other.0)
                .map(|(a, b)| a + c * b)
                .collect(),
        )
    }

    /// Euclidean distance to `other`.
    pub fn dist(&self, other: &ParamVec) -> f64 {
        self.sub(other).norm()
    }

    /// Mutating accumulate: `self += c * other`.
    pub fn axpy(&mut self, c: f64, other: &ParamVec) {
        assert_eq!(self.dim(), other.dim(), "dimension mismatch in axpy");
        for (a, b) in self.0.iter_mut().zip(&other.0) {
            *a += c * b;
        }
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }
}

impl From<Vec<f64>> for ParamVec {
    fn from(v: Vec<f64>) -> Self {
        ParamVec::new(v)
    }
}

impl Index<usize> for ParamVec {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

impl IndexMut<usize> for ParamVec {
    fn index_mut(&mut self, i: usize) -> &mut f64 {
        &mut self.0[i]
    }
}

/// A closed Euclidean ball, used both for projected solvers and for probe
/// generation.
#[derive(Clone, Debug, PartialEq)]
pub struct BallSpec {
    pub center: ParamVec,
    pub radius: f64,
}

impl BallSpec {
    /// Builds a ball; the radius must be finite and nonnegative.
    pub fn new(center: ParamVec, radius: f64) -> Self {
        assert!(
            radius.is_finite() && radius >= 0.0,
            "ball radius must be finite and nonnegative, got {radius}"
        );
        BallSpec { center, radius }
    }

    pub fn contains(&self, theta: &ParamVec) -> bool {
        theta.dist(&self.center) <= self.radius
    }
}

/// Euclidean projection of `theta` onto the closed ball.
///
/// Points inside the ball (and the exact center for radius zero) are returned
/// unchanged, which makes the projection exactly idempotent: rescaled points
/// are nudged until the recomputed distance check passes, so a second call
/// always takes the identity branch.
pub fn project_ball(theta: &ParamVec, ball: &BallSpec) -> ParamVec {
    assert_eq!(
        theta.dim(),
        ball.center.dim(),
        "dimension mismatch in project_ball"
    );
    if ball.radius == 0.0 {
        return ball.center.clone();
    }
    let dist = theta.dist(&ball.center);
    if dist <= ball.radius {
        return theta.clone();
    }
    let mut scale = ball.radius / dist;
    loop {
        let offset = theta.sub(&ball.center).scale(scale);
        let projected = ball.center.add(&offset);
        // Rounding in the rescale can leave the recomputed distance a few ulps
        // outside the ball; shrink until the membership test itself accepts.
        if projected.dist(&ball.center) <= ball.radius {
            return projected;
        }
        scale *= 1.0 - 4.0 * f64::EPSILON;
    }
}
