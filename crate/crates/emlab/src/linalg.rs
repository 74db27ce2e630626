//! Small dense symmetric matrices: accumulation, SPD solves, eigenvalues.
//!
//! Normal matrices in this crate are at most a few hundred square, so a
//! hand-rolled Cholesky factorization and a cyclic Jacobi eigensolver are
//! simpler and easier to audit than a general linear-algebra dependency.

use crate::error::{Error, Result};
use crate::vector::ParamVec;

/// A symmetric `d x d` matrix with full row-major storage.
///
/// Construction goes through symmetric building blocks (diagonal shifts and
/// rank-one updates), which keeps the storage symmetric to the last bit.
#[derive(Clone, Debug, PartialEq)]
pub struct SymMat {
    d: usize,
    data: Vec<f64>,
}

impl SymMat {
    pub fn zeros(d: usize) -> Self {
        SymMat {
            d,
            data: vec![0.0; d * d],
        }
    }

    pub fn identity(d: usize) -> Self {
        let mut m = SymMat::zeros(d);
        for i in 0..d {
            m.data[i * d + i] = 1.0;
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.d + j]
    }

    /// Sets entries `(i, j)` and `(j, i)`.
    pub fn set_sym(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.d + j] = v;
        self.data[j * self.d + i] = v;
    }

    /// `self += c * v vᵀ`.
    pub fn add_scaled_outer(&mut self, c: f64, v: &ParamVec) {
        assert_eq!(v.dim(), self.d, "dimension mismatch in add_scaled_outer");
        let s = v.as_slice();
        for i in 0..self.d {
            let ci = c * s[i];
            let row = &mut self.data[i * self.d..(i + 1) * self.d];
            for (j, rj) in row.iter_mut().enumerate() {
                *rj += ci * s[j];
            }
        }
    }

    /// Adds `c` to the diagonal entries listed in `indices`.
    pub fn add_diag(&mut self, indices: impl IntoIterator<Item = usize>, c: f64) {
        for i in indices {
            self.data[i * self.d + i] += c;
        }
    }

    pub fn add_assign(&mut self, other: &SymMat) {
        assert_eq!(self.d, other.d, "dimension mismatch in add_assign");
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += b;
        }
    }

    pub fn scale_assign(&mut self, c: f64) {
        for a in self.data.iter_mut() {
            *a *= c;
        }
    }

    pub fn trace(&self) -> f64 {
        (0..self.d).map(|i| self.data[i * self.d + i]).sum()
    }

    pub fn frob_norm(&self) -> f64 {
        self.data.iter().map(|a| a * a).sum::<f64>().sqrt()
    }

    pub fn mat_vec(&self, v: &ParamVec) -> ParamVec {
        assert_eq!(v.dim(), self.d, "dimension mismatch in mat_vec");
        let s = v.as_slice();
        let mut out = vec![0.0; self.d];
        for i in 0..self.d {
            let row = &self.data[i * self.d..(i + 1) * self.d];
            out[i] = row.iter().zip(s).map(|(a, b)| a * b).sum();
        }
        ParamVec::new(out)
    }

    /// Quadratic form `vᵀ A v`.
    pub fn quad_form(&self, v: &ParamVec) -> f64 {
        self.mat_vec(v).dot(v)
    }

    /// All eigenvalues and an orthonormal eigenbasis, by cyclic Jacobi
    /// rotations. Returns `(values, vectors)` sorted ascending; `vectors[k]`
    /// is the eigenvector for `values[k]`.
    pub fn eigen(&self) -> (Vec<f64>, Vec<ParamVec>) {
        let d = self.d;
        let mut a = self.data.clone();
        let mut v = vec![0.0; d * d];
        for i in 0..d {
            v[i * d + i] = 1.0;
        }
        let off = |a: &[f64]| -> f64 {
            let mut s = 0.0;
            for i in 0..d {
                for j in 0..d {
                    if i != j {
                        s += a[i * d + j] * a[i * d + j];
                    }
                }
            }
            s.sqrt()
        };
        let scale = self.frob_norm().max(1e-300);
        for _sweep in 0..60 {
            if off(&a) <= 1e-14 * scale {
                break;
            }
            for p in 0..d {
                for q in (p + 1)..d {
                    let apq = a[p * d + q];
                    if apq.abs() <= 1e-300 {
                        continue;
                    }
                    let app = a[p * d + p];
                    let aqq = a[q * d + q];
                    let theta = 0.5 * (aqq - app) / apq;
                    let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                    let c = 1.0 / (t * t + 1.0).sqrt();
                    let s = t * c;
                    for k in 0..d {
                        let akp = a[k * d + p];
                        let akq = a[k * d + q];
                        a[k * d + p] = c * akp - s * akq;
                        a[k * d + q] = s * akp + c * akq;
                    }
                    for k in 0..d {
                        let apk = a[p * d + k];
                        let aqk = a[q * d + k];
                        a[p * d + k] = c * apk - s * aqk;
                        a[q * d + k] = s * apk + c * aqk;
                    }
                    for k in 0..d {
                        let vkp = v[k * d + p];
                        let vkq = v[k * d + q];
                        v[k * d + p] = c * vkp - s * vkq;
                        v[k * d + q] = s * vkp + c * vkq;
                    }
                }
            }
        }
        let mut order: Vec<usize> = (0..d).collect();
        order.sort_by(|&i, &j| a[i * d + i].partial_cmp(&a[j * d + j]).unwrap());
        let values: Vec<f64> = order.iter().map(|&i| a[i * d + i]).collect();
        let vectors: Vec<ParamVec> = order
            .iter()
            .map(|&j| ParamVec::new((0..d).map(|k| v[k * d + j]).collect()))
            .collect();
        (values, vectors)
    }
}

/// Solves `A x = b` for symmetric positive-definite `A` by Cholesky
/// factorization.
///
/// Fails with [`Error::NotPositiveDefinite`] as soon as a pivot drops to
/// `1e-12 * trace(A) / d` or below — rank-deficient normal matrices (for
/// example built from fewer samples than dimensions) are rejected rather than
/// regularized. On success the residual satisfies
/// `‖A x − b‖ ≤ 1e-8 (‖A‖_F ‖x‖ + ‖b‖)`.
pub fn solve_spd(a: &SymMat, b: &ParamVec) -> Result<ParamVec> {
    let d = a.dim();
    assert_eq!(b.dim(), d, "dimension mismatch in solve_spd");
    if d == 0 {
        return Ok(ParamVec::zeros(0));
    }
    let pivot_floor = 1e-12 * a.trace() / d as f64;
    // Lower-triangular factor, packed row-major.
    let mut l = vec![0.0; d * d];
    for i in 0..d {
        for j in 0..=i {
            let mut sum = a.get(i, j);
            for k in 0..j {
                sum -= l[i * d + k] * l[j * d + k];
            }
            if i == j {
                if sum <= pivot_floor {
                    return Err(Error::NotPositiveDefinite {
                        column: i,
                        pivot: sum,
                    });
                }
                l[i * d + i] = sum.sqrt();
            } else {
                l[i * d + j] = sum / l[j * d + j];
            }
        }
    }
    // Forward substitution: L y = b.
    let mut y = vec![0.0; d];
    for i in 0..d {
        let mut sum = b[i];
        for k in 0..i {
            sum -= l[i * d + k] * y[k];
        }
        y[i] = sum / l[i * d + i];
    }
    // Back substitution: Lᵀ x = y.
    let mut x = vec![0.0; d];
    for i in (0..d).rev() {
        let mut sum = y[i];
        for k in (i + 1)..d {
            sum -= l[k * d + i] * x[k];
        }
        x[i] = sum / l[i * d + i];
    }
    Ok(ParamVec::new(x))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::derive_stream;

    /// Builds a random SPD matrix A = L Lᵀ with unit-ish diagonal L.
    fn random_spd(d: usize, seed: u64) -> SymMat {
        let mut rng = derive_stream(seed, "spd", 0);
        let mut l = vec![0.0; d * d];
        for i in 0..d {
            for j in 0..=i {
                l[i * d + j] = if i == j {
                    0.5 + rng.uniform()
                } else {
                    0.3 * rng.normal()
                };
            }
        }
        let mut a = SymMat::zeros(d);
        for i in 0..d {
            for j in 0..d {
                let mut s = 0.0;
                for k in 0..d {
                    s += l[i * d + k] * l[j * d + k];
                }
                a.set_sym(i, j, s);
            }
        }
        a
    }

    #[test]
    fn solve_recovers_known_solution_and_meets_residual_bound() {
        for (case, d) in [(0u64, 2usize), (1, 5), (2, 17), (3, 50)].into_iter() {
            let a = random_spd(d, 100 + case);
            let mut rng = derive_stream(200 + case, "x", 0);
            let x_true = rng.normal_vec(d);
            let b = a.mat_vec(&x_true);
            let x = solve_spd(&a, &b).expect("SPD solve should succeed");
            let rel = x.dist(&x_true) / x_true.norm();
            assert!(rel <= 1e-8, "d={d}: relative error {rel}");
            let residual = a.mat_vec(&x).dist(&b);
            let bound = 1e-8 * (a.frob_norm() * x.norm() + b.norm());
            assert!(residual <= bound, "d={d}: residual {residual} > {bound}");
        }
    }

    #[test]
    fn indefinite_and_rank_deficient_matrices_are_rejected() {
        let mut indefinite = SymMat::identity(2);
        indefinite.set_sym(0, 1, 3.0);
        match solve_spd(&indefinite, &ParamVec::new(vec![1.0, 1.0])) {
            Err(Error::NotPositiveDefinite { column, .. }) => assert_eq!(column, 1),
            other => panic!("expected NotPositiveDefinite, got {other:?}"),
        }

        // Gram matrix of 2 samples in 4 dimensions: rank 2 < 4.
        let mut rng = derive_stream(5, "gram", 0);
        let x1 = rng.normal_vec(4);
        let x2 = rng.normal_vec(4);
        let mut gram = SymMat::zeros(4);
        gram.add_scaled_outer(1.0, &x1);
        gram.add_scaled_outer(1.0, &x2);
        assert!(matches!(
            solve_spd(&gram, &ParamVec::zeros(4)),
            Err(Error::NotPositiveDefinite { .. })
        ));
    }

    #[test]
    fn solve_is_exactly_odd_in_the_right_hand_side() {
        let a = random_spd(8, 11);
        let mut rng = derive_stream(12, "b", 0);
        let b = rng.normal_vec(8);
        let x_pos = solve_spd(&a, &b).unwrap();
        let x_neg = solve_spd(&a, &b.scale(-1.0)).unwrap();
        assert_eq!(x_neg, x_pos.scale(-1.0));
    }

    #[test]
    fn jacobi_eigenvalues_match_hand_computed_spectrum() {
        // [[2, 1], [1, 2]] has eigenvalues 1 and 3.
        let mut m = SymMat::zeros(2);
        m.set_sym(0, 0, 2.0);
        m.set_sym(1, 1, 2.0);
        m.set_sym(0, 1, 1.0);
        let (vals, vecs) = m.eigen();
        assert!((vals[0] - 1.0).abs() < 1e-12);
        assert!((vals[1] - 3.0).abs() < 1e-12);
        for (lam, v) in vals.iter().zip(&vecs) {
            let r = m.mat_vec(v).sub(&v.scale(*lam)).norm();
            assert!(r < 1e-12, "eigen residual {r}");
        }
    }

    #[test]
    fn jacobi_reconstructs_random_spd_spectra() {
        let a = random_spd(12, 31);
        let (vals, vecs) = a.eigen();
        assert!(vals.windows(2).all(|w| w[0] <= w[1]));
        for (lam, v) in vals.iter().zip(&vecs) {
            assert!((v.norm() - 1.0).abs() < 1e-10);
            let r = a.mat_vec(v).sub(&v.scale(*lam)).norm();
            assert!(r <= 1e-10 * a.frob_norm(), "eigen residual {r}");
        }
        // Trace is the eigenvalue sum.
        let sum: f64 = vals.iter().sum();
        assert!((sum - a.trace()).abs() <= 1e-10 * a.trace().abs());
    }
}
