//! Small dense linear algebra: square matrices, the cyclic Jacobi eigensolver
//! for symmetric matrices, and spectral matrix functions.
//!
//! Everything here targets the tiny systems this crate works with (matrix
//! orders up to roughly ten), so clarity wins over blocking or SIMD.

use alloc::vec;
use alloc::vec::Vec;
use core::ops::{Index, IndexMut};

use crate::math;

/// Dense square matrix stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Mat {
    n: usize,
    data: Vec<f64>,
}

impl Mat {
    pub fn zeros(n: usize) -> Self {
        Self { n, data: vec![0.0; n * n] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn diag(values: &[f64]) -> Self {
        let mut m = Self::zeros(values.len());
        for (i, &v) in values.iter().enumerate() {
            m[(i, i)] = v;
        }
        m
    }

    /// Wraps row-major data. Panics if `data.len() != n * n`.
    pub fn from_vec(n: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), n * n, "matrix data has wrong length");
        Self { n, data }
    }

    pub fn from_slice(n: usize, data: &[f64]) -> Self {
        Self::from_vec(n, data.to_vec())
    }

    #[inline]
    pub fn order(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    pub fn transpose(&self) -> Self {
        let n = self.n;
        let mut t = Self::zeros(n);
        for i in 0..n {
            for j in 0..n {
                t[(j, i)] = self[(i, j)];
            }
        }
        t
    }

    pub fn matmul(&self, rhs: &Mat) -> Self {
        let n = self.n;
        debug_assert_eq!(n, rhs.n);
        let mut out = Self::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a = self[(i, k)];
                if a == 0.0 {
                    continue;
                }
                for j in 0..n {
                    out.data[i * n + j] += a * rhs.data[k * n + j];
                }
            }
        }
        out
    }

    /// `a * b * a` for symmetric `a`, the congruence used all over the SPD geometry.
    pub fn congruence(a: &Mat, b: &Mat) -> Self {
        a.matmul(b).matmul(a).symmetrized()
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self { n: self.n, data: self.data.iter().map(|x| x * s).collect() }
    }

    pub fn add(&self, rhs: &Mat) -> Self {
        Self { n: self.n, data: self.data.iter().zip(&rhs.data).map(|(a, b)| a + b).collect() }
    }

    pub fn sub(&self, rhs: &Mat) -> Self {
        Self { n: self.n, data: self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect() }
    }

    pub fn trace(&self) -> f64 {
        (0..self.n).map(|i| self[(i, i)]).sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        math::sqrt(self.data.iter().map(|x| x * x).sum())
    }

    /// Frobenius inner product `tr(A^T B)`.
    pub fn frobenius_dot(&self, rhs: &Mat) -> f64 {
        self.data.iter().zip(&rhs.data).map(|(a, b)| a * b).sum()
    }

    /// Frobenius norm of the antisymmetric part, relative to the matrix norm.
    pub fn asymmetry(&self) -> f64 {
        let n = self.n;
        let mut off = 0.0;
        for i in 0..n {
            for j in (i + 1)..n {
                let d = self[(i, j)] - self[(j, i)];
                off += 2.0 * d * d;
            }
        }
        let norm = self.frobenius_norm();
        if norm == 0.0 {
            0.0
        } else {
            math::sqrt(off) / norm
        }
    }

    pub fn symmetrized(mut self) -> Self {
        let n = self.n;
        for i in 0..n {
            for j in (i + 1)..n {
                let avg = 0.5 * (self[(i, j)] + self[(j, i)]);
                self[(i, j)] = avg;
                self[(j, i)] = avg;
            }
        }
        self
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }
}

impl Index<(usize, usize)> for Mat {
    type Output = f64;

    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.n + j]
    }
}

impl IndexMut<(usize, usize)> for Mat {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.n + j]
    }
}

/// Eigendecomposition `A = Q diag(values) Q^T` of a symmetric matrix.
///
/// Eigenvectors are the columns of `vectors`. Values are sorted ascending.
#[derive(Debug, Clone)]
pub struct SymEigen {
    pub values: Vec<f64>,
    pub vectors: Mat,
}

const JACOBI_MAX_SWEEPS: usize = 100;

impl SymEigen {
    /// Cyclic Jacobi rotations. Only the upper triangle is trusted; callers
    /// pass matrices that are symmetric up to rounding.
    pub fn new(a: &Mat) -> Self {
        let n = a.order();
        let mut m = a.clone().symmetrized();
        let mut v = Mat::identity(n);

        for _ in 0..JACOBI_MAX_SWEEPS {
            let mut off = 0.0;
            let mut diag = 0.0;
            for i in 0..n {
                diag += m[(i, i)] * m[(i, i)];
                for j in (i + 1)..n {
                    off += m[(i, j)] * m[(i, j)];
                }
            }
            if off <= 1e-36 * diag || off == 0.0 {
                break;
            }
            for p in 0..n {
                for q in (p + 1)..n {
                    let apq = m[(p, q)];
                    if apq == 0.0 {
                        continue;
                    }
                    let app = m[(p, p)];
                    let aqq = m[(q, q)];
                    let theta = (aqq - app) / (2.0 * apq);
                    let t = {
                        let s = if theta >= 0.0 { 1.0 } else { -1.0 };
                        s / (theta.abs() + math::sqrt(theta * theta + 1.0))
                    };
                    let c = 1.0 / math::sqrt(t * t + 1.0);
                    let s = t * c;

                    m[(p, p)] = app - t * apq;
                    m[(q, q)] = aqq + t * apq;
                    m[(p, q)] = 0.0;
                    m[(q, p)] = 0.0;
                    for r in 0..n {
                        if r != p && r != q {
                            let arp = m[(r, p)];
                            let arq = m[(r, q)];
                            let new_rp = c * arp - s * arq;
                            let new_rq = s * arp + c * arq;
                            m[(r, p)] = new_rp;
                            m[(p, r)] = new_rp;
                            m[(r, q)] = new_rq;
                            m[(q, r)] = new_rq;
                        }
                    }
                    for r in 0..n {
                        let vrp = v[(r, p)];
                        let vrq = v[(r, q)];
                        v[(r, p)] = c * vrp - s * vrq;
                        v[(r, q)] = s * vrp + c * vrq;
                    }
                }
            }
        }

        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&i, &j| m[(i, i)].total_cmp(&m[(j, j)]));
        let values = order.iter().map(|&i| m[(i, i)]).collect();
        let mut vectors = Mat::zeros(n);
        for (col, &src) in order.iter().enumerate() {
            for r in 0..n {
                vectors[(r, col)] = v[(r, src)];
            }
        }
        Self { values, vectors }
    }

    pub fn min(&self) -> f64 {
        self.values.first().copied().unwrap_or(f64::NAN)
    }

    pub fn max(&self) -> f64 {
        self.values.last().copied().unwrap_or(f64::NAN)
    }

    /// `Q diag(g(values)) Q^T`.
    pub fn map(&self, g: impl Fn(f64) -> f64) -> Mat {
        let n = self.values.len();
        let mapped: Vec<f64> = self.values.iter().map(|&x| g(x)).collect();
        let q = &self.vectors;
        let mut out = Mat::zeros(n);
        for i in 0..n {
            for j in i..n {
                let s: f64 = (0..n).map(|k| q[(i, k)] * mapped[k] * q[(j, k)]).sum();
                out[(i, j)] = s;
                out[(j, i)] = s;
            }
        }
        out
    }
}

/// Symmetric matrix exponential.
pub fn sym_expm(a: &Mat) -> Mat {
    SymEigen::new(a).map(math::exp)
}

/// Symmetric matrix logarithm. The caller guarantees positive eigenvalues.
pub fn sym_logm(a: &Mat) -> Mat {
    SymEigen::new(a).map(math::ln)
}

/// Symmetric matrix power `A^t` for positive definite `A`.
pub fn sym_powm(a: &Mat, t: f64) -> Mat {
    SymEigen::new(a).map(|x| math::pow(x, t))
}

/// Solves the `k x k` system `a x = b` (row-major `a`) by Gaussian elimination
/// with partial pivoting. Returns `None` when a pivot falls below
/// `rel_pivot_tol` times the largest absolute entry of `a`.
pub fn solve_dense(mut a: Vec<f64>, mut b: Vec<f64>, rel_pivot_tol: f64) -> Option<Vec<f64>> {
    let k = b.len();
    debug_assert_eq!(a.len(), k * k);
    let scale = a.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    if scale == 0.0 || !scale.is_finite() {
        return None;
    }
    let floor = rel_pivot_tol * scale;
    for col in 0..k {
        let (piv, piv_abs) =
            (col..k)
                .map(|r| (r, a[r * k + col].abs()))
                .fold((col, -1.0), |best, cur| if cur.1 > best.1 { cur } else { best });
        if piv_abs <= floor {
            return None;
        }
        if piv != col {
            for j in 0..k {
                a.swap(col * k + j, piv * k + j);
            }
            b.swap(col, piv);
        }
        let d = a[col * k + col];
        for r in (col + 1)..k {
            let factor = a[r * k + col] / d;
            if factor == 0.0 {
                continue;
            }
            for j in col..k {
                a[r * k + j] -= factor * a[col * k + j];
            }
            b[r] -= factor * b[col];
        }
    }
    let mut x = vec![0.0; k];
    for r in (0..k).rev() {
        let tail: f64 = ((r + 1)..k).map(|j| a[r * k + j] * x[j]).sum();
        x[r] = (b[r] - tail) / a[r * k + r];
    }
    Some(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn jacobi_recovers_diagonal() {
        let a = Mat::diag(&[3.0, 1.0, 2.0]);
        let e = SymEigen::new(&a);
        assert_eq!(e.values, vec![1.0, 2.0, 3.0]);
    }

    #[test]
    fn jacobi_reconstructs_dense_matrix() {
        let a = Mat::from_vec(3, vec![4.0, 1.0, -2.0, 1.0, 3.0, 0.5, -2.0, 0.5, 5.0]);
        let e = SymEigen::new(&a);
        let back = e.map(|x| x);
        for (x, y) in back.as_slice().iter().zip(a.as_slice()) {
            assert!(close(*x, *y, 1e-13));
        }
        let qtq = e.vectors.transpose().matmul(&e.vectors);
        for i in 0..3 {
            for j in 0..3 {
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!(close(qtq[(i, j)], expect, 1e-14));
            }
        }
    }

    #[test]
    fn expm_and_logm_are_inverse() {
        let a = Mat::from_vec(2, vec![0.3, -0.7, -0.7, 1.1]);
        let back = sym_logm(&sym_expm(&a));
        for (x, y) in back.as_slice().iter().zip(a.as_slice()) {
            assert!(close(*x, *y, 1e-13));
        }
    }

    #[test]
    fn sqrt_squares_back() {
        let a = Mat::from_vec(2, vec![5.0, 2.0, 2.0, 3.0]);
        let r = sym_powm(&a, 0.5);
        let sq = r.matmul(&r);
        for (x, y) in sq.as_slice().iter().zip(a.as_slice()) {
            assert!(close(*x, *y, 1e-13));
        }
    }

    #[test]
    fn solve_small_system() {
        let x = solve_dense(vec![2.0, 1.0, 1.0, 3.0], vec![3.0, 5.0], 1e-14).unwrap();
        assert!(close(x[0], 0.8, 1e-15) && close(x[1], 1.4, 1e-15));
    }

    #[test]
    fn solve_detects_singular() {
        assert!(solve_dense(vec![1.0, 2.0, 2.0, 4.0], vec![1.0, 1.0], 1e-12).is_none());
    }

    #[test]
    fn asymmetry_is_relative() {
        let a = Mat::from_vec(2, vec![1.0, 2.0, 2.0, 1.0]);
        assert_eq!(a.asymmetry(), 0.0);
        let b = Mat::from_vec(2, vec![1.0, 2.0, 2.5, 1.0]);
        assert!(b.asymmetry() > 0.1);
    }
}
