//! Convex quadratic programs over the probability simplex,
//! `min 1/2 a^T H a - c^T a` subject to `a >= 0`, `sum a = 1`.
//!
//! Small instances are solved exactly by enumerating faces of the simplex:
//! on each face the equality-constrained KKT system is solved and the best
//! feasible candidate wins. The optimum always lies in the relative interior
//! of some face on which the restricted Hessian is nonsingular, so the
//! enumeration is exact up to rounding. Larger instances fall back to
//! projected gradient descent.

use alloc::vec;
use alloc::vec::Vec;

use crate::linalg::solve_dense;

/// Objective-change tolerance of the projected-gradient fallback.
pub const QP_TOL: f64 = 1e-10;
/// Iteration cap of the projected-gradient fallback.
pub const QP_MAX_ITERS: usize = 10_000;
/// Largest problem solved by face enumeration.
pub const MAX_ENUMERATION: usize = 12;

/// Row-major symmetric positive semidefinite `k x k` matrix plus linear term.
#[derive(Debug, Clone)]
pub struct SimplexQp<'a> {
    pub hessian: &'a [f64],
    pub linear: &'a [f64],
}

impl SimplexQp<'_> {
    fn dim(&self) -> usize {
        self.linear.len()
    }

    pub fn objective(&self, a: &[f64]) -> f64 {
        let k = self.dim();
        let mut quad = 0.0;
        for i in 0..k {
            if a[i] == 0.0 {
                continue;
            }
            let row: f64 = (0..k).map(|j| self.hessian[i * k + j] * a[j]).sum();
            quad += a[i] * row;
        }
        0.5 * quad - a.iter().zip(self.linear).map(|(x, c)| x * c).sum::<f64>()
    }

    /// Returns minimizing weights.
    pub fn solve(&self) -> Vec<f64> {
        let k = self.dim();
        debug_assert_eq!(self.hessian.len(), k * k);
        match k {
            0 => Vec::new(),
            1 => vec![1.0],
            _ if k <= MAX_ENUMERATION => self.solve_by_faces(),
            _ => self.solve_projected_gradient(),
        }
    }

    fn solve_by_faces(&self) -> Vec<f64> {
        let k = self.dim();
        let mut best = vec![0.0; k];
        let mut best_val = f64::INFINITY;
        let mut idx = Vec::with_capacity(k);
        for mask in 1u32..(1u32 << k) {
            idx.clear();
            idx.extend((0..k).filter(|i| mask & (1 << i) != 0));
            let Some(candidate) = self.face_minimizer(&idx) else {
                continue;
            };
            let val = self.objective(&candidate);
            if val < best_val {
                best_val = val;
                best = candidate;
            }
        }
        best
    }

    /// Minimizer over the affine hull of face `idx`, if it is nonsingular and
    /// lies inside the simplex.
    fn face_minimizer(&self, idx: &[usize]) -> Option<Vec<f64>> {
        let k = self.dim();
        let s = idx.len();
        let mut full = vec![0.0; k];
        if s == 1 {
            full[idx[0]] = 1.0;
            return Some(full);
        }
        // [H_SS 1; 1^T 0] [a; nu] = [c_S; 1]
        let dim = s + 1;
        let mut a = vec![0.0; dim * dim];
        let mut b = vec![0.0; dim];
        for (r, &i) in idx.iter().enumerate() {
            for (c, &j) in idx.iter().enumerate() {
                a[r * dim + c] = self.hessian[i * k + j];
            }
            a[r * dim + s] = 1.0;
            a[s * dim + r] = 1.0;
            b[r] = self.linear[i];
        }
        b[s] = 1.0;
        let x = solve_dense(a, b, 1e-13)?;
        if x[..s].iter().any(|&w| !w.is_finite() || w < -1e-12) {
            return None;
        }
        let mut total = 0.0;
        for (r, &i) in idx.iter().enumerate() {
            full[i] = x[r].max(0.0);
            total += full[i];
        }
        if !(total > 0.0) {
            return None;
        }
        full.iter_mut().for_each(|w| *w /= total);
        Some(full)
    }

    fn solve_projected_gradient(&self) -> Vec<f64> {
        let k = self.dim();
        // Gershgorin bound on the largest eigenvalue.
        let lip = (0..k)
            .map(|i| (0..k).map(|j| self.hessian[i * k + j].abs()).sum::<f64>())
            .fold(0.0f64, f64::max)
            .max(f64::MIN_POSITIVE);
        let mut a = vec![1.0 / k as f64; k];
        let mut val = self.objective(&a);
        for _ in 0..QP_MAX_ITERS {
            let step: Vec<f64> = (0..k)
                .map(|i| {
                    let g: f64 = (0..k).map(|j| self.hessian[i * k + j] * a[j]).sum::<f64>() - self.linear[i];
                    a[i] - g / lip
                })
                .collect();
            let next = project_to_simplex(&step);
            let next_val = self.objective(&next);
            let change = (val - next_val).abs();
            a = next;
            val = next_val;
            if change <= QP_TOL * (1.0 + val.abs()) {
                break;
            }
        }
        a
    }
}

/// Euclidean projection onto the probability simplex (sort-based).
pub fn project_to_simplex(y: &[f64]) -> Vec<f64> {
    let mut sorted = y.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let mut cumsum = 0.0;
    let mut theta = 0.0;
    for (i, &u) in sorted.iter().enumerate() {
        cumsum += u;
        let t = (cumsum - 1.0) / (i as f64 + 1.0);
        if u - t > 0.0 {
            theta = t;
        }
    }
    y.iter().map(|&v| (v - theta).max(0.0)).collect()
}

/// Weights of the minimum-norm point of the convex hull of vectors with the
/// given Gram matrix (row-major `m x m`).
pub fn min_norm_weights(gram: &[f64], m: usize) -> Vec<f64> {
    match m {
        0 => Vec::new(),
        1 => vec![1.0],
        2 => {
            // min over t in [0,1] of |t g0 + (1-t) g1|^2
            let (g00, g01, g11) = (gram[0], gram[1], gram[3]);
            let denom = g00 - 2.0 * g01 + g11;
            let t = if denom > 0.0 { ((g11 - g01) / denom).clamp(0.0, 1.0) } else { 1.0 };
            vec![t, 1.0 - t]
        }
        _ => {
            let zeros = vec![0.0; m];
            SimplexQp { hessian: gram, linear: &zeros }.solve()
        }
    }
}
