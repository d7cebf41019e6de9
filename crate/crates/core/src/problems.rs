//! Built-in benchmark problems.
//!
//! Example one lives on the positive half-line with metric `x^-2`:
//!
//! ```text
//! f1(x) = ln x
//! f2(x) = -ln x + e^{-2x} - e^{-2}
//! ```
//!
//! Its minimizer is `x* = 1` with `f(x*) = 0`, and `f` is nonconvex in every
//! neighbourhood of `x*`.
//!
//! Example two lives on the SPD cone of order `n >= 2`:
//!
//! ```text
//! F1(X) = ln det X
//! F2(X) = -4 ln det X + e^{-2 tr X} - e^{-2n}
//! F3(X) = tr X^-1 - n
//! ```
//!
//! with unique minimizer `X* = I` and `F(I) = 0`.
//!
//! Riemannian gradients follow from `grad h(x) = x^2 h'(x)` on the half-line
//! and `grad F(X) = X F'(X) X` on the cone.

use alloc::boxed::Box;
use alloc::vec;
use alloc::vec::Vec;

use crate::linalg::{Mat, SymEigen};
use crate::manifold::{ManifoldKind, ManifoldPoint};
use crate::math;
use crate::objective::{Component, MaxObjective};
use crate::{Error, Result};

#[derive(Debug)]
struct LogX;

impl Component for LogX {
    fn value(&self, p: &ManifoldPoint) -> f64 {
        math::ln(p.scalar())
    }

    fn gradient(&self, p: &ManifoldPoint) -> Vec<f64> {
        vec![p.scalar()]
    }
}

#[derive(Debug)]
struct NegLogPlusExp;

impl Component for NegLogPlusExp {
    fn value(&self, p: &ManifoldPoint) -> f64 {
        let x = p.scalar();
        -math::ln(x) + math::exp(-2.0 * x) - math::exp(-2.0)
    }

    fn gradient(&self, p: &ManifoldPoint) -> Vec<f64> {
        let x = p.scalar();
        vec![-x - 2.0 * x * x * math::exp(-2.0 * x)]
    }
}

/// `max{ln x, -ln x + e^{-2x} - e^{-2}}` on the positive half-line.
pub fn example_one() -> MaxObjective {
    MaxObjective::new(ManifoldKind::PositiveReals, vec![Box::new(LogX), Box::new(NegLogPlusExp)])
        .expect("two components")
}

pub const EXAMPLE_ONE_MINIMIZER: f64 = 1.0;
/// Level-set reference point `q = 5/16`.
pub const EXAMPLE_ONE_LEVEL_REFERENCE: f64 = 5.0 / 16.0;
/// The level-set threshold is `c = f(3/4)`.
pub const EXAMPLE_ONE_THRESHOLD_POINT: f64 = 0.75;

fn spd_eigenvalues(p: &ManifoldPoint) -> Vec<f64> {
    SymEigen::new(&p.matrix()).values
}

#[derive(Debug)]
struct LogDet;

impl Component for LogDet {
    fn value(&self, p: &ManifoldPoint) -> f64 {
        spd_eigenvalues(p).into_iter().map(math::ln).sum()
    }

    fn gradient(&self, p: &ManifoldPoint) -> Vec<f64> {
        p.coords().to_vec()
    }
}

#[derive(Debug)]
struct NegLogDetPlusExpTrace {
    n: usize,
}

impl Component for NegLogDetPlusExpTrace {
    fn value(&self, p: &ManifoldPoint) -> f64 {
        let logdet: f64 = spd_eigenvalues(p).into_iter().map(math::ln).sum();
        let tr = p.matrix().trace();
        -4.0 * logdet + math::exp(-2.0 * tr) - math::exp(-2.0 * self.n as f64)
    }

    fn gradient(&self, p: &ManifoldPoint) -> Vec<f64> {
        let x = p.matrix();
        let w = math::exp(-2.0 * x.trace());
        x.scaled(-4.0).sub(&x.matmul(&x).scaled(2.0 * w)).symmetrized().into_vec()
    }
}

#[derive(Debug)]
struct TraceInverse {
    n: usize,
}

impl Component for TraceInverse {
    fn value(&self, p: &ManifoldPoint) -> f64 {
        spd_eigenvalues(p).into_iter().map(|l| 1.0 / l).sum::<f64>() - self.n as f64
    }

    fn gradient(&self, _p: &ManifoldPoint) -> Vec<f64> {
        Mat::identity(self.n).scaled(-1.0).into_vec()
    }
}

/// `max{F1, F2, F3}` on the SPD cone of order `n >= 2`.
pub fn example_two(n: usize) -> Result<MaxObjective> {
    if n < 2 {
        return Err(Error::InvalidArgument("example two needs matrix order n >= 2".into()));
    }
    MaxObjective::new(
        ManifoldKind::Spd(n),
        vec![Box::new(LogDet), Box::new(NegLogDetPlusExpTrace { n }), Box::new(TraceInverse { n })],
    )
}

/// Level-set reference `Q = diag(1/4, ..., 1/4)`.
pub fn example_two_level_reference(n: usize) -> Result<ManifoldPoint> {
    ManifoldPoint::spd_diag(&vec![0.25; n])
}

pub fn example_two_minimizer(n: usize) -> Result<ManifoldPoint> {
    ManifoldPoint::spd_diag(&vec![1.0; n])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn example_one_gradients() {
        let f = example_one();
        let x = ManifoldPoint::positive(3.0).unwrap();
        assert_eq!(f.component_gradient(0, &x).unwrap().components(), &[3.0]);
        let g = f.component_gradient(1, &x).unwrap().components()[0];
        assert!((g - (-3.0 - 18.0 * (-6.0f64).exp())).abs() < 1e-14);
    }

    #[test]
    fn example_two_gradients() {
        let f = example_two(3).unwrap();
        let x = ManifoldPoint::spd(3, vec![2.0, 0.3, 0.0, 0.3, 1.0, 0.1, 0.0, 0.1, 0.5]).unwrap();
        let g3 = f.component_gradient(2, &x).unwrap();
        assert_eq!(g3.components(), Mat::identity(3).scaled(-1.0).as_slice());
        assert_eq!(f.component_gradient(0, &x).unwrap().components(), x.coords());
    }

    #[test]
    fn example_two_rejects_small_order() {
        assert!(example_two(1).is_err());
        assert!(example_two(0).is_err());
    }

    #[test]
    fn example_two_value_at_level_reference() {
        // F(Q) for n = 2 is the F2 branch: 4 ln 16 + e^-1 - e^-4.
        let f = example_two(2).unwrap();
        let q = example_two_level_reference(2).unwrap();
        let vals = f.component_values(&q).unwrap();
        assert!((vals[0] - (1.0f64 / 16.0).ln()).abs() < 1e-14);
        let f2 = 4.0 * 16f64.ln() + (-1.0f64).exp() - (-4.0f64).exp();
        assert!((vals[1] - f2).abs() < 1e-13);
        assert!((vals[2] - 6.0).abs() < 1e-14);
        assert!((f.eval(&q).unwrap() - f2).abs() < 1e-13);
    }
}
