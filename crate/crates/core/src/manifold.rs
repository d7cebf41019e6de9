//! Geometry of the three supported Hadamard manifolds.
//!
//! * `Euclidean(n)`: flat `R^n`.
//! * `PositiveReals`: `(0, inf)` with metric `<u, v>_x = u v / x^2`. The map
//!   `t -> e^t` is an isometry from the real line, so `d(x, y) = |ln x - ln y|`.
//! * `Spd(n)`: symmetric positive definite `n x n` matrices with the
//!   affine-invariant metric `<U, V>_X = tr(V X^-1 U X^-1)`, the Hessian metric
//!   of `-ln det`.
//!
//! All three have nonpositive curvature, so `exp_p` is a global
//! diffeomorphism and `log_map` is defined everywhere.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::linalg::{sym_expm, sym_logm, Mat, SymEigen};
use crate::math;
use crate::{Error, Result};

/// Relative Frobenius tolerance for symmetry of SPD points and tangents.
pub const SYM_TOL: f64 = 1e-10;
/// Eigenvalues at or below this are outside the SPD cone.
pub const PD_FLOOR: f64 = 1e-12;
/// Round-trip and norm/distance consistency tolerance.
pub const GEO_TOL: f64 = 1e-8;
/// Parallel transport isometry tolerance.
pub const ISO_TOL: f64 = 1e-8;
/// Strong monotonicity tolerance for `grad (1/2) d^2`.
pub const MONO_TOL: f64 = 1e-8;

/// Which manifold a point lives on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ManifoldKind {
    Euclidean(usize),
    PositiveReals,
    Spd(usize),
}

impl ManifoldKind {
    pub fn euclidean(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidArgument("Euclidean dimension must be at least 1".into()));
        }
        Ok(Self::Euclidean(n))
    }

    pub fn spd(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidArgument("SPD matrix order must be at least 1".into()));
        }
        Ok(Self::Spd(n))
    }

    /// Number of stored coordinates of a point (matrices are stored row-major).
    pub fn coordinate_len(&self) -> usize {
        match *self {
            Self::Euclidean(n) => n,
            Self::PositiveReals => 1,
            Self::Spd(n) => n * n,
        }
    }

    /// Intrinsic dimension.
    pub fn dimension(&self) -> usize {
        match *self {
            Self::Euclidean(n) => n,
            Self::PositiveReals => 1,
            Self::Spd(n) => n * (n + 1) / 2,
        }
    }

    /// The origin, `1`, or the identity matrix.
    pub fn canonical_center(&self) -> ManifoldPoint {
        let data = match *self {
            Self::Euclidean(n) => vec![0.0; n],
            Self::PositiveReals => vec![1.0],
            Self::Spd(n) => Mat::identity(n).into_vec(),
        };
        ManifoldPoint { kind: *self, data }
    }

    fn check_len(&self, len: usize) -> Result<()> {
        if len != self.coordinate_len() {
            return Err(Error::InvalidPoint(format!(
                "expected {} coordinates for {}, got {}",
                self.coordinate_len(),
                self,
                len
            )));
        }
        Ok(())
    }
}

impl fmt::Display for ManifoldKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Euclidean(n) => write!(f, "euclidean({n})"),
            Self::PositiveReals => f.write_str("positive-reals"),
            Self::Spd(n) => write!(f, "spd({n})"),
        }
    }
}

/// A validated point on one of the supported manifolds.
#[derive(Debug, Clone, PartialEq)]
pub struct ManifoldPoint {
    kind: ManifoldKind,
    data: Vec<f64>,
}

impl ManifoldPoint {
    /// Validates `data` against the invariants of `kind`. SPD input that is
    /// symmetric within [`SYM_TOL`] is symmetrized exactly.
    pub fn new(kind: ManifoldKind, data: Vec<f64>) -> Result<Self> {
        kind.check_len(data.len())?;
        if data.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidPoint("non-finite coordinate".into()));
        }
        match kind {
            ManifoldKind::Euclidean(_) => Ok(Self { kind, data }),
            ManifoldKind::PositiveReals => {
                if data[0] <= 0.0 {
                    return Err(Error::InvalidPoint(format!("{} is not positive", data[0])));
                }
                Ok(Self { kind, data })
            }
            ManifoldKind::Spd(n) => {
                let m = Mat::from_vec(n, data);
                let asym = m.asymmetry();
                if asym > SYM_TOL {
                    return Err(Error::InvalidPoint(format!("matrix is not symmetric (relative asymmetry {asym:e})")));
                }
                Self::from_spd_matrix(m.symmetrized())
            }
        }
    }

    pub fn positive(x: f64) -> Result<Self> {
        Self::new(ManifoldKind::PositiveReals, vec![x])
    }

    pub fn euclidean(coords: Vec<f64>) -> Result<Self> {
        let kind = ManifoldKind::euclidean(coords.len())?;
        Self::new(kind, coords)
    }

    /// SPD point from row-major entries.
    pub fn spd(n: usize, entries: Vec<f64>) -> Result<Self> {
        Self::new(ManifoldKind::spd(n)?, entries)
    }

    pub fn spd_diag(values: &[f64]) -> Result<Self> {
        Self::from_spd_matrix(Mat::diag(values))
    }

    fn from_spd_matrix(m: Mat) -> Result<Self> {
        if !m.is_finite() {
            return Err(Error::InvalidPoint("non-finite matrix entry".into()));
        }
        let min = SymEigen::new(&m).min();
        if !(min > PD_FLOOR) {
            return Err(Error::InvalidPoint(format!("smallest eigenvalue {min:e} is not above {PD_FLOOR:e}")));
        }
        let n = m.order();
        Ok(Self { kind: ManifoldKind::Spd(n), data: m.into_vec() })
    }

    #[inline]
    pub fn kind(&self) -> ManifoldKind {
        self.kind
    }

    #[inline]
    pub fn coords(&self) -> &[f64] {
        &self.data
    }

    /// The scalar value of a `PositiveReals` point (first coordinate otherwise).
    #[inline]
    pub fn scalar(&self) -> f64 {
        self.data[0]
    }

    /// The point as a matrix. Only meaningful for `Spd`.
    pub fn matrix(&self) -> Mat {
        match self.kind {
            ManifoldKind::Spd(n) => Mat::from_slice(n, &self.data),
            _ => Mat::from_slice(1, &self.data[..1]),
        }
    }

    pub fn zero_tangent(&self) -> TangentVector {
        TangentVector { base: self.clone(), data: vec![0.0; self.data.len()] }
    }

    /// Tangent vector at this point with the given components.
    pub fn tangent(&self, components: Vec<f64>) -> Result<TangentVector> {
        TangentVector::new(self.clone(), components)
    }
}

/// A tangent vector together with its base point.
#[derive(Debug, Clone, PartialEq)]
pub struct TangentVector {
    base: ManifoldPoint,
    data: Vec<f64>,
}

impl TangentVector {
    /// SPD tangents must be symmetric within [`SYM_TOL`]; they are then
    /// symmetrized exactly.
    pub fn new(base: ManifoldPoint, components: Vec<f64>) -> Result<Self> {
        if components.len() != base.data.len() {
            return Err(Error::InvalidArgument(format!(
                "tangent has {} components, base point has {}",
                components.len(),
                base.data.len()
            )));
        }
        if components.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidArgument("non-finite tangent component".into()));
        }
        let data = match base.kind {
            ManifoldKind::Spd(n) => {
                let m = Mat::from_vec(n, components);
                let asym = m.asymmetry();
                if asym > SYM_TOL {
                    return Err(Error::InvalidArgument(format!(
                        "SPD tangent is not symmetric (relative asymmetry {asym:e})"
                    )));
                }
                m.symmetrized().into_vec()
            }
            _ => components,
        };
        Ok(Self { base, data })
    }

    /// Builds a tangent from components known to satisfy the invariants.
    pub(crate) fn from_raw(base: ManifoldPoint, data: Vec<f64>) -> Self {
        debug_assert_eq!(base.data.len(), data.len());
        Self { base, data }
    }

    fn from_matrix(base: ManifoldPoint, m: Mat) -> Self {
        Self::from_raw(base, m.symmetrized().into_vec())
    }

    #[inline]
    pub fn base(&self) -> &ManifoldPoint {
        &self.base
    }

    #[inline]
    pub fn components(&self) -> &[f64] {
        &self.data
    }

    pub fn matrix(&self) -> Mat {
        match self.base.kind {
            ManifoldKind::Spd(n) => Mat::from_slice(n, &self.data),
            _ => Mat::from_slice(1, &self.data[..1]),
        }
    }

    /// Riemannian norm at the base point.
    pub fn norm(&self) -> f64 {
        math::sqrt(inner_unchecked(self, self).max(0.0))
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self::from_raw(self.base.clone(), self.data.iter().map(|x| x * s).collect())
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        same_base(self, other)?;
        Ok(Self::from_raw(self.base.clone(), self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect()))
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        same_base(self, other)?;
        Ok(Self::from_raw(self.base.clone(), self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect()))
    }

    /// `sum_i weights[i] * vectors[i]`; all vectors must share `base`.
    pub fn combination(base: &ManifoldPoint, weights: &[f64], vectors: &[TangentVector]) -> Result<Self> {
        if weights.len() != vectors.len() {
            return Err(Error::InvalidArgument("weights and vectors differ in length".into()));
        }
        let mut data = vec![0.0; base.data.len()];
        for (w, v) in weights.iter().zip(vectors) {
            if v.base != *base {
                return Err(Error::MismatchedBase);
            }
            for (d, x) in data.iter_mut().zip(&v.data) {
                *d += w * x;
            }
        }
        Ok(Self::from_raw(base.clone(), data))
    }
}

fn same_base(u: &TangentVector, v: &TangentVector) -> Result<()> {
    if u.base != v.base {
        return Err(Error::MismatchedBase);
    }
    Ok(())
}

fn same_kind(p: &ManifoldPoint, q: &ManifoldPoint) -> Result<()> {
    if p.kind != q.kind {
        return Err(Error::MismatchedKind);
    }
    Ok(())
}

/// Square root and inverse square root of an SPD matrix.
struct SpdFrame {
    sqrt: Mat,
    inv_sqrt: Mat,
}

impl SpdFrame {
    fn new(x: &Mat) -> Self {
        let e = SymEigen::new(x);
        Self { sqrt: e.map(math::sqrt), inv_sqrt: e.map(|l| 1.0 / math::sqrt(l)) }
    }

    /// `X^-1/2 A X^-1/2`
    fn whiten(&self, a: &Mat) -> Mat {
        Mat::congruence(&self.inv_sqrt, a)
    }

    /// `X^1/2 A X^1/2`
    fn color(&self, a: &Mat) -> Mat {
        Mat::congruence(&self.sqrt, a)
    }
}

fn inner_unchecked(u: &TangentVector, v: &TangentVector) -> f64 {
    match u.base.kind {
        ManifoldKind::Euclidean(_) => u.data.iter().zip(&v.data).map(|(a, b)| a * b).sum(),
        ManifoldKind::PositiveReals => {
            let x = u.base.data[0];
            u.data[0] * v.data[0] / (x * x)
        }
        ManifoldKind::Spd(_) => {
            let frame = SpdFrame::new(&u.base.matrix());
            let a = frame.whiten(&u.matrix());
            if u.data == v.data {
                a.frobenius_dot(&a)
            } else {
                a.frobenius_dot(&frame.whiten(&v.matrix()))
            }
        }
    }
}

/// Riemannian inner product of two tangents at the same base point.
pub fn inner(u: &TangentVector, v: &TangentVector) -> Result<f64> {
    same_base(u, v)?;
    Ok(inner_unchecked(u, v))
}

/// `exp_p(v)`: the point reached at time 1 along the geodesic with initial velocity `v`.
pub fn exp_map(p: &ManifoldPoint, v: &TangentVector) -> Result<ManifoldPoint> {
    if v.base != *p {
        return Err(Error::MismatchedBase);
    }
    match p.kind {
        ManifoldKind::Euclidean(_) => {
            ManifoldPoint::new(p.kind, p.data.iter().zip(&v.data).map(|(a, b)| a + b).collect())
        }
        ManifoldKind::PositiveReals => {
            let x = p.data[0];
            ManifoldPoint::positive(x * math::exp(v.data[0] / x))
        }
        ManifoldKind::Spd(_) => {
            let frame = SpdFrame::new(&p.matrix());
            let inner = sym_expm(&frame.whiten(&v.matrix()));
            ManifoldPoint::from_spd_matrix(frame.color(&inner))
        }
    }
}

/// `log_p(q) = exp_p^-1(q)`, based at `p`.
pub fn log_map(p: &ManifoldPoint, q: &ManifoldPoint) -> Result<TangentVector> {
    same_kind(p, q)?;
    if p == q {
        return Ok(p.zero_tangent());
    }
    Ok(match p.kind {
        ManifoldKind::Euclidean(_) => {
            TangentVector::from_raw(p.clone(), q.data.iter().zip(&p.data).map(|(a, b)| a - b).collect())
        }
        ManifoldKind::PositiveReals => {
            let x = p.data[0];
            TangentVector::from_raw(p.clone(), vec![x * (math::ln(q.data[0]) - math::ln(x))])
        }
        ManifoldKind::Spd(_) => {
            let frame = SpdFrame::new(&p.matrix());
            let l = sym_logm(&frame.whiten(&q.matrix()));
            TangentVector::from_matrix(p.clone(), frame.color(&l))
        }
    })
}

/// Geodesic distance.
pub fn distance(p: &ManifoldPoint, q: &ManifoldPoint) -> Result<f64> {
    same_kind(p, q)?;
    if p == q {
        return Ok(0.0);
    }
    Ok(match p.kind {
        ManifoldKind::Euclidean(_) => math::sqrt(p.data.iter().zip(&q.data).map(|(a, b)| (a - b) * (a - b)).sum()),
        ManifoldKind::PositiveReals => (math::ln(p.data[0]) - math::ln(q.data[0])).abs(),
        ManifoldKind::Spd(_) => {
            let frame = SpdFrame::new(&p.matrix());
            let e = SymEigen::new(&frame.whiten(&q.matrix()));
            math::sqrt(e.values.iter().map(|&l| math::ln(l) * math::ln(l)).sum())
        }
    })
}

/// Parallel transport of `v` from `p` to `q` along the connecting geodesic.
///
/// On `Spd` this is `E V E^T` with `E = (Y X^-1)^{1/2}
/// = X^{1/2} (X^{-1/2} Y X^{-1/2})^{1/2} X^{-1/2}`.
pub fn parallel_transport(p: &ManifoldPoint, q: &ManifoldPoint, v: &TangentVector) -> Result<TangentVector> {
    if v.base != *p {
        return Err(Error::MismatchedBase);
    }
    same_kind(p, q)?;
    if p == q {
        return Ok(v.clone());
    }
    Ok(match p.kind {
        ManifoldKind::Euclidean(_) => TangentVector::from_raw(q.clone(), v.data.clone()),
        ManifoldKind::PositiveReals => TangentVector::from_raw(q.clone(), vec![v.data[0] * q.data[0] / p.data[0]]),
        ManifoldKind::Spd(_) => {
            let frame = SpdFrame::new(&p.matrix());
            let s_half = SymEigen::new(&frame.whiten(&q.matrix())).map(math::sqrt);
            let e = frame.sqrt.matmul(&s_half).matmul(&frame.inv_sqrt);
            let moved = e.matmul(&v.matrix()).matmul(&e.transpose());
            TangentVector::from_matrix(q.clone(), moved)
        }
    })
}

/// Riemannian gradient at `q` of `(1/2) d^2(., anchor)`, i.e. `-log_q(anchor)`.
pub fn grad_half_dist_sq(anchor: &ManifoldPoint, q: &ManifoldPoint) -> Result<TangentVector> {
    Ok(log_map(q, anchor)?.scaled(-1.0))
}

/// Unit-norm tangent at `p` in a random direction.
pub(crate) fn random_unit_tangent<R: Rng + ?Sized>(p: &ManifoldPoint, rng: &mut R) -> TangentVector {
    match p.kind {
        ManifoldKind::Euclidean(n) => loop {
            let d: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..=1.0)).collect();
            let norm = math::sqrt(d.iter().map(|x| x * x).sum());
            if norm > 1e-3 {
                return TangentVector::from_raw(p.clone(), d.iter().map(|x| x / norm).collect());
            }
        },
        ManifoldKind::PositiveReals => {
            let sign = if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
            TangentVector::from_raw(p.clone(), vec![sign * p.data[0]])
        }
        ManifoldKind::Spd(n) => loop {
            let mut w = Mat::zeros(n);
            for i in 0..n {
                for j in i..n {
                    let x = rng.gen_range(-1.0..=1.0);
                    w[(i, j)] = x;
                    w[(j, i)] = x;
                }
            }
            let norm = w.frobenius_norm();
            if norm > 1e-3 {
                let frame = SpdFrame::new(&p.matrix());
                return TangentVector::from_matrix(p.clone(), frame.color(&w.scaled(1.0 / norm)));
            }
        },
    }
}

/// Point `exp_center(v)` with `|v| = radius * u`, `u` uniform on `[0, 1]`.
pub(crate) fn sample_in_ball<R: Rng + ?Sized>(
    center: &ManifoldPoint,
    radius: f64,
    rng: &mut R,
) -> Result<ManifoldPoint> {
    let r = radius * rng.gen_range(0.0..=1.0);
    exp_map(center, &random_unit_tangent(center, rng).scaled(r))
}

/// Deterministic random point within geodesic distance `spread` of the
/// canonical center of `kind`.
pub fn random_point(kind: ManifoldKind, spread: f64, seed: u64) -> Result<ManifoldPoint> {
    if !(spread > 0.0) {
        return Err(Error::InvalidArgument("spread must be positive".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    sample_in_ball(&kind.canonical_center(), spread, &mut rng)
}

/// Deterministic random tangent at `p` with norm at most `scale`.
pub fn random_tangent(p: &ManifoldPoint, scale: f64, seed: u64) -> Result<TangentVector> {
    if !(scale > 0.0) {
        return Err(Error::InvalidArgument("scale must be positive".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let r = scale * rng.gen_range(0.0..=1.0);
    Ok(random_unit_tangent(p, &mut rng).scaled(r))
}
