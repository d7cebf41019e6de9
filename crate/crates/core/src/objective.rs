//! Max-type objectives `f(p) = max_i f_i(p)` built from smooth components.
//!
//! The subdifferential of `f` at `p` is represented by the convex hull of the
//! gradients of the active components. Its minimum-norm element gives the
//! stationarity residual: zero certifies `0 in conv{grad f_i(p) : i active}`,
//! which we report as hull stationarity.
//!
//! Component indices are zero-based in code.

use alloc::boxed::Box;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::manifold::{inner, ManifoldKind, ManifoldPoint, TangentVector};
use crate::qp::min_norm_weights;
use crate::{Error, Result};

/// Default relative tolerance for the active set.
pub const DEFAULT_EPS_ACTIVE: f64 = 1e-8;

/// One smooth piece `f_i` of a max-type objective.
pub trait Component: Send + Sync {
    fn value(&self, p: &ManifoldPoint) -> f64;

    /// Riemannian gradient components at `p`, in the coordinate layout of `p`.
    fn gradient(&self, p: &ManifoldPoint) -> Vec<f64>;

    /// Lipschitz constant of the gradient field on the working region, if known.
    fn lipschitz(&self) -> Option<f64> {
        None
    }
}

/// A [`Component`] assembled from closures.
pub struct FnComponent<F, G> {
    value: F,
    gradient: G,
    lipschitz: Option<f64>,
}

impl<F, G> FnComponent<F, G>
where
    F: Fn(&ManifoldPoint) -> f64 + Send + Sync,
    G: Fn(&ManifoldPoint) -> Vec<f64> + Send + Sync,
{
    pub fn new(value: F, gradient: G) -> Self {
        Self { value, gradient, lipschitz: None }
    }

    pub fn with_lipschitz(mut self, l: f64) -> Self {
        self.lipschitz = Some(l);
        self
    }
}

impl<F, G> Component for FnComponent<F, G>
where
    F: Fn(&ManifoldPoint) -> f64 + Send + Sync,
    G: Fn(&ManifoldPoint) -> Vec<f64> + Send + Sync,
{
    fn value(&self, p: &ManifoldPoint) -> f64 {
        (self.value)(p)
    }

    fn gradient(&self, p: &ManifoldPoint) -> Vec<f64> {
        (self.gradient)(p)
    }

    fn lipschitz(&self) -> Option<f64> {
        self.lipschitz
    }
}

impl<F, G> fmt::Debug for FnComponent<F, G> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FnComponent").field("lipschitz", &self.lipschitz).finish_non_exhaustive()
    }
}

/// Element of the gradient hull together with its convex weights.
#[derive(Debug, Clone, PartialEq)]
pub struct HullElement {
    /// One weight per component; zero outside the active set.
    pub weights: Vec<f64>,
    pub vector: TangentVector,
    /// Riemannian norm of `vector`.
    pub residual: f64,
}

/// `f = max_i f_i` on a fixed manifold.
pub struct MaxObjective {
    kind: ManifoldKind,
    components: Vec<Box<dyn Component>>,
    eps_active: f64,
}

impl fmt::Debug for MaxObjective {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("MaxObjective")
            .field("kind", &self.kind)
            .field("components", &self.components.len())
            .field("eps_active", &self.eps_active)
            .finish()
    }
}

impl MaxObjective {
    pub fn new(kind: ManifoldKind, components: Vec<Box<dyn Component>>) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::InvalidArgument("a max objective needs at least one component".into()));
        }
        Ok(Self { kind, components, eps_active: DEFAULT_EPS_ACTIVE })
    }

    /// Index `i` is active at `p` when `f_i(p) >= f(p) - eps * (1 + |f(p)|)`.
    pub fn with_eps_active(mut self, eps: f64) -> Result<Self> {
        if !(eps >= 0.0) {
            return Err(Error::InvalidArgument("eps_active must be nonnegative".into()));
        }
        self.eps_active = eps;
        Ok(self)
    }

    pub fn kind(&self) -> ManifoldKind {
        self.kind
    }

    pub fn len(&self) -> usize {
        self.components.len()
    }

    pub fn is_empty(&self) -> bool {
        self.components.is_empty()
    }

    pub fn eps_active(&self) -> f64 {
        self.eps_active
    }

    pub fn component(&self, i: usize) -> &dyn Component {
        self.components[i].as_ref()
    }

    pub fn declared_lipschitz(&self) -> Vec<Option<f64>> {
        self.components.iter().map(|c| c.lipschitz()).collect()
    }

    fn check_point(&self, p: &ManifoldPoint) -> Result<()> {
        if p.kind() != self.kind {
            return Err(Error::InvalidPoint(format!("point on {} but objective on {}", p.kind(), self.kind)));
        }
        Ok(())
    }

    pub fn component_values(&self, p: &ManifoldPoint) -> Result<Vec<f64>> {
        self.check_point(p)?;
        Ok(self.components.iter().map(|c| c.value(p)).collect())
    }

    pub fn component_gradient(&self, i: usize, p: &ManifoldPoint) -> Result<TangentVector> {
        self.check_point(p)?;
        p.tangent(self.components[i].gradient(p))
    }

    pub fn gradients(&self, p: &ManifoldPoint) -> Result<Vec<TangentVector>> {
        (0..self.len()).map(|i| self.component_gradient(i, p)).collect()
    }

    pub fn eval(&self, p: &ManifoldPoint) -> Result<f64> {
        Ok(max_of(&self.component_values(p)?))
    }

    pub(crate) fn active_from_values(&self, values: &[f64]) -> Vec<usize> {
        let f = max_of(values);
        let cutoff = f - self.eps_active * (1.0 + f.abs());
        let active: Vec<usize> = (0..values.len()).filter(|&i| values[i] >= cutoff).collect();
        debug_assert!(!active.is_empty());
        active
    }

    /// Indices attaining the max up to the active-set tolerance; never empty.
    pub fn active_set(&self, p: &ManifoldPoint) -> Result<Vec<usize>> {
        Ok(self.active_from_values(&self.component_values(p)?))
    }

    /// `f'(p; v) = max over active i of <grad f_i(p), v>`.
    pub fn directional_derivative(&self, p: &ManifoldPoint, v: &TangentVector) -> Result<f64> {
        if v.base() != p {
            return Err(Error::MismatchedBase);
        }
        let active = self.active_set(p)?;
        let mut best = f64::NEG_INFINITY;
        for i in active {
            best = best.max(inner(&self.component_gradient(i, p)?, v)?);
        }
        Ok(best)
    }

    /// Minimum-norm element of `conv{grad f_i(p) : i active}`.
    pub fn hull_min_norm(&self, p: &ManifoldPoint) -> Result<HullElement> {
        let active = self.active_set(p)?;
        let grads = active.iter().map(|&i| self.component_gradient(i, p)).collect::<Result<Vec<_>>>()?;
        min_norm_element(p, &grads, &active, self.len())
    }

    /// Distance from zero to the active gradient hull.
    pub fn stationarity_residual(&self, p: &ManifoldPoint) -> Result<f64> {
        Ok(self.hull_min_norm(p)?.residual)
    }
}

pub(crate) fn max_of(values: &[f64]) -> f64 {
    values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
}

/// Minimum-norm convex combination of `vectors` (all based at `base`).
/// `indices[j]` is the component index of `vectors[j]`; weights are scattered
/// into a length-`m` vector.
pub(crate) fn min_norm_element(
    base: &ManifoldPoint,
    vectors: &[TangentVector],
    indices: &[usize],
    m: usize,
) -> Result<HullElement> {
    let k = vectors.len();
    let mut gram = vec![0.0; k * k];
    for i in 0..k {
        for j in i..k {
            let g = inner(&vectors[i], &vectors[j])?;
            gram[i * k + j] = g;
            gram[j * k + i] = g;
        }
    }
    let local = min_norm_weights(&gram, k);
    let vector = TangentVector::combination(base, &local, vectors)?;
    let mut weights = vec![0.0; m];
    for (&i, &w) in indices.iter().zip(&local) {
        weights[i] = w;
    }
    let residual = vector.norm();
    Ok(HullElement { weights, vector, residual })
}
