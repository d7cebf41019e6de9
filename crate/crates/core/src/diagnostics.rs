//! Randomized probes of the geometric and calculus facts the solver relies on.
//!
//! Each probe draws `trials` samples from a seeded generator, measures the
//! violation of one inequality or identity, and reports the worst case.
//! Probes are deterministic for a fixed seed.

use alloc::boxed::Box;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::manifold::{
    distance, exp_map, grad_half_dist_sq, inner, log_map, parallel_transport, random_unit_tangent, sample_in_ball,
    ManifoldKind, ManifoldPoint, GEO_TOL, ISO_TOL, MONO_TOL,
};
use crate::math;
use crate::objective::{FnComponent, MaxObjective};
use crate::problems::{example_one, example_two};
use crate::prox::{estimate_lipschitz, max_lipschitz, unit_interval, Region};
use crate::{Error, Result};

/// Relative tolerance of the finite-difference gradient probe.
pub const FD_TOL: f64 = 1e-5;
/// Central-difference step along geodesics.
pub const FD_STEP: f64 = 1e-5;
/// Absolute tolerance of the strong-convexity probe.
pub const CONVEXITY_TOL: f64 = 1e-8;
/// Relative slack on Lipschitz bounds for held-out pairs.
pub const LIPSCHITZ_REL_SLACK: f64 = 1e-6;
/// Absolute floor under which Lipschitz ratios count as rounding noise.
pub const LIPSCHITZ_ABS_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct ProbeReport {
    pub name: String,
    pub trials: usize,
    pub worst_violation: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl ProbeReport {
    fn new(name: impl Into<String>, trials: usize, worst: f64, tolerance: f64) -> Self {
        Self { name: name.into(), trials, worst_violation: worst, tolerance, pass: worst <= tolerance }
    }
}

fn check_trials(trials: usize) -> Result<()> {
    if trials == 0 {
        return Err(Error::InvalidArgument("trials must be at least 1".into()));
    }
    Ok(())
}

fn check_region(kind: ManifoldKind, region: &Region) -> Result<()> {
    if region.center.kind() != kind {
        return Err(Error::InvalidPoint("region center is on a different manifold".into()));
    }
    Ok(())
}

/// `exp(log(p, exp(p, v)))` and `d(p, exp(p, v)) = |v|`, relative to `1 + |v|`.
pub fn probe_round_trip(region: &Region, tangent_scale: f64, trials: usize, seed: u64) -> Result<ProbeReport> {
    check_trials(trials)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    for _ in 0..trials {
        let p = sample_in_ball(&region.center, region.radius, &mut rng)?;
        let r = tangent_scale * unit_interval(&mut rng);
        let v = random_unit_tangent(&p, &mut rng).scaled(r);
        let norm = v.norm();
        let q = exp_map(&p, &v)?;
        let back = log_map(&p, &q)?;
        let err_log = back.sub(&v)?.norm() / (1.0 + norm);
        let err_dist = (distance(&p, &q)? - norm).abs() / (1.0 + norm);
        worst = worst.max(err_log).max(err_dist);
    }
    Ok(ProbeReport::new("round_trip", trials, worst, GEO_TOL))
}

/// Parallel transport preserves inner products.
pub fn probe_transport_isometry(region: &Region, trials: usize, seed: u64) -> Result<ProbeReport> {
    check_trials(trials)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    for _ in 0..trials {
        let p = sample_in_ball(&region.center, region.radius, &mut rng)?;
        let q = sample_in_ball(&region.center, region.radius, &mut rng)?;
        let u = random_unit_tangent(&p, &mut rng).scaled(2.0 * unit_interval(&mut rng));
        let v = random_unit_tangent(&p, &mut rng).scaled(2.0 * unit_interval(&mut rng));
        let before = inner(&u, &v)?;
        let after = inner(&parallel_transport(&p, &q, &u)?, &parallel_transport(&p, &q, &v)?)?;
        worst = worst.max((after - before).abs() / (1.0 + before.abs()));
    }
    Ok(ProbeReport::new("transport_isometry", trials, worst, ISO_TOL))
}

/// Strong monotonicity (modulus 1) of `X = grad (1/2) d^2(., anchor)`:
/// `<log_q p, P_pq X(p) - X(q)> >= d^2(p, q)`.
pub fn probe_strong_monotonicity(
    kind: ManifoldKind,
    anchor: &ManifoldPoint,
    region: &Region,
    trials: usize,
    seed: u64,
) -> Result<ProbeReport> {
    check_trials(trials)?;
    check_region(kind, region)?;
    if anchor.kind() != kind {
        return Err(Error::InvalidPoint("anchor is on a different manifold".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = f64::NEG_INFINITY;
    for _ in 0..trials {
        let p = sample_in_ball(&region.center, region.radius, &mut rng)?;
        let q = sample_in_ball(&region.center, region.radius, &mut rng)?;
        let field_p = grad_half_dist_sq(anchor, &p)?;
        let field_q = grad_half_dist_sq(anchor, &q)?;
        let diff = parallel_transport(&p, &q, &field_p)?.sub(&field_q)?;
        let lhs = inner(&log_map(&q, &p)?, &diff)?;
        let d = distance(&p, &q)?;
        worst = worst.max(d * d - lhs);
    }
    Ok(ProbeReport::new("strong_monotonicity", trials, worst.max(0.0), MONO_TOL))
}

/// Central finite differences of each `f_i` along random geodesics against
/// `<grad f_i(p), v>`; error relative to `max(1, |<grad f_i, v>|)`.
pub fn probe_gradient_fd(obj: &MaxObjective, region: &Region, trials: usize, seed: u64) -> Result<ProbeReport> {
    check_trials(trials)?;
    check_region(obj.kind(), region)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    for _ in 0..trials {
        let p = sample_in_ball(&region.center, region.radius, &mut rng)?;
        let v = random_unit_tangent(&p, &mut rng);
        let plus = obj.component_values(&exp_map(&p, &v.scaled(FD_STEP))?)?;
        let minus = obj.component_values(&exp_map(&p, &v.scaled(-FD_STEP))?)?;
        for i in 0..obj.len() {
            let analytic = inner(&obj.component_gradient(i, &p)?, &v)?;
            let fd = (plus[i] - minus[i]) / (2.0 * FD_STEP);
            worst = worst.max((fd - analytic).abs() / analytic.abs().max(1.0));
        }
    }
    Ok(ProbeReport::new("gradient_fd", trials, worst, FD_TOL))
}

/// Strong convexity of `psi = f + lambda/2 d^2(., anchor)` with modulus
/// `lambda - max_i L_i` along random geodesic segments in `region`.
pub fn probe_max_strong_convexity(
    obj: &MaxObjective,
    anchor: &ManifoldPoint,
    lambda: f64,
    lipschitz: &[f64],
    region: &Region,
    trials: usize,
    seed: u64,
) -> Result<ProbeReport> {
    check_trials(trials)?;
    check_region(obj.kind(), region)?;
    let max_l = max_lipschitz(lipschitz);
    let beta = lambda - max_l;
    if !(beta > 0.0) {
        return Err(Error::LambdaTooSmall { lambda, max_lipschitz: max_l });
    }
    let psi = |p: &ManifoldPoint| -> Result<f64> {
        let d = distance(p, anchor)?;
        Ok(obj.eval(p)? + 0.5 * lambda * d * d)
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = f64::NEG_INFINITY;
    for _ in 0..trials {
        let p0 = sample_in_ball(&region.center, region.radius, &mut rng)?;
        let p1 = sample_in_ball(&region.center, region.radius, &mut rng)?;
        let t = unit_interval(&mut rng);
        let dir = log_map(&p0, &p1)?;
        let d = dir.norm();
        let mid = exp_map(&p0, &dir.scaled(t))?;
        let bound = t * psi(&p1)? + (1.0 - t) * psi(&p0)? - 0.5 * t * (1.0 - t) * beta * d * d;
        worst = worst.max(psi(&mid)? - bound);
    }
    Ok(ProbeReport::new("max_strong_convexity", trials, worst.max(0.0), CONVEXITY_TOL))
}

/// Held-out pairs must satisfy `|grad f_i(q) - P_pq grad f_i(p)| <= L_i (1 + 1e-6) d(p, q)`.
pub fn probe_lipschitz_gradient(
    obj: &MaxObjective,
    lipschitz: &[f64],
    region: &Region,
    trials: usize,
    seed: u64,
) -> Result<ProbeReport> {
    check_trials(trials)?;
    check_region(obj.kind(), region)?;
    if lipschitz.len() != obj.len() {
        return Err(Error::InvalidArgument("one Lipschitz constant per component is required".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    for _ in 0..trials {
        let p = sample_in_ball(&region.center, region.radius, &mut rng)?;
        let q = sample_in_ball(&region.center, region.radius, &mut rng)?;
        let d = distance(&p, &q)?;
        if !(d > 0.0) {
            continue;
        }
        for (i, &l) in lipschitz.iter().enumerate() {
            let gp = obj.component_gradient(i, &p)?;
            let gq = obj.component_gradient(i, &q)?;
            let ratio = gq.sub(&parallel_transport(&p, &q, &gp)?)?.norm() / d;
            worst = worst.max(ratio - l * (1.0 + LIPSCHITZ_REL_SLACK));
        }
    }
    Ok(ProbeReport::new("lipschitz_gradient", trials, worst.max(0.0), LIPSCHITZ_ABS_TOL))
}

/// Manifolds covered by the default probe suite.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SuiteKind {
    Euclidean,
    PositiveReals,
    Spd2,
    Spd3,
}

impl SuiteKind {
    pub const ALL: [SuiteKind; 4] = [Self::Euclidean, Self::PositiveReals, Self::Spd2, Self::Spd3];

    pub fn name(&self) -> &'static str {
        match self {
            Self::Euclidean => "euclidean",
            Self::PositiveReals => "positive-reals",
            Self::Spd2 => "spd2",
            Self::Spd3 => "spd3",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.name() == s)
    }

    pub fn manifold(&self) -> ManifoldKind {
        match self {
            Self::Euclidean => ManifoldKind::Euclidean(3),
            Self::PositiveReals => ManifoldKind::PositiveReals,
            Self::Spd2 => ManifoldKind::Spd(2),
            Self::Spd3 => ManifoldKind::Spd(3),
        }
    }
}

/// `max{1/2 |x|^2, <a, x> + 1}` on `R^3`, a small convex test objective.
pub fn euclidean_test_objective() -> MaxObjective {
    MaxObjective::new(
        ManifoldKind::Euclidean(3),
        vec![
            Box::new(FnComponent::new(
                |p: &ManifoldPoint| 0.5 * p.coords().iter().map(|x| x * x).sum::<f64>(),
                |p: &ManifoldPoint| p.coords().to_vec(),
            )),
            Box::new(FnComponent::new(
                |p: &ManifoldPoint| p.coords()[0] - 2.0 * p.coords()[1] + 0.5 * p.coords()[2] + 1.0,
                |_: &ManifoldPoint| vec![1.0, -2.0, 0.5],
            )),
        ],
    )
    .expect("two components")
}

/// Runs every probe that applies to `kind`. The default sampling region is the
/// geodesic ball of radius 2 about the canonical center (origin, 1, identity).
pub fn default_suite(kind: SuiteKind, trials: usize, seed: u64) -> Result<Vec<ProbeReport>> {
    check_trials(trials)?;
    let manifold = kind.manifold();
    let center = manifold.canonical_center();
    let region = Region::new(center.clone(), 2.0)?;
    let anchor = sample_in_ball(&center, 1.0, &mut ChaCha8Rng::seed_from_u64(seed ^ 0x5eed))?;

    let mut reports = vec![
        probe_round_trip(&region, 3.0, trials, seed)?,
        probe_transport_isometry(&region, trials, seed.wrapping_add(1))?,
        probe_strong_monotonicity(manifold, &anchor, &region, trials, seed.wrapping_add(2))?,
    ];

    // Objective-level probes: the built-in problem on each manifold, on a
    // region where its constants are moderate.
    let (obj, obj_region, obj_anchor) = match kind {
        SuiteKind::Euclidean => (euclidean_test_objective(), region.clone(), center.clone()),
        SuiteKind::PositiveReals => {
            // [0.3, 3] as a geodesic ball.
            let c = ManifoldPoint::positive(math::sqrt(0.9))?;
            let r = 0.5 * math::ln(10.0);
            (example_one(), Region::new(c, r)?, ManifoldPoint::positive(1.0)?)
        }
        SuiteKind::Spd2 | SuiteKind::Spd3 => {
            let n = if kind == SuiteKind::Spd2 { 2 } else { 3 };
            (example_two(n)?, Region::new(center.clone(), 1.0)?, center.clone())
        }
    };
    reports.push(probe_gradient_fd(&obj, &obj_region, trials, seed.wrapping_add(3))?);
    let lipschitz = estimate_lipschitz(&obj, &obj_region, trials.max(2), seed.wrapping_add(4))?;
    reports.push(probe_lipschitz_gradient(&obj, &lipschitz, &obj_region, trials, seed.wrapping_add(5))?);
    let lambda = 1.1 * max_lipschitz(&lipschitz) + 1.0;
    reports.push(probe_max_strong_convexity(
        &obj,
        &obj_anchor,
        lambda,
        &lipschitz,
        &obj_region,
        trials,
        seed.wrapping_add(6),
    )?);
    for r in &mut reports {
        r.name = kind.name().to_string() + "/" + &r.name;
    }
    Ok(reports)
}
