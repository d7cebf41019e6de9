//! Proximal point iteration for max-type objectives.
//!
//! Each outer step computes
//!
//! ```text
//! p_{k+1} = argmin_p  f(p) + (lambda_k / 2) d^2(p, p_k)
//! ```
//!
//! with `max_i L_i < lambda_k <= lambda_bar`, where `L_i` bounds the Lipschitz
//! constant of `grad f_i`. Under that bound every piece of the subproblem is
//! `(lambda_k - max_i L_i)`-strongly geodesically convex, so the subproblem
//! has a unique solution characterised by
//!
//! ```text
//! 0 = sum_i a_i grad f_i(p_{k+1}) - lambda_k log_{p_{k+1}}(p_k),   a in simplex, supp a in I(p_{k+1}).
//! ```
//!
//! The norm of the best such combination is the KKT residual reported with
//! every step.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::manifold::{
    distance, exp_map, inner, log_map, parallel_transport, random_unit_tangent, sample_in_ball, ManifoldPoint,
    TangentVector,
};
use crate::objective::{max_of, min_norm_element, HullElement, MaxObjective};
use crate::qp::SimplexQp;
use crate::{Error, Result};

/// Geodesic ball used as the working region for Lipschitz estimates and probes.
#[derive(Debug, Clone, PartialEq)]
pub struct Region {
    pub center: ManifoldPoint,
    pub radius: f64,
}

impl Region {
    pub fn new(center: ManifoldPoint, radius: f64) -> Result<Self> {
        if !(radius > 0.0) || !radius.is_finite() {
            return Err(Error::InvalidArgument(format!("region radius must be positive, got {radius}")));
        }
        Ok(Self { center, radius })
    }

    /// Ball about `start` with radius `2 d(start, reference)` (radius 1 when they coincide).
    pub fn around(start: &ManifoldPoint, reference: &ManifoldPoint) -> Result<Self> {
        let d = distance(start, reference)?;
        Self::new(start.clone(), if d > 0.0 { 2.0 * d } else { 1.0 })
    }
}

/// How `lambda_k` is chosen.
#[derive(Debug, Clone, PartialEq, Default)]
pub enum LambdaRule {
    /// `safety_factor * max_i L_i`, capped by `lambda_bar`.
    #[default]
    Auto,
    Fixed(f64),
    /// Per-iteration values; the last one repeats.
    Sequence(Vec<f64>),
}

impl LambdaRule {
    /// Turns `Auto` into a fixed value; other rules are returned unchanged.
    pub fn resolve(&self, lipschitz: &[f64], safety_factor: f64, lambda_bar: f64) -> LambdaRule {
        match self {
            Self::Auto => {
                let max_l = max_lipschitz(lipschitz);
                if max_l > 0.0 {
                    Self::Fixed((safety_factor * max_l).min(lambda_bar))
                } else {
                    Self::Fixed(lambda_bar)
                }
            }
            other => other.clone(),
        }
    }

    /// `lambda_k`. Panics on an unresolved `Auto` rule or an empty sequence.
    pub fn at(&self, k: usize) -> f64 {
        match self {
            Self::Auto => panic!("lambda rule must be resolved before use"),
            Self::Fixed(l) => *l,
            Self::Sequence(s) => s[k.min(s.len() - 1)],
        }
    }
}

pub(crate) fn max_lipschitz(lipschitz: &[f64]) -> f64 {
    lipschitz.iter().copied().fold(0.0, f64::max)
}

/// Checks `max_i L_i < lambda_k <= lambda_bar` for every value of a resolved rule.
pub fn validate_lambda(lipschitz: &[f64], rule: &LambdaRule, lambda_bar: f64) -> Result<()> {
    let max_l = max_lipschitz(lipschitz);
    let values: &[f64] = match rule {
        LambdaRule::Auto => return Err(Error::InvalidArgument("unresolved automatic lambda rule".into())),
        LambdaRule::Fixed(l) => core::slice::from_ref(l),
        LambdaRule::Sequence(s) if s.is_empty() => {
            return Err(Error::InvalidArgument("empty lambda sequence".into()));
        }
        LambdaRule::Sequence(s) => s,
    };
    for &lambda in values {
        if !(lambda > max_l) || !(lambda > 0.0) {
            return Err(Error::LambdaTooSmall { lambda, max_lipschitz: max_l });
        }
        if lambda > lambda_bar {
            return Err(Error::LambdaTooLarge { lambda, lambda_bar });
        }
    }
    Ok(())
}

/// Algorithm for the strongly convex subproblem.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum InnerMethod {
    /// Minimizes the max of first-order models of the pieces plus an adaptive
    /// quadratic, `min_v max_i (psi_i + <grad psi_i, v>) + mu/2 |v|^2`, solved
    /// exactly through its simplex dual and safeguarded by backtracking on `mu`.
    #[default]
    ProxLinear,
    /// Riemannian subgradient descent with step `2 / (beta (t + 2))`,
    /// `beta = lambda - max_i L_i`, keeping the best iterate.
    Subgradient,
}

#[derive(Debug, Clone, PartialEq)]
pub struct InnerConfig {
    pub max_inner: usize,
    pub tol_kkt: f64,
    pub method: InnerMethod,
}

impl Default for InnerConfig {
    fn default() -> Self {
        Self { max_inner: 10_000, tol_kkt: 1e-8, method: InnerMethod::ProxLinear }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProxConfig {
    pub lambda_bar: f64,
    pub lambda_rule: LambdaRule,
    pub safety_factor: f64,
    pub max_outer: usize,
    pub tol_step: f64,
    pub tol_stat: f64,
    pub inner: InnerConfig,
}

impl Default for ProxConfig {
    fn default() -> Self {
        Self {
            lambda_bar: 1e6,
            lambda_rule: LambdaRule::Auto,
            safety_factor: 1.1,
            max_outer: 500,
            tol_step: 1e-8,
            tol_stat: 1e-6,
            inner: InnerConfig::default(),
        }
    }
}

impl ProxConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("lambda_bar", self.lambda_bar),
            ("tol_step", self.tol_step),
            ("tol_stat", self.tol_stat),
            ("tol_kkt", self.inner.tol_kkt),
        ];
        for (name, v) in positive {
            if !(v > 0.0) {
                return Err(Error::InvalidArgument(format!("{name} must be positive, got {v}")));
            }
        }
        if !(self.safety_factor > 1.0) {
            return Err(Error::InvalidArgument(format!("safety_factor must exceed 1, got {}", self.safety_factor)));
        }
        if self.max_outer == 0 || self.inner.max_inner == 0 {
            return Err(Error::InvalidArgument("iteration caps must be at least 1".into()));
        }
        Ok(())
    }

    /// Resolves and validates the lambda schedule against Lipschitz bounds.
    pub fn schedule(&self, lipschitz: &[f64]) -> Result<LambdaRule> {
        let rule = self.lambda_rule.resolve(lipschitz, self.safety_factor, self.lambda_bar);
        validate_lambda(lipschitz, &rule, self.lambda_bar)?;
        Ok(rule)
    }
}

/// Optional level-set data used for post-hoc checks of a run.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct LevelSetSpec {
    /// Iterates must stay in `{p : f(p) <= f(reference_point)}`.
    pub reference_point: Option<ManifoldPoint>,
    /// The run reports the first `k` with `f(p_k) <= threshold`.
    pub threshold: Option<f64>,
}

/// Estimates, per component, the Lipschitz constant of the gradient field on
/// a geodesic ball as the largest ratio `|grad f_i(q) - P_pq grad f_i(p)| / d(p, q)`
/// over sampled pairs.
///
/// Half of the base points are drawn on the boundary sphere. Each base point
/// is paired with the next base point and with a nearby point at distance
/// `1e-4 * radius`, so both averaged and local behaviour is seen.
pub fn estimate_lipschitz(obj: &MaxObjective, region: &Region, samples: usize, seed: u64) -> Result<Vec<f64>> {
    if samples < 2 {
        return Err(Error::InvalidArgument("at least two samples are needed".into()));
    }
    if !(region.radius > 0.0) {
        return Err(Error::InvalidArgument("region radius must be positive".into()));
    }
    if region.center.kind() != obj.kind() {
        return Err(Error::InvalidPoint(format!(
            "region center on {} but objective on {}",
            region.center.kind(),
            obj.kind()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut points = Vec::with_capacity(samples);
    for s in 0..samples {
        let p = if s % 2 == 0 {
            sample_in_ball(&region.center, region.radius, &mut rng)?
        } else {
            let u = random_unit_tangent(&region.center, &mut rng);
            exp_map(&region.center, &u.scaled(region.radius))?
        };
        points.push(p);
    }
    let local = 1e-4 * region.radius;
    let mut est = vec![0.0f64; obj.len()];
    for s in 0..samples {
        let p = &points[s];
        let gp = obj.gradients(p)?;
        let neighbour = exp_map(p, &random_unit_tangent(p, &mut rng).scaled(local))?;
        for q in [&points[(s + 1) % samples], &neighbour] {
            let d = distance(p, q)?;
            if !(d > 0.0) {
                continue;
            }
            let gq = obj.gradients(q)?;
            for (i, (a, b)) in gp.iter().zip(&gq).enumerate() {
                let ratio = b.sub(&parallel_transport(p, q, a)?)?.norm() / d;
                est[i] = est[i].max(ratio);
            }
        }
    }
    Ok(est)
}

/// Uses declared constants when every component has one, otherwise estimates
/// the missing ones on `region`.
pub fn resolve_lipschitz(obj: &MaxObjective, region: &Region, samples: usize, seed: u64) -> Result<Vec<f64>> {
    let declared = obj.declared_lipschitz();
    if declared.iter().all(Option::is_some) {
        return Ok(declared.into_iter().flatten().collect());
    }
    let estimated = estimate_lipschitz(obj, region, samples, seed)?;
    Ok(declared.iter().zip(estimated).map(|(d, e)| d.unwrap_or(e)).collect())
}

/// Subproblem quantities at one point.
struct Probe {
    point: ManifoldPoint,
    values: Vec<f64>,
    /// `f_i + lambda/2 d^2(., anchor)`
    pieces: Vec<f64>,
    /// `grad f_i - lambda log_q(anchor)`
    shifted: Vec<TangentVector>,
    raw: Vec<TangentVector>,
    psi: f64,
}

struct Subproblem<'a> {
    obj: &'a MaxObjective,
    anchor: &'a ManifoldPoint,
    lambda: f64,
}

impl Subproblem<'_> {
    fn probe(&self, q: ManifoldPoint) -> Result<Probe> {
        let values = self.obj.component_values(&q)?;
        let log = log_map(&q, self.anchor)?;
        let d = distance(&q, self.anchor)?;
        let prox_term = 0.5 * self.lambda * d * d;
        let raw = self.obj.gradients(&q)?;
        let pull = log.scaled(self.lambda);
        let shifted = raw.iter().map(|g| g.sub(&pull)).collect::<Result<Vec<_>>>()?;
        let pieces: Vec<f64> = values.iter().map(|v| v + prox_term).collect();
        let psi = max_of(&pieces);
        Ok(Probe { point: q, values, pieces, shifted, raw, psi })
    }

    /// Best convex combination of shifted active gradients.
    fn kkt(&self, probe: &Probe) -> Result<HullElement> {
        let active = self.obj.active_from_values(&probe.values);
        let vectors: Vec<TangentVector> = active.iter().map(|&i| probe.shifted[i].clone()).collect();
        min_norm_element(&probe.point, &vectors, &active, self.obj.len())
    }
}

/// Result of one proximal step.
#[derive(Debug, Clone, PartialEq)]
pub struct ProxStep {
    pub point: ManifoldPoint,
    /// Multipliers of the optimality system, one per component.
    pub weights: Vec<f64>,
    pub kkt_residual: f64,
    pub inner_iters: usize,
    /// Subproblem value `f(p) + lambda/2 d^2(p, anchor)` at `point`.
    pub psi: f64,
    /// The inner solver hit its cap (or stagnated) above `tol_kkt`.
    pub stalled: bool,
}

/// Approximate minimizer of `f(p) + lambda/2 d^2(p, anchor)`.
pub fn inner_solve(
    obj: &MaxObjective,
    anchor: &ManifoldPoint,
    lambda: f64,
    lipschitz: &[f64],
    cfg: &InnerConfig,
) -> Result<ProxStep> {
    let max_l = max_lipschitz(lipschitz);
    if !(lambda > max_l) || !(lambda > 0.0) {
        return Err(Error::LambdaTooSmall { lambda, max_lipschitz: max_l });
    }
    if !(cfg.tol_kkt > 0.0) || cfg.max_inner == 0 {
        return Err(Error::InvalidArgument("inner solver needs tol_kkt > 0 and max_inner >= 1".into()));
    }
    let sub = Subproblem { obj, anchor, lambda };
    match cfg.method {
        InnerMethod::ProxLinear => prox_linear(&sub, max_l, cfg),
        InnerMethod::Subgradient => subgradient(&sub, lambda - max_l, cfg),
    }
}

fn finish(sub: &Subproblem<'_>, probe: Probe, iters: usize, stalled: bool) -> Result<ProxStep> {
    let kkt = sub.kkt(&probe)?;
    Ok(ProxStep {
        psi: probe.psi,
        point: probe.point,
        weights: kkt.weights,
        kkt_residual: kkt.residual,
        inner_iters: iters,
        stalled,
    })
}

const MAX_BACKTRACKS: usize = 80;

fn prox_linear(sub: &Subproblem<'_>, max_l: f64, cfg: &InnerConfig) -> Result<ProxStep> {
    let m = sub.obj.len();
    let mut current = sub.probe(sub.anchor.clone())?;
    let mut mu = sub.lambda + max_l;
    let mu_floor = 1e-6 * sub.lambda;
    let mut hessian = vec![0.0; m * m];
    let mut linear = vec![0.0; m];

    for t in 0..cfg.max_inner {
        if sub.kkt(&current)?.residual <= cfg.tol_kkt {
            return finish(sub, current, t, false);
        }
        let mut gram = vec![0.0; m * m];
        for i in 0..m {
            for j in i..m {
                let g = inner(&current.shifted[i], &current.shifted[j])?;
                gram[i * m + j] = g;
                gram[j * m + i] = g;
            }
        }
        let top = max_of(&current.pieces);
        for (l, v) in linear.iter_mut().zip(&current.pieces) {
            *l = v - top;
        }

        let mut accepted = None;
        let mut first_try = true;
        for _ in 0..MAX_BACKTRACKS {
            for (h, g) in hessian.iter_mut().zip(&gram) {
                *h = g / mu;
            }
            let alpha = SimplexQp { hessian: &hessian, linear: &linear }.solve();
            let direction = TangentVector::combination(&current.point, &alpha, &current.shifted)?.scaled(-1.0 / mu);
            let step_sq = inner(&direction, &direction)?;
            let mut model = f64::NEG_INFINITY;
            for i in 0..m {
                model = model.max(current.pieces[i] + inner(&current.shifted[i], &direction)?);
            }
            model += 0.5 * mu * step_sq;
            if step_sq == 0.0 {
                break;
            }
            let slack = 1e-14 * (1.0 + current.psi.abs());
            match exp_map(&current.point, &direction).and_then(|q| sub.probe(q)) {
                Ok(trial) if trial.psi <= model + slack => {
                    accepted = Some(trial);
                    break;
                }
                _ => {
                    mu *= 2.0;
                    first_try = false;
                }
            }
        }
        match accepted {
            Some(next) => {
                if first_try {
                    mu = (mu * 0.7).max(mu_floor);
                }
                current = next;
            }
            None => return finish(sub, current, t + 1, true),
        }
    }
    let done = sub.kkt(&current)?.residual <= cfg.tol_kkt;
    finish(sub, current, cfg.max_inner, !done)
}

fn subgradient(sub: &Subproblem<'_>, beta: f64, cfg: &InnerConfig) -> Result<ProxStep> {
    let mut current = sub.probe(sub.anchor.clone())?;
    let mut best = sub.probe(sub.anchor.clone())?;
    for t in 0..cfg.max_inner {
        if sub.kkt(&current)?.residual <= cfg.tol_kkt {
            return finish(sub, current, t, false);
        }
        let active = sub.obj.active_from_values(&current.values);
        let grads: Vec<TangentVector> = active.iter().map(|&i| current.raw[i].clone()).collect();
        let hull = min_norm_element(&current.point, &grads, &active, sub.obj.len())?;
        let pull = log_map(&current.point, sub.anchor)?.scaled(sub.lambda);
        let g = hull.vector.sub(&pull)?;
        let step = 2.0 / (beta * (t as f64 + 2.0));
        let next = exp_map(&current.point, &g.scaled(-step))?;
        current = sub.probe(next)?;
        if current.psi < best.psi {
            best = sub.probe(current.point.clone())?;
        }
    }
    if sub.kkt(&current)?.residual <= cfg.tol_kkt {
        return finish(sub, current, cfg.max_inner, false);
    }
    let done = sub.kkt(&best)?.residual <= cfg.tol_kkt;
    finish(sub, best, cfg.max_inner, !done)
}

/// One proximal step from `anchor`; see [`inner_solve`].
pub fn prox_step(
    obj: &MaxObjective,
    anchor: &ManifoldPoint,
    lambda: f64,
    lipschitz: &[f64],
    cfg: &InnerConfig,
) -> Result<ProxStep> {
    inner_solve(obj, anchor, lambda, lipschitz, cfg)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    ConvergedStationary,
    MaxIterations,
}

impl Verdict {
    pub fn as_str(&self) -> &'static str {
        match self {
            Self::ConvergedStationary => "converged_stationary",
            Self::MaxIterations => "max_iterations",
        }
    }
}

/// Optimality certificate of the last accepted step.
#[derive(Debug, Clone, PartialEq)]
pub struct Certificate {
    pub weights: Vec<f64>,
    pub kkt_residual: f64,
    pub verdict: Verdict,
}

/// Outer step `k`, moving from `p_k` to `p_{k+1}`.
#[derive(Debug, Clone, PartialEq)]
pub struct IterationRecord {
    pub k: usize,
    /// `p_{k+1}`
    pub point: ManifoldPoint,
    /// `f(p_{k+1})`
    pub f_value: f64,
    /// `d(p_{k+1}, p_k)`
    pub step_dist: f64,
    pub lambda: f64,
    pub kkt_residual: f64,
    /// Hull stationarity residual at `p_{k+1}`.
    pub stationarity: f64,
    pub inner_iters: usize,
    pub inner_stalled: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutcome {
    pub start_value: f64,
    pub records: Vec<IterationRecord>,
    pub certificate: Certificate,
    pub final_point: ManifoldPoint,
    pub final_value: f64,
    /// First `k` with `f(p_k) <= threshold` (`k = 0` is the start).
    pub level_entry: Option<usize>,
    pub schedule: LambdaRule,
}

/// A proximal point run: configuration, outer-loop state and history.
#[derive(Debug)]
pub struct ProxRun<'a> {
    obj: &'a MaxObjective,
    cfg: ProxConfig,
    lipschitz: Vec<f64>,
    schedule: LambdaRule,
    level: LevelSetSpec,
    reference_value: Option<f64>,
    start_value: f64,
    current: ManifoldPoint,
    current_value: f64,
    records: Vec<IterationRecord>,
    last_weights: Vec<f64>,
    last_kkt: f64,
    level_entry: Option<usize>,
    verdict: Option<Verdict>,
}

impl<'a> ProxRun<'a> {
    pub fn new(
        obj: &'a MaxObjective,
        start: ManifoldPoint,
        cfg: ProxConfig,
        lipschitz: &[f64],
        level: LevelSetSpec,
    ) -> Result<Self> {
        cfg.validate()?;
        if lipschitz.len() != obj.len() {
            return Err(Error::InvalidArgument(format!(
                "{} Lipschitz constants for {} components",
                lipschitz.len(),
                obj.len()
            )));
        }
        let schedule = cfg.schedule(lipschitz)?;
        let start_value = obj.eval(&start)?;
        let reference_value = match &level.reference_point {
            Some(q) => {
                let fq = obj.eval(q)?;
                if start_value > fq + 1e-12 {
                    return Err(Error::StartOutsideLevelSet { start: start_value, reference: fq });
                }
                Some(fq)
            }
            None => None,
        };
        let level_entry = level.threshold.filter(|&c| start_value <= c).map(|_| 0);
        let hull = obj.hull_min_norm(&start)?;
        Ok(Self {
            obj,
            cfg,
            lipschitz: lipschitz.to_vec(),
            schedule,
            level,
            reference_value,
            start_value,
            current: start,
            current_value: start_value,
            records: Vec::new(),
            last_weights: hull.weights,
            last_kkt: hull.residual,
            level_entry,
            verdict: None,
        })
    }

    pub fn records(&self) -> &[IterationRecord] {
        &self.records
    }

    pub fn current(&self) -> &ManifoldPoint {
        &self.current
    }

    pub fn is_finished(&self) -> bool {
        self.verdict.is_some()
    }

    /// Performs one outer step; returns `None` once the run has finished.
    pub fn step(&mut self) -> Result<Option<&IterationRecord>> {
        if self.verdict.is_some() {
            return Ok(None);
        }
        let k = self.records.len();
        if k >= self.cfg.max_outer {
            self.verdict = Some(Verdict::MaxIterations);
            return Ok(None);
        }
        let lambda = self.schedule.at(k);
        let step = prox_step(self.obj, &self.current, lambda, &self.lipschitz, &self.cfg.inner)?;
        let step_dist = distance(&step.point, &self.current)?;
        let f_value = self.obj.eval(&step.point)?;
        let stationarity = self.obj.stationarity_residual(&step.point)?;
        if let Some(fq) = self.reference_value {
            if f_value > fq + 1e-12 {
                return Err(Error::LevelSetViolated { k: k + 1, value: f_value, reference: fq });
            }
        }
        if self.level_entry.is_none() {
            if let Some(c) = self.level.threshold {
                if f_value <= c {
                    self.level_entry = Some(k + 1);
                }
            }
        }
        self.records.push(IterationRecord {
            k,
            point: step.point.clone(),
            f_value,
            step_dist,
            lambda,
            kkt_residual: step.kkt_residual,
            stationarity,
            inner_iters: step.inner_iters,
            inner_stalled: step.stalled,
        });
        self.current = step.point;
        self.current_value = f_value;
        self.last_weights = step.weights;
        self.last_kkt = step.kkt_residual;
        if step_dist <= self.cfg.tol_step && stationarity <= self.cfg.tol_stat {
            self.verdict = Some(Verdict::ConvergedStationary);
        } else if self.records.len() >= self.cfg.max_outer {
            self.verdict = Some(Verdict::MaxIterations);
        }
        Ok(self.records.last())
    }

    /// Runs to termination.
    pub fn finish(mut self) -> Result<RunOutcome> {
        while self.step()?.is_some() {}
        Ok(RunOutcome {
            start_value: self.start_value,
            certificate: Certificate {
                weights: self.last_weights,
                kkt_residual: self.last_kkt,
                verdict: self.verdict.unwrap_or(Verdict::MaxIterations),
            },
            records: self.records,
            final_point: self.current,
            final_value: self.current_value,
            level_entry: self.level_entry,
            schedule: self.schedule,
        })
    }
}

/// Runs the proximal point method from `start` until
/// `d(p_{k+1}, p_k) <= tol_step` and the hull stationarity at `p_{k+1}` is at
/// most `tol_stat`, or until `max_outer` steps.
pub fn run(
    obj: &MaxObjective,
    start: ManifoldPoint,
    cfg: &ProxConfig,
    lipschitz: &[f64],
    level: &LevelSetSpec,
) -> Result<RunOutcome> {
    ProxRun::new(obj, start, cfg.clone(), lipschitz, level.clone())?.finish()
}

/// Draws a uniform `t` in `(0, 1)`; shared by the convexity probes.
pub(crate) fn unit_interval<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    rng.gen_range(1e-6..1.0 - 1e-6)
}
