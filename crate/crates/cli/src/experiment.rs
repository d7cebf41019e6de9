//! Turns a parsed configuration into solver inputs.

use manifold_prox::manifold::{random_point, ManifoldKind};
use manifold_prox::problems::{
    example_one, example_two, example_two_level_reference, example_two_minimizer, EXAMPLE_ONE_LEVEL_REFERENCE,
    EXAMPLE_ONE_MINIMIZER,
};
use manifold_prox::prox::{estimate_lipschitz, resolve_lipschitz};
use manifold_prox::{Component, FnComponent, LevelSetSpec, ManifoldPoint, MaxObjective, Region};

use crate::config::{
    ConfigError, CustomComponent, ExperimentConfig, LevelReference, ProblemSpec, StartSpec, Threshold,
};
use crate::CliError;

#[derive(Debug)]
pub struct Experiment {
    pub objective: MaxObjective,
    pub start: ManifoldPoint,
    pub level: LevelSetSpec,
    pub region: Region,
}

fn custom_component(c: &CustomComponent) -> Box<dyn Component> {
    match c.clone() {
        CustomComponent::Affine { a, b } => {
            let grad = a.clone();
            Box::new(
                FnComponent::new(
                    move |p: &ManifoldPoint| a.iter().zip(p.coords()).map(|(ai, x)| ai * x).sum::<f64>() + b,
                    move |_: &ManifoldPoint| grad.clone(),
                )
                .with_lipschitz(0.0),
            )
        }
        CustomComponent::Quadratic { s, c, b } => {
            let center = c.clone();
            Box::new(
                FnComponent::new(
                    move |p: &ManifoldPoint| {
                        0.5 * s * p.coords().iter().zip(&c).map(|(x, ci)| (x - ci) * (x - ci)).sum::<f64>() + b
                    },
                    move |p: &ManifoldPoint| p.coords().iter().zip(&center).map(|(x, ci)| s * (x - ci)).collect(),
                )
                .with_lipschitz(s.abs()),
            )
        }
    }
}

pub fn objective(problem: &ProblemSpec) -> Result<MaxObjective, CliError> {
    Ok(match problem {
        ProblemSpec::Example1 => example_one(),
        ProblemSpec::Example2 { n } => example_two(*n)?,
        ProblemSpec::Custom { dim, components } => {
            MaxObjective::new(ManifoldKind::Euclidean(*dim), components.iter().map(custom_component).collect())?
        }
    })
}

fn point(kind: ManifoldKind, key: &str, values: &[f64]) -> Result<ManifoldPoint, CliError> {
    if values.len() != kind.coordinate_len() {
        return Err(ConfigError(format!(
            "{key}: {kind} points need {} values, got {}",
            kind.coordinate_len(),
            values.len()
        ))
        .into());
    }
    Ok(ManifoldPoint::new(kind, values.to_vec())?)
}

/// Rough location of a minimizer, used to size the Lipschitz region.
fn default_reference(problem: &ProblemSpec, kind: ManifoldKind) -> Result<ManifoldPoint, CliError> {
    Ok(match problem {
        ProblemSpec::Example1 => ManifoldPoint::positive(EXAMPLE_ONE_MINIMIZER)?,
        ProblemSpec::Example2 { n } => example_two_minimizer(*n)?,
        ProblemSpec::Custom { .. } => kind.canonical_center(),
    })
}

fn default_level_reference(problem: &ProblemSpec) -> Result<Option<ManifoldPoint>, CliError> {
    Ok(match problem {
        ProblemSpec::Example1 => Some(ManifoldPoint::positive(EXAMPLE_ONE_LEVEL_REFERENCE)?),
        ProblemSpec::Example2 { n } => Some(example_two_level_reference(*n)?),
        ProblemSpec::Custom { .. } => None,
    })
}

/// The estimation region: an explicit interval, an explicit center/radius,
/// or the ball about the start of radius `2 d(start, reference)`.
fn region(cfg: &ExperimentConfig, kind: ManifoldKind, start: &ManifoldPoint) -> Result<Region, CliError> {
    let spec = &cfg.lipschitz;
    if let Some((lo, hi)) = spec.interval {
        if kind != ManifoldKind::PositiveReals {
            return Err(ConfigError("lipschitz.interval only applies to the positive half-line".into()).into());
        }
        return Ok(Region::new(ManifoldPoint::positive((lo * hi).sqrt())?, 0.5 * (hi / lo).ln())?);
    }
    let center = match &spec.center {
        Some(c) => point(kind, "lipschitz.center", c)?,
        None => start.clone(),
    };
    if let Some(r) = spec.radius {
        return Ok(Region::new(center, r)?);
    }
    let reference = match &spec.reference {
        Some(r) => point(kind, "lipschitz.reference", r)?,
        None => default_reference(&cfg.problem, kind)?,
    };
    Ok(Region::around(&center, &reference)?)
}

pub fn build(cfg: &ExperimentConfig) -> Result<Experiment, CliError> {
    let mut objective = objective(&cfg.problem)?;
    if let Some(eps) = cfg.eps_active {
        objective = objective.with_eps_active(eps)?;
    }
    let kind = objective.kind();
    let start = match &cfg.start {
        Some(StartSpec::Literal(v)) => point(kind, "start", v)?,
        Some(StartSpec::Random { scale }) => random_point(kind, *scale, cfg.seed)?,
        None => return Err(ConfigError("missing 'start' or 'start.random.scale'".into()).into()),
    };
    let reference_point = match &cfg.level_q {
        LevelReference::Default => default_level_reference(&cfg.problem)?,
        LevelReference::Disabled => None,
        LevelReference::Point(v) => Some(point(kind, "level_set.q", v)?),
    };
    let threshold = match &cfg.level_c {
        None => None,
        Some(Threshold::Value(c)) => Some(*c),
        Some(Threshold::At(v)) => Some(objective.eval(&point(kind, "level_set.c_at", v)?)?),
    };
    let region = region(cfg, kind, &start)?;
    Ok(Experiment { objective, start, level: LevelSetSpec { reference_point, threshold }, region })
}

impl Experiment {
    /// Declared constants where available, estimates for the rest.
    pub fn lipschitz(&self, cfg: &ExperimentConfig) -> Result<Vec<f64>, CliError> {
        Ok(resolve_lipschitz(&self.objective, &self.region, cfg.lipschitz.samples, cfg.seed)?)
    }

    /// Sampled estimates for every component, ignoring declared constants.
    pub fn estimate(&self, cfg: &ExperimentConfig) -> Result<Vec<f64>, CliError> {
        Ok(estimate_lipschitz(&self.objective, &self.region, cfg.lipschitz.samples, cfg.seed)?)
    }
}
