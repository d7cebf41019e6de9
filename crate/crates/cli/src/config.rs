//! Experiment configuration: flat `key = value` text with dotted keys.
//!
//! ```text
//! # comments start with '#'
//! problem = example2
//! problem.n = 2
//! start.random.scale = 0.3
//! seed = 7
//! solver.tol_step = 1e-8
//! output.trace = trace.csv
//! ```
//!
//! Points are comma-separated lists: a single value on the half-line, `n`
//! coordinates in `R^n`, and `n * n` row-major entries for SPD matrices.

use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;

use manifold_prox::{InnerMethod, LambdaRule, ProxConfig};

#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ConfigError {}

macro_rules! bail {
    ($($arg:tt)*) => {
        return Err(ConfigError(format!($($arg)*)))
    };
}

const SIMPLE_KEYS: &[&str] = &[
    "problem",
    "problem.n",
    "start",
    "start.random.scale",
    "seed",
    "solver.lambda_bar",
    "solver.lambda",
    "solver.lambda_seq",
    "solver.safety_factor",
    "solver.tol_step",
    "solver.tol_stat",
    "solver.tol_kkt",
    "solver.max_outer",
    "solver.max_inner",
    "solver.inner",
    "solver.eps_active",
    "level_set.q",
    "level_set.c",
    "level_set.c_at",
    "lipschitz.center",
    "lipschitz.radius",
    "lipschitz.reference",
    "lipschitz.interval",
    "lipschitz.samples",
    "output.trace",
    "output.summary",
    "custom.dim",
    "custom.components",
];

const CUSTOM_FIELDS: &[&str] = &["type", "a", "b", "s", "c"];

#[derive(Debug, Clone, PartialEq)]
pub enum ProblemSpec {
    Example1,
    Example2 { n: usize },
    Custom { dim: usize, components: Vec<CustomComponent> },
}

/// Components available to custom problems on `R^dim`.
#[derive(Debug, Clone, PartialEq)]
pub enum CustomComponent {
    /// `<a, x> + b`
    Affine { a: Vec<f64>, b: f64 },
    /// `s/2 |x - c|^2 + b`; `s` may be negative.
    Quadratic { s: f64, c: Vec<f64>, b: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub enum StartSpec {
    Literal(Vec<f64>),
    /// Uniform in the geodesic ball of this radius about the canonical center.
    Random {
        scale: f64,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub enum LevelReference {
    /// The problem's built-in reference point, if any.
    Default,
    Disabled,
    Point(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq)]
pub enum Threshold {
    Value(f64),
    /// `c = f(point)`
    At(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct LipschitzSpec {
    pub center: Option<Vec<f64>>,
    pub radius: Option<f64>,
    pub reference: Option<Vec<f64>>,
    /// `[lo, hi]` on the half-line.
    pub interval: Option<(f64, f64)>,
    pub samples: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub problem: ProblemSpec,
    pub start: Option<StartSpec>,
    pub seed: u64,
    pub solver: ProxConfig,
    pub eps_active: Option<f64>,
    pub level_q: LevelReference,
    pub level_c: Option<Threshold>,
    pub lipschitz: LipschitzSpec,
    pub trace: Option<PathBuf>,
    pub summary: Option<PathBuf>,
    /// Every key as read, with the effective seed.
    pub echo: BTreeMap<String, String>,
}

fn parse_f64(key: &str, v: &str) -> Result<f64, ConfigError> {
    match v.trim().parse::<f64>() {
        Ok(x) if x.is_finite() => Ok(x),
        _ => bail!("{key}: expected a finite number, got '{v}'"),
    }
}

fn parse_usize(key: &str, v: &str) -> Result<usize, ConfigError> {
    v.trim().parse::<usize>().map_err(|_| ConfigError(format!("{key}: expected a non-negative integer, got '{v}'")))
}

fn parse_list(key: &str, v: &str) -> Result<Vec<f64>, ConfigError> {
    let items: Vec<&str> = v.split(',').map(str::trim).collect();
    if items.iter().any(|s| s.is_empty()) {
        bail!("{key}: malformed list '{v}'");
    }
    items.into_iter().map(|s| parse_f64(key, s)).collect()
}

fn positive(key: &str, x: f64) -> Result<f64, ConfigError> {
    if x > 0.0 {
        Ok(x)
    } else {
        bail!("{key} must be positive, got {x}")
    }
}

struct Entries(BTreeMap<String, String>);

impl Entries {
    fn get(&self, key: &str) -> Option<&str> {
        self.0.get(key).map(String::as_str)
    }

    fn f64(&self, key: &str) -> Result<Option<f64>, ConfigError> {
        self.get(key).map(|v| parse_f64(key, v)).transpose()
    }

    fn usize(&self, key: &str) -> Result<Option<usize>, ConfigError> {
        self.get(key).map(|v| parse_usize(key, v)).transpose()
    }

    fn list(&self, key: &str) -> Result<Option<Vec<f64>>, ConfigError> {
        self.get(key).map(|v| parse_list(key, v)).transpose()
    }
}

fn is_known(key: &str) -> bool {
    if SIMPLE_KEYS.contains(&key) {
        return true;
    }
    // custom.<i>.<field>
    let mut parts = key.split('.');
    matches!(
        (parts.next(), parts.next().map(str::parse::<usize>), parts.next(), parts.next()),
        (Some("custom"), Some(Ok(_)), Some(field), None) if CUSTOM_FIELDS.contains(&field)
    )
}

fn read_entries(text: &str) -> Result<Entries, ConfigError> {
    let mut map = BTreeMap::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            bail!("line {}: expected 'key = value'", lineno + 1);
        };
        let (k, v) = (k.trim(), v.trim());
        if !is_known(k) {
            bail!("line {}: unknown key '{k}'", lineno + 1);
        }
        if v.is_empty() {
            bail!("line {}: empty value for '{k}'", lineno + 1);
        }
        if map.insert(k.to_string(), v.to_string()).is_some() {
            bail!("line {}: duplicate key '{k}'", lineno + 1);
        }
    }
    Ok(Entries(map))
}

fn parse_custom(e: &Entries) -> Result<ProblemSpec, ConfigError> {
    let Some(dim) = e.usize("custom.dim")? else {
        bail!("custom problems need custom.dim");
    };
    if dim == 0 {
        bail!("custom.dim must be at least 1");
    }
    let Some(m) = e.usize("custom.components")? else {
        bail!("custom problems need custom.components");
    };
    if m == 0 {
        bail!("custom.components must be at least 1");
    }
    for key in e.0.keys().filter(|k| k.starts_with("custom.")) {
        if let Some(Ok(i)) = key.split('.').nth(1).map(str::parse::<usize>) {
            if i >= m {
                bail!("{key}: component index out of range (custom.components = {m})");
            }
        }
    }
    let mut components = Vec::with_capacity(m);
    for i in 0..m {
        let key = |field: &str| format!("custom.{i}.{field}");
        let b = e.f64(&key("b"))?.unwrap_or(0.0);
        let vector = |field: &str| -> Result<Vec<f64>, ConfigError> {
            let k = key(field);
            match e.list(&k)? {
                Some(v) if v.len() == dim => Ok(v),
                Some(v) => bail!("{k}: expected {dim} values, got {}", v.len()),
                None => bail!("{k} is required"),
            }
        };
        let c = match e.get(&key("type")) {
            Some("affine") => CustomComponent::Affine { a: vector("a")?, b },
            Some("quadratic") => {
                let s = e.f64(&key("s"))?.unwrap_or(1.0);
                CustomComponent::Quadratic { s, c: vector("c")?, b }
            }
            Some(other) => bail!("{}: unknown component type '{other}' (affine, quadratic)", key("type")),
            None => bail!("{} is required", key("type")),
        };
        components.push(c);
    }
    Ok(ProblemSpec::Custom { dim, components })
}

fn parse_solver(e: &Entries) -> Result<ProxConfig, ConfigError> {
    let mut cfg = ProxConfig::default();
    if let Some(v) = e.f64("solver.lambda_bar")? {
        cfg.lambda_bar = positive("solver.lambda_bar", v)?;
    }
    match (e.f64("solver.lambda")?, e.list("solver.lambda_seq")?) {
        (Some(_), Some(_)) => bail!("solver.lambda and solver.lambda_seq are mutually exclusive"),
        (Some(l), None) => cfg.lambda_rule = LambdaRule::Fixed(l),
        (None, Some(s)) => cfg.lambda_rule = LambdaRule::Sequence(s),
        (None, None) => {}
    }
    if let Some(v) = e.f64("solver.safety_factor")? {
        if v.is_nan() || v <= 1.0 {
            bail!("solver.safety_factor must exceed 1, got {v}");
        }
        cfg.safety_factor = v;
    }
    if let Some(v) = e.f64("solver.tol_step")? {
        cfg.tol_step = positive("solver.tol_step", v)?;
    }
    if let Some(v) = e.f64("solver.tol_stat")? {
        cfg.tol_stat = positive("solver.tol_stat", v)?;
    }
    if let Some(v) = e.f64("solver.tol_kkt")? {
        cfg.inner.tol_kkt = positive("solver.tol_kkt", v)?;
    }
    if let Some(v) = e.usize("solver.max_outer")? {
        if v == 0 {
            bail!("solver.max_outer must be at least 1");
        }
        cfg.max_outer = v;
    }
    if let Some(v) = e.usize("solver.max_inner")? {
        if v == 0 {
            bail!("solver.max_inner must be at least 1");
        }
        cfg.inner.max_inner = v;
    }
    cfg.inner.method = match e.get("solver.inner") {
        None | Some("prox-linear") => InnerMethod::ProxLinear,
        Some("subgradient") => InnerMethod::Subgradient,
        Some(other) => bail!("solver.inner: unknown method '{other}' (prox-linear, subgradient)"),
    };
    Ok(cfg)
}

impl ExperimentConfig {
    /// Parses config text. `seed_override` replaces the `seed` key.
    pub fn parse(text: &str, seed_override: Option<u64>) -> Result<Self, ConfigError> {
        let e = read_entries(text)?;
        let problem = match e.get("problem") {
            Some("example1") => ProblemSpec::Example1,
            Some("example2") => {
                let n = e.usize("problem.n")?.unwrap_or(2);
                if n < 2 {
                    bail!("problem.n must be at least 2 for example2");
                }
                ProblemSpec::Example2 { n }
            }
            Some("custom") => parse_custom(&e)?,
            Some(other) => bail!("problem: unknown problem '{other}' (example1, example2, custom)"),
            None => bail!("missing key 'problem'"),
        };
        if !matches!(problem, ProblemSpec::Custom { .. }) && e.0.keys().any(|k| k.starts_with("custom.")) {
            bail!("custom.* keys require problem = custom");
        }
        if !matches!(problem, ProblemSpec::Example2 { .. }) && e.get("problem.n").is_some() {
            bail!("problem.n only applies to example2");
        }

        let start = match (e.list("start")?, e.f64("start.random.scale")?) {
            (Some(_), Some(_)) => bail!("start and start.random.scale are mutually exclusive"),
            (Some(v), None) => Some(StartSpec::Literal(v)),
            (None, Some(s)) => Some(StartSpec::Random { scale: positive("start.random.scale", s)? }),
            (None, None) => None,
        };

        let seed = match seed_override {
            Some(s) => s,
            None => match e.get("seed") {
                Some(v) => {
                    v.parse::<u64>().map_err(|_| ConfigError(format!("seed: expected an integer, got '{v}'")))?
                }
                None => 0,
            },
        };

        let eps_active = e.f64("solver.eps_active")?;
        if let Some(eps) = eps_active {
            if eps < 0.0 {
                bail!("solver.eps_active must be non-negative");
            }
        }

        let level_q = match e.get("level_set.q") {
            None => LevelReference::Default,
            Some("none") => LevelReference::Disabled,
            Some(v) => LevelReference::Point(parse_list("level_set.q", v)?),
        };
        let level_c = match (e.f64("level_set.c")?, e.list("level_set.c_at")?) {
            (Some(_), Some(_)) => bail!("level_set.c and level_set.c_at are mutually exclusive"),
            (Some(c), None) => Some(Threshold::Value(c)),
            (None, Some(p)) => Some(Threshold::At(p)),
            (None, None) => None,
        };

        let interval = match e.list("lipschitz.interval")? {
            Some(v) if v.len() == 2 && v[0] > 0.0 && v[1] > v[0] => Some((v[0], v[1])),
            Some(_) => bail!("lipschitz.interval must be 'lo, hi' with 0 < lo < hi"),
            None => None,
        };
        let lipschitz = LipschitzSpec {
            center: e.list("lipschitz.center")?,
            radius: e.f64("lipschitz.radius")?,
            reference: e.list("lipschitz.reference")?,
            interval,
            samples: e.usize("lipschitz.samples")?.unwrap_or(400),
        };
        if interval.is_some() && (lipschitz.center.is_some() || lipschitz.radius.is_some()) {
            bail!("lipschitz.interval cannot be combined with lipschitz.center or lipschitz.radius");
        }
        if lipschitz.samples < 2 {
            bail!("lipschitz.samples must be at least 2");
        }

        let mut echo = e.0.clone();
        echo.insert("seed".into(), seed.to_string());
        Ok(Self {
            problem,
            start,
            seed,
            solver: parse_solver(&e)?,
            eps_active,
            level_q,
            level_c,
            lipschitz,
            trace: e.get("output.trace").map(PathBuf::from),
            summary: e.get("output.summary").map(PathBuf::from),
            echo,
        })
    }
}
