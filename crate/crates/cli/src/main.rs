//! `manifold-prox`: run the proximal point solver from a config file, run the
//! diagnostic probes, or estimate gradient Lipschitz constants.
//!
//! Exit codes: 0 success (converged / all probes pass), 1 probe failure or
//! runtime error, 2 iteration cap reached, 3 configuration or validation error.

mod config;
mod experiment;
mod output;

use std::fmt;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use manifold_prox::diagnostics::{default_suite, SuiteKind};
use manifold_prox::prox::run;
use manifold_prox::Verdict;

use config::{ConfigError, ExperimentConfig};
use output::{trace_csv, Summary};

const SEED_ENV: &str = "MANIFOLD_PROX_SEED";

#[derive(Debug, Parser)]
#[command(
    name = "manifold-prox",
    version,
    about = "Proximal point method for max-type objectives on Hadamard manifolds"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run the solver described by a config file.
    Run { config: PathBuf },
    /// Run the randomized geometry and calculus probes.
    Check {
        #[arg(long, default_value_t = 1000)]
        trials: usize,
        /// Defaults to $MANIFOLD_PROX_SEED, then 0.
        #[arg(long)]
        seed: Option<u64>,
        /// One of euclidean, positive-reals, spd2, spd3; all when omitted.
        #[arg(long)]
        kind: Option<String>,
    },
    /// Print per-component Lipschitz estimates and the default lambda.
    EstimateLipschitz { config: PathBuf },
}

#[derive(Debug)]
pub enum CliError {
    /// Bad config, bad arguments or rejected parameters.
    Invalid(String),
    Runtime(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            Self::Invalid(_) => 3,
            Self::Runtime(_) => 1,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Invalid(m) => write!(f, "invalid configuration: {m}"),
            Self::Runtime(m) => write!(f, "error: {m}"),
        }
    }
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        Self::Invalid(e.0)
    }
}

impl From<manifold_prox::Error> for CliError {
    fn from(e: manifold_prox::Error) -> Self {
        use manifold_prox::Error as E;
        match e {
            E::LevelSetViolated { .. } => Self::Runtime(e.to_string()),
            _ => Self::Invalid(e.to_string()),
        }
    }
}

fn env_seed() -> Result<Option<u64>, CliError> {
    match std::env::var(SEED_ENV) {
        Ok(v) => v
            .trim()
            .parse::<u64>()
            .map(Some)
            .map_err(|_| CliError::Invalid(format!("{SEED_ENV}: expected an integer, got '{v}'"))),
        Err(_) => Ok(None),
    }
}

fn load(path: &Path) -> Result<ExperimentConfig, CliError> {
    let text =
        std::fs::read_to_string(path).map_err(|e| CliError::Invalid(format!("cannot read {}: {e}", path.display())))?;
    Ok(ExperimentConfig::parse(&text, env_seed()?)?)
}

fn write(path: &Path, contents: &str) -> Result<(), CliError> {
    std::fs::write(path, contents).map_err(|e| CliError::Runtime(format!("cannot write {}: {e}", path.display())))
}

fn cmd_run(path: &Path) -> Result<u8, CliError> {
    let cfg = load(path)?;
    let exp = experiment::build(&cfg)?;
    let lipschitz = exp.lipschitz(&cfg)?;
    let out = run(&exp.objective, exp.start.clone(), &cfg.solver, &lipschitz, &exp.level)?;
    if let Some(p) = &cfg.trace {
        write(p, &trace_csv(&out.records))?;
    }
    let summary = Summary::new(&out, &lipschitz, &cfg.echo).to_json();
    match &cfg.summary {
        Some(p) => write(p, &summary)?,
        None => print!("{summary}"),
    }
    eprintln!(
        "{} after {} iterations: f = {:.6e}",
        out.certificate.verdict.as_str(),
        out.records.len(),
        out.final_value
    );
    Ok(match out.certificate.verdict {
        Verdict::ConvergedStationary => 0,
        Verdict::MaxIterations => 2,
    })
}

fn cmd_check(trials: usize, seed: Option<u64>, kind: Option<&str>) -> Result<u8, CliError> {
    if trials == 0 {
        return Err(CliError::Invalid("--trials must be at least 1".into()));
    }
    let kinds = match kind {
        None => SuiteKind::ALL.to_vec(),
        Some(k) => match SuiteKind::parse(k) {
            Some(k) => vec![k],
            None => {
                let names: Vec<&str> = SuiteKind::ALL.iter().map(SuiteKind::name).collect();
                return Err(CliError::Invalid(format!("unknown kind '{k}' (expected one of {})", names.join(", "))));
            }
        },
    };
    let seed = match seed {
        Some(s) => s,
        None => env_seed()?.unwrap_or(0),
    };
    let mut failed = 0;
    for k in kinds {
        for r in default_suite(k, trials, seed)? {
            println!(
                "{:<40} trials={:<6} worst={:.3e} tol={:.1e} {}",
                r.name,
                r.trials,
                r.worst_violation,
                r.tolerance,
                if r.pass { "PASS" } else { "FAIL" }
            );
            failed += usize::from(!r.pass);
        }
    }
    if failed > 0 {
        println!("{failed} probe(s) failed");
        Ok(1)
    } else {
        println!("all probes passed");
        Ok(0)
    }
}

fn cmd_estimate(path: &Path) -> Result<u8, CliError> {
    let cfg = load(path)?;
    let exp = experiment::build(&cfg)?;
    let estimates = exp.estimate(&cfg)?;
    println!("region: center {:?} radius {:.16e}", exp.region.center.coords(), exp.region.radius);
    for (i, l) in estimates.iter().enumerate() {
        println!("L[{i}] = {l:.16e}");
    }
    let rule = cfg.solver.lambda_rule.resolve(&estimates, cfg.solver.safety_factor, cfg.solver.lambda_bar);
    println!("lambda = {:.16e}", rule.at(0));
    Ok(0)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 3 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match &cli.command {
        Command::Run { config } => cmd_run(config),
        Command::Check { trials, seed, kind } => cmd_check(*trials, *seed, kind.as_deref()),
        Command::EstimateLipschitz { config } => cmd_estimate(config),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.exit_code())
        }
    }
}
