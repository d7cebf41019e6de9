//! Trace (CSV) and summary (JSON) writers.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use manifold_prox::prox::RunOutcome;
use manifold_prox::{IterationRecord, LambdaRule};
use serde::Serialize;

pub const TRACE_HEADER: &str = "k,f,step_dist,lambda,kkt_residual,stationarity,inner_iters";

/// 17 significant digits.
fn full(x: f64) -> String {
    format!("{x:.16e}")
}

/// One row per outer iteration. Row `k` describes iterate `p_k` (`k >= 1`):
/// `f(p_k)`, `d(p_k, p_{k-1})`, the `lambda` used to produce it, and so on.
pub fn trace_csv(records: &[IterationRecord]) -> String {
    let mut out = String::with_capacity(64 * (records.len() + 1));
    out.push_str(TRACE_HEADER);
    out.push('\n');
    for r in records {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{}",
            r.k + 1,
            full(r.f_value),
            full(r.step_dist),
            full(r.lambda),
            full(r.kkt_residual),
            full(r.stationarity),
            r.inner_iters
        );
    }
    out
}

#[derive(Debug, Serialize)]
pub struct Summary<'a> {
    pub version: &'a str,
    pub manifold: String,
    pub verdict: &'a str,
    pub iterations: usize,
    pub start_f: f64,
    pub final_f: f64,
    pub final_point: Vec<f64>,
    pub stationarity: f64,
    pub kkt_residual: f64,
    pub weights: Vec<f64>,
    pub lipschitz: Vec<f64>,
    pub lambda: Vec<f64>,
    pub level_entry: Option<usize>,
    pub inner_stalled: usize,
    pub config: &'a BTreeMap<String, String>,
}

impl<'a> Summary<'a> {
    pub fn new(out: &'a RunOutcome, lipschitz: &[f64], config: &'a BTreeMap<String, String>) -> Self {
        let lambda = match &out.schedule {
            LambdaRule::Fixed(l) => vec![*l],
            LambdaRule::Sequence(s) => s.clone(),
            LambdaRule::Auto => Vec::new(),
        };
        Self {
            version: manifold_prox::VERSION,
            manifold: out.final_point.kind().to_string(),
            verdict: out.certificate.verdict.as_str(),
            iterations: out.records.len(),
            start_f: out.start_value,
            final_f: out.final_value,
            final_point: out.final_point.coords().to_vec(),
            stationarity: out.records.last().map_or(f64::NAN, |r| r.stationarity),
            kkt_residual: out.certificate.kkt_residual,
            weights: out.certificate.weights.clone(),
            lipschitz: lipschitz.to_vec(),
            lambda,
            level_entry: out.level_entry,
            inner_stalled: out.records.iter().filter(|r| r.inner_stalled).count(),
            config,
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("summary serializes");
        s.push('\n');
        s
    }
}
