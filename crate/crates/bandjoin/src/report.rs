//! Metrics records, result logs, traces and comparison tables.
//!
//! Everything here except the timing records is a pure function of the config
//! and seeds, so repeated runs produce identical files. Wall-clock times go to
//! separate files.

use std::fs::OpenOptions;
use std::path::Path;

use anyhow::Context;
use bandjoin_core::cost_model::CostModel;
use serde::Serialize;

use crate::config::Method;
use crate::experiment::{Built, Executed, TraceRow};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricsRecord {
    pub config: String,
    pub method: Method,
    pub plan: String,
    pub workers: usize,
    #[serde(rename = "nS")]
    pub n_s: u64,
    #[serde(rename = "nT")]
    pub n_t: u64,
    #[serde(rename = "I")]
    pub input: u64,
    #[serde(rename = "I_m")]
    pub max_input: u64,
    #[serde(rename = "O_m")]
    pub max_output: u64,
    #[serde(rename = "L_m")]
    pub max_load: f64,
    #[serde(rename = "L0")]
    pub lower_bound_load: f64,
    pub output: u64,
    #[serde(rename = "dupOverhead")]
    pub dup_overhead: f64,
    #[serde(rename = "loadOverhead")]
    pub load_overhead: f64,
    /// `I_m` relative to an even share of the input, minus one.
    #[serde(rename = "maxInputOverhead")]
    pub max_input_overhead: f64,
    /// Running-time model evaluated on the measured `I`, `I_m`, `O_m`.
    #[serde(rename = "modeledTime")]
    pub modeled_time: f64,
    pub iterations: Option<usize>,
    pub verified: bool,
}

impl MetricsRecord {
    pub fn new(config: &str, built: &Built, run: &Executed, model: &CostModel) -> Self {
        let m = &run.metrics;
        Self {
            config: config.to_string(),
            method: built.method,
            plan: built.plan.kind().to_string(),
            workers: m.workers,
            n_s: m.n_s,
            n_t: m.n_t,
            input: m.input,
            max_input: m.max_input,
            max_output: m.max_output,
            max_load: m.max_load,
            lower_bound_load: m.lower_bound_load,
            output: m.output,
            dup_overhead: m.dup_overhead,
            load_overhead: m.load_overhead,
            max_input_overhead: m.max_input_overhead(),
            modeled_time: model.estimate(m.input as f64, m.max_input as f64, m.max_output as f64),
            iterations: built.iterations,
            verified: run.verified,
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("metrics always serialize");
        s.push('\n');
        s
    }
}

/// Wall-clock components of one run. Total runtime is optimization plus join.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Timings {
    #[serde(rename = "samplingSeconds")]
    pub sampling: f64,
    /// Includes sampling.
    #[serde(rename = "optimizationSeconds")]
    pub optimization: f64,
    #[serde(rename = "joinSeconds")]
    pub join: f64,
    #[serde(rename = "totalSeconds")]
    pub total: f64,
}

impl Timings {
    pub fn new(built: &Built, run: &Executed) -> Self {
        Self { sampling: built.sampling_seconds, optimization: built.optimization_seconds, join: run.join_seconds, total: built.optimization_seconds + run.join_seconds }
    }
}

#[derive(Serialize)]
struct ResultRow<'a> {
    config: &'a str,
    method: &'a str,
    plan: &'a str,
    workers: usize,
    #[serde(rename = "I")]
    input: u64,
    #[serde(rename = "I_m")]
    max_input: u64,
    #[serde(rename = "O_m")]
    max_output: u64,
    #[serde(rename = "L_m")]
    max_load: f64,
    #[serde(rename = "L0")]
    lower_bound_load: f64,
    output: u64,
    #[serde(rename = "dupOverhead")]
    dup_overhead: f64,
    #[serde(rename = "loadOverhead")]
    load_overhead: f64,
    #[serde(rename = "optimizationSeconds")]
    optimization: f64,
    #[serde(rename = "joinSeconds")]
    join: f64,
}

/// Appends one row to a CSV results log, writing the header if the file is new
/// or empty.
pub fn append_result(path: &Path, rec: &MetricsRecord, times: &Timings) -> anyhow::Result<()> {
    let fresh = std::fs::metadata(path).map(|m| m.len() == 0).unwrap_or(true);
    let file = OpenOptions::new().create(true).append(true).open(path).with_context(|| format!("cannot open {}", path.display()))?;
    let mut w = csv::WriterBuilder::new().has_headers(fresh).from_writer(file);
    w.serialize(ResultRow {
        config: &rec.config,
        method: rec.method.name(),
        plan: &rec.plan,
        workers: rec.workers,
        input: rec.input,
        max_input: rec.max_input,
        max_output: rec.max_output,
        max_load: rec.max_load,
        lower_bound_load: rec.lower_bound_load,
        output: rec.output,
        dup_overhead: rec.dup_overhead,
        load_overhead: rec.load_overhead,
        optimization: times.optimization,
        join: times.join,
    })?;
    w.flush()?;
    Ok(())
}

pub fn write_trace(path: &Path, trace: &[TraceRow]) -> anyhow::Result<()> {
    let mut w = csv::Writer::from_path(path).with_context(|| format!("cannot write {}", path.display()))?;
    for row in trace {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Serialize)]
struct SearchRow {
    j: u32,
    #[serde(rename = "I")]
    input: f64,
    #[serde(rename = "I_m")]
    max_input: f64,
    #[serde(rename = "O_m")]
    max_output: f64,
    #[serde(rename = "predictedTime")]
    predicted_time: f64,
}

/// Grid search evaluations, one row per multiplier tried.
pub fn write_grid_search(path: &Path, built: &Built) -> anyhow::Result<()> {
    let Some(search) = &built.grid_search else { return Ok(()) };
    let mut w = csv::Writer::from_path(path).with_context(|| format!("cannot write {}", path.display()))?;
    for e in &search.evaluations {
        w.serialize(SearchRow {
            j: e.multiplier,
            input: e.estimate.input,
            max_input: e.estimate.max_worker_input,
            max_output: e.estimate.max_worker_output,
            predicted_time: e.predicted_time,
        })?;
    }
    w.flush()?;
    Ok(())
}

/// Overhead scatter data: one `(method, dupOverhead, loadOverhead)` point per
/// method.
pub fn scatter_csv(records: &[MetricsRecord]) -> String {
    let mut out = String::from("method,dupOverhead,loadOverhead\n");
    for r in records {
        out.push_str(&format!("{},{},{}\n", r.method, r.dup_overhead, r.load_overhead));
    }
    out
}

fn millions(x: f64) -> String {
    format!("{:.3}", x / 1e6)
}

/// Markdown comparison table. Sizes are in millions of tuples; the time
/// column is the running-time model applied to the measured sizes.
pub fn compare_markdown(name: &str, records: &[MetricsRecord]) -> String {
    let mut out = format!("## {name}\n\n");
    out.push_str("| Method | Modeled time | I [M] | I_m [M] | O_m [M] | L_m | dupOverhead | loadOverhead |\n");
    out.push_str("|---|---:|---:|---:|---:|---:|---:|---:|\n");
    for r in records {
        out.push_str(&format!(
            "| {} | {:.0} | {} | {} | {} | {:.0} | {:.4} | {:.4} |\n",
            r.method,
            r.modeled_time,
            millions(r.input as f64),
            millions(r.max_input as f64),
            millions(r.max_output as f64),
            r.max_load,
            r.dup_overhead,
            r.load_overhead
        ));
    }
    if let Some(first) = records.first() {
        out.push_str(&format!(
            "\n|S| = {}, |T| = {}, output = {}, w = {}, L0 = {:.0}\n",
            first.n_s, first.n_t, first.output, first.workers, first.lower_bound_load
        ));
    }
    out
}
