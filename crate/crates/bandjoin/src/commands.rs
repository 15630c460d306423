//! The `optimize`, `run`, `compare` and `gen` commands.
//!
//! Per method `m` the output directory receives `m.plan.json`,
//! `m.trace.csv` (split-tree methods), `m.search.csv` (grid search),
//! `m.metrics.json` and `m.timings.json`. Runs append to `results.csv`;
//! `compare` also writes `compare.md` and `scatter.csv`.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use bandjoin_core::datagen::GenSpec;

use crate::config::{DataSource, ExperimentConfig, GenRelation, Method};
use crate::data::{generate, write_csv};
use crate::experiment::{Built, Executed, Experiment};
use crate::plan_io::PlanFile;
use crate::report::{append_result, compare_markdown, scatter_csv, write_grid_search, write_trace, MetricsRecord, Timings};

pub fn plan_path(out_dir: &Path, method: Method) -> PathBuf {
    out_dir.join(format!("{method}.plan.json"))
}

fn ensure_dir(dir: &Path) -> anyhow::Result<()> {
    std::fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))
}

fn write_text(path: &Path, text: &str) -> anyhow::Result<()> {
    std::fs::write(path, text).with_context(|| format!("cannot write {}", path.display()))
}

/// Writes the plan and its construction trace.
fn save_built(exp: &Experiment, built: &Built, out_dir: &Path) -> anyhow::Result<()> {
    PlanFile::new(built.method, exp.workers(), exp.spec.eps(), &built.plan).write(&plan_path(out_dir, built.method))?;
    if built.iterations.is_some() {
        write_trace(&out_dir.join(format!("{}.trace.csv", built.method)), &built.trace)?;
    }
    write_grid_search(&out_dir.join(format!("{}.search.csv", built.method)), built)
}

fn save_run(exp: &Experiment, built: &Built, run: &Executed, out_dir: &Path) -> anyhow::Result<MetricsRecord> {
    let rec = MetricsRecord::new(&exp.config.name, built, run, &exp.config.cost_model()?);
    let times = Timings::new(built, run);
    write_text(&out_dir.join(format!("{}.metrics.json", built.method)), &rec.to_json())?;
    write_text(&out_dir.join(format!("{}.timings.json", built.method)), &(serde_json::to_string_pretty(&times)? + "\n"))?;
    append_result(&out_dir.join("results.csv"), &rec, &times)?;
    Ok(rec)
}

/// Builds a plan per configured method.
pub fn optimize(cfg: ExperimentConfig, out_dir: &Path) -> anyhow::Result<Vec<Built>> {
    ensure_dir(out_dir)?;
    let exp = Experiment::prepare(cfg)?;
    let mut all = Vec::new();
    for &m in &exp.config.methods {
        let built = exp.build(m).with_context(|| format!("method {m}"))?;
        save_built(&exp, &built, out_dir)?;
        all.push(built);
    }
    Ok(all)
}

/// Runs every configured method, reading the plan from `plan` when given
/// (only valid with a single method) and building it otherwise.
pub fn run(cfg: ExperimentConfig, plan: Option<&Path>, out_dir: &Path) -> anyhow::Result<Vec<MetricsRecord>> {
    ensure_dir(out_dir)?;
    if plan.is_some() && cfg.methods.len() != 1 {
        bail!("a plan file can only be run for a single method");
    }
    let exp = Experiment::prepare(cfg)?;
    let mut records = Vec::new();
    for &m in &exp.config.methods {
        let built = match plan {
            Some(path) => load_built(&exp, m, path)?,
            None => {
                let b = exp.build(m).with_context(|| format!("method {m}"))?;
                save_built(&exp, &b, out_dir)?;
                b
            }
        };
        let run = exp.execute(&built.plan).with_context(|| format!("method {m}"))?;
        records.push(save_run(&exp, &built, &run, out_dir)?);
    }
    Ok(records)
}

fn load_built(exp: &Experiment, method: Method, path: &Path) -> anyhow::Result<Built> {
    let file = PlanFile::read(path)?;
    let eps: Vec<f64> = file.eps.iter().map(|e| e.value()).collect();
    if eps != exp.spec.eps() {
        bail!("plan {} was built for band widths {:?}, the config has {:?}", path.display(), eps, exp.spec.eps());
    }
    if file.workers != exp.workers() {
        bail!("plan {} was built for {} workers, the config has {}", path.display(), file.workers, exp.workers());
    }
    Ok(Built {
        method,
        plan: file.plan.to_plan()?,
        iterations: None,
        trace: Vec::new(),
        grid_search: None,
        estimate: None,
        sampling_seconds: 0.0,
        optimization_seconds: 0.0,
    })
}

/// Runs all configured methods on the same data and seeds and writes the
/// comparison table and overhead scatter.
pub fn compare(cfg: ExperimentConfig, out_dir: &Path) -> anyhow::Result<Vec<MetricsRecord>> {
    let name = cfg.name.clone();
    let records = run(cfg, None, out_dir)?;
    write_text(&out_dir.join("compare.md"), &compare_markdown(&name, &records))?;
    write_text(&out_dir.join("scatter.csv"), &scatter_csv(&records))?;
    Ok(records)
}

/// Writes the generated relations as `s.csv` and `t.csv`.
pub fn gen(cfg: &ExperimentConfig, out_dir: &Path) -> anyhow::Result<[PathBuf; 2]> {
    let DataSource::Generate { dims, s, t } = &cfg.data else {
        bail!("`gen` needs a config whose data source is `generate`");
    };
    ensure_dir(out_dir)?;
    let spec = |r: &GenRelation| GenSpec { distribution: r.distribution.into(), n: r.n, dims: *dims, seed: r.seed };
    let paths = [out_dir.join("s.csv"), out_dir.join("t.csv")];
    for (rel, path) in [s, t].into_iter().zip(&paths) {
        write_csv(path, &generate(&spec(rel))?)?;
    }
    Ok(paths)
}
