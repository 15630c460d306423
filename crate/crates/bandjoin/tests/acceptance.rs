//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Failures are reported but do not fail the test target unless
//! `ACCEPTANCE_STRICT` is set. A criterion that panics or errors counts as a
//! failure.

use std::collections::BTreeMap;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::Instant;

use anyhow::{anyhow, Context};
use bandjoin::config::*;
use bandjoin::experiment::{Built, Executed};
use bandjoin::{Experiment, Method};
use bandjoin_core::baselines::{grid_route, GridPlan};
use bandjoin_core::cost_model::{calibrate, CostModel, Observation};
use bandjoin_core::executor::densest_eps_region;
use bandjoin_core::optimizer::load_variance;
use bandjoin_core::{Relation, RelationTag};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn configs_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn load_config(name: &str) -> anyhow::Result<ExperimentConfig> {
    ExperimentConfig::load(&configs_dir().join(format!("{name}.json")))
}

struct Report {
    pass: bool,
    lines: Vec<String>,
}

impl Report {
    fn new() -> Self {
        Self { pass: true, lines: Vec::new() }
    }

    fn check(&mut self, ok: bool, line: String) {
        self.pass &= ok;
        self.lines.push(format!("{} {line}", if ok { "ok  " } else { "MISS" }));
    }
}

struct MethodRun {
    built: Built,
    run: Executed,
}

/// Builds and runs methods once per config and shares the results between
/// criteria.
#[derive(Default)]
struct Runs {
    cache: BTreeMap<(String, Method), MethodRun>,
    experiments: BTreeMap<String, Experiment>,
}

impl Runs {
    fn get(&mut self, config: &str, method: Method) -> anyhow::Result<&MethodRun> {
        let key = (config.to_string(), method);
        if !self.cache.contains_key(&key) {
            if !self.experiments.contains_key(config) {
                self.experiments.insert(config.to_string(), Experiment::prepare(load_config(config)?)?);
            }
            let exp = &self.experiments[config];
            let built = exp.build(method).with_context(|| format!("{config}: {method}"))?;
            let run = exp.execute(&built.plan).with_context(|| format!("{config}: {method}"))?;
            self.cache.insert(key.clone(), MethodRun { built, run });
        }
        Ok(&self.cache[&key])
    }
}

const CRITERION_3: [&str; 6] = [
    "pareto15-d1-ratio0",
    "pareto15-d1-ratio2.8",
    "pareto15-d1-ratio8",
    "pareto15-d3-ratio0",
    "pareto15-d3-ratio2.8",
    "pareto15-d3-ratio8",
];

// Criterion 1.

fn lattice(rng: &mut ChaCha8Rng, n: usize, dims: usize) -> Relation {
    let mut r = Relation::new(dims);
    for i in 0..n {
        let c: Vec<f64> = (0..dims).map(|_| rng.gen_range(0..16) as f64 * 0.25).collect();
        r.try_push(&c, i as u64).unwrap();
    }
    r
}

fn small_config(eps: Vec<f64>, workers: usize, seed: u64) -> ExperimentConfig {
    let rel = GenRelation { distribution: DistributionConfig::Uniform { lo: 0.0, hi: 1.0 }, n: 1, seed: 0 };
    ExperimentConfig {
        name: "exactly-once".into(),
        data: DataSource::Generate { dims: eps.len(), s: rel.clone(), t: rel },
        eps: eps.into_iter().map(Eps::from_value).collect(),
        beta2: 4.0,
        beta3: 1.0,
        workers,
        methods: Method::ALL.to_vec(),
        seed,
        termination: TerminationKind::Theoretical,
        cost_model: None,
        sampling: SamplingSection { input_budget: 400, output_cap: 2000 },
        optimizer: OptimizerSection::default(),
        grid: GridSection { multiplier: 1, j_max: 8 },
        quantile: QuantileSection { size_per_block: 37 },
        verify_oracle: true,
    }
}

fn exactly_once(r: &mut Report) -> anyhow::Result<()> {
    let start = Instant::now();
    let choices = [0.0, 0.25, 0.5, 0.75, 1.0];
    let instances = 240u64;
    let mut runs = 0;
    let mut zero_band = 0;
    let mut failures = Vec::new();
    for seed in 0..instances {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let dims = 1 + (seed % 3) as usize;
        let eps: Vec<f64> = (0..dims).map(|_| choices[rng.gen_range(0..choices.len())]).collect();
        let (ns, nt) = (rng.gen_range(1..=500), rng.gen_range(1..=500));
        let s = lattice(&mut rng, ns, dims);
        let t = lattice(&mut rng, nt, dims);
        let workers = rng.gen_range(1..=16);
        let exp = Experiment::new(small_config(eps.clone(), workers, seed), s, t)?;
        zero_band += exp.spec.has_zero_band() as usize;
        for m in Method::ALL {
            if matches!(m, Method::Grid | Method::GridStar) && exp.spec.has_zero_band() {
                continue;
            }
            let outcome = exp.build(m).and_then(|b| exp.execute(&b.plan));
            match outcome {
                Ok(e) if e.verified => runs += 1,
                Ok(_) => failures.push(format!("seed {seed} {m}: not verified")),
                Err(e) => failures.push(format!("seed {seed} {m}: {e:#}")),
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    r.check(failures.is_empty(), format!("{instances} instances ({zero_band} with a zero band), {runs} verified runs, {} mismatches", failures.len()));
    for f in failures.iter().take(5) {
        r.lines.push(format!("     {f}"));
    }
    r.check(secs < 120.0, format!("runtime {secs:.1} s (limit 120 s)"));
    Ok(())
}

// Criterion 2.

fn one_bucket_exact(r: &mut Report) -> anyhow::Result<()> {
    let base = load_config("one-bucket-uniform")?;
    let exp = Experiment::prepare(base.clone())?;
    let n = exp.s.len() as u64;
    assert_eq!(exp.t.len() as u64, n);
    let built = exp.build(Method::OneBucket)?;
    let bandjoin_core::Plan::OneBucket(shape) = &built.plan else { unreachable!() };
    r.check((shape.rows, shape.cols) == (5, 6), format!("w = 30 shape ({}, {})", shape.rows, shape.cols));

    let seeds = 10u64;
    let mut sum_im = 0.0;
    let mut exact = true;
    for seed in 0..seeds {
        let exp = Experiment::new(ExperimentConfig { seed, ..base.clone() }, exp.s.clone(), exp.t.clone())?;
        let m = exp.execute(&built.plan)?.metrics;
        exact &= 2 * m.input == 11 * (m.n_s + m.n_t);
        sum_im += m.max_input as f64;
    }
    r.check(exact, format!("I = 11/2·(|S| + |T|) on all {seeds} seeds (|S| = |T| = {n})"));
    let expected = n as f64 / 5.0 + n as f64 / 6.0;
    let mean = sum_im / seeds as f64;
    let rel = (mean - expected).abs() / mean;
    r.check(rel <= 0.03, format!("mean I_m {mean:.0} vs N/5 + N/6 = {expected:.0}, relative gap {rel:.4} (limit 0.03)"));
    Ok(())
}

// Criteria 3 and 8.

fn near_optimality(r: &mut Report, runs: &mut Runs) -> anyhow::Result<()> {
    for name in CRITERION_3 {
        let start = Instant::now();
        let mr = runs.get(name, Method::RecPart)?;
        let m = &mr.run.metrics;
        let total = mr.built.optimization_seconds + mr.run.join_seconds;
        let ratio = m.output as f64 / (m.n_s + m.n_t) as f64;
        r.check(
            m.dup_overhead <= 0.10 && m.load_overhead <= 0.15 && total <= 300.0,
            format!(
                "{name}: output/input {ratio:.2}, dupOverhead {:.4} (≤ 0.10), loadOverhead {:.4} (≤ 0.15), runtime {total:.1} s (wall {:.1} s)",
                m.dup_overhead,
                m.load_overhead,
                start.elapsed().as_secs_f64()
            ),
        );
    }
    Ok(())
}

fn complexity(r: &mut Report, runs: &mut Runs) -> anyhow::Result<()> {
    for name in CRITERION_3 {
        let mr = runs.get(name, Method::RecPart)?;
        let iters = mr.built.iterations.unwrap_or(0);
        let w = mr.run.metrics.workers;
        let secs = mr.built.optimization_seconds;
        r.check(iters <= 10 * w && secs <= 10.0, format!("{name}: {iters} iterations (≤ {}), optimization {secs:.2} s (≤ 10 s)", 10 * w));
    }
    Ok(())
}

// Criterion 4.

fn dominance(r: &mut Report, runs: &mut Runs) -> anyhow::Result<()> {
    let configs: Vec<&str> = CRITERION_3.iter().copied().chain(["pareto20-d3"]).collect();
    for name in configs {
        let cfg = load_config(name)?;
        let dims = cfg.eps.len();
        let rec = runs.get(name, Method::RecPart)?.run.metrics.clone();
        let n = rec.n_s + rec.n_t;
        let mut line = format!("{name}: RecPart I/n {:.3}", rec.input as f64 / n as f64);
        let mut ok = rec.input as f64 <= 1.1 * n as f64;
        let mut others = Vec::new();
        for &m in &cfg.methods {
            if matches!(m, Method::RecPart | Method::RecPartS) {
                continue;
            }
            let metrics = runs.get(name, m)?.run.metrics.clone();
            match m {
                Method::OneBucket => {
                    let exact = 2 * metrics.input == 11 * n;
                    ok &= exact;
                    line.push_str(&format!(", 1-Bucket I/n {:.3}{}", metrics.input as f64 / n as f64, if exact { "" } else { " (≠ 5.5)" }));
                }
                Method::Grid if dims == 3 && cfg.grid.multiplier == 1 => {
                    let big = metrics.input >= 5 * n;
                    ok &= big;
                    line.push_str(&format!(", Grid(j=1) I/n {:.2}", metrics.input as f64 / n as f64));
                }
                _ => {}
            }
            others.push((m, metrics.max_load));
        }
        let smallest = others.iter().all(|(_, l)| rec.max_load < *l);
        ok &= smallest;
        let loads: Vec<String> = others.iter().map(|(m, l)| format!("{m} {l:.0}")).collect();
        line.push_str(&format!("; L_m RecPart {:.0} vs {}", rec.max_load, loads.join(", ")));
        r.check(ok, line);
    }
    Ok(())
}

// Criterion 5.

fn adversary(r: &mut Report) -> anyhow::Result<()> {
    let exp = Experiment::prepare(load_config("adversarial-d3")?)?;
    let dense = densest_eps_region(&exp.t, &exp.spec, usize::MAX, 0);
    r.check(dense == exp.t.len() as u64, format!("{dense} of {} T-tuples in one ε-range", exp.t.len()));
    let mut worst = u64::MAX;
    for j in 1..=64u32 {
        let plan = GridPlan::for_relations(&exp.s, &exp.t, &exp.spec, j)?;
        let mut counts: BTreeMap<u128, u64> = BTreeMap::new();
        for (c, _) in exp.t.iter() {
            for k in grid_route(c, RelationTag::T, &plan, &exp.spec) {
                *counts.entry(k).or_default() += 1;
            }
        }
        worst = worst.min(counts.values().copied().max().unwrap_or(0));
    }
    r.check(worst >= 1000, format!("over j = 1..64 the fullest cell always holds ≥ {worst} T-tuples (need 1000)"));
    Ok(())
}

// Criterion 6.

fn variance(r: &mut Report) -> anyhow::Result<()> {
    let trials = 1_000_000u32;
    let mut worst: f64 = 0.0;
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for v in 0..50 {
        let len = rng.gen_range(2..=24);
        let loads: Vec<f64> = if v % 2 == 0 {
            (0..len).map(|_| rng.gen_range(0.0..100.0)).collect()
        } else {
            (0..len).map(|_| (1.0 - rng.gen::<f64>()).powf(-1.0 / 1.5)).collect()
        };
        for w in [2usize, 5, 30] {
            let predicted = load_variance(&loads, w);
            // Loads of all w workers per trial; every worker has the same
            // marginal distribution.
            let mut per = vec![0.0; w];
            let (mut sum, mut sum_sq) = (0.0f64, 0.0f64);
            for _ in 0..trials {
                per.iter_mut().for_each(|x| *x = 0.0);
                for l in &loads {
                    per[rng.gen_range(0..w)] += l;
                }
                for x in &per {
                    sum += x;
                    sum_sq += x * x;
                }
            }
            let count = trials as f64 * w as f64;
            let mean = sum / count;
            let empirical = (sum_sq - count * mean * mean) / (count - 1.0);
            worst = worst.max((empirical - predicted).abs() / predicted);
        }
    }
    r.check(worst <= 0.02, format!("50 load vectors × w ∈ {{2, 5, 30}}, 10⁶ random assignments each: worst relative gap {worst:.4} (limit 0.02)"));
    Ok(())
}

// Criterion 7.

fn symmetric_benefit(r: &mut Report, runs: &mut Runs) -> anyhow::Result<()> {
    let name = "rv-pareto15-d1";
    let sym = runs.get(name, Method::RecPart)?.run.metrics.max_input_overhead();
    let asym = runs.get(name, Method::RecPartS)?.run.metrics.max_input_overhead();
    r.check(sym <= 0.15 && asym > 1.0, format!("{name}: I_m-overhead RecPart {sym:.4} (≤ 0.15), RecPart-S {asym:.4} (> 1)"));
    Ok(())
}

// Criterion 9.

fn grid_search(r: &mut Report) -> anyhow::Result<()> {
    let exp = Experiment::prepare(load_config("pareto15-d3-gridstar")?)?;
    let built = exp.build(Method::GridStar)?;
    let search = built.grid_search.as_ref().ok_or_else(|| anyhow!("grid search missing"))?;
    let j = search.plan.multiplier;
    let time = |m: u32| search.evaluations.iter().find(|e| e.multiplier == m).map(|e| e.predicted_time).unwrap();
    let ratio = time(j) / time(1);
    let curve: Vec<String> = search.evaluations.iter().map(|e| format!("{}:{:.3e}", e.multiplier, e.predicted_time)).collect();
    r.check(j >= 8 && ratio <= 0.5, format!("selected j = {j} (≥ 8), predicted time ratio to j = 1: {ratio:.3} (≤ 0.5)"));
    r.lines.push(format!("     predicted times {}", curve.join(" ")));
    Ok(())
}

// Criterion 10.

fn calibration(r: &mut Report) -> anyhow::Result<()> {
    let truth = CostModel::new(20.0, 2.0e-6, 8.0e-6, 2.0e-6)?;
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let mut worst: f64 = 0.0;
    for _ in 0..5 {
        let obs: Vec<Observation> = (0..100)
            .map(|_| {
                let input = rng.gen_range(1.0e6..5.0e7);
                let max_input = rng.gen_range(1.0e5..5.0e6);
                let max_output = rng.gen_range(0.0..2.0e7);
                let noise = 1.0 + 0.01 * (rng.gen::<f64>() * 2.0 - 1.0);
                Observation { input, max_input, max_output, seconds: truth.estimate(input, max_input, max_output) * noise }
            })
            .collect();
        let fit = calibrate(&obs)?;
        for (a, b) in [(fit.beta0, truth.beta0), (fit.beta1, truth.beta1), (fit.beta2, truth.beta2), (fit.beta3, truth.beta3)] {
            worst = worst.max((a - b).abs() / b);
        }
    }
    r.check(worst <= 0.05, format!("5 fits of 100 observations with ±1% noise: worst coefficient error {worst:.4} (limit 0.05)"));
    Ok(())
}

// Criterion 11.

fn determinism(r: &mut Report) -> anyhow::Result<()> {
    let dir = tempfile::tempdir()?;
    let config = configs_dir().join("determinism-small.json");
    let mut outs = Vec::new();
    for k in 0..2 {
        let out = dir.path().join(format!("run{k}"));
        let status = Command::new(env!("CARGO_BIN_EXE_bandjoin"))
            .arg("compare")
            .arg("--config")
            .arg(&config)
            .arg("--out-dir")
            .arg(&out)
            .output()?;
        if !status.status.success() {
            return Err(anyhow!("compare failed: {}", String::from_utf8_lossy(&status.stderr)));
        }
        outs.push(out);
    }
    let mut compared = 0;
    let mut differ = Vec::new();
    for entry in std::fs::read_dir(&outs[0])? {
        let name = entry?.file_name().into_string().unwrap();
        if name.ends_with(".plan.json") || name.ends_with(".metrics.json") || name == "compare.md" || name == "scatter.csv" {
            compared += 1;
            if std::fs::read(outs[0].join(&name))? != std::fs::read(outs[1].join(&name))? {
                differ.push(name);
            }
        }
    }
    r.check(compared >= 14 && differ.is_empty(), format!("{compared} plan, metrics and comparison files byte-identical across two runs; differing: {differ:?}"));
    Ok(())
}

fn main() {
    let mut runs = Runs::default();
    type Check<'a> = Box<dyn FnMut(&mut Report) -> anyhow::Result<()> + 'a>;
    let runs = std::cell::RefCell::new(&mut runs);
    let criteria: Vec<(u32, &str, Check)> = vec![
        (1, "exactly-once correctness", Box::new(exactly_once)),
        (2, "1-Bucket exact metrics", Box::new(one_bucket_exact)),
        (3, "RecPart near-optimality", Box::new(|r| near_optimality(r, &mut runs.borrow_mut()))),
        (4, "dominance over baselines", Box::new(|r| dominance(r, &mut runs.borrow_mut()))),
        (5, "grid adversary", Box::new(adversary)),
        (6, "load variance formula", Box::new(variance)),
        (7, "symmetric-split benefit", Box::new(|r| symmetric_benefit(r, &mut runs.borrow_mut()))),
        (8, "optimizer complexity", Box::new(|r| complexity(r, &mut runs.borrow_mut()))),
        (9, "grid search", Box::new(grid_search)),
        (10, "cost model calibration", Box::new(calibration)),
        (11, "determinism", Box::new(determinism)),
    ];
    let only: Option<Vec<u32>> = std::env::var("ACCEPTANCE_ONLY").ok().map(|v| v.split(',').filter_map(|x| x.trim().parse().ok()).collect());
    let mut failed = Vec::new();
    for (id, title, mut check) in criteria {
        if only.as_ref().is_some_and(|o| !o.contains(&id)) {
            continue;
        }
        let start = Instant::now();
        let mut report = Report::new();
        let outcome = catch_unwind(AssertUnwindSafe(|| check(&mut report)));
        match outcome {
            Ok(Ok(())) => {}
            Ok(Err(e)) => report.check(false, format!("error: {e:#}")),
            Err(_) => report.check(false, "panicked".into()),
        }
        let verdict = if report.pass { "PASS" } else { "FAIL" };
        println!("{verdict} criterion {id}: {title} ({:.1} s)", start.elapsed().as_secs_f64());
        for line in &report.lines {
            println!("     {line}");
        }
        if !report.pass {
            failed.push(id);
        }
    }
    println!("acceptance: {} failed {:?}", failed.len(), failed);
    if !failed.is_empty() && std::env::var_os("ACCEPTANCE_STRICT").is_some() {
        std::process::exit(1);
    }
}
