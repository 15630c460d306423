//! One experiment: data, band specification and the partitioning methods to
//! build and run on it.

use std::sync::OnceLock;
use std::time::Instant;

use anyhow::{bail, Context};
use bandjoin_core::baselines::{choose_one_bucket_shape, grid_star, GridPlan, GridSearch, QuantilePlan};
use bandjoin_core::executor::{oracle_join, run_plan, JoinMetrics, Parallelism, RunOptions};
use bandjoin_core::hashing::derive_seed;
use bandjoin_core::optimizer::{estimate_plan_metrics, optimize_with, OptimizerConfig, PlanEstimate};
use bandjoin_core::sampling::SampleSet;
use bandjoin_core::{BandSpec, Plan, Relation};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{ExperimentConfig, Method};

/// Runs per-destination joins on the global rayon pool.
#[derive(Debug, Clone, Copy, Default)]
pub struct Rayon;

impl Parallelism for Rayon {
    fn map<T, R, F>(&self, items: &[T], f: F) -> Vec<R>
    where
        T: Sync,
        R: Send,
        F: Fn(&T) -> R + Sync + Send,
    {
        items.par_iter().map(f).collect()
    }
}

const SAMPLE_STREAM: u64 = 1;
const ROUTE_STREAM: u64 = 2;

pub struct Experiment {
    pub config: ExperimentConfig,
    pub spec: BandSpec,
    pub s: Relation,
    pub t: Relation,
    samples: OnceLock<(SampleSet, f64)>,
}

/// One row of an optimizer trace.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TraceRow {
    pub iteration: usize,
    #[serde(rename = "I")]
    pub input: f64,
    #[serde(rename = "L_m")]
    pub max_load: f64,
    pub objective: f64,
    /// Seconds since the optimizer started.
    pub elapsed: f64,
}

/// A plan and how it was found.
#[derive(Debug, Clone)]
pub struct Built {
    pub method: Method,
    pub plan: Plan,
    /// Optimizer iterations, for split-tree methods.
    pub iterations: Option<usize>,
    pub trace: Vec<TraceRow>,
    pub grid_search: Option<GridSearch>,
    /// Sample-based estimate, when the method has one.
    pub estimate: Option<PlanEstimate>,
    pub sampling_seconds: f64,
    /// Plan construction including sampling.
    pub optimization_seconds: f64,
}

#[derive(Debug, Clone)]
pub struct Executed {
    pub metrics: JoinMetrics,
    pub join_seconds: f64,
    /// The output was compared with the nested-loop join.
    pub verified: bool,
}

impl Experiment {
    pub fn new(config: ExperimentConfig, s: Relation, t: Relation) -> anyhow::Result<Self> {
        config.validate()?;
        let spec = config.band_spec()?;
        for (name, rel) in [("S", &s), ("T", &t)] {
            if rel.dims() != spec.dims() {
                bail!("relation {name} has {} dimensions but the band has {}", rel.dims(), spec.dims());
            }
        }
        Ok(Self { config, spec, s, t, samples: OnceLock::new() })
    }

    /// Loads or generates the configured data.
    pub fn prepare(config: ExperimentConfig) -> anyhow::Result<Self> {
        let (s, t) = crate::data::load_source(&config.data).context("cannot load input relations")?;
        Self::new(config, s, t)
    }

    pub fn workers(&self) -> usize {
        self.config.workers
    }

    /// Samples shared by all sample-based methods, and the seconds it took to
    /// draw them.
    pub fn samples(&self) -> anyhow::Result<(&SampleSet, f64)> {
        if self.samples.get().is_none() {
            let start = Instant::now();
            let seed = derive_seed(self.config.seed, SAMPLE_STREAM);
            let samples = SampleSet::draw(&self.s, &self.t, &self.spec, self.config.sampling_config(), seed)?;
            let _ = self.samples.set((samples, start.elapsed().as_secs_f64()));
        }
        let (samples, secs) = self.samples.get().expect("set above");
        Ok((samples, *secs))
    }

    pub fn optimizer_config(&self, symmetric: bool) -> anyhow::Result<OptimizerConfig> {
        let mut cfg = OptimizerConfig::new(self.workers(), self.config.termination()?);
        cfg.symmetric = symmetric;
        let o = &self.config.optimizer;
        if let Some(v) = o.window_fraction {
            cfg.window_fraction = v;
        }
        if let Some(v) = o.min_improvement {
            cfg.min_improvement = v;
        }
        if o.max_iterations.is_some() {
            cfg.max_iterations = o.max_iterations;
        }
        Ok(cfg)
    }

    pub fn build(&self, method: Method) -> anyhow::Result<Built> {
        let w = self.workers();
        let mut built = Built {
            method,
            plan: Plan::Quantile(QuantilePlan { size_per_block: 1 }),
            iterations: None,
            trace: Vec::new(),
            grid_search: None,
            estimate: None,
            sampling_seconds: 0.0,
            optimization_seconds: 0.0,
        };
        let start = Instant::now();
        match method {
            Method::RecPart | Method::RecPartS => {
                let (samples, sampling) = self.samples()?;
                let cfg = self.optimizer_config(method == Method::RecPart)?;
                let opt_start = Instant::now();
                let mut stamps = Vec::new();
                let out = optimize_with(samples, &self.spec, &cfg, |_| stamps.push(opt_start.elapsed().as_secs_f64()))?;
                built.optimization_seconds = sampling + opt_start.elapsed().as_secs_f64();
                built.sampling_seconds = sampling;
                built.trace = out
                    .trace
                    .iter()
                    .zip(stamps.iter().chain(std::iter::repeat(&0.0)))
                    .map(|(r, &elapsed)| TraceRow {
                        iteration: r.iteration,
                        input: r.estimate.input,
                        max_load: r.estimate.max_load,
                        objective: r.objective,
                        elapsed,
                    })
                    .collect();
                built.iterations = Some(out.iterations());
                built.estimate = Some(estimate_plan_metrics(&out.tree, samples, &self.spec, w));
                built.plan = Plan::SplitTree(out.tree);
                return Ok(built);
            }
            Method::OneBucket => {
                built.plan = Plan::OneBucket(choose_one_bucket_shape(w, self.s.len() as u64, self.t.len() as u64));
            }
            Method::Grid => {
                built.plan = Plan::Grid(GridPlan::for_relations(&self.s, &self.t, &self.spec, self.config.grid.multiplier)?);
            }
            Method::GridStar => {
                let (samples, sampling) = self.samples()?;
                let search_start = Instant::now();
                let search = grid_star(samples, &self.spec, w, &self.config.cost_model()?, self.config.grid.j_max)?;
                built.optimization_seconds = sampling + search_start.elapsed().as_secs_f64();
                built.sampling_seconds = sampling;
                built.estimate = search.evaluations.iter().find(|e| e.multiplier == search.plan.multiplier).map(|e| e.estimate);
                built.plan = Plan::Grid(search.plan.clone());
                built.grid_search = Some(search);
                return Ok(built);
            }
            Method::Quantile => {
                built.plan = Plan::Quantile(QuantilePlan { size_per_block: self.config.quantile.size_per_block });
            }
        }
        built.optimization_seconds = start.elapsed().as_secs_f64();
        Ok(built)
    }

    /// Executes a plan on the simulated workers.
    pub fn execute(&self, plan: &Plan) -> anyhow::Result<Executed> {
        let verify = self.config.verify_oracle;
        let opts = RunOptions { collect_output: verify, ..RunOptions::default() };
        let seed = derive_seed(self.config.seed, ROUTE_STREAM);
        let start = Instant::now();
        let run = run_plan(&self.s, &self.t, plan, &self.spec, self.workers(), seed, opts, &Rayon)?;
        let join_seconds = start.elapsed().as_secs_f64();
        if verify {
            let expected = oracle_join(&self.s, &self.t, &self.spec).context("oracle verification")?;
            let got = run.output.as_ref().expect("output collected when verifying");
            if *got != expected {
                bail!("{} plan produced {} result pairs but the nested-loop join has {}", plan.kind(), got.len(), expected.len());
            }
        }
        Ok(Executed { metrics: run.metrics, join_seconds, verified: verify })
    }
}
