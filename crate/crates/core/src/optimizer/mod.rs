//! Recursive partitioning of the join-attribute space.
//!
//! The optimizer keeps a split tree over a sample of the inputs. Each leaf
//! carries its best candidate split, and the loop repeatedly applies the
//! candidate with the highest score (load-variance reduction per duplicated
//! tuple) until the termination rule fires. The best tree seen along the way
//! is returned.

mod growth;
pub mod scoring;
pub mod tree;

use alloc::vec::Vec;

use crate::cost_model::CostModel;
use crate::geometry::BandSpec;
use crate::optimizer::scoring::{grid_cell_load, grid_input};
use crate::sampling::{PartitionStats, SampleSet};
use crate::schedule::{assign, Strategy, WorkerTotals};
use crate::{Error, Result};

pub use scoring::{load_variance, Axis, LeafSample, Score, Scorer, SplitCandidate};
pub use tree::{Inner, Leaf, LeafMode, Node, SplitKind, SplitTree};

/// When the repeat loop stops.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Termination {
    /// Minimize `max(duplication overhead, load overhead)`; stop once the
    /// duplication overhead exceeds the smallest load overhead seen so far.
    Theoretical,
    /// Minimize the modeled join time.
    Applied { model: CostModel },
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizerConfig {
    pub workers: usize,
    pub termination: Termination,
    /// Stall window as a multiple of the worker count. Defaults to 1 for
    /// applied and 3 for theoretical termination: the estimated max load only
    /// drops once the leaf count passes the next multiple of `w`, and
    /// theoretical runs have no model term that keeps improving in between.
    pub window_fraction: f64,
    /// Minimum improvement of the best objective over one window. Relative for
    /// applied termination, absolute (in overhead units) for theoretical.
    pub min_improvement: f64,
    /// Safety cap; defaults to `50·w`.
    pub max_iterations: Option<usize>,
    /// Also consider S-splits.
    pub symmetric: bool,
}

impl OptimizerConfig {
    pub fn new(workers: usize, termination: Termination) -> Self {
        let window_fraction = match termination {
            Termination::Theoretical => 3.0,
            Termination::Applied { .. } => 1.0,
        };
        Self { workers, termination, window_fraction, min_improvement: 0.01, max_iterations: None, symmetric: true }
    }

    pub fn window(&self) -> usize {
        libm::round(self.window_fraction * self.workers as f64).max(1.0) as usize
    }

    pub fn iteration_cap(&self) -> usize {
        self.max_iterations.unwrap_or(50 * self.workers)
    }

    fn validate(&self) -> Result<()> {
        if self.workers == 0 {
            return Err(Error::InvalidArgument("at least one worker is required".into()));
        }
        if !(self.window_fraction > 0.0 && self.window_fraction.is_finite()) {
            return Err(Error::InvalidArgument("window fraction must be positive".into()));
        }
        if !(self.min_improvement >= 0.0) {
            return Err(Error::InvalidArgument("minimum improvement must be non-negative".into()));
        }
        Ok(())
    }
}

/// Estimated totals of a partitioning after LPT assignment of its partitions.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PlanEstimate {
    /// Total input including duplicates.
    pub input: f64,
    pub max_load: f64,
    /// Input and output of the most loaded worker.
    pub max_worker_input: f64,
    pub max_worker_output: f64,
}

/// Estimated state after one iteration of the repeat loop.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterationRecord {
    pub iteration: usize,
    pub estimate: PlanEstimate,
    /// `((w−1)/w²) Σ l²` over all partitions, maintained incrementally.
    pub variance: f64,
    pub dup_overhead: f64,
    pub load_overhead: f64,
    /// The quantity the termination rule minimizes.
    pub objective: f64,
}

#[derive(Debug, Clone)]
pub struct Optimized {
    pub tree: SplitTree,
    pub trace: Vec<IterationRecord>,
    /// Iteration whose tree was returned.
    pub best_iteration: usize,
}

impl Optimized {
    /// Number of splits applied before the loop stopped.
    pub fn iterations(&self) -> usize {
        self.trace.len() - 1
    }
}

/// `max((I − n)/n, (L_m − L₀)/L₀)` with `L₀ = (β₂·n + β₃·out)/w`, `n = nS + nT`.
pub fn theoretical_objective(input: f64, max_load: f64, n_s: usize, n_t: usize, est_out: f64, spec: &BandSpec, workers: usize) -> f64 {
    let (dup, load) = overheads(input, max_load, n_s, n_t, est_out, spec, workers);
    dup.max(load)
}

fn overheads(input: f64, max_load: f64, n_s: usize, n_t: usize, est_out: f64, spec: &BandSpec, workers: usize) -> (f64, f64) {
    let n = (n_s + n_t) as f64;
    let l0 = spec.load(n, est_out) / workers as f64;
    let dup = if n > 0.0 { (input - n) / n } else { 0.0 };
    let load = if l0 > 0.0 { (max_load - l0) / l0 } else { 0.0 };
    (dup, load)
}

/// LPT-based estimate for leaves given by their stats and modes.
pub fn estimate_leaves<'a>(leaves: impl Iterator<Item = (&'a PartitionStats, LeafMode)>, spec: &BandSpec, workers: usize) -> PlanEstimate {
    let (mut loads, mut inputs, mut outputs) = (Vec::new(), Vec::new(), Vec::new());
    let mut total_input = 0.0;
    for (stats, mode) in leaves {
        match mode {
            LeafMode::Regular => {
                total_input += stats.input();
                loads.push(stats.load);
                inputs.push(stats.input());
                outputs.push(stats.est_o);
            }
            LeafMode::Small { rows, cols } => {
                total_input += grid_input(stats, rows, cols);
                let load = grid_cell_load(spec, stats, rows, cols);
                let input = stats.est_s / rows as f64 + stats.est_t / cols as f64;
                let output = stats.est_o / (rows as f64 * cols as f64);
                for _ in 0..mode.cells() {
                    loads.push(load);
                    inputs.push(input);
                    outputs.push(output);
                }
            }
        }
    }
    let worker_of = assign(&loads, workers, Strategy::Lpt);
    let totals = WorkerTotals::<f64>::tally(&worker_of, &inputs, &outputs, workers, spec.beta2(), spec.beta3());
    let m = totals.max_worker();
    PlanEstimate { input: total_input, max_load: totals.load[m], max_worker_input: totals.input[m], max_worker_output: totals.output[m] }
}

/// Estimates a finished tree's input and max worker load by routing the
/// samples through it.
pub fn estimate_plan_metrics(tree: &SplitTree, samples: &SampleSet, spec: &BandSpec, workers: usize) -> PlanEstimate {
    use crate::geometry::{reach_above, reach_below, RelationTag};
    let d = spec.dims();
    let mut counts = alloc::vec![[0usize; 3]; tree.num_leaves()];
    let mut lo = alloc::vec![0.0; d];
    let mut hi = alloc::vec![0.0; d];
    let mut out = Vec::new();
    for (rel, tag, slot) in [(&samples.s, RelationTag::S, 0), (&samples.t, RelationTag::T, 1)] {
        for (c, _) in rel.iter() {
            for k in 0..d {
                lo[k] = reach_below(c[k], spec.eps()[k]);
                hi[k] = reach_above(c[k], spec.eps()[k]);
            }
            tree.leaves_for(c, &lo, &hi, tag, &mut out);
            for &leaf in &out {
                counts[leaf][slot] += 1;
            }
        }
    }
    for i in 0..samples.out_s.len() {
        counts[tree.leaf_of_pair(samples.out_s.coords(i), samples.out_t.coords(i))][2] += 1;
    }
    let stats: Vec<PartitionStats> = counts
        .iter()
        .map(|[s, t, o]| PartitionStats::new(samples.w_s * *s as f64, samples.w_t * *t as f64, samples.w_o * *o as f64, spec))
        .collect();
    estimate_leaves(stats.iter().zip(tree.leaves().map(|l| l.mode)), spec, workers)
}

/// Runs the optimizer.
pub fn optimize(samples: &SampleSet, spec: &BandSpec, cfg: &OptimizerConfig) -> Result<Optimized> {
    optimize_with(samples, spec, cfg, |_| {})
}

/// Runs the optimizer, calling `observe` with every iteration record as it is
/// produced (e.g. to attach wall-clock timestamps).
pub fn optimize_with<F>(samples: &SampleSet, spec: &BandSpec, cfg: &OptimizerConfig, observe: F) -> Result<Optimized>
where
    F: FnMut(&IterationRecord),
{
    cfg.validate()?;
    if samples.dims() != spec.dims() {
        return Err(Error::DimensionMismatch { expected: spec.dims(), got: samples.dims() });
    }
    if samples.s.is_empty() && samples.t.is_empty() {
        return Err(Error::InvalidArgument("the optimizer needs a non-empty sample".into()));
    }
    growth::run(samples, spec, cfg, observe)
}
