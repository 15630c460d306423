//! Simulated distributed execution of a plan with exact metrics.
//!
//! Every destination is joined independently with [`local_band_join`]; the
//! destinations are then placed on `w` workers by LPT on their exact loads.

pub mod local_join;
pub mod oracle;

use alloc::vec::Vec;

use crate::geometry::{BandSpec, Relation};
use crate::plan::Plan;
use crate::routing::Shuffle;
use crate::schedule::{assign, Strategy, WorkerTotals};
use crate::{Error, Result};

pub use local_join::{for_each_match, local_band_join, local_band_join_count};
pub use oracle::{densest_eps_region, oracle_join, ORACLE_PAIR_LIMIT};

/// Runs independent per-destination jobs, possibly in parallel. Results must
/// come back in input order.
pub trait Parallelism {
    fn map<T, R, F>(&self, items: &[T], f: F) -> Vec<R>
    where
        T: Sync,
        R: Send,
        F: Fn(&T) -> R + Sync + Send;
}

/// Runs everything on the calling thread.
#[derive(Debug, Clone, Copy, Default)]
pub struct Sequential;

impl Parallelism for Sequential {
    fn map<T, R, F>(&self, items: &[T], f: F) -> Vec<R>
    where
        T: Sync,
        R: Send,
        F: Fn(&T) -> R + Sync + Send,
    {
        items.iter().map(f).collect()
    }
}

/// Destination-to-worker map with exact per-worker totals.
#[derive(Debug, Clone, PartialEq)]
pub struct WorkerAssignment {
    pub worker_of: Vec<usize>,
    pub totals: WorkerTotals<u64>,
}

pub fn assign_workers(inputs: &[u64], outputs: &[u64], spec: &BandSpec, workers: usize, strategy: Strategy) -> WorkerAssignment {
    let loads: Vec<f64> = inputs.iter().zip(outputs).map(|(i, o)| spec.load(*i as f64, *o as f64)).collect();
    let worker_of = assign(&loads, workers, strategy);
    let totals = WorkerTotals::tally(&worker_of, inputs, outputs, workers, spec.beta2(), spec.beta3());
    WorkerAssignment { worker_of, totals }
}

/// Exact measures of one execution.
#[derive(Debug, Clone, PartialEq)]
pub struct JoinMetrics {
    pub n_s: u64,
    pub n_t: u64,
    pub workers: usize,
    /// Number of destinations that received at least one tuple.
    pub destinations: usize,
    /// Total input including duplicates.
    pub input: u64,
    pub output: u64,
    /// Input and output of the most loaded worker.
    pub max_input: u64,
    pub max_output: u64,
    pub max_load: f64,
    /// `(β₂(|S|+|T|) + β₃·|output|)/w`.
    pub lower_bound_load: f64,
    pub dup_overhead: f64,
    pub load_overhead: f64,
}

impl JoinMetrics {
    /// `I_m / ((|S|+|T|)/w) − 1`.
    pub fn max_input_overhead(&self) -> f64 {
        let fair = (self.n_s + self.n_t) as f64 / self.workers as f64;
        if fair > 0.0 {
            self.max_input as f64 / fair - 1.0
        } else {
            0.0
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RunOptions {
    pub strategy: Strategy,
    /// Keep the result pairs; otherwise only count them.
    pub collect_output: bool,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self { strategy: Strategy::Lpt, collect_output: true }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunResult {
    pub metrics: JoinMetrics,
    /// Sorted `(s.id, t.id)` pairs when collected.
    pub output: Option<Vec<(u64, u64)>>,
    pub assignment: WorkerAssignment,
    pub shuffle: Shuffle,
}

/// Routes, joins and measures `plan` on `w` workers.
pub fn run_plan<P: Parallelism>(
    s: &Relation,
    t: &Relation,
    plan: &Plan,
    spec: &BandSpec,
    workers: usize,
    seed: u64,
    opts: RunOptions,
    par: &P,
) -> Result<RunResult> {
    let shuffle = plan.route(s, t, spec, seed)?;
    run_shuffle(s, t, shuffle, spec, workers, opts, par)
}

/// Joins an already routed input.
pub fn run_shuffle<P: Parallelism>(
    s: &Relation,
    t: &Relation,
    shuffle: Shuffle,
    spec: &BandSpec,
    workers: usize,
    opts: RunOptions,
    par: &P,
) -> Result<RunResult> {
    if workers == 0 {
        return Err(Error::InvalidArgument("at least one worker is required".into()));
    }
    let jobs: Vec<usize> = (0..shuffle.len()).collect();
    let results: Vec<(u64, Option<Vec<(u64, u64)>>)> = par.map(&jobs, |&k| {
        let sp = select(s, &shuffle.s[k]);
        let tp = select(t, &shuffle.t[k]);
        if opts.collect_output {
            let pairs = local_band_join(&sp, &tp, spec.eps());
            (pairs.len() as u64, Some(pairs))
        } else {
            (local_band_join_count(&sp, &tp, spec.eps()), None)
        }
    });

    let inputs: Vec<u64> = (0..shuffle.len()).map(|k| (shuffle.s[k].len() + shuffle.t[k].len()) as u64).collect();
    let outputs: Vec<u64> = results.iter().map(|r| r.0).collect();
    let assignment = assign_workers(&inputs, &outputs, spec, workers, opts.strategy);
    let m = assignment.totals.max_worker();

    let (n_s, n_t) = (s.len() as u64, t.len() as u64);
    let input: u64 = inputs.iter().sum();
    let output: u64 = outputs.iter().sum();
    let n = (n_s + n_t) as f64;
    let lower_bound_load = spec.load(n, output as f64) / workers as f64;
    let max_load = assignment.totals.load[m];
    let metrics = JoinMetrics {
        n_s,
        n_t,
        workers,
        destinations: shuffle.len(),
        input,
        output,
        max_input: assignment.totals.input[m],
        max_output: assignment.totals.output[m],
        max_load,
        lower_bound_load,
        dup_overhead: if n > 0.0 { (input as f64 - n) / n } else { 0.0 },
        load_overhead: if lower_bound_load > 0.0 { (max_load - lower_bound_load) / lower_bound_load } else { 0.0 },
    };
    let output = if opts.collect_output {
        let mut all: Vec<(u64, u64)> = results.into_iter().flat_map(|r| r.1.unwrap_or_default()).collect();
        all.sort_unstable();
        Some(all)
    } else {
        None
    };
    Ok(RunResult { metrics, output, assignment, shuffle })
}

fn select(rel: &Relation, idx: &[u32]) -> Relation {
    let mut out = Relation::with_capacity(rel.dims(), idx.len());
    for &i in idx {
        out.push_unchecked(rel.coords(i as usize), rel.id(i as usize));
    }
    out
}
