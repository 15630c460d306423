//! The repeat loop: a growing split tree over sample indices, a priority
//! queue of leaves keyed by their best score, and the stopping rules.

use alloc::collections::BinaryHeap;
use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Ordering;

use super::scoring::{grid_input, grid_square_sum, variance_factor, Axis, LeafSample, Scorer, SplitCandidate};
use super::tree::{Inner, Leaf, LeafMode, Node, SplitTree};
use super::{estimate_leaves, overheads, IterationRecord, Optimized, OptimizerConfig, Termination};
use crate::geometry::{is_small, BandSpec, Rect};
use crate::sampling::{PartitionStats, SampleSet};
use crate::Result;

struct GrowLeaf {
    rect: Rect,
    mode: LeafMode,
    sample: LeafSample,
    stats: PartitionStats,
    best: Option<SplitCandidate>,
    version: u32,
}

enum GrowNode {
    Inner(Inner),
    Leaf(GrowLeaf),
}

/// A split tree under construction.
struct Growth<'s, 'a> {
    scorer: &'s Scorer<'a>,
    nodes: Vec<GrowNode>,
    input: f64,
    square_sum: f64,
}

impl<'s, 'a> Growth<'s, 'a> {
    fn new(scorer: &'s Scorer<'a>) -> Self {
        let mut g = Self { scorer, nodes: Vec::new(), input: 0.0, square_sum: 0.0 };
        let root = g.make_leaf(Rect::root(scorer.spec().dims()), scorer.root_sample());
        g.add_contribution(&root, 1.0);
        g.nodes.push(GrowNode::Leaf(root));
        g
    }

    fn spec(&self) -> &BandSpec {
        self.scorer.spec()
    }

    fn make_leaf(&self, rect: Rect, sample: LeafSample) -> GrowLeaf {
        let stats = self.scorer.stats(&sample);
        let mode = if is_small(&rect, self.spec()) { LeafMode::Small { rows: 1, cols: 1 } } else { LeafMode::Regular };
        GrowLeaf { rect, mode, sample, stats, best: None, version: 0 }
    }

    fn add_contribution(&mut self, leaf: &GrowLeaf, sign: f64) {
        let (input, sq) = contribution(self.spec(), leaf);
        self.input += sign * input;
        self.square_sum += sign * sq;
    }

    fn leaf_mut(&mut self, node: usize) -> &mut GrowLeaf {
        match &mut self.nodes[node] {
            GrowNode::Leaf(l) => l,
            GrowNode::Inner(_) => panic!("node {node} is not a leaf"),
        }
    }

    /// Applies `cand` to leaf `node` and returns the leaves whose candidates
    /// must be recomputed.
    fn apply(&mut self, node: usize, cand: &SplitCandidate) -> Vec<usize> {
        match *cand {
            SplitCandidate::Regular { dim, value, kind, .. } => {
                let GrowNode::Leaf(parent) = core::mem::replace(
                    &mut self.nodes[node],
                    GrowNode::Inner(Inner { dim, value, kind, left: 0, right: 0 }),
                ) else {
                    panic!("node {node} is not a leaf")
                };
                self.add_contribution(&parent, -1.0);
                let (lr, rr) = parent.rect.split(dim, value);
                let (ls, rs) = self.scorer.split_sample(&parent.sample, dim, value, kind);
                let left = self.make_leaf(lr, ls);
                let right = self.make_leaf(rr, rs);
                self.add_contribution(&left, 1.0);
                self.add_contribution(&right, 1.0);
                let (li, ri) = (self.nodes.len(), self.nodes.len() + 1);
                self.nodes.push(GrowNode::Leaf(left));
                self.nodes.push(GrowNode::Leaf(right));
                self.nodes[node] = GrowNode::Inner(Inner { dim, value, kind, left: li, right: ri });
                vec![li, ri]
            }
            SplitCandidate::Small { axis, .. } => {
                let scorer = self.scorer;
                let spec = scorer.spec();
                let leaf = self.leaf_mut(node);
                let before = contribution(spec, leaf);
                let LeafMode::Small { rows, cols } = leaf.mode else { panic!("node {node} is not a small leaf") };
                leaf.mode = match axis {
                    Axis::Row => LeafMode::Small { rows: rows + 1, cols },
                    Axis::Column => LeafMode::Small { rows, cols: cols + 1 },
                };
                leaf.version += 1;
                let after = contribution(spec, leaf);
                self.input += after.0 - before.0;
                self.square_sum += after.1 - before.1;
                vec![node]
            }
        }
    }

    /// Recomputes the best candidate of a leaf and returns its queue priority.
    fn evaluate(&mut self, node: usize) -> Option<f64> {
        let scorer = self.scorer;
        let leaf = self.leaf_mut(node);
        let (cand, _) = match leaf.mode {
            LeafMode::Regular => scorer.best_split_regular(&leaf.rect, &leaf.sample),
            LeafMode::Small { rows, cols } => scorer.best_split_small(&leaf.stats, rows, cols),
        };
        leaf.best = cand;
        cand.map(|c| scorer.score(&c).value)
    }

    fn leaves(&self) -> impl Iterator<Item = &GrowLeaf> + '_ {
        self.nodes.iter().filter_map(|n| match n {
            GrowNode::Leaf(l) => Some(l),
            GrowNode::Inner(_) => None,
        })
    }

    fn record(&self, iteration: usize, cfg: &OptimizerConfig) -> IterationRecord {
        let samples = self.scorer.samples();
        let w = cfg.workers;
        let mut estimate = estimate_leaves(self.leaves().map(|l| (&l.stats, l.mode)), self.spec(), w);
        estimate.input = self.input;
        let (dup, load) = overheads(estimate.input, estimate.max_load, samples.n_s, samples.n_t, samples.est_output(), self.spec(), w);
        let objective = match cfg.termination {
            Termination::Theoretical => dup.max(load),
            Termination::Applied { model } => model.estimate(estimate.input, estimate.max_worker_input, estimate.max_worker_output),
        };
        IterationRecord {
            iteration,
            estimate,
            variance: variance_factor(w) * self.square_sum,
            dup_overhead: dup,
            load_overhead: load,
            objective,
        }
    }

    /// Converts to a [`SplitTree`] with leaf ids numbered left to right.
    fn into_tree(self) -> SplitTree {
        let dims = self.spec().dims();
        let mut old = self.nodes.into_iter().map(Some).collect::<Vec<_>>();
        let mut nodes: Vec<Node> = Vec::with_capacity(old.len());
        let mut next_leaf = 0usize;
        // Preorder walk; `slot` is the index the node gets in the output arena.
        let mut stack = vec![(0usize, None::<(usize, bool)>)];
        while let Some((n, parent)) = stack.pop() {
            let slot = nodes.len();
            if let Some((p, is_left)) = parent {
                if let Node::Inner(inner) = &mut nodes[p] {
                    if is_left {
                        inner.left = slot;
                    } else {
                        inner.right = slot;
                    }
                }
            }
            match old[n].take().expect("node visited once") {
                GrowNode::Leaf(l) => {
                    nodes.push(Node::Leaf(Leaf { id: next_leaf, rect: l.rect, mode: l.mode, stats: l.stats }));
                    next_leaf += 1;
                }
                GrowNode::Inner(inner) => {
                    nodes.push(Node::Inner(inner));
                    stack.push((inner.right, Some((slot, false))));
                    stack.push((inner.left, Some((slot, true))));
                }
            }
        }
        SplitTree::from_nodes(dims, nodes).expect("grown trees are valid")
    }
}

/// Input and `Σ l²` a leaf adds to the partitioning.
fn contribution(spec: &BandSpec, leaf: &GrowLeaf) -> (f64, f64) {
    match leaf.mode {
        LeafMode::Regular => (leaf.stats.input(), leaf.stats.load * leaf.stats.load),
        LeafMode::Small { rows, cols } => (grid_input(&leaf.stats, rows, cols), grid_square_sum(spec, &leaf.stats, rows, cols)),
    }
}

struct Entry {
    priority: f64,
    node: usize,
    version: u32,
}

impl PartialEq for Entry {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Entry {}

impl Ord for Entry {
    fn cmp(&self, other: &Self) -> Ordering {
        self.priority.total_cmp(&other.priority).then(other.node.cmp(&self.node)).then(self.version.cmp(&other.version))
    }
}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// A split applied by the loop, in order.
#[derive(Clone, Copy)]
struct Step {
    node: usize,
    candidate: SplitCandidate,
}

pub(crate) fn run<F>(samples: &SampleSet, spec: &BandSpec, cfg: &OptimizerConfig, mut observe: F) -> Result<Optimized>
where
    F: FnMut(&IterationRecord),
{
    let scorer = Scorer::new(samples, spec, cfg.workers, cfg.symmetric);
    let mut g = Growth::new(&scorer);
    let mut heap = BinaryHeap::new();
    if let Some(score) = g.evaluate(0) {
        heap.push(Entry { priority: score, node: 0, version: 0 });
    }
    let mut trace = vec![g.record(0, cfg)];
    observe(&trace[0]);
    let mut steps: Vec<Step> = Vec::new();
    let mut min_load = trace[0].load_overhead;

    while steps.len() < cfg.iteration_cap() {
        let Some(entry) = heap.pop() else { break };
        let candidate = match &g.nodes[entry.node] {
            GrowNode::Leaf(l) if l.version == entry.version => l.best.expect("queued leaves have a candidate"),
            _ => continue,
        };
        for node in g.apply(entry.node, &candidate) {
            if let Some(score) = g.evaluate(node) {
                let version = match &g.nodes[node] {
                    GrowNode::Leaf(l) => l.version,
                    GrowNode::Inner(_) => unreachable!(),
                };
                heap.push(Entry { priority: score, node, version });
            }
        }
        steps.push(Step { node: entry.node, candidate });
        let rec = g.record(steps.len(), cfg);
        observe(&rec);
        trace.push(rec);
        min_load = min_load.min(rec.load_overhead);

        if matches!(cfg.termination, Termination::Theoretical) && rec.dup_overhead > min_load {
            break;
        }
        let relative = matches!(cfg.termination, Termination::Applied { .. });
        if stalled(&trace, cfg.window(), cfg.min_improvement, relative) {
            break;
        }
    }

    let best_iteration = trace
        .iter()
        .enumerate()
        .fold(0, |best, (i, r)| if r.objective < trace[best].objective { i } else { best });
    let tree = if best_iteration == steps.len() {
        g.into_tree()
    } else {
        drop(g);
        let mut replayed = Growth::new(&scorer);
        for step in &steps[..best_iteration] {
            replayed.apply(step.node, &step.candidate);
        }
        replayed.into_tree()
    };
    Ok(Optimized { tree, trace, best_iteration })
}

/// True when the best objective of the last `window` records improves the
/// best before them by less than `min_improvement`.
fn stalled(trace: &[IterationRecord], window: usize, min_improvement: f64, relative: bool) -> bool {
    if trace.len() <= window {
        return false;
    }
    let split = trace.len() - window;
    let min = |r: &[IterationRecord]| r.iter().map(|x| x.objective).fold(f64::INFINITY, f64::min);
    let (before, recent) = (min(&trace[..split]), min(&trace[split..]));
    let needed = if relative { min_improvement * before.abs() } else { min_improvement };
    before - recent < needed
}
