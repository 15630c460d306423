//! Candidate splits and their scores: load-variance reduction per duplicated
//! input tuple.

use alloc::vec::Vec;
use core::cmp::Ordering;

use crate::geometry::{is_small_in, reach_above, reach_below, BandSpec, Rect};
use crate::optimizer::tree::SplitKind;
use crate::sampling::{PartitionStats, SampleSet};

/// Candidate split values per dimension are thinned to at most this many.
pub const MAX_CANDIDATES_PER_DIM: usize = 4096;

/// Variance of one worker's load when every partition picks a worker
/// uniformly at random: `((w−1)/w²) Σ l_p²`.
pub fn load_variance(loads: &[f64], workers: usize) -> f64 {
    variance_factor(workers) * loads.iter().map(|l| l * l).sum::<f64>()
}

pub(crate) fn variance_factor(workers: usize) -> f64 {
    assert!(workers >= 1, "at least one worker is required");
    let w = workers as f64;
    (w - 1.0) / (w * w)
}

/// Which way a 1-Bucket grid inside a small leaf grows.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    Row,
    Column,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SplitCandidate {
    Regular { dim: usize, value: f64, kind: SplitKind, delta_var: f64, delta_dup: f64 },
    Small { axis: Axis, delta_var: f64, delta_dup: f64 },
}

impl SplitCandidate {
    pub fn delta_var(&self) -> f64 {
        match self {
            SplitCandidate::Regular { delta_var, .. } | SplitCandidate::Small { delta_var, .. } => *delta_var,
        }
    }

    pub fn delta_dup(&self) -> f64 {
        match self {
            SplitCandidate::Regular { delta_dup, .. } | SplitCandidate::Small { delta_dup, .. } => *delta_dup,
        }
    }
}

/// Split score `ΔVar / max(ΔDup, floor)`, where `floor` is the sample weight
/// of the duplicated relation.
///
/// A sample that shows no tuple near a boundary only bounds the duplication
/// by its own resolution. Ranking such splits infinitely high lets slivers
/// with negligible variance reduction starve effective splits of heavy
/// partitions, so their duplication is counted as one sampled tuple instead.
/// Among candidates without estimated duplication the larger `ΔVar` still
/// wins.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Score {
    pub value: f64,
}

impl Score {
    /// Score of a leaf without candidates.
    pub const NONE: Score = Score { value: 0.0 };

    pub fn of(delta_var: f64, delta_dup: f64, floor: f64) -> Self {
        Score { value: delta_var / delta_dup.max(floor) }
    }
}

impl Eq for Score {}

impl PartialOrd for Score {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Score {
    fn cmp(&self, other: &Self) -> Ordering {
        self.value.total_cmp(&other.value)
    }
}

/// Sample tuples (indices into a [`SampleSet`]) routed to one leaf.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct LeafSample {
    pub s: Vec<u32>,
    pub t: Vec<u32>,
    /// Output pairs produced in this leaf.
    pub o: Vec<u32>,
}

/// Per-sample data shared by all scoring calls.
pub struct Scorer<'a> {
    samples: &'a SampleSet,
    spec: &'a BandSpec,
    workers: usize,
    factor: f64,
    symmetric: bool,
    s_lo: Vec<f64>,
    s_hi: Vec<f64>,
    t_lo: Vec<f64>,
    t_hi: Vec<f64>,
}

impl<'a> Scorer<'a> {
    /// `symmetric` enables S-splits in addition to T-splits.
    pub fn new(samples: &'a SampleSet, spec: &'a BandSpec, workers: usize, symmetric: bool) -> Self {
        let ranges = |rel: &crate::geometry::Relation| {
            let mut lo = Vec::with_capacity(rel.raw_coords().len());
            let mut hi = Vec::with_capacity(rel.raw_coords().len());
            for (c, _) in rel.iter() {
                for (x, e) in c.iter().zip(spec.eps()) {
                    lo.push(reach_below(*x, *e));
                    hi.push(reach_above(*x, *e));
                }
            }
            (lo, hi)
        };
        let (s_lo, s_hi) = ranges(&samples.s);
        let (t_lo, t_hi) = ranges(&samples.t);
        Self { samples, spec, workers, factor: variance_factor(workers), symmetric, s_lo, s_hi, t_lo, t_hi }
    }

    /// Score of a candidate; see [`Score`].
    pub fn score(&self, cand: &SplitCandidate) -> Score {
        let weight = match *cand {
            SplitCandidate::Regular { kind: SplitKind::T, .. } | SplitCandidate::Small { axis: Axis::Row, .. } => self.samples.w_t,
            SplitCandidate::Regular { kind: SplitKind::S, .. } | SplitCandidate::Small { axis: Axis::Column, .. } => self.samples.w_s,
        };
        Score::of(cand.delta_var(), cand.delta_dup(), if weight > 0.0 { weight } else { 1.0 })
    }

    pub fn samples(&self) -> &SampleSet {
        self.samples
    }

    pub fn spec(&self) -> &BandSpec {
        self.spec
    }

    pub fn workers(&self) -> usize {
        self.workers
    }

    /// Every sample tuple and output pair.
    pub fn root_sample(&self) -> LeafSample {
        LeafSample {
            s: (0..self.samples.s.len() as u32).collect(),
            t: (0..self.samples.t.len() as u32).collect(),
            o: (0..self.samples.out_s.len() as u32).collect(),
        }
    }

    pub fn stats(&self, leaf: &LeafSample) -> PartitionStats {
        PartitionStats::new(
            self.samples.w_s * leaf.s.len() as f64,
            self.samples.w_t * leaf.t.len() as f64,
            self.samples.w_o * leaf.o.len() as f64,
            self.spec,
        )
    }

    /// Estimated number of extra tuple copies a split at `(dim, value)` causes:
    /// tuples of the duplicated relation whose ε-range reaches both sides.
    pub fn delta_dup(&self, leaf: &LeafSample, dim: usize, value: f64, kind: SplitKind) -> f64 {
        let d = self.spec.dims();
        let (members, lo, hi, weight) = match kind {
            SplitKind::T => (&leaf.t, &self.t_lo, &self.t_hi, self.samples.w_t),
            SplitKind::S => (&leaf.s, &self.s_lo, &self.s_hi, self.samples.w_s),
        };
        let n = members.iter().filter(|&&i| {
            let k = i as usize * d + dim;
            lo[k] < value && hi[k] >= value
        });
        weight * n.count() as f64
    }

    /// Children of a regular split, routed exactly as tuples are routed.
    pub fn split_sample(&self, leaf: &LeafSample, dim: usize, value: f64, kind: SplitKind) -> (LeafSample, LeafSample) {
        let d = self.spec.dims();
        let (mut left, mut right) = (LeafSample::default(), LeafSample::default());
        let cut = |members: &[u32], coords: &[f64], l: &mut Vec<u32>, r: &mut Vec<u32>| {
            for &i in members {
                if coords[i as usize * d + dim] < value {
                    l.push(i);
                } else {
                    r.push(i);
                }
            }
        };
        let copy = |members: &[u32], lo: &[f64], hi: &[f64], l: &mut Vec<u32>, r: &mut Vec<u32>| {
            for &i in members {
                let k = i as usize * d + dim;
                if lo[k] < value {
                    l.push(i);
                }
                if hi[k] >= value {
                    r.push(i);
                }
            }
        };
        match kind {
            SplitKind::T => {
                cut(&leaf.s, self.samples.s.raw_coords(), &mut left.s, &mut right.s);
                copy(&leaf.t, &self.t_lo, &self.t_hi, &mut left.t, &mut right.t);
                cut(&leaf.o, self.samples.out_s.raw_coords(), &mut left.o, &mut right.o);
            }
            SplitKind::S => {
                copy(&leaf.s, &self.s_lo, &self.s_hi, &mut left.s, &mut right.s);
                cut(&leaf.t, self.samples.t.raw_coords(), &mut left.t, &mut right.t);
                cut(&leaf.o, self.samples.out_t.raw_coords(), &mut left.o, &mut right.o);
            }
        }
        (left, right)
    }

    /// Best T- or S-split of a regular leaf, or `None` if no candidate reduces
    /// the load variance.
    ///
    /// Dimensions in which the leaf is already narrower than `2ε` are skipped.
    /// Ties go to the lower dimension, then the lower value, then the T-split.
    pub fn best_split_regular(&self, rect: &Rect, leaf: &LeafSample) -> (Option<SplitCandidate>, Score) {
        if self.factor == 0.0 {
            return (None, Score::NONE);
        }
        let d = self.spec.dims();
        let parent = self.stats(leaf);
        let parent_sq = parent.load * parent.load;
        let (ws, wt, wo) = (self.samples.w_s, self.samples.w_t, self.samples.w_o);

        let mut best: Option<SplitCandidate> = None;
        let mut best_score = Score::NONE;
        for dim in 0..d {
            if is_small_in(rect, self.spec, dim) {
                continue;
            }
            let (lo, hi) = (rect.lo[dim], rect.hi[dim]);
            let values = candidate_values(self, leaf, dim, lo, hi);
            if values.is_empty() {
                continue;
            }
            let gather = |members: &[u32], coords: &[f64]| sorted(members.iter().map(|&i| coords[i as usize * d + dim]));
            let s_c = gather(&leaf.s, self.samples.s.raw_coords());
            let t_c = gather(&leaf.t, self.samples.t.raw_coords());
            let t_lo = gather(&leaf.t, &self.t_lo);
            let t_hi = gather(&leaf.t, &self.t_hi);
            let o_s = gather(&leaf.o, self.samples.out_s.raw_coords());
            let (s_lo, s_hi, o_t) = if self.symmetric {
                (gather(&leaf.s, &self.s_lo), gather(&leaf.s, &self.s_hi), gather(&leaf.o, self.samples.out_t.raw_coords()))
            } else {
                (Vec::new(), Vec::new(), Vec::new())
            };

            for &a in &values {
                let below = |v: &[f64]| v.partition_point(|x| *x < a) as f64;
                let at_or_above = |v: &[f64]| (v.len() - v.partition_point(|x| *x < a)) as f64;
                let mut consider = |kind: SplitKind, (sl, sr, tl, tr, ol, or): (f64, f64, f64, f64, f64, f64), dup: f64| {
                    let left = self.spec.load(ws * sl + wt * tl, wo * ol);
                    let right = self.spec.load(ws * sr + wt * tr, wo * or);
                    let delta_var = self.factor * (parent_sq - left * left - right * right);
                    if !(delta_var > 0.0) {
                        return;
                    }
                    let cand = SplitCandidate::Regular { dim, value: a, kind, delta_var, delta_dup: dup };
                    let score = self.score(&cand);
                    if best.is_none() || score > best_score {
                        best = Some(cand);
                        best_score = score;
                    }
                };

                let sl = below(&s_c);
                let ol = below(&o_s);
                let tl = below(&t_lo);
                let tr = at_or_above(&t_hi);
                let counts = (sl, s_c.len() as f64 - sl, tl, tr, ol, o_s.len() as f64 - ol);
                consider(SplitKind::T, counts, wt * (tl + tr - t_c.len() as f64));

                if self.symmetric {
                    let tl = below(&t_c);
                    let ol = below(&o_t);
                    let sl = below(&s_lo);
                    let sr = at_or_above(&s_hi);
                    let counts = (sl, sr, tl, t_c.len() as f64 - tl, ol, o_t.len() as f64 - ol);
                    consider(SplitKind::S, counts, ws * (sl + sr - s_c.len() as f64));
                }
            }
        }
        (best, best_score)
    }

    /// Best growth step of a small leaf's `rows x cols` 1-Bucket grid. Ties go
    /// to adding a row.
    pub fn best_split_small(&self, stats: &PartitionStats, rows: u32, cols: u32) -> (Option<SplitCandidate>, Score) {
        if self.factor == 0.0 {
            return (None, Score::NONE);
        }
        let before = grid_square_sum(self.spec, stats, rows, cols);
        let row_var = self.factor * (before - grid_square_sum(self.spec, stats, rows + 1, cols));
        let col_var = self.factor * (before - grid_square_sum(self.spec, stats, rows, cols + 1));
        let row = (row_var > 0.0).then_some(SplitCandidate::Small { axis: Axis::Row, delta_var: row_var, delta_dup: stats.est_t });
        let col = (col_var > 0.0).then_some(SplitCandidate::Small { axis: Axis::Column, delta_var: col_var, delta_dup: stats.est_s });
        let pick = match (row, col) {
            (Some(r), Some(c)) => Some(if self.score(&c) > self.score(&r) { c } else { r }),
            (r, c) => r.or(c),
        };
        match pick {
            Some(c) => (Some(c), self.score(&c)),
            None => (None, Score::NONE),
        }
    }
}

/// Load of one cell of a `rows x cols` 1-Bucket grid over a partition.
pub fn grid_cell_load(spec: &BandSpec, stats: &PartitionStats, rows: u32, cols: u32) -> f64 {
    let (r, c) = (rows as f64, cols as f64);
    spec.load(stats.est_s / r + stats.est_t / c, stats.est_o / (r * c))
}

/// Estimated input of a partition refined by a `rows x cols` 1-Bucket grid.
pub fn grid_input(stats: &PartitionStats, rows: u32, cols: u32) -> f64 {
    cols as f64 * stats.est_s + rows as f64 * stats.est_t
}

/// `Σ l²` over the cells of a `rows x cols` grid.
pub(crate) fn grid_square_sum(spec: &BandSpec, stats: &PartitionStats, rows: u32, cols: u32) -> f64 {
    let l = grid_cell_load(spec, stats, rows, cols);
    rows as f64 * cols as f64 * l * l
}

fn sorted(values: impl Iterator<Item = f64>) -> Vec<f64> {
    let mut v: Vec<f64> = values.collect();
    v.sort_unstable_by(f64::total_cmp);
    v
}

/// Midpoints between consecutive distinct in-rect sample coordinates of the
/// leaf, strictly inside `(lo, hi)`, thinned evenly to the per-dimension cap.
fn candidate_values(scorer: &Scorer<'_>, leaf: &LeafSample, dim: usize, lo: f64, hi: f64) -> Vec<f64> {
    let d = scorer.spec.dims();
    let s = scorer.samples.s.raw_coords();
    let t = scorer.samples.t.raw_coords();
    let inside = |x: &f64| lo <= *x && *x < hi;
    let mut coords = sorted(
        leaf.s.iter().map(|&i| s[i as usize * d + dim]).chain(leaf.t.iter().map(|&i| t[i as usize * d + dim])).filter(inside),
    );
    coords.dedup();
    let mut mids: Vec<f64> = coords
        .windows(2)
        .map(|w| w[0] / 2.0 + w[1] / 2.0)
        .filter(|m| lo < *m && *m < hi)
        .collect();
    mids.dedup();
    if mids.len() > MAX_CANDIDATES_PER_DIM {
        let m = mids.len();
        mids = (0..MAX_CANDIDATES_PER_DIM).map(|k| mids[k * m / MAX_CANDIDATES_PER_DIM]).collect();
    }
    mids
}
