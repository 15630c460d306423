//! 1-Bucket: random `r x c` covering of the join matrix.

use alloc::vec::Vec;

use crate::geometry::{Relation, RelationTag};
use crate::routing::{grid_cells, Shuffle, ShuffleBuilder};

/// Scope value used in the cell hash so 1-Bucket choices differ from those
/// made inside split-tree leaves.
const PLAN_SCOPE: u64 = u64::MAX;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OneBucketPlan {
    pub rows: u32,
    pub cols: u32,
}

impl OneBucketPlan {
    /// Total input `c·|S| + r·|T|`.
    pub fn input(&self, n_s: u64, n_t: u64) -> u64 {
        self.cols as u64 * n_s + self.rows as u64 * n_t
    }

    /// Expected input per cell, `|S|/r + |T|/c`.
    pub fn expected_cell_input(&self, n_s: f64, n_t: f64) -> f64 {
        n_s / self.rows as f64 + n_t / self.cols as f64
    }
}

/// Among shapes with `r·c = w`, the one minimizing `c·|S| + r·|T|`; ties go
/// to the shape with fewer rows.
pub fn choose_one_bucket_shape(workers: usize, n_s: u64, n_t: u64) -> OneBucketPlan {
    assert!(workers >= 1, "at least one worker is required");
    let w = workers as u32;
    let mut best: Option<(u128, OneBucketPlan)> = None;
    for r in 1..=w {
        if w % r != 0 {
            continue;
        }
        let plan = OneBucketPlan { rows: r, cols: w / r };
        let cost = plan.cols as u128 * n_s as u128 + plan.rows as u128 * n_t as u128;
        if best.map_or(true, |(c, _)| cost < c) {
            best = Some((cost, plan));
        }
    }
    best.expect("r = 1 always divides w").1
}

/// Cells `(row, col)` a tuple is sent to.
pub fn one_bucket_route(id: u64, tag: RelationTag, plan: &OneBucketPlan, seed: u64) -> Vec<(u32, u32)> {
    let mut out = Vec::new();
    grid_cells(id, tag, PLAN_SCOPE, seed, plan.rows, plan.cols, &mut out);
    out
}

pub(crate) fn route_all(s: &Relation, t: &Relation, plan: &OneBucketPlan, seed: u64) -> Shuffle {
    let mut builder = ShuffleBuilder::new();
    let mut cells = Vec::new();
    for (rel, tag) in [(s, RelationTag::S), (t, RelationTag::T)] {
        for (i, &id) in rel.ids().iter().enumerate() {
            cells.clear();
            grid_cells(id, tag, PLAN_SCOPE, seed, plan.rows, plan.cols, &mut cells);
            for &(r, c) in &cells {
                builder.push(tag, r as u128 * plan.cols as u128 + c as u128, i as u32);
            }
        }
    }
    builder.finish()
}
