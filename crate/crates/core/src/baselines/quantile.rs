//! Range partitioning of each relation into fixed-size blocks on the
//! row-major key `(A₁, …, A_d)`, joining every pair of blocks whose `A₁`
//! ranges come within `ε₁` of each other.

use alloc::vec::Vec;
use core::cmp::Ordering;

use crate::geometry::{reach_above, reach_below, BandSpec, Relation, RelationTag};
use crate::routing::{Shuffle, ShuffleBuilder};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct QuantilePlan {
    pub size_per_block: usize,
}

/// Blocks of both relations and the block pairs that must be joined.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantileBlocks {
    /// Tuple indices in row-major key order.
    pub s_order: Vec<u32>,
    pub t_order: Vec<u32>,
    /// Half-open ranges into the order vectors.
    pub s_blocks: Vec<(usize, usize)>,
    pub t_blocks: Vec<(usize, usize)>,
    /// `(S block, T block)` pairs, sorted.
    pub tasks: Vec<(u32, u32)>,
}

impl QuantileBlocks {
    /// Total input: every block counted once per task it takes part in.
    pub fn input(&self) -> u64 {
        let len = |b: &(usize, usize)| (b.1 - b.0) as u64;
        self.tasks.iter().map(|&(i, j)| len(&self.s_blocks[i as usize]) + len(&self.t_blocks[j as usize])).sum()
    }
}

fn row_major(rel: &Relation) -> Vec<u32> {
    let mut order: Vec<u32> = (0..rel.len() as u32).collect();
    order.sort_by(|&a, &b| {
        let (x, y) = (rel.coords(a as usize), rel.coords(b as usize));
        x.iter()
            .zip(y)
            .map(|(p, q)| p.total_cmp(q))
            .find(|o| *o != Ordering::Equal)
            .unwrap_or(Ordering::Equal)
            .then(rel.id(a as usize).cmp(&rel.id(b as usize)))
            .then(a.cmp(&b))
    });
    order
}

fn blocks(n: usize, size: usize) -> Vec<(usize, usize)> {
    (0..n).step_by(size).map(|start| (start, (start + size).min(n))).collect()
}

pub fn quantile_partition(s: &Relation, t: &Relation, spec: &BandSpec, size_per_block: usize) -> Result<QuantileBlocks> {
    if size_per_block == 0 {
        return Err(Error::InvalidArgument("block size must be at least 1".into()));
    }
    let (s_order, t_order) = (row_major(s), row_major(t));
    let (s_blocks, t_blocks) = (blocks(s.len(), size_per_block), blocks(t.len(), size_per_block));
    let first = |rel: &Relation, order: &[u32], b: &(usize, usize)| rel.coord(order[b.0] as usize, 0);
    let last = |rel: &Relation, order: &[u32], b: &(usize, usize)| rel.coord(order[b.1 - 1] as usize, 0);
    let t_min: Vec<f64> = t_blocks.iter().map(|b| first(t, &t_order, b)).collect();
    let t_max: Vec<f64> = t_blocks.iter().map(|b| last(t, &t_order, b)).collect();

    let e1 = spec.eps()[0];
    let mut tasks = Vec::new();
    for (i, b) in s_blocks.iter().enumerate() {
        let lo = reach_below(first(s, &s_order, b), e1);
        let hi = reach_above(last(s, &s_order, b), e1);
        // Both bounds are non-decreasing over T blocks, so the matches are contiguous.
        let from = t_max.partition_point(|x| *x < lo);
        let to = t_min.partition_point(|x| *x <= hi);
        tasks.extend((from..to.max(from)).map(|j| (i as u32, j as u32)));
    }
    Ok(QuantileBlocks { s_order, t_order, s_blocks, t_blocks, tasks })
}

pub(crate) fn route_all(s: &Relation, t: &Relation, spec: &BandSpec, plan: &QuantilePlan) -> Result<Shuffle> {
    let qb = quantile_partition(s, t, spec, plan.size_per_block)?;
    let mut builder = ShuffleBuilder::new();
    for (task, &(i, j)) in qb.tasks.iter().enumerate() {
        let (a, b) = qb.s_blocks[i as usize];
        for &idx in &qb.s_order[a..b] {
            builder.push(RelationTag::S, task as u128, idx);
        }
        let (a, b) = qb.t_blocks[j as usize];
        for &idx in &qb.t_order[a..b] {
            builder.push(RelationTag::T, task as u128, idx);
        }
    }
    Ok(builder.finish())
}
