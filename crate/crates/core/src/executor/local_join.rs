//! Index-nested-loop band-join run by a single worker.
//!
//! `T` is range-partitioned on the first attribute into buckets of width `ε₁`
//! anchored at its minimum. Each `s` probes the buckets its ε-range reaches
//! (normally `i−1`, `i`, `i+1`) and checks the full predicate.

use alloc::vec::Vec;

use crate::geometry::{joins_unchecked, reach_above, reach_below, Relation};

/// Calls `f(s_index, t_index)` for every joining pair.
pub fn for_each_match<F>(sp: &Relation, tp: &Relation, eps: &[f64], mut f: F)
where
    F: FnMut(usize, usize),
{
    if sp.is_empty() || tp.is_empty() {
        return;
    }
    debug_assert_eq!(sp.dims(), eps.len());
    debug_assert_eq!(tp.dims(), eps.len());

    let mut order: Vec<u32> = (0..tp.len() as u32).collect();
    order.sort_by(|&a, &b| tp.coord(a as usize, 0).total_cmp(&tp.coord(b as usize, 0)).then(a.cmp(&b)));
    let keys: Vec<f64> = order.iter().map(|&i| tp.coord(i as usize, 0)).collect();

    let e1 = eps[0];
    let index = BucketIndex::new(&keys, e1);
    for i in 0..sp.len() {
        let s = sp.coords(i);
        let (start, end) = index.probe(&keys, reach_below(s[0], e1), reach_above(s[0], e1));
        for &j in &order[start..end] {
            if joins_unchecked(s, tp.coords(j as usize), eps) {
                f(i, j as usize);
            }
        }
    }
}

/// All joining `(s.id, t.id)` pairs, sorted.
pub fn local_band_join(sp: &Relation, tp: &Relation, eps: &[f64]) -> Vec<(u64, u64)> {
    let mut out = Vec::new();
    for_each_match(sp, tp, eps, |i, j| out.push((sp.id(i), tp.id(j))));
    out.sort_unstable();
    out
}

/// Number of joining pairs.
pub fn local_band_join_count(sp: &Relation, tp: &Relation, eps: &[f64]) -> u64 {
    let mut n = 0u64;
    for_each_match(sp, tp, eps, |_, _| n += 1);
    n
}

/// Sorted bucket runs over the sorted first-attribute keys of `T`.
enum BucketIndex {
    /// `ε₁` is zero or infinite: probe the exact key range.
    Direct,
    Buckets { anchor: f64, width: f64, runs: Vec<(i64, usize)> },
}

impl BucketIndex {
    fn new(keys: &[f64], width: f64) -> Self {
        if width == 0.0 || !width.is_finite() {
            return BucketIndex::Direct;
        }
        let anchor = keys[0];
        let mut runs: Vec<(i64, usize)> = Vec::new();
        for (pos, &k) in keys.iter().enumerate() {
            let b = bucket(k, anchor, width);
            if runs.last().map_or(true, |(last, _)| *last != b) {
                runs.push((b, pos));
            }
        }
        BucketIndex::Buckets { anchor, width, runs }
    }

    /// Index range of sorted keys in the buckets overlapping `[lo, hi]`.
    fn probe(&self, keys: &[f64], lo: f64, hi: f64) -> (usize, usize) {
        match self {
            BucketIndex::Direct => (keys.partition_point(|k| *k < lo), keys.partition_point(|k| *k <= hi)),
            BucketIndex::Buckets { anchor, width, runs } => {
                let (b_lo, b_hi) = (bucket(lo, *anchor, *width), bucket(hi, *anchor, *width));
                let first = runs.partition_point(|(b, _)| *b < b_lo);
                let after = runs.partition_point(|(b, _)| *b <= b_hi);
                let start = runs.get(first).map_or(keys.len(), |r| r.1);
                let end = runs.get(after).map_or(keys.len(), |r| r.1);
                (start, end.max(start))
            }
        }
    }
}

// Monotone in `x`, so every key inside [lo, hi] falls in [bucket(lo), bucket(hi)].
#[inline]
fn bucket(x: f64, anchor: f64, width: f64) -> i64 {
    libm::floor((x - anchor) / width) as i64
}
