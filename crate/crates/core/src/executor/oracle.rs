//! Brute-force reference join and density scans used for verification.

use alloc::vec;
use alloc::vec::Vec;

use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::geometry::{joins_unchecked, reach_above, reach_below, BandSpec, Relation};
use crate::{Error, Result};

/// Largest `|S|·|T|` the oracle accepts.
pub const ORACLE_PAIR_LIMIT: u128 = 100_000_000;

/// Exact nested-loop join, sorted `(s.id, t.id)` pairs.
pub fn oracle_join(s: &Relation, t: &Relation, spec: &BandSpec) -> Result<Vec<(u64, u64)>> {
    if s.dims() != spec.dims() || t.dims() != spec.dims() {
        return Err(Error::DimensionMismatch { expected: spec.dims(), got: if s.dims() != spec.dims() { s.dims() } else { t.dims() } });
    }
    let pairs = s.len() as u128 * t.len() as u128;
    if pairs > ORACLE_PAIR_LIMIT {
        return Err(Error::OracleTooLarge { pairs, limit: ORACLE_PAIR_LIMIT });
    }
    Ok(nested_loop(s, t, spec.eps()))
}

pub(crate) fn nested_loop(s: &Relation, t: &Relation, eps: &[f64]) -> Vec<(u64, u64)> {
    let mut out = Vec::new();
    for (a, sid) in s.iter() {
        for (b, tid) in t.iter() {
            if joins_unchecked(a, b, eps) {
                out.push((sid, tid));
            }
        }
    }
    out.sort_unstable();
    out
}

/// Largest number of tuples found in a box of side `2ε_i` per dimension (the
/// size of an ε-range). Each anchor tuple contributes two boxes: one with its
/// lower corner on the tuple and its own ε-range.
///
/// Anchors are all tuples when `anchors >= rel.len()`, otherwise a seeded
/// uniform sample of that many. With all anchors the result is exact for
/// `d = 1`; for `d > 1` it is a lower bound on the true maximum.
pub fn densest_eps_region(rel: &Relation, spec: &BandSpec, anchors: usize, seed: u64) -> u64 {
    if rel.is_empty() {
        return 0;
    }
    let eps = spec.eps();
    let mut order: Vec<usize> = (0..rel.len()).collect();
    order.sort_by(|&a, &b| rel.coord(a, 0).total_cmp(&rel.coord(b, 0)).then(a.cmp(&b)));
    let keys: Vec<f64> = order.iter().map(|&i| rel.coord(i, 0)).collect();

    let chosen: Vec<usize> = if anchors >= rel.len() {
        (0..rel.len()).collect()
    } else {
        index::sample(&mut ChaCha8Rng::seed_from_u64(seed), rel.len(), anchors.max(1)).into_vec()
    };

    let count_box = |lo: &[f64], hi: &[f64]| -> u64 {
        let start = keys.partition_point(|k| *k < lo[0]);
        let mut count = 0u64;
        for &j in &order[start..] {
            let x = rel.coords(j);
            if x[0] > hi[0] {
                break;
            }
            if (1..x.len()).all(|k| x[k] >= lo[k] && x[k] <= hi[k]) {
                count += 1;
            }
        }
        count
    };

    let mut best = 0u64;
    let (mut lo, mut hi) = (vec![0.0; eps.len()], vec![0.0; eps.len()]);
    for a in chosen {
        let c = rel.coords(a);
        for k in 0..c.len() {
            lo[k] = c[k];
            hi[k] = c[k] + 2.0 * eps[k];
        }
        best = best.max(count_box(&lo, &hi));
        for k in 0..c.len() {
            lo[k] = reach_below(c[k], eps[k]);
            hi[k] = reach_above(c[k], eps[k]);
        }
        best = best.max(count_box(&lo, &hi));
    }
    best
}
