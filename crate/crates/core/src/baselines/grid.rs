//! Grid partitioning with cells of size `j·ε_i`, and the model-driven search
//! over `j`.

use alloc::vec::Vec;

use crate::cost_model::CostModel;
use crate::geometry::{reach_above, reach_below, BandSpec, Relation, RelationTag};
use crate::optimizer::PlanEstimate;
use crate::sampling::SampleSet;
use crate::routing::{Shuffle, ShuffleBuilder};
use crate::schedule::{assign, Strategy, WorkerTotals};
use crate::{Error, Result};

/// A grid anchored at the data minimum. Tuples beyond the covered box are
/// clamped into the border cells.
#[derive(Debug, Clone, PartialEq)]
pub struct GridPlan {
    pub multiplier: u32,
    pub anchor: Vec<f64>,
    pub width: Vec<f64>,
    /// Number of cells per dimension.
    pub cells: Vec<u64>,
}

impl GridPlan {
    /// Grid over the box `[lo, hi]`.
    pub fn new(spec: &BandSpec, multiplier: u32, lo: &[f64], hi: &[f64]) -> Result<Self> {
        if multiplier == 0 {
            return Err(Error::InvalidArgument("grid multiplier must be at least 1".into()));
        }
        if let Some(dim) = spec.eps().iter().position(|e| *e == 0.0) {
            return Err(Error::GridUndefined { dim });
        }
        let width: Vec<f64> = spec.eps().iter().map(|e| multiplier as f64 * e).collect();
        let mut cells = Vec::with_capacity(width.len());
        let mut total: u128 = 1;
        for k in 0..width.len() {
            let span = libm::floor((hi[k] - lo[k]) / width[k]);
            if !(span < 9.0e18) {
                return Err(Error::GridTooFine { multiplier });
            }
            let n = span as u64 + 1;
            total = total.checked_mul(n as u128).ok_or(Error::GridTooFine { multiplier })?;
            cells.push(n);
        }
        Ok(Self { multiplier, anchor: lo.to_vec(), width, cells })
    }

    /// Grid over the bounding box of both relations.
    pub fn for_relations(s: &Relation, t: &Relation, spec: &BandSpec, multiplier: u32) -> Result<Self> {
        let (lo, hi) = union_bounds(&[s, t]).ok_or_else(|| Error::InvalidArgument("grid needs at least one tuple".into()))?;
        Self::new(spec, multiplier, &lo, &hi)
    }

    #[inline]
    pub fn cell_of(&self, x: f64, dim: usize) -> u64 {
        let c = libm::floor((x - self.anchor[dim]) / self.width[dim]);
        if c < 0.0 {
            0
        } else {
            (c as u64).min(self.cells[dim] - 1)
        }
    }

    /// Total number of cells.
    pub fn num_cells(&self) -> u128 {
        self.cells.iter().map(|c| *c as u128).product()
    }

    fn key(&self, idx: &[u64]) -> u128 {
        idx.iter().zip(&self.cells).fold(0u128, |acc, (i, n)| acc * *n as u128 + *i as u128)
    }

    /// Appends the cell keys a tuple is sent to: the containing cell for `S`,
    /// every cell its ε-range intersects for `T`.
    pub fn route_into(&self, coords: &[f64], tag: RelationTag, spec: &BandSpec, out: &mut Vec<u128>) {
        let d = coords.len();
        match tag {
            RelationTag::S => {
                let idx: Vec<u64> = (0..d).map(|k| self.cell_of(coords[k], k)).collect();
                out.push(self.key(&idx));
            }
            RelationTag::T => {
                let lo: Vec<u64> = (0..d).map(|k| self.cell_of(reach_below(coords[k], spec.eps()[k]), k)).collect();
                let hi: Vec<u64> = (0..d).map(|k| self.cell_of(reach_above(coords[k], spec.eps()[k]), k)).collect();
                let mut idx = lo.clone();
                loop {
                    out.push(self.key(&idx));
                    let mut k = d;
                    loop {
                        if k == 0 {
                            return;
                        }
                        k -= 1;
                        if idx[k] < hi[k] {
                            idx[k] += 1;
                            break;
                        }
                        idx[k] = lo[k];
                    }
                }
            }
        }
    }
}

/// Cell keys of one tuple.
pub fn grid_route(coords: &[f64], tag: RelationTag, plan: &GridPlan, spec: &BandSpec) -> Vec<u128> {
    let mut out = Vec::new();
    plan.route_into(coords, tag, spec, &mut out);
    out
}

pub(crate) fn route_all(s: &Relation, t: &Relation, plan: &GridPlan, spec: &BandSpec) -> Shuffle {
    let mut builder = ShuffleBuilder::new();
    let mut keys = Vec::new();
    for (rel, tag) in [(s, RelationTag::S), (t, RelationTag::T)] {
        for (i, (c, _)) in rel.iter().enumerate() {
            keys.clear();
            plan.route_into(c, tag, spec, &mut keys);
            for &k in &keys {
                builder.push(tag, k, i as u32);
            }
        }
    }
    builder.finish()
}

fn union_bounds(rels: &[&Relation]) -> Option<(Vec<f64>, Vec<f64>)> {
    let mut acc: Option<(Vec<f64>, Vec<f64>)> = None;
    for r in rels {
        if let Some((lo, hi)) = r.bounds() {
            acc = Some(match acc {
                None => (lo, hi),
                Some((alo, ahi)) => (
                    alo.iter().zip(&lo).map(|(a, b)| a.min(*b)).collect(),
                    ahi.iter().zip(&hi).map(|(a, b)| a.max(*b)).collect(),
                ),
            });
        }
    }
    acc
}

/// Predicted cost of one grid size.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridEvaluation {
    pub multiplier: u32,
    pub estimate: PlanEstimate,
    pub predicted_time: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridSearch {
    /// Chosen plan, anchored on the sample bounds.
    pub plan: GridPlan,
    pub evaluations: Vec<GridEvaluation>,
}

/// Estimates a grid plan from samples, with cells LPT-assigned to workers.
pub fn estimate_grid(plan: &GridPlan, samples: &SampleSet, spec: &BandSpec, workers: usize) -> PlanEstimate {
    let mut s_keys = Vec::with_capacity(samples.s.len());
    for (c, _) in samples.s.iter() {
        plan.route_into(c, RelationTag::S, spec, &mut s_keys);
    }
    let mut t_keys = Vec::new();
    for (c, _) in samples.t.iter() {
        plan.route_into(c, RelationTag::T, spec, &mut t_keys);
    }
    // A result pair is produced in the cell of its S-side.
    let mut o_keys = Vec::with_capacity(samples.out_s.len());
    for (c, _) in samples.out_s.iter() {
        plan.route_into(c, RelationTag::S, spec, &mut o_keys);
    }
    s_keys.sort_unstable();
    t_keys.sort_unstable();
    o_keys.sort_unstable();
    let mut keys: Vec<u128> = s_keys.iter().chain(&t_keys).copied().collect();
    keys.sort_unstable();
    keys.dedup();

    let count = |sorted: &[u128], k: u128| {
        let a = sorted.partition_point(|x| *x < k);
        let b = sorted.partition_point(|x| *x <= k);
        (b - a) as f64
    };
    let mut loads = Vec::with_capacity(keys.len());
    let mut inputs = Vec::with_capacity(keys.len());
    let mut outputs = Vec::with_capacity(keys.len());
    let mut total_input = 0.0;
    for &k in &keys {
        let input = samples.w_s * count(&s_keys, k) + samples.w_t * count(&t_keys, k);
        let output = samples.w_o * count(&o_keys, k);
        total_input += input;
        inputs.push(input);
        outputs.push(output);
        loads.push(spec.load(input, output));
    }
    let worker_of = assign(&loads, workers, Strategy::Lpt);
    let totals = WorkerTotals::<f64>::tally(&worker_of, &inputs, &outputs, workers, spec.beta2(), spec.beta3());
    let m = totals.max_worker();
    PlanEstimate { input: total_input, max_load: totals.load[m], max_worker_input: totals.input[m], max_worker_output: totals.output[m] }
}

/// Tries `j = 1, 2, …` and keeps the last grid before the predicted time first
/// increases, stopping at `j_max`.
pub fn grid_star(samples: &SampleSet, spec: &BandSpec, workers: usize, model: &CostModel, j_max: u32) -> Result<GridSearch> {
    if j_max == 0 {
        return Err(Error::InvalidArgument("grid search needs j_max ≥ 1".into()));
    }
    if let Some(dim) = spec.eps().iter().position(|e| *e == 0.0) {
        return Err(Error::GridUndefined { dim });
    }
    let (lo, hi) = union_bounds(&[&samples.s, &samples.t]).ok_or_else(|| Error::InvalidArgument("grid search needs a non-empty sample".into()))?;
    let mut evaluations: Vec<GridEvaluation> = Vec::new();
    let mut best: Option<GridPlan> = None;
    for j in 1..=j_max {
        let plan = GridPlan::new(spec, j, &lo, &hi)?;
        let estimate = estimate_grid(&plan, samples, spec, workers);
        let predicted_time = model.estimate(estimate.input, estimate.max_worker_input, estimate.max_worker_output);
        let worse = evaluations.last().is_some_and(|prev| predicted_time > prev.predicted_time);
        evaluations.push(GridEvaluation { multiplier: j, estimate, predicted_time });
        if worse {
            break;
        }
        best = Some(plan);
    }
    Ok(GridSearch { plan: best.expect("j = 1 is always evaluated"), evaluations })
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn t_tuple_spans_three_cells_in_1d() {
        let spec = BandSpec::uniform(vec![1.0]).unwrap();
        let plan = GridPlan::new(&spec, 1, &[0.0], &[2.5]).unwrap();
        assert_eq!(plan.cells, vec![3]);
        assert_eq!(grid_route(&[1.5], RelationTag::T, &plan, &spec), vec![0, 1, 2]);
        assert_eq!(grid_route(&[1.5], RelationTag::S, &plan, &spec), vec![1]);
    }

    #[test]
    fn corner_and_interior_tuples_in_3d() {
        let spec = BandSpec::uniform(vec![1.0; 3]).unwrap();
        let plan = GridPlan::new(&spec, 1, &[0.0; 3], &[10.0; 3]).unwrap();
        // Corner at (5,5,5): range [4,6] touches cells 4,5,6 in every dimension.
        assert_eq!(grid_route(&[5.0; 3], RelationTag::T, &plan, &spec).len(), 27);
        // Interior point: range [4.5,6.5] spans cells 4,5,6.
        assert_eq!(grid_route(&[5.5; 3], RelationTag::T, &plan, &spec).len(), 27);
        // Coarser grid: range of 5.5 within [4,8) in every dimension.
        let coarse = GridPlan::new(&spec, 4, &[0.0; 3], &[10.0; 3]).unwrap();
        assert_eq!(grid_route(&[5.5; 3], RelationTag::T, &coarse, &spec).len(), 1);
        assert_eq!(grid_route(&[4.2; 3], RelationTag::T, &coarse, &spec).len(), 8);
    }

    #[test]
    fn replication_at_most_three_per_dimension() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let spec = BandSpec::uniform(vec![0.7, 1.3]).unwrap();
        for j in 1..6 {
            let plan = GridPlan::new(&spec, j, &[0.0, 0.0], &[20.0, 20.0]).unwrap();
            for _ in 0..500 {
                let x = [rng.gen_range(0.0..20.0), rng.gen_range(0.0..20.0)];
                assert!(grid_route(&x, RelationTag::T, &plan, &spec).len() <= 9);
                assert_eq!(grid_route(&x, RelationTag::S, &plan, &spec).len(), 1);
            }
        }
    }

    #[test]
    fn zero_band_is_rejected() {
        let spec = BandSpec::uniform(vec![1.0, 0.0]).unwrap();
        assert_eq!(GridPlan::new(&spec, 1, &[0.0, 0.0], &[1.0, 1.0]), Err(Error::GridUndefined { dim: 1 }));
    }

    #[test]
    fn too_fine_grid_is_rejected() {
        let spec = BandSpec::uniform(vec![1e-300; 3]).unwrap();
        assert!(matches!(GridPlan::new(&spec, 1, &[0.0; 3], &[1e10; 3]), Err(Error::GridTooFine { .. })));
    }
}
