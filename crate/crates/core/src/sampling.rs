//! Weighted input samples and an output-pair sample used to estimate
//! per-partition input, output and load.
//!
//! The output sample is a sample-join: two further independent uniform samples
//! of `S` and `T` are joined, so every result pair is included with probability
//! `(k_S/|S|)(k_T/|T|)` and `w_O · count` is an unbiased estimate of the output
//! inside any region.

use alloc::vec::Vec;

use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::executor::local_join::{for_each_match, local_band_join_count};
use crate::geometry::{eps_range, rect_intersects, BandSpec, Rect, Relation};
use crate::hashing::derive_seed;
use crate::{Error, Result};

/// Sample sizes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SamplingConfig {
    /// Total input sample size, split evenly between `S` and `T`.
    pub input_budget: usize,
    /// Maximum number of output pairs kept.
    pub output_cap: usize,
}

impl Default for SamplingConfig {
    fn default() -> Self {
        Self { input_budget: 100_000, output_cap: 200_000 }
    }
}

/// Samples of both inputs and of the join output, with scale-up weights.
#[derive(Debug, Clone)]
pub struct SampleSet {
    pub s: Relation,
    pub t: Relation,
    pub w_s: f64,
    pub w_t: f64,
    /// `S`-side of each output pair.
    pub out_s: Relation,
    /// `T`-side of each output pair, aligned with `out_s`.
    pub out_t: Relation,
    pub w_o: f64,
    pub n_s: usize,
    pub n_t: usize,
}

impl SampleSet {
    /// Draws all samples from the full relations.
    pub fn draw(s: &Relation, t: &Relation, spec: &BandSpec, cfg: SamplingConfig, seed: u64) -> Result<Self> {
        if s.dims() != spec.dims() || t.dims() != spec.dims() {
            return Err(Error::DimensionMismatch { expected: spec.dims(), got: if s.dims() != spec.dims() { s.dims() } else { t.dims() } });
        }
        let half = cfg.input_budget / 2;
        let (ks, kt) = (half.min(s.len()), (cfg.input_budget - half).min(t.len()));
        let (ss, w_s) = draw_input_sample(s, ks, derive_seed(seed, 0))?;
        let (st, w_t) = draw_input_sample(t, kt, derive_seed(seed, 1))?;
        let (ss2, _) = draw_input_sample(s, ks, derive_seed(seed, 2))?;
        let (st2, _) = draw_input_sample(t, kt, derive_seed(seed, 3))?;
        let out = build_output_sample(&ss2, &st2, spec, cfg.output_cap, s.len(), t.len(), derive_seed(seed, 4));
        Ok(Self { s: ss, t: st, w_s, w_t, out_s: out.s, out_t: out.t, w_o: out.weight, n_s: s.len(), n_t: t.len() })
    }

    /// Uses the given relations as exact "samples" of themselves: weights are 1
    /// and the output sample is the full join.
    pub fn exact(s: &Relation, t: &Relation, spec: &BandSpec) -> Self {
        let out = build_output_sample(s, t, spec, usize::MAX, s.len(), t.len(), 0);
        Self { s: s.clone(), t: t.clone(), w_s: 1.0, w_t: 1.0, out_s: out.s, out_t: out.t, w_o: out.weight, n_s: s.len(), n_t: t.len() }
    }

    pub fn dims(&self) -> usize {
        self.s.dims()
    }

    /// Estimated total output size.
    pub fn est_output(&self) -> f64 {
        self.w_o * self.out_s.len() as f64
    }
}

/// Uniform sample of `k` tuples without replacement, in input order, and the
/// scale-up weight `|rel|/k`.
pub fn draw_input_sample(rel: &Relation, k: usize, seed: u64) -> Result<(Relation, f64)> {
    if k > rel.len() {
        return Err(Error::SampleTooLarge { requested: k, available: rel.len() });
    }
    if k == 0 {
        return Ok((Relation::new(rel.dims()), 1.0));
    }
    let weight = rel.len() as f64 / k as f64;
    if k == rel.len() {
        return Ok((rel.clone(), weight));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut picked = index::sample(&mut rng, rel.len(), k).into_vec();
    picked.sort_unstable();
    Ok((rel.select(&picked), weight))
}

/// Joined pairs of two samples and their scale-up weight.
#[derive(Debug, Clone)]
pub struct OutputSample {
    pub s: Relation,
    pub t: Relation,
    pub weight: f64,
}

/// All joining pairs of `ss x st`, thinned uniformly to at most `cap` pairs.
///
/// `n_s` and `n_t` are the sizes of the relations the samples were drawn from.
pub fn build_output_sample(ss: &Relation, st: &Relation, spec: &BandSpec, cap: usize, n_s: usize, n_t: usize, seed: u64) -> OutputSample {
    let dims = spec.dims();
    let mut weight = if ss.is_empty() || st.is_empty() {
        1.0
    } else {
        (n_s as f64 / ss.len() as f64) * (n_t as f64 / st.len() as f64)
    };
    let total = local_band_join_count(ss, st, spec.eps());
    let keep: Option<Vec<usize>> = if total > cap as u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut k = index::sample(&mut rng, total as usize, cap).into_vec();
        k.sort_unstable();
        weight *= total as f64 / cap as f64;
        Some(k)
    } else {
        None
    };

    let kept = keep.as_ref().map_or(total as usize, Vec::len);
    let mut out_s = Relation::with_capacity(dims, kept);
    let mut out_t = Relation::with_capacity(dims, kept);
    let mut position = 0usize;
    let mut next = 0usize;
    for_each_match(ss, st, spec.eps(), |i, j| {
        let take = match &keep {
            None => true,
            Some(k) => {
                let hit = next < k.len() && k[next] == position;
                if hit {
                    next += 1;
                }
                hit
            }
        };
        position += 1;
        if take {
            out_s.push_unchecked(ss.coords(i), ss.id(i));
            out_t.push_unchecked(st.coords(j), st.id(j));
        }
    });
    OutputSample { s: out_s, t: out_t, weight }
}

/// Estimated input, output and load of one partition.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PartitionStats {
    pub est_s: f64,
    pub est_t: f64,
    pub est_o: f64,
    pub load: f64,
}

impl PartitionStats {
    pub fn new(est_s: f64, est_t: f64, est_o: f64, spec: &BandSpec) -> Self {
        Self { est_s, est_t, est_o, load: spec.load(est_s + est_t, est_o) }
    }

    pub fn input(&self) -> f64 {
        self.est_s + self.est_t
    }
}

/// Stats of `rect` treated as a partition that receives the `S`-tuples inside
/// it and every `T`-tuple whose ε-range reaches it. Output pairs are counted
/// where their `S`-side lies, which is where that convention produces them.
pub fn partition_stats(rect: &Rect, samples: &SampleSet, spec: &BandSpec) -> PartitionStats {
    let s = samples.s.iter().filter(|(c, _)| rect.contains(c)).count();
    let t = samples.t.iter().filter(|(c, _)| rect_intersects(rect, &eps_range(c, spec))).count();
    let o = samples.out_s.iter().filter(|(c, _)| rect.contains(c)).count();
    PartitionStats::new(samples.w_s * s as f64, samples.w_t * t as f64, samples.w_o * o as f64, spec)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::executor::oracle::nested_loop;
    use alloc::vec;
    use rand::Rng;

    fn uniform(n: usize, seed: u64) -> Relation {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let v: Vec<f64> = (0..n).map(|_| rng.gen::<f64>()).collect();
        Relation::from_values_1d(&v)
    }

    #[test]
    fn input_sample_sizes_and_weights() {
        let r = uniform(100, 1);
        let (all, w) = draw_input_sample(&r, 100, 9).unwrap();
        assert_eq!((all, w), (r.clone(), 1.0));

        let big = uniform(1_000_000, 2);
        let (s, w) = draw_input_sample(&big, 50_000, 3).unwrap();
        assert_eq!(s.len(), 50_000);
        assert_eq!(w, 20.0);
        let mut ids = s.ids().to_vec();
        ids.dedup();
        assert_eq!(ids.len(), 50_000);
        assert_eq!(draw_input_sample(&big, 50_000, 3).unwrap().0, s);

        assert!(matches!(draw_input_sample(&r, 101, 0), Err(Error::SampleTooLarge { .. })));
    }

    #[test]
    fn output_sample_examples() {
        let spec = BandSpec::uniform(vec![0.0]).unwrap();
        let out = build_output_sample(&Relation::from_values_1d(&[1.0, 3.0]), &Relation::from_values_1d(&[1.0, 5.0]), &spec, 10, 40, 60, 0);
        assert_eq!(out.s.len(), 1);
        assert_eq!((out.s.coord(0, 0), out.t.coord(0, 0)), (1.0, 1.0));
        assert_eq!(out.weight, 40.0 * 60.0 / 4.0);

        let spec = BandSpec::uniform(vec![1.0]).unwrap();
        let out = build_output_sample(&Relation::from_values_1d(&[1.0, 2.0]), &Relation::from_values_1d(&[10.0]), &spec, 10, 2, 1, 0);
        assert!(out.s.is_empty());
        assert!(out.weight.is_finite());
    }

    #[test]
    fn output_cap_thins_and_reweights() {
        let spec = BandSpec::uniform(vec![f64::INFINITY]).unwrap();
        let (s, t) = (uniform(30, 1), uniform(20, 2));
        let out = build_output_sample(&s, &t, &spec, 100, 30, 20, 5);
        assert_eq!(out.s.len(), 100);
        assert!((out.weight * 100.0 - 600.0).abs() < 1e-9);
        for i in 0..out.s.len() {
            assert!(crate::geometry::joins(out.s.coords(i), out.t.coords(i), &spec));
        }
    }

    #[test]
    fn output_estimate_is_close_on_uniform_data() {
        let spec = BandSpec::uniform(vec![0.05]).unwrap();
        let (s, t) = (uniform(10_000, 11), uniform(10_000, 12));
        let exact = nested_loop(&s, &t, spec.eps()).len() as f64;
        let mut sum = 0.0;
        for seed in 0..20 {
            let (a, _) = draw_input_sample(&s, 1000, derive_seed(seed, 0)).unwrap();
            let (b, _) = draw_input_sample(&t, 1000, derive_seed(seed, 1)).unwrap();
            let out = build_output_sample(&a, &b, &spec, 200_000, 10_000, 10_000, seed);
            sum += out.weight * out.s.len() as f64;
        }
        let mean = sum / 20.0;
        assert!((mean - exact).abs() / exact < 0.10, "mean {mean} exact {exact}");
    }

    #[test]
    fn regional_output_estimate_is_unbiased() {
        let spec = BandSpec::uniform(vec![0.02]).unwrap();
        let (s, t) = (uniform(2000, 21), uniform(2000, 22));
        let region = Rect::new(vec![0.2], vec![0.45]).unwrap();
        let truth = nested_loop(&s, &t, spec.eps())
            .iter()
            .filter(|(sid, _)| region.contains(s.coords(*sid as usize)))
            .count() as f64;
        let mut sum = 0.0;
        let seeds = 200;
        for seed in 0..seeds {
            let samples = SampleSet::draw(&s, &t, &spec, SamplingConfig { input_budget: 800, output_cap: 1_000_000 }, seed).unwrap();
            sum += partition_stats(&region, &samples, &spec).est_o;
        }
        let mean = sum / seeds as f64;
        assert!((mean - truth).abs() / truth < 0.05, "mean {mean} truth {truth}");
    }

    #[test]
    fn stats_of_root_and_empty_region() {
        let spec = BandSpec::uniform(vec![0.1]).unwrap();
        let (s, t) = (uniform(5000, 1), uniform(3000, 2));
        let samples = SampleSet::draw(&s, &t, &spec, SamplingConfig { input_budget: 2000, output_cap: 10_000 }, 4).unwrap();
        let root = partition_stats(&Rect::root(1), &samples, &spec);
        assert!((root.est_s - 5000.0).abs() < 1e-6);
        assert!((root.est_t - 3000.0).abs() < 1e-6);
        let empty = partition_stats(&Rect::new(vec![10.0], vec![11.0]).unwrap(), &samples, &spec);
        assert_eq!(empty, PartitionStats::default());
    }

    #[test]
    fn split_children_conserve_s_and_duplicate_t() {
        let spec = BandSpec::uniform(vec![0.05]).unwrap();
        let samples = SampleSet::exact(&uniform(500, 1), &uniform(500, 2), &spec);
        let root = Rect::root(1);
        let parent = partition_stats(&root, &samples, &spec);
        for x in [0.1, 0.37, 0.5, 0.9] {
            let (l, r) = root.split(0, x);
            let (a, b) = (partition_stats(&l, &samples, &spec), partition_stats(&r, &samples, &spec));
            assert_eq!(a.est_s + b.est_s, parent.est_s);
            assert!(a.est_t + b.est_t >= parent.est_t);
            assert_eq!(a.est_o + b.est_o, parent.est_o);
        }
    }
}
