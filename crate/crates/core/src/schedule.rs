//! Assignment of partitions to workers.
//!
//! Every partitioner uses the same routine, so metric differences come from the
//! partition boundaries and not from scheduling.

use alloc::collections::BinaryHeap;
use alloc::vec;
use alloc::vec::Vec;
use core::cmp::{Ordering, Reverse};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// How partitions are mapped onto workers.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Strategy {
    /// Longest-processing-time first: heaviest partition onto the least loaded worker.
    Lpt,
    /// Uniform seeded choice per partition.
    Random { seed: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Load(f64);

impl Eq for Load {}

impl PartialOrd for Load {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Load {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.total_cmp(&other.0)
    }
}

/// Worker index for every partition. `workers` must be at least 1.
pub fn assign(loads: &[f64], workers: usize, strategy: Strategy) -> Vec<usize> {
    assert!(workers >= 1, "at least one worker is required");
    match strategy {
        Strategy::Lpt => lpt(loads, workers),
        Strategy::Random { seed } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            loads.iter().map(|_| rng.gen_range(0..workers)).collect()
        }
    }
}

fn lpt(loads: &[f64], workers: usize) -> Vec<usize> {
    let mut order: Vec<usize> = (0..loads.len()).collect();
    order.sort_by(|&a, &b| loads[b].total_cmp(&loads[a]).then(a.cmp(&b)));

    let mut heap: BinaryHeap<Reverse<(Load, usize)>> =
        (0..workers).map(|w| Reverse((Load(0.0), w))).collect();
    let mut worker_of = vec![0usize; loads.len()];
    for p in order {
        let Reverse((Load(current), w)) = heap.pop().expect("non-empty heap");
        worker_of[p] = w;
        heap.push(Reverse((Load(current + loads[p]), w)));
    }
    worker_of
}

/// Per-worker totals of an assignment.
#[derive(Debug, Clone, PartialEq)]
pub struct WorkerTotals<T> {
    pub input: Vec<T>,
    pub output: Vec<T>,
    pub load: Vec<f64>,
}

/// Quantities that can be summed per worker and weighted into a load.
pub trait Quantity: Copy + Default + core::ops::AddAssign {
    fn as_f64(self) -> f64;
}

impl Quantity for u64 {
    fn as_f64(self) -> f64 {
        self as f64
    }
}

impl Quantity for f64 {
    fn as_f64(self) -> f64 {
        self
    }
}

impl<T: Quantity> WorkerTotals<T> {
    pub fn tally(worker_of: &[usize], input: &[T], output: &[T], workers: usize, beta2: f64, beta3: f64) -> Self {
        let mut totals = Self { input: vec![T::default(); workers], output: vec![T::default(); workers], load: vec![0.0; workers] };
        for (p, &w) in worker_of.iter().enumerate() {
            totals.input[w] += input[p];
            totals.output[w] += output[p];
        }
        for w in 0..workers {
            totals.load[w] = beta2 * totals.input[w].as_f64() + beta3 * totals.output[w].as_f64();
        }
        totals
    }

    /// Worker with the greatest load; ties go to the lowest index.
    pub fn max_worker(&self) -> usize {
        let mut best = 0;
        for w in 1..self.load.len() {
            if self.load[w] > self.load[best] {
                best = w;
            }
        }
        best
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn makespan(loads: &[f64], worker_of: &[usize], w: usize) -> f64 {
        let mut per = vec![0.0; w];
        for (p, &k) in worker_of.iter().enumerate() {
            per[k] += loads[p];
        }
        per.into_iter().fold(0.0, f64::max)
    }

    // Exhaustive optimum over all w^n assignments.
    fn brute_force_optimum(loads: &[f64], w: usize) -> f64 {
        let n = loads.len();
        let mut best = f64::INFINITY;
        for code in 0..w.pow(n as u32) {
            let mut c = code;
            let assignment: Vec<usize> = (0..n)
                .map(|_| {
                    let k = c % w;
                    c /= w;
                    k
                })
                .collect();
            best = best.min(makespan(loads, &assignment, w));
        }
        best
    }

    #[test]
    fn lpt_examples() {
        let a = assign(&[3.0, 3.0, 3.0], 3, Strategy::Lpt);
        assert_eq!(makespan(&[3.0, 3.0, 3.0], &a, 3), 3.0);

        let loads = [6.0, 3.0, 3.0];
        let a = assign(&loads, 2, Strategy::Lpt);
        assert_eq!(a[1], a[2]);
        assert_ne!(a[0], a[1]);
        assert_eq!(makespan(&loads, &a, 2), brute_force_optimum(&loads, 2));

        let loads = [5.0, 4.0, 3.0, 3.0, 3.0];
        let a = assign(&loads, 2, Strategy::Lpt);
        // LPT places 5|4, 3 on the 4, 3 on the 5, 3 on the 7: makespan 10.
        assert_eq!(brute_force_optimum(&loads, 2), 9.0);
        assert_eq!(makespan(&loads, &a, 2), 10.0);

        assert!(assign(&[1.0, 2.0], 1, Strategy::Lpt).iter().all(|w| *w == 0));
        let eq = assign(&[1.0; 6], 3, Strategy::Lpt);
        assert_eq!(makespan(&[1.0; 6], &eq, 3), 2.0);
    }

    #[test]
    fn lpt_within_four_thirds_of_optimum() {
        let mut seed = 1u64;
        for _ in 0..40 {
            seed = crate::hashing::mix64(seed);
            let n = 3 + (seed % 5) as usize;
            let loads: Vec<f64> = (0..n).map(|i| 1.0 + (crate::hashing::hash_words(&[seed, i as u64]) % 20) as f64).collect();
            let a = assign(&loads, 3, Strategy::Lpt);
            assert!(makespan(&loads, &a, 3) <= brute_force_optimum(&loads, 3) * (4.0 / 3.0) + 1e-9);
        }
    }

    #[test]
    fn random_assignment_is_seeded() {
        let loads = [1.0; 100];
        let a = assign(&loads, 7, Strategy::Random { seed: 3 });
        assert_eq!(a, assign(&loads, 7, Strategy::Random { seed: 3 }));
        assert_ne!(a, assign(&loads, 7, Strategy::Random { seed: 4 }));
        assert!(a.iter().all(|w| *w < 7));
    }

    #[test]
    fn totals_pick_heaviest_worker() {
        let worker_of = [0, 1, 1];
        let t = WorkerTotals::<u64>::tally(&worker_of, &[5, 2, 2], &[0, 1, 1], 2, 4.0, 1.0);
        assert_eq!(t.input, vec![5, 4]);
        assert_eq!(t.load, vec![20.0, 18.0]);
        assert_eq!(t.max_worker(), 0);
    }
}
