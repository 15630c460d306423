//! Seeded synthetic relations.
//!
//! Generation is split into fixed-size chunks, each with its own derived seed,
//! so chunks can be produced in any order or in parallel with identical
//! results.

use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::geometry::Relation;
use crate::hashing::derive_seed;
use crate::{Error, Result};

/// Tuples per generation chunk.
pub const CHUNK: usize = 1 << 16;

/// Default offset of the reverse Pareto mapping `y ↦ offset − y`.
pub const REVERSE_PARETO_OFFSET: f64 = 1e6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Distribution {
    /// Density `z / x^(z+1)` on `[1, ∞)`, independently per coordinate.
    Pareto { z: f64 },
    /// `offset − x` with `x` Pareto distributed.
    ReversePareto { z: f64, offset: f64 },
    /// Uniform on `[lo, hi)` per coordinate.
    Uniform { lo: f64, hi: f64 },
    /// Uniform in the cube `[corner, corner + side)^d`; with `side ≤ ε_i`
    /// every tuple lies inside one ε-range.
    Adversarial { corner: f64, side: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GenSpec {
    pub distribution: Distribution,
    pub n: usize,
    pub dims: usize,
    pub seed: u64,
}

impl GenSpec {
    pub fn validate(&self) -> Result<()> {
        if self.dims == 0 {
            return Err(Error::InvalidArgument("generated relations need at least one dimension".into()));
        }
        let ok = match self.distribution {
            Distribution::Pareto { z } => z > 0.0 && z.is_finite(),
            Distribution::ReversePareto { z, offset } => z > 0.0 && z.is_finite() && offset.is_finite(),
            Distribution::Uniform { lo, hi } => lo < hi && lo.is_finite() && hi.is_finite(),
            Distribution::Adversarial { corner, side } => corner.is_finite() && side > 0.0 && side.is_finite(),
        };
        if !ok {
            return Err(Error::InvalidArgument("invalid distribution parameters".into()));
        }
        Ok(())
    }

    pub fn chunks(&self) -> usize {
        self.n.div_ceil(CHUNK)
    }
}

fn pareto(u: f64, z: f64) -> f64 {
    libm::pow(1.0 - u, -1.0 / z)
}

fn draw(dist: &Distribution, rng: &mut ChaCha8Rng) -> f64 {
    let u: f64 = rng.gen();
    match *dist {
        Distribution::Pareto { z } => pareto(u, z),
        Distribution::ReversePareto { z, offset } => offset - pareto(u, z),
        Distribution::Uniform { lo, hi } => lo + u * (hi - lo),
        Distribution::Adversarial { corner, side } => corner + u * side,
    }
}

/// Coordinates of chunk `chunk`, tuples `chunk·CHUNK ..` in order.
pub fn gen_chunk(spec: &GenSpec, chunk: usize) -> Vec<f64> {
    let start = chunk * CHUNK;
    let len = CHUNK.min(spec.n.saturating_sub(start));
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(spec.seed, chunk as u64));
    let mut out = Vec::with_capacity(len * spec.dims);
    for _ in 0..len * spec.dims {
        let mut x = draw(&spec.distribution, &mut rng);
        if !x.is_finite() {
            // u == 1 cannot happen, but keep the relation valid regardless.
            x = f64::MAX;
        }
        out.push(x);
    }
    out
}

/// Assembles a relation from chunks produced by [`gen_chunk`]; ids are `0..n`.
pub fn assemble(spec: &GenSpec, chunks: Vec<Vec<f64>>) -> Result<Relation> {
    let coords: Vec<f64> = chunks.into_iter().flatten().collect();
    Relation::from_parts(spec.dims, coords, (0..spec.n as u64).collect())
}

pub fn gen(spec: &GenSpec) -> Result<Relation> {
    spec.validate()?;
    let chunks = (0..spec.chunks()).map(|c| gen_chunk(spec, c)).collect();
    assemble(spec, chunks)
}
