//! Partitioning optimizer and simulated executor for distributed band-joins.
//!
//! A band-join pairs every `s ∈ S` with every `t ∈ T` whose join attributes are
//! within a per-dimension band width of each other. Running it on `w` workers
//! requires a partitioning that ships every input tuple to one or more workers
//! such that each result pair is produced by exactly one local join. This crate
//! builds such partitionings and measures how close they come to the lower
//! bounds on total input and maximum worker load:
//!
//! * [`optimizer`] grows a split tree over the join-attribute space, scoring
//!   candidate splits by load-variance reduction per duplicated input tuple.
//! * [`routing`] ships tuples through a split tree.
//! * [`baselines`] holds the competitor partitioners (1-Bucket, grid, quantile
//!   blocks).
//! * [`executor`] runs a plan on simulated workers and reports exact metrics.
//!
//! The crate is `no_std` and only needs `alloc`. IO, file formats and the
//! command-line harness live in the companion `bandjoin` crate.

#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod baselines;
pub mod cost_model;
pub mod datagen;
mod error;
pub mod executor;
pub mod geometry;
pub mod hashing;
pub mod optimizer;
pub mod plan;
pub mod routing;
pub mod sampling;
pub mod schedule;

pub use error::{Error, Result};
pub use geometry::{BandSpec, EpsRange, Rect, Relation, RelationTag, Tuple};
pub use plan::Plan;
