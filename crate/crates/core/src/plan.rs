//! A partitioning produced by any of the partitioners.

use crate::baselines::{grid, one_bucket, quantile, GridPlan, OneBucketPlan, QuantilePlan};
use crate::geometry::{BandSpec, Relation};
use crate::optimizer::SplitTree;
use crate::routing::{self, Shuffle};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub enum Plan {
    SplitTree(SplitTree),
    OneBucket(OneBucketPlan),
    Grid(GridPlan),
    Quantile(QuantilePlan),
}

impl Plan {
    pub fn kind(&self) -> &'static str {
        match self {
            Plan::SplitTree(_) => "split-tree",
            Plan::OneBucket(_) => "one-bucket",
            Plan::Grid(_) => "grid",
            Plan::Quantile(_) => "quantile",
        }
    }

    /// Routes both relations to their destinations. `seed` drives the random
    /// row/column choices of 1-Bucket grids.
    pub fn route(&self, s: &Relation, t: &Relation, spec: &BandSpec, seed: u64) -> Result<Shuffle> {
        for rel in [s, t] {
            if rel.dims() != spec.dims() {
                return Err(Error::DimensionMismatch { expected: spec.dims(), got: rel.dims() });
            }
        }
        match self {
            Plan::SplitTree(tree) => {
                tree.validate_for(spec)?;
                Ok(routing::route_all(s, t, tree, spec, seed))
            }
            Plan::OneBucket(p) => {
                if p.rows == 0 || p.cols == 0 {
                    return Err(Error::InvalidPlan("1-Bucket grid needs at least one row and column".into()));
                }
                Ok(one_bucket::route_all(s, t, p, seed))
            }
            Plan::Grid(p) => {
                if p.anchor.len() != spec.dims() || p.width.len() != spec.dims() || p.cells.len() != spec.dims() || p.cells.contains(&0) {
                    return Err(Error::InvalidPlan("grid shape does not match the band specification".into()));
                }
                Ok(grid::route_all(s, t, p, spec))
            }
            Plan::Quantile(p) => quantile::route_all(s, t, spec, p),
        }
    }
}
