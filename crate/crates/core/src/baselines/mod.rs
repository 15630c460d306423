//! Competitor partitioners.

pub mod grid;
pub mod one_bucket;
pub mod quantile;

pub use grid::{estimate_grid, grid_route, grid_star, GridEvaluation, GridPlan, GridSearch};
pub use one_bucket::{choose_one_bucket_shape, one_bucket_route, OneBucketPlan};
pub use quantile::{quantile_partition, QuantileBlocks, QuantilePlan};
