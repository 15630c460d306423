//! File formats, parallel execution and the experiment harness around
//! `bandjoin-core`.
//!
//! * [`config`]: JSON experiment documents.
//! * [`data`]: parallel generation, CSV input and output.
//! * [`plan_io`]: plan files.
//! * [`experiment`]: builds and runs plans for one config.
//! * [`report`]: metrics records, result logs and comparison tables.
//! * [`commands`]: the command-line operations.

pub mod commands;
pub mod config;
pub mod data;
pub mod experiment;
pub mod plan_io;
pub mod report;

pub use config::{ExperimentConfig, Method};
pub use experiment::{Experiment, Rayon};
