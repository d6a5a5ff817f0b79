//! Configuration, file formats, parallel drivers, the acceptance suite and the
//! `parabolic` command line on top of `parabolic-core`.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod acceptance;
pub mod cli;
pub mod config;
pub mod error;
pub mod experiments;
pub mod fixtures;
pub mod io;
pub mod report;
pub mod runner;

pub use config::{Experiment, ExperimentConfig, Kind};
pub use error::{LabError, Result};
pub use experiments::run_experiment;
pub use report::{Artifact, RunOutput};
