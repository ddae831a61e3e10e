//! Library surface behind the `hesslab` binary: run configuration,
//! the worker pool, and the experiment suites. The acceptance test
//! target drives these directly.

pub mod config;
pub mod jobs;
pub mod suites;
