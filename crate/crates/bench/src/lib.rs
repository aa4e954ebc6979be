//! Benchmark harness for the overlapping group lasso solvers: dataset generation, single
//! solves, algorithm comparisons, regularization paths and scalability sweeps.

pub mod error;
pub mod manifest;
pub mod run;
pub mod trace;

pub use error::BenchError;
pub use manifest::{DataSource, RunManifest};
