use std::path::PathBuf;

use ogl_core::datagen::DatagenError;
use ogl_core::io::IoError;
use ogl_core::outer::{ConfigError, OuterError};
use ogl_core::ModelError;
use thiserror::Error;

pub const EXIT_OK: u8 = 0;
pub const EXIT_NOT_CONVERGED: u8 = 1;
pub const EXIT_INPUT: u8 = 2;

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("{0}")]
    Input(String),
    #[error(transparent)]
    Dataset(#[from] IoError),
    #[error(transparent)]
    Generator(#[from] DatagenError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("solver failed: {0}")]
    Solve(#[from] OuterError),
    #[error("cannot write {}: {message}", path.display())]
    Output { path: PathBuf, message: String },
}

impl BenchError {
    /// Process exit status: 2 for anything wrong with the inputs, 1 for failures while running.
    pub fn exit_code(&self) -> u8 {
        match self {
            BenchError::Solve(_) | BenchError::Output { .. } => EXIT_NOT_CONVERGED,
            _ => EXIT_INPUT,
        }
    }

    pub(crate) fn output(path: impl Into<PathBuf>, err: impl std::fmt::Display) -> Self {
        BenchError::Output {
            path: path.into(),
            message: err.to_string(),
        }
    }
}
