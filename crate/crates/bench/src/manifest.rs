//! What to run: a data source, a penalty, `lambda` and solver settings.

use std::path::PathBuf;

use ogl_core::datagen::{gen_dct, gen_ogl, DctSpec, Generated, Lambda, OglSpec};
use ogl_core::io::load_dataset;
use ogl_core::{OuterConfig, Penalty, Problem};

use crate::error::BenchError;

#[derive(Debug, Clone, PartialEq)]
pub enum DataSource {
    /// A dataset directory holding `A.bin` (or `A.csv`), `b.txt` and `groups.txt`.
    Dir(PathBuf),
    Ogl { n: usize, groups: usize, seed: u64 },
    Dct { n: usize, m: usize, seed: u64 },
}

impl DataSource {
    pub fn describe(&self) -> String {
        match self {
            DataSource::Dir(path) => path.display().to_string(),
            DataSource::Ogl { n, groups, seed } => format!("ogl-{n}-{groups}-seed{seed}"),
            DataSource::Dct { n, m, seed } => format!("dct-{n}-{m}-seed{seed}"),
        }
    }

    /// Builds the problem; `lambda` is resolved against the loaded data.
    pub fn load(&self, penalty: Penalty, lambda: Lambda) -> Result<Problem, BenchError> {
        let problem = match self {
            DataSource::Dir(dir) => {
                let data = load_dataset(dir)?;
                Problem::new(data.a, data.b, 1.0, penalty, data.groups)?
            }
            DataSource::Ogl { .. } | DataSource::Dct { .. } => self.generate(penalty)?.problem,
        };
        let value = lambda.resolve(&problem);
        if !(value > 0.0 && value.is_finite()) {
            return Err(BenchError::Input(format!("lambda must be positive and finite, got {value}")));
        }
        Ok(problem.with_lambda(value)?)
    }

    /// Runs the generator behind a synthetic source, with `lambda = 1`.
    pub fn generate(&self, penalty: Penalty) -> Result<Generated, BenchError> {
        match *self {
            DataSource::Dir(_) => Err(BenchError::Input("a dataset directory has no generator".into())),
            DataSource::Ogl { n, groups, seed } => {
                let mut spec = OglSpec::new(n, groups, seed);
                spec.penalty = penalty;
                spec.lambda = Lambda::Absolute(1.0);
                Ok(gen_ogl(&spec)?)
            }
            DataSource::Dct { n, m, seed } => {
                let mut spec = DctSpec::new(n, m, seed);
                spec.penalty = penalty;
                spec.lambda = Lambda::Absolute(1.0);
                Ok(gen_dct(&spec)?)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunManifest {
    pub source: DataSource,
    pub penalty: Penalty,
    pub lambda: Lambda,
    pub config: OuterConfig,
    pub out_dir: Option<PathBuf>,
}

impl RunManifest {
    pub fn new(source: DataSource, config: OuterConfig) -> Self {
        Self {
            source,
            penalty: Penalty::L1L2,
            lambda: Lambda::default(),
            config,
            out_dir: None,
        }
    }

    pub fn problem(&self) -> Result<Problem, BenchError> {
        self.config.validate()?;
        self.source.load(self.penalty, self.lambda)
    }
}

/// Checks that a `lambda` grid is strictly positive and strictly increasing.
pub fn validate_grid(grid: &[f64]) -> Result<(), BenchError> {
    if grid.is_empty() {
        return Err(BenchError::Input("lambda grid is empty".into()));
    }
    if let Some(bad) = grid.iter().find(|l| !(**l > 0.0 && l.is_finite())) {
        return Err(BenchError::Input(format!("lambda grid values must be positive, got {bad}")));
    }
    if grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(BenchError::Input("lambda grid must be sorted in increasing order".into()));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_validation() {
        assert!(validate_grid(&[0.1, 0.2, 0.5]).is_ok());
        assert!(validate_grid(&[]).is_err());
        assert!(validate_grid(&[0.2, 0.1]).is_err());
        assert!(validate_grid(&[0.1, 0.1]).is_err());
        assert!(validate_grid(&[0.0, 0.1]).is_err());
        assert!(validate_grid(&[-1.0]).is_err());
    }

    #[test]
    fn relative_lambda_scales_the_kill_threshold() {
        let source = DataSource::Ogl {
            n: 40,
            groups: 4,
            seed: 3,
        };
        let p = source.load(Penalty::L1L2, Lambda::Relative(0.5)).unwrap();
        assert!((p.lambda() - 0.5 * p.zero_solution_lambda()).abs() <= 1e-12 * p.lambda());
        let q = source.load(Penalty::L1L2, Lambda::Absolute(2.5)).unwrap();
        assert_eq!(q.lambda(), 2.5);
    }
}
