//! Seeded synthetic benchmark families.
//!
//! * `ogl`: chained groups of ten features overlapping by three, Gaussian design, signal on
//!   the first half of the features.
//! * `dct`: an over-complete cosine dictionary with all length-five windows as groups and a
//!   sparse random signal.
//!
//! Randomness comes from ChaCha8 seeded with `seed_from_u64`, so a spec regenerates the same
//! problem bit for bit.

use nalgebra::{DMatrix, DVector};
use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use thiserror::Error;

use crate::model::{GroupStructure, ModelError, Penalty, Problem};

#[derive(Debug, Error)]
pub enum DatagenError {
    #[error("invalid generator spec: {0}")]
    InvalidSpec(String),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Regularization weight of a generated problem.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Lambda {
    Absolute(f64),
    /// Fraction of the smallest `lambda` whose solution is identically zero.
    Relative(f64),
}

impl Default for Lambda {
    fn default() -> Self {
        Lambda::Relative(0.1)
    }
}

impl Lambda {
    pub fn resolve(self, problem: &Problem) -> f64 {
        match self {
            Lambda::Absolute(l) => l,
            Lambda::Relative(f) => f * problem.zero_solution_lambda(),
        }
    }
}

/// A generated problem and the signal that produced it.
#[derive(Debug, Clone)]
pub struct Generated {
    pub problem: Problem,
    pub x_true: DVector<f64>,
    pub noise: DVector<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OglSpec {
    pub n: usize,
    pub groups: usize,
    pub group_size: usize,
    pub overlap: usize,
    pub penalty: Penalty,
    pub lambda: Lambda,
    pub seed: u64,
}

impl OglSpec {
    pub fn new(n: usize, groups: usize, seed: u64) -> Self {
        Self {
            n,
            groups,
            group_size: 10,
            overlap: 3,
            penalty: Penalty::L1L2,
            lambda: Lambda::default(),
            seed,
        }
    }

    pub fn num_features(&self) -> usize {
        self.group_size + (self.groups.saturating_sub(1)) * (self.group_size - self.overlap)
    }

    pub fn group_list(&self) -> Vec<Vec<usize>> {
        let stride = self.group_size - self.overlap;
        (0..self.groups)
            .map(|s| (s * stride..s * stride + self.group_size).collect())
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DctSpec {
    pub n: usize,
    pub m: usize,
    pub group_length: usize,
    pub nnz_fraction: f64,
    pub noise_factor: f64,
    pub penalty: Penalty,
    pub lambda: Lambda,
    pub seed: u64,
}

impl DctSpec {
    pub fn new(n: usize, m: usize, seed: u64) -> Self {
        Self {
            n,
            m,
            group_length: 5,
            nnz_fraction: 0.1,
            noise_factor: 0.01,
            penalty: Penalty::L1L2,
            lambda: Lambda::default(),
            seed,
        }
    }

    pub fn group_list(&self) -> Vec<Vec<usize>> {
        (0..=self.m - self.group_length)
            .map(|j| (j..j + self.group_length).collect())
            .collect()
    }
}

fn gaussian_vector(rng: &mut ChaCha8Rng, len: usize) -> DVector<f64> {
    DVector::from_iterator(len, StandardNormal.sample_iter(&mut *rng).take(len))
}

pub fn gen_ogl(spec: &OglSpec) -> Result<Generated, DatagenError> {
    if spec.n == 0 || spec.groups == 0 {
        return Err(DatagenError::InvalidSpec("n and the number of groups must be positive".into()));
    }
    if spec.overlap >= spec.group_size {
        return Err(DatagenError::InvalidSpec(format!(
            "overlap {} must be smaller than the group size {}",
            spec.overlap, spec.group_size
        )));
    }
    let m = spec.num_features();
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);

    // column-major fill
    let a = DMatrix::from_iterator(spec.n, m, StandardNormal.sample_iter(&mut rng).take(spec.n * m));
    let support = m.div_ceil(2);
    let mut x_true = DVector::zeros(m);
    x_true.rows_mut(0, support).copy_from(&gaussian_vector(&mut rng, support));
    let noise = gaussian_vector(&mut rng, spec.n);
    let b = &a * &x_true + &noise;

    let groups = GroupStructure::new(spec.group_list(), m)?;
    build(a, b, spec.penalty, spec.lambda, groups, x_true, noise)
}

/// Unit-norm cosine atoms `cos(pi (2i + 1) j / (2m))`, `i < n`, `j < m`.
pub fn dct_dictionary(n: usize, m: usize) -> DMatrix<f64> {
    let mut a = DMatrix::from_fn(n, m, |i, j| {
        (std::f64::consts::PI * (2 * i + 1) as f64 * j as f64 / (2 * m) as f64).cos()
    });
    for mut col in a.column_iter_mut() {
        let norm = col.norm();
        col /= norm;
    }
    a
}

pub fn gen_dct(spec: &DctSpec) -> Result<Generated, DatagenError> {
    if spec.n == 0 || spec.group_length == 0 || spec.m < spec.group_length {
        return Err(DatagenError::InvalidSpec(format!(
            "need n >= 1 and m >= {} (got n = {}, m = {})",
            spec.group_length.max(1),
            spec.n,
            spec.m
        )));
    }
    if !(spec.nnz_fraction > 0.0 && spec.nnz_fraction <= 1.0) {
        return Err(DatagenError::InvalidSpec(format!(
            "nnz_fraction must lie in (0, 1], got {}",
            spec.nnz_fraction
        )));
    }
    if !(spec.noise_factor >= 0.0) {
        return Err(DatagenError::InvalidSpec(format!(
            "noise_factor must be non-negative, got {}",
            spec.noise_factor
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let a = dct_dictionary(spec.n, spec.m);

    let nnz = ((spec.nnz_fraction * spec.m as f64).ceil() as usize).min(spec.m);
    let mut positions = sample(&mut rng, spec.m, nnz).into_vec();
    positions.sort_unstable();
    let values = gaussian_vector(&mut rng, nnz);
    let mut x_true = DVector::zeros(spec.m);
    for (&j, &value) in positions.iter().zip(values.iter()) {
        x_true[j] = value;
    }

    let clean = &a * &x_true;
    let sigma = (spec.noise_factor * clean.norm_squared() / spec.n as f64).sqrt();
    let noise = gaussian_vector(&mut rng, spec.n) * sigma;
    let b = clean + &noise;

    let groups = GroupStructure::new(spec.group_list(), spec.m)?;
    build(a, b, spec.penalty, spec.lambda, groups, x_true, noise)
}

fn build(
    a: DMatrix<f64>,
    b: DVector<f64>,
    penalty: Penalty,
    lambda: Lambda,
    groups: GroupStructure,
    x_true: DVector<f64>,
    noise: DVector<f64>,
) -> Result<Generated, DatagenError> {
    let mut problem = Problem::new(a, b, 1.0, penalty, groups)?;
    let value = lambda.resolve(&problem);
    if !(value > 0.0 && value.is_finite()) {
        return Err(DatagenError::InvalidSpec(format!("lambda resolved to {value}")));
    }
    problem.set_lambda(value)?;
    Ok(Generated {
        problem,
        x_true,
        noise,
    })
}
