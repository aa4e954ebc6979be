//! Overlapping group structure, the replication map `C`, and objective evaluation.
//!
//! Overlapping groups are handled by splitting: every feature `x_j` is copied once per
//! group it belongs to, giving a replicated vector `y = Cx` of length `M = sum |s|` in which
//! the groups no longer overlap. `C` has exactly one nonzero per row, so it is stored as a
//! row-to-column index array and never formed as a matrix. `D = C^T C` is diagonal and holds
//! the number of groups each feature belongs to.

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("group {group} is empty")]
    EmptyGroup { group: usize },
    #[error("group {group} contains index {index}, but there are only {features} features")]
    IndexOutOfRange {
        group: usize,
        index: usize,
        features: usize,
    },
    #[error("group {group} lists feature {index} more than once")]
    DuplicateIndex { group: usize, index: usize },
    #[error("feature {feature} is not covered by any group")]
    UncoveredFeature { feature: usize },
    #[error("group weight {weight} for group {group} must be finite and nonnegative")]
    InvalidWeight { group: usize, weight: f64 },
    #[error("expected {expected} group weights, got {got}")]
    WeightCount { expected: usize, got: usize },
    #[error("dimension mismatch: expected length {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("lambda must be positive and finite, got {0}")]
    InvalidLambda(f64),
    #[error("mu must be positive, got {0}")]
    InvalidMu(f64),
    #[error("problem has no features")]
    NoFeatures,
}

/// The penalty applied to each group block.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Penalty {
    /// `lambda * sum_s w_s ||x_s||_2`
    L1L2,
    /// `lambda * sum_s w_s ||x_s||_inf`
    L1Inf,
}

impl Penalty {
    /// Group norm of a single block.
    pub fn block_norm(self, block: &[f64]) -> f64 {
        match self {
            Penalty::L1L2 => l2_norm(block),
            Penalty::L1Inf => block.iter().fold(0.0_f64, |acc, v| acc.max(v.abs())),
        }
    }

    /// Dual of the group norm: l2 for `L1L2`, l1 for `L1Inf`.
    pub fn dual_block_norm(self, block: &[f64]) -> f64 {
        match self {
            Penalty::L1L2 => l2_norm(block),
            Penalty::L1Inf => block.iter().map(|v| v.abs()).sum(),
        }
    }
}

impl std::fmt::Display for Penalty {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Penalty::L1L2 => f.write_str("l12"),
            Penalty::L1Inf => f.write_str("l1inf"),
        }
    }
}

impl std::str::FromStr for Penalty {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "l12" | "l1l2" | "l1/l2" => Ok(Penalty::L1L2),
            "l1inf" | "l1linf" | "l1/linf" => Ok(Penalty::L1Inf),
            other => Err(format!("unknown penalty '{other}' (expected l12 or l1inf)")),
        }
    }
}

pub(crate) fn l2_norm(v: &[f64]) -> f64 {
    v.iter().map(|a| a * a).sum::<f64>().sqrt()
}

/// Implicit representation of the 0/1 replication matrix `C` (M x m).
#[derive(Debug, Clone, PartialEq)]
pub struct ReplicationMap {
    row_to_col: Vec<usize>,
    multiplicity: Vec<usize>,
    group_offsets: Vec<usize>,
}

impl ReplicationMap {
    /// Lays groups out contiguously in the given order and counts feature multiplicities.
    pub fn build(groups: &[Vec<usize>], num_features: usize) -> Result<Self, ModelError> {
        if num_features == 0 {
            return Err(ModelError::NoFeatures);
        }
        let total: usize = groups.iter().map(Vec::len).sum();
        let mut row_to_col = Vec::with_capacity(total);
        let mut multiplicity = vec![0usize; num_features];
        let mut group_offsets = Vec::with_capacity(groups.len() + 1);
        group_offsets.push(0);
        let mut seen = vec![usize::MAX; num_features];
        for (g, members) in groups.iter().enumerate() {
            if members.is_empty() {
                return Err(ModelError::EmptyGroup { group: g });
            }
            for &j in members {
                if j >= num_features {
                    return Err(ModelError::IndexOutOfRange {
                        group: g,
                        index: j,
                        features: num_features,
                    });
                }
                if seen[j] == g {
                    return Err(ModelError::DuplicateIndex { group: g, index: j });
                }
                seen[j] = g;
                row_to_col.push(j);
                multiplicity[j] += 1;
            }
            group_offsets.push(row_to_col.len());
        }
        if let Some(feature) = multiplicity.iter().position(|&c| c == 0) {
            return Err(ModelError::UncoveredFeature { feature });
        }
        Ok(Self {
            row_to_col,
            multiplicity,
            group_offsets,
        })
    }

    pub fn row_to_col(&self) -> &[usize] {
        &self.row_to_col
    }

    /// Diagonal of `D = C^T C`.
    pub fn multiplicity(&self) -> &[usize] {
        &self.multiplicity
    }

    pub fn multiplicity_f64(&self) -> Vec<f64> {
        self.multiplicity.iter().map(|&c| c as f64).collect()
    }

    /// `J + 1` offsets; group `s` occupies `group_offsets[s]..group_offsets[s + 1]`.
    pub fn group_offsets(&self) -> &[usize] {
        &self.group_offsets
    }

    pub fn group_range(&self, group: usize) -> std::ops::Range<usize> {
        self.group_offsets[group]..self.group_offsets[group + 1]
    }

    pub fn num_groups(&self) -> usize {
        self.group_offsets.len() - 1
    }

    /// Replicated length `M`.
    pub fn replicated_len(&self) -> usize {
        self.row_to_col.len()
    }

    pub fn num_features(&self) -> usize {
        self.multiplicity.len()
    }

    /// `Cx`.
    pub fn apply_c(&self, x: &DVector<f64>) -> Result<DVector<f64>, ModelError> {
        self.check_len(x.len(), self.num_features())?;
        let mut out = DVector::zeros(self.replicated_len());
        self.apply_c_into(x, &mut out);
        Ok(out)
    }

    /// `C^T u`.
    pub fn apply_ct(&self, u: &DVector<f64>) -> Result<DVector<f64>, ModelError> {
        self.check_len(u.len(), self.replicated_len())?;
        let mut out = DVector::zeros(self.num_features());
        self.apply_ct_into(u, &mut out);
        Ok(out)
    }

    pub(crate) fn apply_c_into(&self, x: &DVector<f64>, out: &mut DVector<f64>) {
        debug_assert_eq!(x.len(), self.num_features());
        debug_assert_eq!(out.len(), self.replicated_len());
        for (o, &j) in out.iter_mut().zip(&self.row_to_col) {
            *o = x[j];
        }
    }

    pub(crate) fn apply_ct_into(&self, u: &DVector<f64>, out: &mut DVector<f64>) {
        debug_assert_eq!(u.len(), self.replicated_len());
        debug_assert_eq!(out.len(), self.num_features());
        out.fill(0.0);
        for (&ui, &j) in u.iter().zip(&self.row_to_col) {
            out[j] += ui;
        }
    }

    pub(crate) fn c(&self, x: &DVector<f64>) -> DVector<f64> {
        let mut out = DVector::zeros(self.replicated_len());
        self.apply_c_into(x, &mut out);
        out
    }

    pub(crate) fn ct(&self, u: &DVector<f64>) -> DVector<f64> {
        let mut out = DVector::zeros(self.num_features());
        self.apply_ct_into(u, &mut out);
        out
    }

    fn check_len(&self, got: usize, expected: usize) -> Result<(), ModelError> {
        if got != expected {
            return Err(ModelError::DimensionMismatch { expected, got });
        }
        Ok(())
    }
}

/// Feature groups with per-group weights. Validated on construction.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupStructure {
    groups: Vec<Vec<usize>>,
    weights: Vec<f64>,
    map: ReplicationMap,
}

impl GroupStructure {
    /// Groups with unit weights.
    pub fn new(groups: Vec<Vec<usize>>, num_features: usize) -> Result<Self, ModelError> {
        let weights = vec![1.0; groups.len()];
        Self::with_weights(groups, weights, num_features)
    }

    pub fn with_weights(
        groups: Vec<Vec<usize>>,
        weights: Vec<f64>,
        num_features: usize,
    ) -> Result<Self, ModelError> {
        if weights.len() != groups.len() {
            return Err(ModelError::WeightCount {
                expected: groups.len(),
                got: weights.len(),
            });
        }
        for (group, &weight) in weights.iter().enumerate() {
            if !weight.is_finite() || weight < 0.0 {
                return Err(ModelError::InvalidWeight { group, weight });
            }
        }
        let map = ReplicationMap::build(&groups, num_features)?;
        Ok(Self {
            groups,
            weights,
            map,
        })
    }

    /// Singleton groups `{0}, {1}, ...`: the plain lasso, with `C = I`.
    pub fn singletons(num_features: usize) -> Result<Self, ModelError> {
        Self::new((0..num_features).map(|j| vec![j]).collect(), num_features)
    }

    pub fn groups(&self) -> &[Vec<usize>] {
        &self.groups
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn map(&self) -> &ReplicationMap {
        &self.map
    }

    pub fn num_features(&self) -> usize {
        self.map.num_features()
    }

    pub fn num_groups(&self) -> usize {
        self.groups.len()
    }

    pub fn replicated_len(&self) -> usize {
        self.map.replicated_len()
    }
}

/// `min_x 1/2 ||Ax - b||^2 + Omega(x)` over an overlapping group structure.
#[derive(Debug, Clone)]
pub struct Problem {
    a: DMatrix<f64>,
    b: DVector<f64>,
    lambda: f64,
    penalty: Penalty,
    groups: GroupStructure,
}

impl Problem {
    pub fn new(
        a: DMatrix<f64>,
        b: DVector<f64>,
        lambda: f64,
        penalty: Penalty,
        groups: GroupStructure,
    ) -> Result<Self, ModelError> {
        if b.len() != a.nrows() {
            return Err(ModelError::DimensionMismatch {
                expected: a.nrows(),
                got: b.len(),
            });
        }
        if groups.num_features() != a.ncols() {
            return Err(ModelError::DimensionMismatch {
                expected: a.ncols(),
                got: groups.num_features(),
            });
        }
        check_lambda(lambda)?;
        Ok(Self {
            a,
            b,
            lambda,
            penalty,
            groups,
        })
    }

    pub fn a(&self) -> &DMatrix<f64> {
        &self.a
    }

    pub fn b(&self) -> &DVector<f64> {
        &self.b
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn penalty(&self) -> Penalty {
        self.penalty
    }

    pub fn groups(&self) -> &GroupStructure {
        &self.groups
    }

    pub fn map(&self) -> &ReplicationMap {
        self.groups.map()
    }

    pub fn num_samples(&self) -> usize {
        self.a.nrows()
    }

    pub fn num_features(&self) -> usize {
        self.a.ncols()
    }

    pub fn set_lambda(&mut self, lambda: f64) -> Result<(), ModelError> {
        check_lambda(lambda)?;
        self.lambda = lambda;
        Ok(())
    }

    pub fn with_lambda(&self, lambda: f64) -> Result<Self, ModelError> {
        let mut p = self.clone();
        p.set_lambda(lambda)?;
        Ok(p)
    }

    pub fn with_penalty(&self, penalty: Penalty) -> Self {
        let mut p = self.clone();
        p.penalty = penalty;
        p
    }

    /// `lambda * sum_s w_s ||y_s||` over replicated coordinates.
    pub fn penalty_value(&self, y: &DVector<f64>) -> Result<f64, ModelError> {
        check_len(y.len(), self.groups.replicated_len())?;
        Ok(self.penalty_unchecked(y))
    }

    pub(crate) fn penalty_unchecked(&self, y: &DVector<f64>) -> f64 {
        let map = self.map();
        let y = y.as_slice();
        let sum: f64 = self
            .groups
            .weights()
            .iter()
            .enumerate()
            .map(|(s, w)| w * self.penalty.block_norm(&y[map.group_range(s)]))
            .sum();
        self.lambda * sum
    }

    /// `1/2 ||Ax - b||^2`.
    pub fn loss(&self, x: &DVector<f64>) -> Result<f64, ModelError> {
        check_len(x.len(), self.num_features())?;
        Ok(self.loss_unchecked(x))
    }

    pub(crate) fn loss_unchecked(&self, x: &DVector<f64>) -> f64 {
        0.5 * (&self.a * x - &self.b).norm_squared()
    }

    /// `F_obj(x, y) = 1/2 ||Ax - b||^2 + Omega~(y)`.
    pub fn objective(&self, x: &DVector<f64>, y: &DVector<f64>) -> Result<f64, ModelError> {
        Ok(self.loss(x)? + self.penalty_value(y)?)
    }

    /// Penalty evaluated directly on the unsplit `x`, i.e. `objective(x, Cx)`.
    pub fn objective_at(&self, x: &DVector<f64>) -> Result<f64, ModelError> {
        let y = self.map().apply_c(x)?;
        self.objective(x, &y)
    }

    /// Smooth part of the augmented Lagrangian:
    /// `f(x, y) = 1/2 ||Ax - b||^2 - v^T (Cx - y) + 1/(2 mu) ||Cx - y||^2`.
    pub fn smooth_part(
        &self,
        x: &DVector<f64>,
        y: &DVector<f64>,
        v: &DVector<f64>,
        mu: f64,
    ) -> Result<f64, ModelError> {
        self.check_split(x, y, v, mu)?;
        let r = &self.a * x - &self.b;
        let cx_y = self.map().c(x) - y;
        Ok(0.5 * r.norm_squared() - v.dot(&cx_y) + 0.5 / mu * cx_y.norm_squared())
    }

    /// `(grad_x f, grad_y f)` of [`Problem::smooth_part`].
    pub fn smooth_grad(
        &self,
        x: &DVector<f64>,
        y: &DVector<f64>,
        v: &DVector<f64>,
        mu: f64,
    ) -> Result<(DVector<f64>, DVector<f64>), ModelError> {
        self.check_split(x, y, v, mu)?;
        let r = &self.a * x - &self.b;
        let cx_y = self.map().c(x) - y;
        // grad_x = A^T r - C^T v + (1/mu) C^T (Cx - y) = A^T r - C^T grad_y
        let grad_y = v - &cx_y / mu;
        let grad_x = self.a.tr_mul(&r) - self.map().ct(&grad_y);
        Ok((grad_x, grad_y))
    }

    fn check_split(
        &self,
        x: &DVector<f64>,
        y: &DVector<f64>,
        v: &DVector<f64>,
        mu: f64,
    ) -> Result<(), ModelError> {
        check_len(x.len(), self.num_features())?;
        check_len(y.len(), self.groups.replicated_len())?;
        check_len(v.len(), self.groups.replicated_len())?;
        if !(mu > 0.0) {
            return Err(ModelError::InvalidMu(mu));
        }
        Ok(())
    }

    /// Smallest `lambda` for which this bound certifies `x = 0` as optimal.
    ///
    /// `x = 0` is optimal iff some `u` with `C^T u = A^T b` has `||u_s||_* <= lambda w_s` for
    /// every group. Splitting each `(A^T b)_j` evenly over its copies gives one such `u`,
    /// so the returned value is an upper bound on the exact threshold.
    pub fn zero_solution_lambda(&self) -> f64 {
        let atb = self.a.tr_mul(&self.b);
        let map = self.map();
        let u: Vec<f64> = map
            .row_to_col()
            .iter()
            .map(|&j| atb[j] / map.multiplicity()[j] as f64)
            .collect();
        let mut bound = 0.0_f64;
        for (s, &w) in self.groups.weights().iter().enumerate() {
            let n = self.penalty.dual_block_norm(&u[map.group_range(s)]);
            if n == 0.0 {
                continue;
            }
            if w == 0.0 {
                return f64::INFINITY;
            }
            bound = bound.max(n / w);
        }
        bound
    }
}

fn check_len(got: usize, expected: usize) -> Result<(), ModelError> {
    if got != expected {
        return Err(ModelError::DimensionMismatch { expected, got });
    }
    Ok(())
}

fn check_lambda(lambda: f64) -> Result<(), ModelError> {
    if !(lambda > 0.0) || !lambda.is_finite() {
        return Err(ModelError::InvalidLambda(lambda));
    }
    Ok(())
}
