//! Structured solves with `A^T A + alpha D`, where `D` is the positive diagonal of feature
//! multiplicities.
//!
//! Three backends cover the usual memory regimes:
//!
//! * [`Backend::DirectM`] factors the `m x m` matrix `A^T A + alpha D` (good when `m <= n`).
//! * [`Backend::DirectNSmw`] factors the `n x n` matrix `I + (1/alpha) A D^-1 A^T` and applies
//!   the Sherman-Morrison-Woodbury identity
//!   `(A^T A + alpha D)^-1 = (1/alpha) D^-1 - (1/alpha)^2 D^-1 A^T (I + (1/alpha) A D^-1 A^T)^-1 A D^-1`.
//! * [`Backend::Pcg`] never forms either product and runs Jacobi-preconditioned conjugate
//!   gradients on matrix-vector products.
//!
//! A [`FactorizationCache`] is tied to the `alpha` it was planned for. [`SystemCache`] owns one
//! and re-plans whenever a different `alpha` is requested, so a stale factor cannot be used.

use std::cell::OnceCell;

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use thiserror::Error;

/// Auto mode switches to PCG when both dimensions exceed this.
pub const DEFAULT_PCG_THRESHOLD: usize = 4096;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LinsolveError {
    #[error("alpha must be positive and finite, got {0}")]
    InvalidAlpha(f64),
    #[error("cholesky factorization of the {size}x{size} system failed (non-finite or indefinite input)")]
    Factorization { size: usize },
    #[error("pcg did not converge in {iterations} iterations (relative residual {residual:e})")]
    PcgNotConverged { iterations: usize, residual: f64 },
    #[error("pcg breakdown at iteration {iteration}: non-positive curvature {curvature:e}")]
    PcgBreakdown { iteration: usize, curvature: f64 },
    #[error("dimension mismatch: expected length {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
}

/// User-facing backend selection.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LinsolveMode {
    #[default]
    Auto,
    Direct,
    Pcg,
}

impl std::str::FromStr for LinsolveMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "auto" => Ok(Self::Auto),
            "direct" => Ok(Self::Direct),
            "pcg" => Ok(Self::Pcg),
            other => Err(format!("unknown linsolve mode '{other}' (expected auto, direct or pcg)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Backend {
    DirectM,
    DirectNSmw,
    Pcg,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PcgSettings {
    /// Relative residual target `||Mx - rhs|| / ||rhs||`.
    pub tol: f64,
    /// Iteration cap; `None` means `2m`.
    pub max_iter: Option<usize>,
}

impl Default for PcgSettings {
    fn default() -> Self {
        Self {
            tol: 1e-8,
            max_iter: None,
        }
    }
}

impl PcgSettings {
    /// Tolerance tied to the current inner tolerance: `min(0.1 eps_in, 1e-8)`.
    pub fn for_inner_tolerance(eps_in: f64) -> Self {
        Self {
            tol: (0.1 * eps_in).min(1e-8),
            max_iter: None,
        }
    }
}

/// The data shared by every `alpha`: `A`, the multiplicities, and lazily built products.
#[derive(Debug)]
pub struct LinearSystem<'a> {
    a: &'a DMatrix<f64>,
    multiplicity: Vec<f64>,
    col_sq_norms: Vec<f64>,
    gram: OnceCell<DMatrix<f64>>,
    scaled_outer: OnceCell<DMatrix<f64>>,
    pcg_threshold: usize,
}

impl<'a> LinearSystem<'a> {
    pub fn new(a: &'a DMatrix<f64>, multiplicity: &[f64]) -> Result<Self, LinsolveError> {
        if multiplicity.len() != a.ncols() {
            return Err(LinsolveError::DimensionMismatch {
                expected: a.ncols(),
                got: multiplicity.len(),
            });
        }
        let col_sq_norms = a.column_iter().map(|c| c.norm_squared()).collect();
        Ok(Self {
            a,
            multiplicity: multiplicity.to_vec(),
            col_sq_norms,
            gram: OnceCell::new(),
            scaled_outer: OnceCell::new(),
            pcg_threshold: DEFAULT_PCG_THRESHOLD,
        })
    }

    pub fn with_pcg_threshold(mut self, threshold: usize) -> Self {
        self.pcg_threshold = threshold;
        self
    }

    pub fn num_features(&self) -> usize {
        self.a.ncols()
    }

    pub fn num_samples(&self) -> usize {
        self.a.nrows()
    }

    pub fn multiplicity(&self) -> &[f64] {
        &self.multiplicity
    }

    /// `(A^T A + alpha D) v`, without forming `A^T A`.
    pub fn apply(&self, alpha: f64, v: &DVector<f64>) -> DVector<f64> {
        let mut out = self.a.tr_mul(&(self.a * v));
        for (o, (vi, d)) in out.iter_mut().zip(v.iter().zip(&self.multiplicity)) {
            *o += alpha * d * vi;
        }
        out
    }

    /// Backend the planner picks for a hint.
    pub fn choose_backend(&self, hint: LinsolveMode) -> Backend {
        let (n, m) = (self.num_samples(), self.num_features());
        match hint {
            LinsolveMode::Pcg => Backend::Pcg,
            LinsolveMode::Auto if n.min(m) > self.pcg_threshold => Backend::Pcg,
            _ if m <= n => Backend::DirectM,
            _ => Backend::DirectNSmw,
        }
    }

    fn gram(&self) -> &DMatrix<f64> {
        self.gram.get_or_init(|| self.a.tr_mul(self.a))
    }

    // A D^-1 A^T
    fn scaled_outer(&self) -> &DMatrix<f64> {
        self.scaled_outer.get_or_init(|| {
            let mut scaled = self.a.clone();
            for (mut col, d) in scaled.column_iter_mut().zip(&self.multiplicity) {
                col /= *d;
            }
            &scaled * self.a.transpose()
        })
    }
}

/// A planned solver for one value of `alpha`.
#[derive(Debug, Clone)]
pub struct FactorizationCache {
    backend: Backend,
    alpha: f64,
    factor: Option<Cholesky<f64, Dyn>>,
    pcg: PcgSettings,
}

/// Plans a solver for `A^T A + alpha D`. Direct backends factor here, once.
pub fn plan(
    system: &LinearSystem<'_>,
    alpha: f64,
    hint: LinsolveMode,
    pcg: PcgSettings,
) -> Result<FactorizationCache, LinsolveError> {
    plan_backend(system, alpha, system.choose_backend(hint), pcg)
}

/// Plans with an explicit backend, whatever the shape of `A`.
pub fn plan_backend(
    system: &LinearSystem<'_>,
    alpha: f64,
    backend: Backend,
    pcg: PcgSettings,
) -> Result<FactorizationCache, LinsolveError> {
    if !(alpha > 0.0) || !alpha.is_finite() {
        return Err(LinsolveError::InvalidAlpha(alpha));
    }
    let factor = match backend {
        Backend::DirectM => {
            let mut mat = system.gram().clone();
            for (j, d) in system.multiplicity.iter().enumerate() {
                mat[(j, j)] += alpha * d;
            }
            Some(cholesky(mat)?)
        }
        Backend::DirectNSmw => {
            let mut mat = system.scaled_outer() / alpha;
            for i in 0..mat.nrows() {
                mat[(i, i)] += 1.0;
            }
            Some(cholesky(mat)?)
        }
        Backend::Pcg => None,
    };
    Ok(FactorizationCache {
        backend,
        alpha,
        factor,
        pcg,
    })
}

fn cholesky(mat: DMatrix<f64>) -> Result<Cholesky<f64, Dyn>, LinsolveError> {
    let size = mat.nrows();
    if mat.iter().any(|v| !v.is_finite()) {
        return Err(LinsolveError::Factorization { size });
    }
    Cholesky::new(mat).ok_or(LinsolveError::Factorization { size })
}

impl FactorizationCache {
    pub fn backend(&self) -> Backend {
        self.backend
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn pcg_settings(&self) -> PcgSettings {
        self.pcg
    }

    pub fn set_pcg_settings(&mut self, pcg: PcgSettings) {
        self.pcg = pcg;
    }

    /// Solves `(A^T A + alpha D) x = rhs`.
    pub fn solve(
        &self,
        system: &LinearSystem<'_>,
        rhs: &DVector<f64>,
    ) -> Result<DVector<f64>, LinsolveError> {
        self.solve_from(system, rhs, None)
    }

    /// As [`FactorizationCache::solve`]; `guess` seeds PCG and is ignored by direct backends.
    pub fn solve_from(
        &self,
        system: &LinearSystem<'_>,
        rhs: &DVector<f64>,
        guess: Option<&DVector<f64>>,
    ) -> Result<DVector<f64>, LinsolveError> {
        let m = system.num_features();
        if rhs.len() != m {
            return Err(LinsolveError::DimensionMismatch {
                expected: m,
                got: rhs.len(),
            });
        }
        let alpha = self.alpha;
        match (self.backend, &self.factor) {
            (Backend::DirectM, Some(chol)) => Ok(chol.solve(rhs)),
            (Backend::DirectNSmw, Some(chol)) => {
                let d = &system.multiplicity;
                let w = DVector::from_fn(m, |j, _| rhs[j] / (alpha * d[j]));
                let s = chol.solve(&(system.a * &w));
                let mut x = system.a.tr_mul(&s);
                for j in 0..m {
                    x[j] = w[j] - x[j] / (alpha * d[j]);
                }
                Ok(x)
            }
            _ => {
                let precond: Vec<f64> = system
                    .col_sq_norms
                    .iter()
                    .zip(&system.multiplicity)
                    .map(|(c, d)| 1.0 / (c + alpha * d))
                    .collect();
                let max_iter = self.pcg.max_iter.unwrap_or(2 * m).max(1);
                let out = pcg(
                    |v| system.apply(alpha, v),
                    rhs,
                    guess,
                    self.pcg.tol,
                    max_iter,
                    Some(&precond),
                )?;
                Ok(out.x)
            }
        }
    }
}

/// Lazily (re)planned cache for a system whose `alpha` may change between calls.
#[derive(Debug)]
pub struct SystemCache<'s, 'a> {
    system: &'s LinearSystem<'a>,
    hint: LinsolveMode,
    pcg: PcgSettings,
    current: Option<FactorizationCache>,
    plans: usize,
}

impl<'s, 'a> SystemCache<'s, 'a> {
    pub fn new(system: &'s LinearSystem<'a>, hint: LinsolveMode) -> Self {
        Self {
            system,
            hint,
            pcg: PcgSettings::default(),
            current: None,
            plans: 0,
        }
    }

    pub fn system(&self) -> &'s LinearSystem<'a> {
        self.system
    }

    /// Number of times a factorization (or PCG plan) was built.
    pub fn plan_count(&self) -> usize {
        self.plans
    }

    pub fn set_pcg_settings(&mut self, pcg: PcgSettings) {
        self.pcg = pcg;
        if let Some(cache) = self.current.as_mut() {
            cache.set_pcg_settings(pcg);
        }
    }

    /// Cache valid for `alpha`, re-planning only when `alpha` differs from the cached one.
    pub fn for_alpha(&mut self, alpha: f64) -> Result<&FactorizationCache, LinsolveError> {
        let stale = self.current.as_ref().is_none_or(|c| c.alpha != alpha);
        if stale {
            self.current = Some(plan(self.system, alpha, self.hint, self.pcg)?);
            self.plans += 1;
        }
        Ok(self.current.as_ref().expect("planned above"))
    }

    pub fn solve(
        &mut self,
        alpha: f64,
        rhs: &DVector<f64>,
        guess: Option<&DVector<f64>>,
    ) -> Result<DVector<f64>, LinsolveError> {
        let system = self.system;
        self.for_alpha(alpha)?.solve_from(system, rhs, guess)
    }
}

#[derive(Debug, Clone)]
pub struct PcgOutcome {
    pub x: DVector<f64>,
    pub iterations: usize,
    /// Final relative residual `||Mx - rhs|| / ||rhs||`.
    pub residual: f64,
    /// Relative residual after each iteration (index 0 is the starting point).
    pub residual_history: Vec<f64>,
    /// `1/2 x^T M x - rhs^T x` after each iteration. Equals `1/2 ||x - x*||_M^2` up to a
    /// constant, so it is non-increasing for any SPD operator.
    pub energy_history: Vec<f64>,
}

/// Preconditioned conjugate gradients on an SPD operator.
///
/// `inv_diag` holds the inverse of a Jacobi preconditioner; `None` runs plain CG.
pub fn pcg(
    matvec: impl Fn(&DVector<f64>) -> DVector<f64>,
    rhs: &DVector<f64>,
    guess: Option<&DVector<f64>>,
    tol: f64,
    max_iter: usize,
    inv_diag: Option<&[f64]>,
) -> Result<PcgOutcome, LinsolveError> {
    let n = rhs.len();
    let rhs_norm = rhs.norm();
    if rhs_norm == 0.0 {
        return Ok(PcgOutcome {
            x: DVector::zeros(n),
            iterations: 0,
            residual: 0.0,
            residual_history: vec![0.0],
            energy_history: vec![0.0],
        });
    }
    let precondition = |r: &DVector<f64>| match inv_diag {
        Some(p) => DVector::from_fn(n, |i, _| p[i] * r[i]),
        None => r.clone(),
    };

    let (mut x, mut r) = match guess {
        Some(g) if g.len() == n => (g.clone(), rhs - matvec(g)),
        _ => (DVector::zeros(n), rhs.clone()),
    };
    // energy = 1/2 x^T M x - rhs^T x = -1/2 (rhs + r)^T x
    let energy = |x: &DVector<f64>, r: &DVector<f64>| -0.5 * (rhs + r).dot(x);
    let mut residual = r.norm() / rhs_norm;
    let mut residual_history = vec![residual];
    let mut energy_history = vec![energy(&x, &r)];
    if residual <= tol {
        return Ok(PcgOutcome {
            x,
            iterations: 0,
            residual,
            residual_history,
            energy_history,
        });
    }

    let mut z = precondition(&r);
    let mut p = z.clone();
    let mut rz = r.dot(&z);
    for it in 1..=max_iter {
        let q = matvec(&p);
        let curvature = p.dot(&q);
        if !(curvature > 0.0) {
            return Err(LinsolveError::PcgBreakdown {
                iteration: it,
                curvature,
            });
        }
        let step = rz / curvature;
        x.axpy(step, &p, 1.0);
        r.axpy(-step, &q, 1.0);
        residual = r.norm() / rhs_norm;
        residual_history.push(residual);
        energy_history.push(energy(&x, &r));
        if residual <= tol {
            return Ok(PcgOutcome {
                x,
                iterations: it,
                residual,
                residual_history,
                energy_history,
            });
        }
        z = precondition(&r);
        let rz_next = r.dot(&z);
        p = &z + &p * (rz_next / rz);
        rz = rz_next;
    }
    Err(LinsolveError::PcgNotConverged {
        iterations: max_iter,
        residual,
    })
}
