//! Approximate minimizers of the augmented Lagrangian `L(x, y, v)` for a fixed multiplier `v`.
//!
//! All of them split `L = f(x, y) + g(y)` with
//! `f(x, y) = 1/2 ||Ax - b||^2 - v^T (Cx - y) + 1/(2 mu) ||Cx - y||^2` and `g = Omega~`.
//! Because `grad_y f` is `1/mu`-Lipschitz regardless of the loss, the partially linearized
//! methods use the step `rho = mu` and their `x` systems never change within a call.
//!
//! * [`adal_step`]: one alternating sweep (x-minimization, then y-prox).
//! * [`aplms`]: alternating linearization with skipping on the partial split.
//! * [`istap`] / [`fistap`]: exact `x` minimization, prox-gradient on `y` (plus momentum).
//! * [`fista`]: prox-gradient on both blocks with a backtracking step.

use nalgebra::DVector;
use thiserror::Error;

use crate::linsolve::{LinearSystem, LinsolveError, LinsolveMode, SystemCache};
use crate::model::{l2_norm, ModelError, Penalty, Problem};
use crate::prox::{prox_penalty_in_place, ProxError};

/// Relative residual denominators are clamped from below by this.
pub const DENOMINATOR_FLOOR: f64 = 1e-12;

/// Default cap on inner iterations.
pub const DEFAULT_MAX_INNER: usize = 2000;

/// Line search gives up once `rho` falls below this.
pub const MIN_LINE_SEARCH_STEP: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum SolveError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Prox(#[from] ProxError),
    #[error("linear solve failed: {0}")]
    Linsolve(#[from] LinsolveError),
    #[error("line search step underflow (rho = {rho:e}); the gradient is likely inconsistent")]
    StepUnderflow { rho: f64 },
    #[error("invalid solver input: {0}")]
    InvalidInput(String),
    #[error("non-finite iterate produced at inner iteration {iteration}")]
    NonFinite { iteration: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Algorithm {
    Adal,
    AplmS,
    IstaP,
    FistaP,
    Fista,
}

impl Algorithm {
    pub const ALL: [Algorithm; 5] = [
        Algorithm::Adal,
        Algorithm::AplmS,
        Algorithm::IstaP,
        Algorithm::FistaP,
        Algorithm::Fista,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Adal => "adal",
            Algorithm::AplmS => "aplm-s",
            Algorithm::IstaP => "ista-p",
            Algorithm::FistaP => "fista-p",
            Algorithm::Fista => "fista",
        }
    }

    /// Whether the method factors `x` systems at all.
    pub fn uses_linear_solves(self) -> bool {
        !matches!(self, Algorithm::Fista)
    }
}

impl std::fmt::Display for Algorithm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Algorithm {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let key = s.to_ascii_lowercase().replace('_', "-");
        Algorithm::ALL
            .into_iter()
            .find(|a| a.name() == key || a.name().replace('-', "") == key)
            .ok_or_else(|| {
                format!("unknown algorithm '{s}' (expected adal, aplm-s, ista-p, fista-p or fista)")
            })
    }
}

/// How APLM-S decides to take a skipping step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SkipRule {
    /// Skip when `F(x, y) > L_rho(x, y, ybar, gamma)`.
    #[default]
    Test,
    Always,
    Never,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InnerOptions {
    pub skip_rule: SkipRule,
    /// Disabling momentum turns FISTA-p into ISTA-p and FISTA into ISTA.
    pub momentum: bool,
    /// Record `F(x^k, ybar^k)` after every iteration.
    pub record_history: bool,
    /// Backtracking factor for FISTA.
    pub shrink: f64,
}

impl Default for InnerOptions {
    fn default() -> Self {
        Self {
            skip_rule: SkipRule::Test,
            momentum: true,
            record_history: false,
            shrink: 0.5,
        }
    }
}

/// Starting point and parameters of one call.
#[derive(Debug, Clone, Copy)]
pub struct InnerInput<'v> {
    pub x0: &'v DVector<f64>,
    pub y0: &'v DVector<f64>,
    pub v: &'v DVector<f64>,
    pub mu: f64,
    pub eps_in: f64,
    pub max_inner: usize,
}

#[derive(Debug, Clone)]
pub struct InnerOutput {
    pub x: DVector<f64>,
    /// The returned `ybar`.
    pub y: DVector<f64>,
    /// Relative primal residual of the last inner iteration.
    pub primal_residual: f64,
    /// Relative gradient residual of the last inner iteration; `None` for ADAL, whose dual
    /// residual is computed from consecutive outer iterates.
    pub dual_residual: Option<f64>,
    /// Numerator of `dual_residual`.
    pub dual_numerator: Option<f64>,
    pub iterations: usize,
    pub skips: usize,
    pub hit_cap: bool,
    /// `F(x^k, ybar^k)` for `k = 1..=iterations` when history is recorded.
    pub f_history: Vec<f64>,
    /// Step used in the last iteration.
    pub rho: f64,
}

/// View of one inner iteration handed to observers.
#[derive(Debug)]
pub struct InnerIterate<'a> {
    /// Zero-based iteration index; the iterate is the `(k + 1)`-th.
    pub k: usize,
    pub x: &'a DVector<f64>,
    /// The point `ybar` was compared against: `y^{k+1}` (APLM-S), `ybar^k` (ISTA-p),
    /// `z^k` (FISTA-p), `z_y^k` (FISTA), `y^l` (ADAL).
    pub y: &'a DVector<f64>,
    pub ybar: &'a DVector<f64>,
    /// `z_x^k` for FISTA.
    pub zx: Option<&'a DVector<f64>>,
    /// `gamma^{k+1}` for APLM-S.
    pub gamma: Option<&'a DVector<f64>>,
    pub skipped: bool,
    pub rho: f64,
}

/// Problem data shared by every inner call: `A^T b` and the linear-system descriptor.
#[derive(Debug)]
pub struct SplitContext<'p> {
    problem: &'p Problem,
    atb: DVector<f64>,
    system: LinearSystem<'p>,
}

impl<'p> SplitContext<'p> {
    pub fn new(problem: &'p Problem) -> Result<Self, SolveError> {
        let multiplicity = problem.map().multiplicity_f64();
        let system = LinearSystem::new(problem.a(), &multiplicity)?;
        Ok(Self {
            problem,
            atb: problem.a().tr_mul(problem.b()),
            system,
        })
    }

    pub fn with_pcg_threshold(mut self, threshold: usize) -> Self {
        self.system = self.system.with_pcg_threshold(threshold);
        self
    }

    pub fn problem(&self) -> &'p Problem {
        self.problem
    }

    pub fn system(&self) -> &LinearSystem<'p> {
        &self.system
    }

    /// A cache for the `x` systems, planned lazily.
    pub fn cache(&self, mode: LinsolveMode) -> SystemCache<'_, 'p> {
        SystemCache::new(&self.system, mode)
    }

    /// Right-hand side `A^T b + C^T v + (1/mu) C^T y` of the `x` system with `y` fixed.
    pub fn x_rhs(&self, v: &DVector<f64>, y: &DVector<f64>, mu: f64) -> DVector<f64> {
        let map = self.problem.map();
        let combined = v + y / mu;
        &self.atb + map.ct(&combined)
    }

    /// `argmin_x f(x, y)`.
    pub fn minimize_x(
        &self,
        cache: &mut SystemCache<'_, 'p>,
        v: &DVector<f64>,
        y: &DVector<f64>,
        mu: f64,
        guess: Option<&DVector<f64>>,
    ) -> Result<DVector<f64>, SolveError> {
        let rhs = self.x_rhs(v, y, mu);
        Ok(cache.solve(1.0 / mu, &rhs, guess)?)
    }

    /// `prox_{mu g}(Cx - mu v)`, the `y` update shared by ADAL, APLM-S, ISTA-p and FISTA-p.
    pub fn prox_y(&self, x: &DVector<f64>, v: &DVector<f64>, mu: f64) -> DVector<f64> {
        let mut d = self.problem.map().c(x);
        d.axpy(-mu, v, 1.0);
        prox_penalty_in_place(&mut d, mu * self.problem.lambda(), self.problem);
        d
    }

    /// `F(x, y) = f(x, y) + g(y)`, the augmented Lagrangian at fixed `v`.
    pub fn aug_lagrangian(&self, x: &DVector<f64>, y: &DVector<f64>, v: &DVector<f64>, mu: f64) -> f64 {
        self.smooth(x, y, v, mu) + self.problem.penalty_unchecked(y)
    }

    fn smooth(&self, x: &DVector<f64>, y: &DVector<f64>, v: &DVector<f64>, mu: f64) -> f64 {
        let cx_y = self.problem.map().c(x) - y;
        self.problem.loss_unchecked(x) - v.dot(&cx_y) + 0.5 / mu * cx_y.norm_squared()
    }

    fn check_input(&self, input: &InnerInput<'_>) -> Result<(), SolveError> {
        let m = self.problem.num_features();
        let big_m = self.problem.groups().replicated_len();
        if input.x0.len() != m {
            return Err(ModelError::DimensionMismatch {
                expected: m,
                got: input.x0.len(),
            }
            .into());
        }
        for w in [input.y0, input.v] {
            if w.len() != big_m {
                return Err(ModelError::DimensionMismatch {
                    expected: big_m,
                    got: w.len(),
                }
                .into());
            }
        }
        if !(input.mu > 0.0) || !input.mu.is_finite() {
            return Err(SolveError::InvalidInput(format!("mu must be positive, got {}", input.mu)));
        }
        if !(input.eps_in > 0.0) {
            return Err(SolveError::InvalidInput(format!(
                "eps_in must be positive, got {}",
                input.eps_in
            )));
        }
        if input.max_inner == 0 {
            return Err(SolveError::InvalidInput("max_inner must be at least 1".into()));
        }
        Ok(())
    }

    /// `(||a - b|| / ||b||, ||C^T(a - b)|| / ||C^T b||)` with floored denominators, plus the
    /// second numerator.
    fn residual_pair(&self, a: &DVector<f64>, b: &DVector<f64>) -> (f64, f64, f64) {
        let map = self.problem.map();
        let diff = a - b;
        let primal = diff.norm() / b.norm().max(DENOMINATOR_FLOOR);
        let num = map.ct(&diff).norm();
        let dual = num / map.ct(b).norm().max(DENOMINATOR_FLOOR);
        (primal, dual, num)
    }
}

/// Momentum sequence `t_{k+1} = (1 + sqrt(1 + 4 t_k^2)) / 2`, started at `t_0 = 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Momentum {
    t: f64,
}

impl Default for Momentum {
    fn default() -> Self {
        Self { t: 1.0 }
    }
}

impl Momentum {
    pub fn t(&self) -> f64 {
        self.t
    }

    /// Advances `t` and returns the extrapolation weight `(t_k - 1) / t_{k+1}`.
    pub fn advance(&mut self) -> f64 {
        let next = 0.5 * (1.0 + (1.0 + 4.0 * self.t * self.t).sqrt());
        let coef = (self.t - 1.0) / next;
        self.t = next;
        coef
    }
}

fn ensure_finite(v: &DVector<f64>, iteration: usize) -> Result<(), SolveError> {
    if v.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(SolveError::NonFinite { iteration })
    }
}

/// One ADAL sweep: `x+ = argmin_x L(x, y, v)`, then `y+ = argmin_y L(x+, y, v)`.
pub fn adal_step<'p>(
    ctx: &SplitContext<'p>,
    input: &InnerInput<'_>,
    cache: &mut SystemCache<'_, 'p>,
) -> Result<InnerOutput, SolveError> {
    ctx.check_input(input)?;
    let InnerInput { x0, y0, v, mu, .. } = *input;
    let x = ctx.minimize_x(cache, v, y0, mu, Some(x0))?;
    ensure_finite(&x, 0)?;
    let y = ctx.prox_y(&x, v, mu);
    let primal_residual = (&y - y0).norm() / y0.norm().max(DENOMINATOR_FLOOR);
    Ok(InnerOutput {
        x,
        y,
        primal_residual,
        dual_residual: None,
        dual_numerator: None,
        iterations: 1,
        skips: 0,
        hit_cap: false,
        f_history: Vec::new(),
        rho: mu,
    })
}

/// Initial inner multiplier for APLM-S: a `gamma` with `-gamma` in the subdifferential of `g`
/// at `ybar`. Zero blocks get zero; nonzero blocks get the gradient of the block norm
/// (l2) or a signed unit vector at the first maximal coordinate (l-infinity).
pub fn initial_gamma(problem: &Problem, ybar: &DVector<f64>) -> DVector<f64> {
    let map = problem.map();
    let lambda = problem.lambda();
    let mut gamma = DVector::zeros(ybar.len());
    for (s, &w) in problem.groups().weights().iter().enumerate() {
        let range = map.group_range(s);
        let block = &ybar.as_slice()[range.clone()];
        match problem.penalty() {
            Penalty::L1L2 => {
                let norm = l2_norm(block);
                if norm > 0.0 {
                    for (i, yi) in range.zip(block) {
                        gamma[i] = -lambda * w * yi / norm;
                    }
                }
            }
            Penalty::L1Inf => {
                let mut best: Option<(usize, f64)> = None;
                for (i, yi) in range.zip(block) {
                    if yi.abs() > best.map_or(0.0, |b| b.1.abs()) {
                        best = Some((i, *yi));
                    }
                }
                if let Some((i, yi)) = best {
                    gamma[i] = -lambda * w * yi.signum();
                }
            }
        }
    }
    gamma
}

/// APLM-S: alternating partial linearization with skipping.
///
/// `primary` serves the `alpha = 1/mu` system of the skipping step, `joint` the
/// `alpha = 1/(2 mu)` system of the joint `(x, y)` minimization.
pub fn aplms<'p>(
    ctx: &SplitContext<'p>,
    input: &InnerInput<'_>,
    opts: &InnerOptions,
    primary: &mut SystemCache<'_, 'p>,
    joint: &mut SystemCache<'_, 'p>,
    observer: &mut dyn FnMut(&InnerIterate<'_>),
) -> Result<InnerOutput, SolveError> {
    ctx.check_input(input)?;
    let InnerInput {
        x0,
        y0,
        v,
        mu,
        eps_in,
        max_inner,
    } = *input;
    let problem = ctx.problem();
    let map = problem.map();

    let mut x = x0.clone();
    let mut ybar = y0.clone();
    let mut gamma = initial_gamma(problem, &ybar);
    let mut g_ybar = problem.penalty_unchecked(&ybar);
    let r_x = &ctx.atb + map.ct(v);

    let mut out = InnerOutput {
        x: x.clone(),
        y: ybar.clone(),
        primal_residual: f64::INFINITY,
        dual_residual: None,
        dual_numerator: None,
        iterations: 0,
        skips: 0,
        hit_cap: true,
        f_history: Vec::new(),
        rho: mu,
    };

    for k in 0..max_inner {
        let skip_now;
        let y;
        let x_next = {
            let mut r_y = &gamma - v;
            r_y.axpy(1.0 / mu, &ybar, 1.0);
            let rhs = &r_x + map.ct(&r_y) * 0.5;
            let x_joint = joint.solve(0.5 / mu, &rhs, Some(&x))?;
            let mut y_joint = map.c(&x_joint) / mu + &r_y;
            y_joint *= 0.5 * mu;

            skip_now = match opts.skip_rule {
                SkipRule::Always => true,
                SkipRule::Never => false,
                // f(x, y) cancels on both sides of F(x, y) > L_rho(x, y, ybar, gamma)
                SkipRule::Test => {
                    let diff = &ybar - &y_joint;
                    let g_y = problem.penalty_unchecked(&y_joint);
                    g_y > g_ybar + gamma.dot(&diff) + 0.5 / mu * diff.norm_squared()
                }
            };
            if skip_now {
                y = ybar.clone();
                ctx.minimize_x(primary, v, &y, mu, Some(&x))?
            } else {
                y = y_joint;
                x_joint
            }
        };
        x = x_next;
        ensure_finite(&x, k)?;
        if skip_now {
            out.skips += 1;
        }

        let ybar_next = ctx.prox_y(&x, v, mu);
        // gamma = grad_y f(x, y) - (y - ybar) / rho
        let mut grad_y = map.c(&x);
        grad_y -= &y;
        grad_y.scale_mut(-1.0 / mu);
        grad_y += v;
        gamma = grad_y - (&y - &ybar_next) / mu;

        let (primal, dual, num) = ctx.residual_pair(&ybar_next, &y);
        ybar = ybar_next;
        g_ybar = problem.penalty_unchecked(&ybar);
        if opts.record_history {
            out.f_history.push(ctx.aug_lagrangian(&x, &ybar, v, mu));
        }
        observer(&InnerIterate {
            k,
            x: &x,
            y: &y,
            ybar: &ybar,
            zx: None,
            gamma: Some(&gamma),
            skipped: skip_now,
            rho: mu,
        });
        out.iterations = k + 1;
        out.primal_residual = primal;
        out.dual_residual = Some(dual);
        out.dual_numerator = Some(num);
        if primal.max(dual) <= eps_in {
            out.hit_cap = false;
            break;
        }
    }
    out.x = x;
    out.y = ybar;
    Ok(out)
}

/// ISTA-p: `x <- argmin_x f(x, ybar)`, then `ybar <- prox_{mu g}(Cx - mu v)`.
pub fn istap<'p>(
    ctx: &SplitContext<'p>,
    input: &InnerInput<'_>,
    opts: &InnerOptions,
    primary: &mut SystemCache<'_, 'p>,
    observer: &mut dyn FnMut(&InnerIterate<'_>),
) -> Result<InnerOutput, SolveError> {
    ctx.check_input(input)?;
    let InnerInput {
        x0,
        y0,
        v,
        mu,
        eps_in,
        max_inner,
    } = *input;

    let mut x = x0.clone();
    let mut ybar = y0.clone();
    let mut out = empty_output(&x, &ybar, mu);
    for k in 0..max_inner {
        x = ctx.minimize_x(primary, v, &ybar, mu, Some(&x))?;
        ensure_finite(&x, k)?;
        let ybar_next = ctx.prox_y(&x, v, mu);
        let (primal, dual, num) = ctx.residual_pair(&ybar_next, &ybar);
        if opts.record_history {
            out.f_history.push(ctx.aug_lagrangian(&x, &ybar_next, v, mu));
        }
        observer(&InnerIterate {
            k,
            x: &x,
            y: &ybar,
            ybar: &ybar_next,
            zx: None,
            gamma: None,
            skipped: true,
            rho: mu,
        });
        ybar = ybar_next;
        out.iterations = k + 1;
        out.primal_residual = primal;
        out.dual_residual = Some(dual);
        out.dual_numerator = Some(num);
        if primal.max(dual) <= eps_in {
            out.hit_cap = false;
            break;
        }
    }
    out.x = x;
    out.y = ybar;
    Ok(out)
}

/// FISTA-p: ISTA-p with the `y` argument of `f` extrapolated by FISTA momentum.
pub fn fistap<'p>(
    ctx: &SplitContext<'p>,
    input: &InnerInput<'_>,
    opts: &InnerOptions,
    primary: &mut SystemCache<'_, 'p>,
    observer: &mut dyn FnMut(&InnerIterate<'_>),
) -> Result<InnerOutput, SolveError> {
    ctx.check_input(input)?;
    let InnerInput {
        x0,
        y0,
        v,
        mu,
        eps_in,
        max_inner,
    } = *input;

    let mut x = x0.clone();
    let mut ybar = y0.clone();
    let mut z = y0.clone();
    let mut momentum = Momentum::default();
    let mut out = empty_output(&x, &ybar, mu);
    for k in 0..max_inner {
        x = ctx.minimize_x(primary, v, &z, mu, Some(&x))?;
        ensure_finite(&x, k)?;
        let ybar_next = ctx.prox_y(&x, v, mu);
        let (primal, dual, num) = ctx.residual_pair(&ybar_next, &z);
        if opts.record_history {
            out.f_history.push(ctx.aug_lagrangian(&x, &ybar_next, v, mu));
        }
        observer(&InnerIterate {
            k,
            x: &x,
            y: &z,
            ybar: &ybar_next,
            zx: None,
            gamma: None,
            skipped: true,
            rho: mu,
        });
        out.iterations = k + 1;
        out.primal_residual = primal;
        out.dual_residual = Some(dual);
        out.dual_numerator = Some(num);
        if primal.max(dual) <= eps_in {
            out.hit_cap = false;
            ybar = ybar_next;
            break;
        }
        z = extrapolate(&ybar_next, &ybar, opts.momentum.then(|| momentum.advance()));
        ybar = ybar_next;
    }
    out.x = x;
    out.y = ybar;
    Ok(out)
}

/// FISTA on both blocks of `f(x, y) + g(y)`, with backtracking on `rho` starting from `mu`.
///
/// Since `f` is quadratic, the sufficient-decrease test
/// `f(p) <= f(z) + <grad f(z), p - z> + ||p - z||^2 / (2 rho)` is evaluated in its exact
/// curvature form `||A s_x||^2 + (1/mu) ||C s_x - s_y||^2 <= ||s||^2 / rho` with `s = p - z`.
pub fn fista(
    ctx: &SplitContext<'_>,
    input: &InnerInput<'_>,
    opts: &InnerOptions,
    observer: &mut dyn FnMut(&InnerIterate<'_>),
) -> Result<InnerOutput, SolveError> {
    ctx.check_input(input)?;
    let InnerInput {
        x0,
        y0,
        v,
        mu,
        eps_in,
        max_inner,
    } = *input;
    if !(opts.shrink > 0.0 && opts.shrink < 1.0) {
        return Err(SolveError::InvalidInput(format!(
            "line search shrink factor must lie in (0, 1), got {}",
            opts.shrink
        )));
    }
    let problem = ctx.problem();
    let map = problem.map();
    let a = problem.a();
    let lambda = problem.lambda();

    let mut xbar = x0.clone();
    let mut ybar = y0.clone();
    let mut zx = x0.clone();
    let mut zy = y0.clone();
    let mut rho = mu;
    let mut momentum = Momentum::default();
    let mut out = empty_output(&xbar, &ybar, mu);

    for k in 0..max_inner {
        // grad f at z
        let residual = a * &zx - problem.b();
        let mut grad_y = map.c(&zx);
        grad_y -= &zy;
        grad_y.scale_mut(-1.0 / mu);
        grad_y += v;
        let grad_x = a.tr_mul(&residual) - map.ct(&grad_y);

        let (x_next, y_next) = loop {
            let mut x_next = zx.clone();
            x_next.axpy(-rho, &grad_x, 1.0);
            let mut y_next = zy.clone();
            y_next.axpy(-rho, &grad_y, 1.0);
            prox_penalty_in_place(&mut y_next, lambda * rho, problem);

            let sx = &x_next - &zx;
            let sy = &y_next - &zy;
            let curvature = (a * &sx).norm_squared() + (map.c(&sx) - &sy).norm_squared() / mu;
            let step_sq = sx.norm_squared() + sy.norm_squared();
            if curvature * rho <= step_sq {
                break (x_next, y_next);
            }
            rho *= opts.shrink;
            if rho < MIN_LINE_SEARCH_STEP {
                return Err(SolveError::StepUnderflow { rho });
            }
        };
        ensure_finite(&x_next, k)?;

        let diff_sq = (&x_next - &zx).norm_squared() + (&y_next - &zy).norm_squared();
        let z_norm = (zx.norm_squared() + zy.norm_squared()).sqrt();
        let rel = diff_sq.sqrt() / z_norm.max(DENOMINATOR_FLOOR);
        if opts.record_history {
            out.f_history.push(ctx.aug_lagrangian(&x_next, &y_next, v, mu));
        }
        observer(&InnerIterate {
            k,
            x: &x_next,
            y: &zy,
            ybar: &y_next,
            zx: Some(&zx),
            gamma: None,
            skipped: false,
            rho,
        });
        out.iterations = k + 1;
        out.primal_residual = rel;
        out.dual_residual = Some(rel);
        out.dual_numerator = Some(diff_sq.sqrt());
        out.rho = rho;
        if rel <= eps_in {
            out.hit_cap = false;
            xbar = x_next;
            ybar = y_next;
            break;
        }
        let coef = opts.momentum.then(|| momentum.advance());
        zx = extrapolate(&x_next, &xbar, coef);
        zy = extrapolate(&y_next, &ybar, coef);
        xbar = x_next;
        ybar = y_next;
    }
    out.x = xbar;
    out.y = ybar;
    Ok(out)
}

// next + coef (next - prev); a missing coefficient means plain copy.
fn extrapolate(next: &DVector<f64>, prev: &DVector<f64>, coef: Option<f64>) -> DVector<f64> {
    match coef {
        Some(c) if c != 0.0 => {
            let mut z = next - prev;
            z *= c;
            z += next;
            z
        }
        _ => next.clone(),
    }
}

fn empty_output(x: &DVector<f64>, y: &DVector<f64>, mu: f64) -> InnerOutput {
    InnerOutput {
        x: x.clone(),
        y: y.clone(),
        primal_residual: f64::INFINITY,
        dual_residual: None,
        dual_numerator: None,
        iterations: 0,
        skips: 0,
        hit_cap: true,
        f_history: Vec::new(),
        rho: mu,
    }
}
