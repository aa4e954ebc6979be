//! The outer augmented Lagrangian loop: multiplier updates, the `mu` schedule and the
//! inner-tolerance schedule.

use std::time::{Duration, Instant};

use nalgebra::DVector;
use thiserror::Error;

use crate::inner::{
    adal_step, aplms, fista, fistap, istap, Algorithm, InnerInput, InnerOptions, InnerOutput,
    SolveError, SplitContext, DEFAULT_MAX_INNER, DENOMINATOR_FLOOR,
};
use crate::linsolve::{LinsolveMode, PcgSettings};
use crate::model::{ModelError, Problem, ReplicationMap};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DynamicMu {
    pub beta: f64,
    pub tau: f64,
    pub mu_min: f64,
    pub mu_max: f64,
}

impl Default for DynamicMu {
    fn default() -> Self {
        Self {
            beta: 0.5,
            tau: 10.0,
            mu_min: 1e-6,
            mu_max: 10.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MuPolicy {
    Fixed,
    /// Shrink `mu` when the primal residual dominates, grow it when the dual one does.
    Dynamic(DynamicMu),
}

impl MuPolicy {
    pub fn dynamic() -> Self {
        MuPolicy::Dynamic(DynamicMu::default())
    }

    pub fn name(&self) -> &'static str {
        match self {
            MuPolicy::Fixed => "fixed",
            MuPolicy::Dynamic(_) => "dynamic",
        }
    }
}

/// Next value of `mu` given the residuals of the current outer iteration.
pub fn update_mu(mu: f64, r: f64, s: f64, policy: &MuPolicy) -> f64 {
    match *policy {
        MuPolicy::Fixed => mu,
        MuPolicy::Dynamic(DynamicMu {
            beta,
            tau,
            mu_min,
            mu_max,
        }) => {
            if r > tau * s {
                (beta * mu).max(mu_min)
            } else if s > tau * r {
                (mu / beta).min(mu_max)
            } else {
                mu
            }
        }
    }
}

/// `||Cx - y|| / max(||Cx||, ||y||)`.
pub fn primal_residual(map: &ReplicationMap, x: &DVector<f64>, y: &DVector<f64>) -> f64 {
    let cx = map.c(x);
    let denom = cx.norm().max(y.norm()).max(DENOMINATOR_FLOOR);
    (cx - y).norm() / denom
}

/// `||C^T (y_next - y_prev)|| / ||C^T y_prev||`, the dual residual used by ADAL.
pub fn consecutive_dual_residual(map: &ReplicationMap, y_next: &DVector<f64>, y_prev: &DVector<f64>) -> f64 {
    let num = map.ct(&(y_next - y_prev)).norm();
    num / map.ct(y_prev).norm().max(DENOMINATOR_FLOOR)
}

/// Outer residuals `(r, s)` after one inner solve. ADAL measures `s` from consecutive outer
/// `y` iterates; the other methods reuse the last inner gradient residual.
pub fn outer_residuals(
    map: &ReplicationMap,
    algorithm: Algorithm,
    inner: &InnerOutput,
    y_prev: &DVector<f64>,
) -> (f64, f64) {
    let r = primal_residual(map, &inner.x, &inner.y);
    let s = match (algorithm, inner.dual_residual) {
        (Algorithm::Adal, _) | (_, None) => consecutive_dual_residual(map, &inner.y, y_prev),
        (_, Some(s)) => s,
    };
    (r, s)
}

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("invalid configuration: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct OuterConfig {
    pub algorithm: Algorithm,
    pub mu0: f64,
    pub mu_policy: MuPolicy,
    pub eps_out: f64,
    pub max_outer: usize,
    pub max_inner: usize,
    pub eps_in0: f64,
    pub beta_in: f64,
    pub eps_in_floor_factor: f64,
    pub linsolve: LinsolveMode,
    /// Overrides the size above which `Auto` switches to PCG.
    pub pcg_threshold: Option<usize>,
    pub inner: InnerOptions,
    pub time_limit: Option<Duration>,
    /// Return `x = 0` immediately when `lambda` is at or above the kill threshold.
    pub detect_zero_solution: bool,
}

impl Default for OuterConfig {
    fn default() -> Self {
        Self::default_for(Algorithm::FistaP)
    }
}

impl OuterConfig {
    /// Defaults per algorithm: ADAL starts from `mu = 0.1`, everything else from `0.01`;
    /// FISTA keeps `mu` fixed since its step shrinks with `mu`.
    pub fn default_for(algorithm: Algorithm) -> Self {
        Self {
            algorithm,
            mu0: match algorithm {
                Algorithm::Adal => 0.1,
                _ => 0.01,
            },
            mu_policy: match algorithm {
                Algorithm::Fista => MuPolicy::Fixed,
                _ => MuPolicy::dynamic(),
            },
            eps_out: 1e-4,
            max_outer: 500,
            max_inner: DEFAULT_MAX_INNER,
            eps_in0: 0.01,
            beta_in: 0.5,
            eps_in_floor_factor: 0.2,
            linsolve: LinsolveMode::Auto,
            pcg_threshold: None,
            inner: InnerOptions::default(),
            time_limit: None,
            detect_zero_solution: true,
        }
    }

    pub fn with_mu_policy(mut self, policy: MuPolicy) -> Self {
        self.mu_policy = policy;
        self
    }

    pub fn with_mu0(mut self, mu0: f64) -> Self {
        self.mu0 = mu0;
        self
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let positive = [
            ("mu0", self.mu0),
            ("eps_out", self.eps_out),
            ("eps_in0", self.eps_in0),
            ("eps_in_floor_factor", self.eps_in_floor_factor),
        ];
        for (name, value) in positive {
            if !(value > 0.0 && value.is_finite()) {
                return Err(ConfigError::Invalid(format!("{name} must be positive, got {value}")));
            }
        }
        if !(self.beta_in > 0.0 && self.beta_in <= 1.0) {
            return Err(ConfigError::Invalid(format!("beta_in must lie in (0, 1], got {}", self.beta_in)));
        }
        if self.max_outer == 0 || self.max_inner == 0 {
            return Err(ConfigError::Invalid("iteration caps must be at least 1".into()));
        }
        if let MuPolicy::Dynamic(d) = self.mu_policy {
            if !(d.beta > 0.0 && d.beta < 1.0) {
                return Err(ConfigError::Invalid(format!("beta must lie in (0, 1), got {}", d.beta)));
            }
            if !(d.tau > 1.0) {
                return Err(ConfigError::Invalid(format!("tau must exceed 1, got {}", d.tau)));
            }
            if !(d.mu_min > 0.0 && d.mu_min <= self.mu0 && self.mu0 <= d.mu_max) {
                return Err(ConfigError::Invalid(format!(
                    "need 0 < mu_min <= mu0 <= mu_max, got {} / {} / {}",
                    d.mu_min, self.mu0, d.mu_max
                )));
            }
        }
        Ok(())
    }

    /// Applies `key = value` lines on top of `self`. Blank lines and `#` comments are ignored.
    pub fn apply_kv(mut self, text: &str) -> Result<Self, ConfigError> {
        let mut dynamic = match self.mu_policy {
            MuPolicy::Dynamic(d) => d,
            MuPolicy::Fixed => DynamicMu::default(),
        };
        let mut is_dynamic = matches!(self.mu_policy, MuPolicy::Dynamic(_));

        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let err = |message: String| ConfigError::Parse { line, message };
            let (key, value) = content
                .split_once('=')
                .ok_or_else(|| err(format!("expected 'key = value', got '{content}'")))?;
            let key = key.trim().to_ascii_lowercase().replace('-', "_");
            let value = value.trim();
            let float = || value.parse::<f64>().map_err(|e| err(format!("{key}: {e}")));
            let count = || value.parse::<usize>().map_err(|e| err(format!("{key}: {e}")));
            match key.as_str() {
                "algorithm" | "alg" => self.algorithm = value.parse().map_err(err)?,
                "mu0" => self.mu0 = float()?,
                "mu_policy" => {
                    is_dynamic = match value {
                        "fixed" => false,
                        "dynamic" => true,
                        other => return Err(err(format!("unknown mu_policy '{other}'"))),
                    }
                }
                "beta" => dynamic.beta = float()?,
                "tau" => dynamic.tau = float()?,
                "mu_min" => dynamic.mu_min = float()?,
                "mu_max" => dynamic.mu_max = float()?,
                "eps_out" => self.eps_out = float()?,
                "max_outer" => self.max_outer = count()?,
                "max_inner" => self.max_inner = count()?,
                "eps_in0" => self.eps_in0 = float()?,
                "beta_in" => self.beta_in = float()?,
                "eps_in_floor_factor" => self.eps_in_floor_factor = float()?,
                "linsolve" => self.linsolve = value.parse().map_err(err)?,
                "pcg_threshold" => self.pcg_threshold = Some(count()?),
                "time_limit" => self.time_limit = Some(Duration::from_secs_f64(float()?)),
                other => return Err(err(format!("unknown key '{other}'"))),
            }
        }
        self.mu_policy = if is_dynamic {
            MuPolicy::Dynamic(dynamic)
        } else {
            MuPolicy::Fixed
        };
        self.validate()?;
        Ok(self)
    }
}

/// Initial `(x, y, v)` for a warm-started solve, optionally resuming the inner tolerance
/// schedule where a previous solve left it. `mu` always restarts from `mu0`.
#[derive(Debug, Clone, PartialEq)]
pub struct WarmStart {
    pub x: DVector<f64>,
    pub y: DVector<f64>,
    pub v: DVector<f64>,
    /// Starting inner tolerance, raised to the configured floor if needed.
    pub eps_in: Option<f64>,
}

impl WarmStart {
    /// A warm start that only supplies the iterates.
    pub fn iterates(x: DVector<f64>, y: DVector<f64>, v: DVector<f64>) -> Self {
        Self {
            x,
            y,
            v,
            eps_in: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OuterRecord {
    pub iteration: usize,
    pub r: f64,
    pub s: f64,
    /// `mu` used by this iteration's inner solve.
    pub mu: f64,
    pub eps_in: f64,
    pub inner_iterations: usize,
    pub skips: usize,
    pub inner_hit_cap: bool,
    /// `F_obj(x, y)` after the iteration.
    pub objective: f64,
    /// Seconds since the start of the solve.
    pub wall_seconds: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    Converged,
    /// `lambda` is at or above the kill threshold; the zero solution is exact.
    ZeroSolution,
    MaxOuter,
    TimeLimit,
}

#[derive(Debug, Clone)]
pub struct SolveReport {
    pub algorithm: Algorithm,
    pub x: DVector<f64>,
    pub y: DVector<f64>,
    pub v: DVector<f64>,
    pub objective: f64,
    pub converged: bool,
    pub stop: StopReason,
    pub trace: Vec<OuterRecord>,
    pub plan_count: usize,
    pub wall_seconds: f64,
    /// Inner tolerance the next outer iteration would have used.
    pub next_eps_in: Option<f64>,
}

impl SolveReport {
    pub fn outer_iterations(&self) -> usize {
        self.trace.len()
    }

    pub fn total_inner_iterations(&self) -> usize {
        self.trace.iter().map(|t| t.inner_iterations).sum()
    }

    pub fn avg_inner_iterations(&self) -> f64 {
        if self.trace.is_empty() {
            0.0
        } else {
            self.total_inner_iterations() as f64 / self.trace.len() as f64
        }
    }

    /// Warm start carrying the final iterates and schedules.
    pub fn warm_start(&self) -> WarmStart {
        WarmStart {
            x: self.x.clone(),
            y: self.y.clone(),
            v: self.v.clone(),
            eps_in: self.next_eps_in,
        }
    }
}

#[derive(Debug, Error)]
pub enum OuterError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("{source} (after {} outer iterations)", partial.len())]
    Inner {
        #[source]
        source: SolveError,
        partial: Vec<OuterRecord>,
    },
}

impl From<SolveError> for OuterError {
    fn from(source: SolveError) -> Self {
        OuterError::Inner {
            source,
            partial: Vec::new(),
        }
    }
}

pub fn solve(problem: &Problem, config: &OuterConfig) -> Result<SolveReport, OuterError> {
    solve_from(problem, config, None)
}

pub fn solve_from(
    problem: &Problem,
    config: &OuterConfig,
    warm: Option<&WarmStart>,
) -> Result<SolveReport, OuterError> {
    config.validate()?;
    let started = Instant::now();
    let m = problem.num_features();
    let big_m = problem.groups().replicated_len();
    let map = problem.map();

    let (mut x, mut y, mut v) = match warm {
        Some(w) => {
            for (got, expected) in [(w.x.len(), m), (w.y.len(), big_m), (w.v.len(), big_m)] {
                if got != expected {
                    return Err(ModelError::DimensionMismatch { expected, got }.into());
                }
            }
            (w.x.clone(), w.y.clone(), w.v.clone())
        }
        None => (DVector::zeros(m), DVector::zeros(big_m), DVector::zeros(big_m)),
    };

    if config.detect_zero_solution && problem.lambda() >= problem.zero_solution_lambda() {
        return Ok(zero_solution_report(problem, config.algorithm, started));
    }

    let mut ctx = SplitContext::new(problem)?;
    if let Some(threshold) = config.pcg_threshold {
        ctx = ctx.with_pcg_threshold(threshold);
    }
    let mut primary = ctx.cache(config.linsolve);
    let mut joint = ctx.cache(config.linsolve);
    let mut observer = |_: &crate::inner::InnerIterate<'_>| {};

    let eps_in_floor = config.eps_in_floor_factor * config.eps_out;
    let mut mu = config.mu0;
    let mut eps_in = match warm.and_then(|w| w.eps_in) {
        Some(resume) if resume.is_finite() && resume > 0.0 => resume.max(eps_in_floor),
        _ => config.eps_in0,
    };
    let mut trace = Vec::new();
    let mut stop = StopReason::MaxOuter;

    for l in 0..config.max_outer {
        let pcg = PcgSettings::for_inner_tolerance(eps_in);
        primary.set_pcg_settings(pcg);
        joint.set_pcg_settings(pcg);
        let input = InnerInput {
            x0: &x,
            y0: &y,
            v: &v,
            mu,
            eps_in,
            max_inner: config.max_inner,
        };
        let opts = &config.inner;
        let result = match config.algorithm {
            Algorithm::Adal => adal_step(&ctx, &input, &mut primary),
            Algorithm::AplmS => aplms(&ctx, &input, opts, &mut primary, &mut joint, &mut observer),
            Algorithm::IstaP => istap(&ctx, &input, opts, &mut primary, &mut observer),
            Algorithm::FistaP => fistap(&ctx, &input, opts, &mut primary, &mut observer),
            Algorithm::Fista => fista(&ctx, &input, opts, &mut observer),
        };
        let inner = match result {
            Ok(inner) => inner,
            Err(source) => return Err(OuterError::Inner { source, partial: trace }),
        };

        let (r, s) = outer_residuals(map, config.algorithm, &inner, &y);
        let mut gap = map.c(&inner.x);
        gap -= &inner.y;
        v.axpy(-1.0 / mu, &gap, 1.0);
        x = inner.x;
        y = inner.y;

        trace.push(OuterRecord {
            iteration: l,
            r,
            s,
            mu,
            eps_in,
            inner_iterations: inner.iterations,
            skips: inner.skips,
            inner_hit_cap: inner.hit_cap,
            objective: problem.loss_unchecked(&x) + problem.penalty_unchecked(&y),
            wall_seconds: started.elapsed().as_secs_f64(),
        });

        if r.max(s) <= config.eps_out {
            stop = StopReason::Converged;
            break;
        }
        if config.time_limit.is_some_and(|limit| started.elapsed() >= limit) {
            stop = StopReason::TimeLimit;
            break;
        }
        mu = update_mu(mu, r, s, &config.mu_policy);
        eps_in = (config.beta_in * eps_in).max(eps_in_floor);
    }

    Ok(SolveReport {
        algorithm: config.algorithm,
        objective: problem.loss_unchecked(&x) + problem.penalty_unchecked(&y),
        x,
        y,
        v,
        converged: stop == StopReason::Converged,
        stop,
        trace,
        plan_count: primary.plan_count() + joint.plan_count(),
        wall_seconds: started.elapsed().as_secs_f64(),
        next_eps_in: Some(eps_in),
    })
}

// x = 0, y = 0 with the multiplier certificate C^T v = -A^T b split evenly over copies.
fn zero_solution_report(problem: &Problem, algorithm: Algorithm, started: Instant) -> SolveReport {
    let map = problem.map();
    let atb = problem.a().tr_mul(problem.b());
    let mult = map.multiplicity();
    let v = DVector::from_iterator(
        map.replicated_len(),
        map.row_to_col().iter().map(|&j| -atb[j] / mult[j] as f64),
    );
    let objective = 0.5 * problem.b().norm_squared();
    SolveReport {
        algorithm,
        x: DVector::zeros(problem.num_features()),
        y: DVector::zeros(map.replicated_len()),
        v,
        objective,
        converged: true,
        stop: StopReason::ZeroSolution,
        trace: Vec::new(),
        plan_count: 0,
        wall_seconds: started.elapsed().as_secs_f64(),
        next_eps_in: None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{GroupStructure, Penalty};
    use nalgebra::DMatrix;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn problem(seed: u64, penalty: Penalty, lambda: f64) -> Problem {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let groups = vec![vec![0, 1, 2, 3], vec![2, 3, 4, 5], vec![5, 6, 7], vec![7, 8, 9]];
        let gs = GroupStructure::new(groups, 10).unwrap();
        let a = DMatrix::from_fn(20, 10, |_, _| rng.random_range(-1.0..1.0));
        let b = DVector::from_fn(20, |_, _| rng.random_range(-2.0..2.0));
        Problem::new(a, b, lambda, penalty, gs).unwrap()
    }

    #[test]
    fn update_mu_branches() {
        let dynamic = MuPolicy::dynamic();
        assert_eq!(update_mu(0.01, 1.0, 1.0, &dynamic), 0.01);
        assert!((update_mu(0.01, 100.0, 1.0, &dynamic) - 0.005).abs() < 1e-18);
        assert_eq!(update_mu(0.01, 1.0, 100.0, &dynamic), 0.02);
        assert_eq!(update_mu(10.0, 1.0, 100.0, &dynamic), 10.0);
        assert_eq!(update_mu(1e-6, 100.0, 1.0, &dynamic), 1e-6);
        assert_eq!(update_mu(0.3, 100.0, 1.0, &MuPolicy::Fixed), 0.3);
    }

    #[test]
    fn residual_edge_cases() {
        let gs = GroupStructure::new(vec![vec![0, 1], vec![1, 2]], 3).unwrap();
        let map = gs.map();
        let x = DVector::from_vec(vec![1.0, -2.0, 3.0]);
        let y = map.c(&x);
        assert_eq!(primal_residual(map, &x, &y), 0.0);
        assert_eq!(consecutive_dual_residual(map, &y, &y), 0.0);
    }

    #[test]
    fn config_kv_round() {
        let cfg = OuterConfig::default_for(Algorithm::Adal)
            .apply_kv("# comment\nalgorithm = fista-p\nmu_policy = fixed\nmu0 = 0.05\nmax_outer=40\n")
            .unwrap();
        assert_eq!(cfg.algorithm, Algorithm::FistaP);
        assert_eq!(cfg.mu_policy, MuPolicy::Fixed);
        assert_eq!(cfg.mu0, 0.05);
        assert_eq!(cfg.max_outer, 40);

        let cfg = OuterConfig::default().apply_kv("mu_policy = dynamic\nbeta = 0.1").unwrap();
        assert_eq!(cfg.mu_policy, MuPolicy::Dynamic(DynamicMu { beta: 0.1, ..DynamicMu::default() }));

        match OuterConfig::default().apply_kv("mu0 = 0.1\nbogus = 3") {
            Err(ConfigError::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("unexpected {other:?}"),
        }
        assert!(OuterConfig::default().apply_kv("beta = 1.5").is_err());
        assert!(OuterConfig::default().apply_kv("mu0 = 20").is_err());
    }

    #[test]
    fn zero_solution_shortcut_is_exact() {
        let p = problem(1, Penalty::L1L2, 1.0);
        let p = p.with_lambda(p.zero_solution_lambda() * 1.01).unwrap();
        let rep = solve(&p, &OuterConfig::default()).unwrap();
        assert_eq!(rep.stop, StopReason::ZeroSolution);
        assert_eq!(rep.objective, 0.5 * p.b().norm_squared());
        // the multiplier certifies stationarity in x: A^T(Ax - b) = C^T v at x = 0
        let ctv = p.map().apply_ct(&rep.v).unwrap();
        let atb = p.a().tr_mul(p.b());
        assert!((ctv + atb).norm() < 1e-12);
    }

    #[test]
    fn huge_lambda_iterates_towards_zero_solution() {
        let p = problem(2, Penalty::L1L2, 1.0);
        let p = p.with_lambda(p.zero_solution_lambda() * 2.0).unwrap();
        let mut cfg = OuterConfig::default_for(Algorithm::Adal);
        cfg.detect_zero_solution = false;
        let rep = solve(&p, &cfg).unwrap();
        assert_eq!(rep.y, DVector::zeros(rep.y.len()));
        let target = 0.5 * p.b().norm_squared();
        assert!((rep.objective - target).abs() <= 1e-6 * target);
    }

    #[test]
    fn fixed_mu_plans_once_and_dynamic_replans_per_change() {
        let p = problem(3, Penalty::L1L2, 0.5);
        let fixed = OuterConfig::default_for(Algorithm::Adal).with_mu_policy(MuPolicy::Fixed);
        let rep = solve(&p, &fixed).unwrap();
        assert_eq!(rep.plan_count, 1);

        let rep = solve(&p, &OuterConfig::default_for(Algorithm::Adal)).unwrap();
        let changes = rep.trace.windows(2).filter(|w| w[0].mu != w[1].mu).count();
        assert_eq!(rep.plan_count, 1 + changes);
    }

    #[test]
    fn multiplier_and_tolerance_schedules() {
        let p = problem(4, Penalty::L1Inf, 0.5);
        let cfg = OuterConfig::default_for(Algorithm::FistaP);
        let rep = solve(&p, &cfg).unwrap();
        assert!(rep.converged);
        for w in rep.trace.windows(2) {
            assert!(w[1].eps_in <= w[0].eps_in);
            assert!(w[1].wall_seconds >= w[0].wall_seconds);
        }
        for t in &rep.trace {
            assert!(t.eps_in >= 0.2 * cfg.eps_out);
            assert!((1e-6..=10.0).contains(&t.mu));
        }
        let last = rep.trace.last().unwrap();
        assert!(last.r.max(last.s) <= cfg.eps_out);
    }

    #[test]
    fn warm_start_resumes_inner_tolerance() {
        let p = problem(5, Penalty::L1L2, 0.5);
        let cfg = OuterConfig::default();
        let cold = solve(&p, &cfg).unwrap();
        let warm = cold.warm_start();
        assert_eq!(warm.eps_in, cold.next_eps_in);
        let rep = solve_from(&p, &cfg, Some(&warm)).unwrap();
        assert_eq!(rep.trace[0].eps_in, warm.eps_in.unwrap());
        assert_eq!(rep.trace[0].mu, cfg.mu0);

        let mut tiny = warm.clone();
        tiny.eps_in = Some(1e-30);
        let rep = solve_from(&p, &cfg, Some(&tiny)).unwrap();
        assert_eq!(rep.trace[0].eps_in, cfg.eps_in_floor_factor * cfg.eps_out);

        let plain = WarmStart::iterates(warm.x, warm.y, warm.v);
        let rep = solve_from(&p, &cfg, Some(&plain)).unwrap();
        assert_eq!(rep.trace[0].eps_in, cfg.eps_in0);
    }

    #[test]
    fn invalid_warm_start_is_rejected() {
        let p = problem(5, Penalty::L1L2, 0.5);
        let big_m = p.groups().replicated_len();
        let warm = WarmStart::iterates(DVector::zeros(3), DVector::zeros(big_m), DVector::zeros(big_m));
        assert!(matches!(
            solve_from(&p, &OuterConfig::default(), Some(&warm)),
            Err(OuterError::Model(_))
        ));
    }
}
