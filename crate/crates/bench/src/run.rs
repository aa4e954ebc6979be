//! The work behind each command, callable without going through the CLI.

use std::fs;
use std::path::Path;
use std::time::Instant;

use nalgebra::DVector;
use ogl_core::datagen::Lambda;
use ogl_core::io::{save_dataset, write_vector_bin, write_vector_text, Dataset};
use ogl_core::{solve, solve_from, OuterConfig, Penalty, Problem, SolveReport};
use rayon::prelude::*;
use rayon::ThreadPool;
use serde::{Deserialize, Serialize};

use crate::error::BenchError;
use crate::manifest::{DataSource, RunManifest};
use crate::trace::{from_outer, write_trace_file};

/// Entries below this magnitude count as zero when reporting sparsity.
pub const DEFAULT_TRUNCATION: f64 = 1e-6;

pub const THREADS_ENV: &str = "OGL_THREADS";

pub const SUMMARY_FILE: &str = "summary.json";
pub const TRACE_FILE: &str = "trace.csv";
pub const X_FILE: &str = "x.bin";
pub const Y_FILE: &str = "y.bin";

/// One row of results, mirroring the usual CPU / iterations / objective table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub dataset: String,
    pub algorithm: String,
    pub penalty: String,
    pub mu_policy: String,
    pub lambda: f64,
    pub samples: usize,
    pub features: usize,
    pub groups: usize,
    pub cpu_seconds: f64,
    pub outer_iterations: usize,
    pub avg_inner_iterations: f64,
    pub total_inner_iterations: usize,
    /// `F(x, y)` at the returned pair.
    pub objective: f64,
    /// `F(x)` with the penalty evaluated on `Cx`.
    pub objective_x: f64,
    pub active_groups: usize,
    pub converged: bool,
    pub stop: String,
}

#[derive(Debug, Clone)]
pub struct Solved {
    pub summary: Summary,
    pub report: SolveReport,
}

/// Number of groups of `y` with norm above `truncation`, after zeroing smaller entries.
pub fn active_groups(problem: &Problem, y: &DVector<f64>, truncation: f64) -> usize {
    let map = problem.map();
    (0..map.num_groups())
        .filter(|&s| {
            let norm_sq: f64 = y.as_slice()[map.group_range(s)]
                .iter()
                .filter(|v| v.abs() >= truncation)
                .map(|v| v * v)
                .sum();
            norm_sq.sqrt() > truncation
        })
        .count()
}

pub fn summarize(dataset: &str, problem: &Problem, report: &SolveReport, config: &OuterConfig) -> Summary {
    Summary {
        dataset: dataset.to_string(),
        algorithm: report.algorithm.to_string(),
        penalty: problem.penalty().to_string(),
        mu_policy: config.mu_policy.name().to_string(),
        lambda: problem.lambda(),
        samples: problem.num_samples(),
        features: problem.num_features(),
        groups: problem.groups().num_groups(),
        cpu_seconds: report.wall_seconds,
        outer_iterations: report.outer_iterations(),
        avg_inner_iterations: report.avg_inner_iterations(),
        total_inner_iterations: report.total_inner_iterations(),
        objective: report.objective,
        objective_x: problem.objective_at(&report.x).unwrap_or(f64::NAN),
        active_groups: active_groups(problem, &report.y, DEFAULT_TRUNCATION),
        converged: report.converged,
        stop: format!("{:?}", report.stop),
    }
}

pub fn solve_problem(dataset: &str, problem: &Problem, config: &OuterConfig) -> Result<Solved, BenchError> {
    let report = solve(problem, config)?;
    let summary = summarize(dataset, problem, &report, config);
    Ok(Solved { summary, report })
}

/// Loads the manifest's problem, solves it and writes artifacts when an output directory is set.
pub fn run_solve(manifest: &RunManifest) -> Result<Solved, BenchError> {
    let problem = manifest.problem()?;
    let solved = solve_problem(&manifest.source.describe(), &problem, &manifest.config)?;
    if let Some(dir) = &manifest.out_dir {
        write_artifacts(dir, &solved)?;
    }
    Ok(solved)
}

/// Writes `summary.json`, `trace.csv`, `x.bin` and `y.bin` into `dir`.
pub fn write_artifacts(dir: &Path, solved: &Solved) -> Result<(), BenchError> {
    fs::create_dir_all(dir).map_err(|e| BenchError::output(dir, e))?;
    write_json(&dir.join(SUMMARY_FILE), &solved.summary)?;
    write_trace_file(&dir.join(TRACE_FILE), &from_outer(&solved.report.trace))?;
    let x_path = dir.join(X_FILE);
    write_vector_bin(&x_path, &solved.report.x).map_err(|e| BenchError::output(&x_path, e))?;
    let y_path = dir.join(Y_FILE);
    write_vector_bin(&y_path, &solved.report.y).map_err(|e| BenchError::output(&y_path, e))
}

pub fn read_summary(path: &Path) -> Result<Summary, BenchError> {
    let text = fs::read_to_string(path).map_err(|e| BenchError::Input(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| BenchError::Input(format!("{}: {e}", path.display())))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), BenchError> {
    let text = serde_json::to_string_pretty(value).map_err(|e| BenchError::output(path, e))?;
    fs::write(path, text + "\n").map_err(|e| BenchError::output(path, e))
}

pub fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<(), BenchError> {
    let mut out = csv::Writer::from_path(path).map_err(|e| BenchError::output(path, e))?;
    for row in rows {
        out.serialize(row).map_err(|e| BenchError::output(path, e))?;
    }
    out.flush().map_err(|e| BenchError::output(path, e))
}

/// Writes a generated dataset plus the signal behind it (`x_true.txt`).
pub fn generate(source: &DataSource, dir: &Path) -> Result<Problem, BenchError> {
    let generated = source.generate(Penalty::L1L2)?;
    let p = &generated.problem;
    let data = Dataset {
        a: p.a().clone(),
        b: p.b().clone(),
        groups: p.groups().clone(),
    };
    save_dataset(dir, &data).map_err(|e| BenchError::output(dir, e))?;
    let truth = dir.join("x_true.txt");
    write_vector_text(&truth, &generated.x_true).map_err(|e| BenchError::output(&truth, e))?;
    Ok(generated.problem)
}

/// Largest pairwise relative gap `|a - b| / max(|a|, |b|)`.
pub fn relative_discrepancy(values: &[f64]) -> f64 {
    let mut worst = 0.0_f64;
    for (i, a) in values.iter().enumerate() {
        for b in &values[i + 1..] {
            let scale = a.abs().max(b.abs());
            if scale > 0.0 {
                worst = worst.max((a - b).abs() / scale);
            }
        }
    }
    worst
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Comparison {
    pub rows: Vec<Summary>,
    /// Compares `F(x)` across rows.
    pub max_discrepancy: f64,
}

impl Comparison {
    pub fn all_converged(&self) -> bool {
        self.rows.iter().all(|r| r.converged)
    }
}

/// Solves one problem once per configuration, one after the other so timings stay comparable.
pub fn compare(dataset: &str, problem: &Problem, configs: &[OuterConfig]) -> Result<Comparison, BenchError> {
    if configs.len() < 2 {
        return Err(BenchError::Input("compare needs at least two algorithms".into()));
    }
    let rows = configs
        .iter()
        .map(|cfg| solve_problem(dataset, problem, cfg).map(|s| s.summary))
        .collect::<Result<Vec<_>, _>>()?;
    let values: Vec<f64> = rows.iter().map(|r| r.objective_x).collect();
    Ok(Comparison {
        max_discrepancy: relative_discrepancy(&values),
        rows,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathPoint {
    pub lambda: f64,
    pub active_groups: usize,
    pub objective_x: f64,
    pub outer_iterations: usize,
    pub total_inner_iterations: usize,
    pub cpu_seconds: f64,
    pub converged: bool,
}

fn path_point(problem: &Problem, report: &SolveReport, truncation: f64) -> PathPoint {
    PathPoint {
        lambda: problem.lambda(),
        active_groups: active_groups(problem, &report.y, truncation),
        objective_x: problem.objective_at(&report.x).unwrap_or(f64::NAN),
        outer_iterations: report.outer_iterations(),
        total_inner_iterations: report.total_inner_iterations(),
        cpu_seconds: report.wall_seconds,
        converged: report.converged,
    }
}

/// Solves along an increasing `lambda` grid from the largest value down, each solve starting
/// from the previous `(x, y, v)`. Points come back in grid order.
pub fn warm_path(
    problem: &Problem,
    config: &OuterConfig,
    grid: &[f64],
    truncation: f64,
) -> Result<Vec<PathPoint>, BenchError> {
    crate::manifest::validate_grid(grid)?;
    let mut points = Vec::with_capacity(grid.len());
    let mut warm = None;
    for &lambda in grid.iter().rev() {
        let p = problem.with_lambda(lambda)?;
        let report = solve_from(&p, config, warm.as_ref())?;
        points.push(path_point(&p, &report, truncation));
        warm = Some(report.warm_start());
    }
    points.reverse();
    Ok(points)
}

/// Independent cold-started solves over the grid, fanned out on `pool`.
pub fn cold_path(
    problem: &Problem,
    config: &OuterConfig,
    grid: &[f64],
    truncation: f64,
    pool: &ThreadPool,
) -> Result<Vec<PathPoint>, BenchError> {
    crate::manifest::validate_grid(grid)?;
    pool.install(|| {
        grid.par_iter()
            .map(|&lambda| {
                let p = problem.with_lambda(lambda)?;
                let report = solve(&p, config)?;
                Ok(path_point(&p, &report, truncation))
            })
            .collect()
    })
}

/// Places where the active-group count grows as `lambda` grows.
pub fn monotonicity_violations(points: &[PathPoint]) -> usize {
    points.windows(2).filter(|w| w[1].active_groups > w[0].active_groups).count()
}

pub fn total_outer_iterations(points: &[PathPoint]) -> usize {
    points.iter().map(|p| p.outer_iterations).sum()
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepCase {
    pub source: DataSource,
    pub config: OuterConfig,
}

/// Runs every case on `pool`, one solve per worker. Results come back in case order.
pub fn sweep(
    cases: &[SweepCase],
    penalty: Penalty,
    lambda: Lambda,
    pool: &ThreadPool,
) -> Result<Vec<Summary>, BenchError> {
    pool.install(|| {
        cases
            .par_iter()
            .map(|case| {
                let problem = case.source.load(penalty, lambda)?;
                solve_problem(&case.source.describe(), &problem, &case.config).map(|s| s.summary)
            })
            .collect()
    })
}

/// A pool sized by `OGL_THREADS`, or by rayon's default when the variable is unset or 0.
pub fn thread_pool() -> Result<ThreadPool, BenchError> {
    let threads = match std::env::var(THREADS_ENV) {
        Ok(raw) => raw
            .trim()
            .parse::<usize>()
            .map_err(|_| BenchError::Input(format!("{THREADS_ENV} must be a non-negative integer, got '{raw}'")))?,
        Err(_) => 0,
    };
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| BenchError::Input(format!("cannot start worker pool: {e}")))
}

/// Wall time of `f` in seconds alongside its result.
pub fn timed<T>(f: impl FnOnce() -> T) -> (T, f64) {
    let start = Instant::now();
    let out = f();
    (out, start.elapsed().as_secs_f64())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn discrepancy_is_the_worst_pair() {
        assert_eq!(relative_discrepancy(&[2.0]), 0.0);
        assert!((relative_discrepancy(&[100.0, 101.0, 99.0]) - 2.0 / 101.0).abs() < 1e-15);
        assert_eq!(relative_discrepancy(&[0.0, 0.0]), 0.0);
    }

    #[test]
    fn violations_count_increases_only() {
        let point = |active| PathPoint {
            lambda: 1.0,
            active_groups: active,
            objective_x: 0.0,
            outer_iterations: 0,
            total_inner_iterations: 0,
            cpu_seconds: 0.0,
            converged: true,
        };
        let pts: Vec<_> = [5, 5, 3, 4, 1, 2].into_iter().map(point).collect();
        assert_eq!(monotonicity_violations(&pts), 2);
    }
}
