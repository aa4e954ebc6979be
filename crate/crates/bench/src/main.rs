use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Duration;

use clap::{Args, Parser, Subcommand, ValueEnum};
use ogl_core::datagen::Lambda;
use ogl_core::outer::DynamicMu;
use ogl_core::{Algorithm, LinsolveMode, MuPolicy, OuterConfig, Penalty};
use ogl_bench::error::{BenchError, EXIT_NOT_CONVERGED, EXIT_OK};
use ogl_bench::manifest::{DataSource, RunManifest};
use ogl_bench::run::{self, SweepCase, DEFAULT_TRUNCATION};

#[derive(Parser)]
#[command(name = "ogl", version, about = "Overlapping group lasso solvers and benchmarks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic dataset directory.
    Gen(GenArgs),
    /// Solve one problem and write summary.json, trace.csv, x.bin and y.bin.
    Solve(SolveArgs),
    /// Solve one problem with several algorithms and report their disagreement.
    Compare(CompareArgs),
    /// Solve along a lambda grid, warm-starting from the largest value.
    Path(PathArgs),
    /// Solve generated problems of increasing size with several algorithms.
    Sweep(SweepArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum GenKind {
    Ogl,
    Dct,
}

#[derive(Clone, Copy, ValueEnum)]
enum PolicyArg {
    Fixed,
    Dynamic,
}

#[derive(Clone, Copy, ValueEnum)]
enum LinsolveArg {
    Auto,
    Direct,
    Pcg,
}

#[derive(Args)]
struct SizeArgs {
    /// Number of samples.
    #[arg(long, default_value_t = 200)]
    n: usize,
    /// Number of groups (ogl).
    #[arg(short = 'J', long = "groups", default_value_t = 20)]
    groups: usize,
    /// Number of features (dct).
    #[arg(long, default_value_t = 1000)]
    m: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct DataArgs {
    /// Dataset directory with A.bin or A.csv, b.txt and groups.txt.
    #[arg(long, conflicts_with = "gen")]
    data: Option<PathBuf>,
    /// Generate the problem instead of reading it.
    #[arg(long, value_enum)]
    gen: Option<GenKind>,
    #[command(flatten)]
    size: SizeArgs,
}

impl DataArgs {
    fn source(&self) -> Result<DataSource, BenchError> {
        match (&self.data, self.gen) {
            (Some(dir), None) => Ok(DataSource::Dir(dir.clone())),
            (None, Some(kind)) => Ok(synthetic(kind, &self.size, None)),
            _ => Err(BenchError::Input("give exactly one of --data DIR or --gen ogl|dct".into())),
        }
    }
}

fn synthetic(kind: GenKind, size: &SizeArgs, scale: Option<usize>) -> DataSource {
    match kind {
        GenKind::Ogl => DataSource::Ogl {
            n: size.n,
            groups: scale.unwrap_or(size.groups),
            seed: size.seed,
        },
        GenKind::Dct => DataSource::Dct {
            n: size.n,
            m: scale.unwrap_or(size.m),
            seed: size.seed,
        },
    }
}

#[derive(Args)]
struct SolverArgs {
    #[arg(long, default_value = "l12", value_parser = parse_penalty)]
    penalty: Penalty,
    /// Absolute regularization weight.
    #[arg(long, conflicts_with = "lambda_rel")]
    lambda: Option<f64>,
    /// Regularization weight as a fraction of the smallest weight giving x = 0.
    #[arg(long)]
    lambda_rel: Option<f64>,
    #[arg(long)]
    mu0: Option<f64>,
    #[arg(long, value_enum)]
    mu_policy: Option<PolicyArg>,
    /// Shrink factor of the dynamic mu rule.
    #[arg(long)]
    beta: Option<f64>,
    /// Residual ratio that triggers a dynamic mu change.
    #[arg(long)]
    tau: Option<f64>,
    #[arg(long)]
    eps_out: Option<f64>,
    #[arg(long)]
    max_outer: Option<usize>,
    #[arg(long)]
    max_inner: Option<usize>,
    #[arg(long, value_enum)]
    linsolve: Option<LinsolveArg>,
    /// Stop after the outer iteration that crosses this many seconds.
    #[arg(long)]
    time_limit: Option<f64>,
    /// File of `key = value` solver settings applied before the flags above.
    #[arg(long)]
    config: Option<PathBuf>,
}

impl SolverArgs {
    fn lambda(&self) -> Lambda {
        match (self.lambda, self.lambda_rel) {
            (Some(l), _) => Lambda::Absolute(l),
            (None, Some(f)) => Lambda::Relative(f),
            (None, None) => Lambda::default(),
        }
    }

    fn config(&self, algorithm: Algorithm) -> Result<OuterConfig, BenchError> {
        let mut cfg = OuterConfig::default_for(algorithm);
        if let Some(path) = &self.config {
            let text = std::fs::read_to_string(path)
                .map_err(|e| BenchError::Input(format!("{}: {e}", path.display())))?;
            cfg = cfg.apply_kv(&text)?;
            cfg.algorithm = algorithm;
        }
        if let Some(mu0) = self.mu0 {
            cfg.mu0 = mu0;
        }
        let mut dynamic = match cfg.mu_policy {
            MuPolicy::Dynamic(d) => d,
            MuPolicy::Fixed => DynamicMu::default(),
        };
        if let Some(beta) = self.beta {
            dynamic.beta = beta;
        }
        if let Some(tau) = self.tau {
            dynamic.tau = tau;
        }
        cfg.mu_policy = match (self.mu_policy, cfg.mu_policy) {
            (Some(PolicyArg::Fixed), _) | (None, MuPolicy::Fixed) => MuPolicy::Fixed,
            _ => MuPolicy::Dynamic(dynamic),
        };
        if let Some(eps) = self.eps_out {
            cfg.eps_out = eps;
        }
        if let Some(cap) = self.max_outer {
            cfg.max_outer = cap;
        }
        if let Some(cap) = self.max_inner {
            cfg.max_inner = cap;
        }
        if let Some(mode) = self.linsolve {
            cfg.linsolve = match mode {
                LinsolveArg::Auto => LinsolveMode::Auto,
                LinsolveArg::Direct => LinsolveMode::Direct,
                LinsolveArg::Pcg => LinsolveMode::Pcg,
            };
        }
        if let Some(limit) = self.time_limit {
            if !(limit >= 0.0 && limit.is_finite()) {
                return Err(BenchError::Input(format!("--time-limit must be non-negative, got {limit}")));
            }
            cfg.time_limit = Some(Duration::from_secs_f64(limit));
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn parse_penalty(s: &str) -> Result<Penalty, String> {
    s.parse()
}

fn parse_algorithm(s: &str) -> Result<Algorithm, String> {
    s.parse()
}

#[derive(Args)]
struct GenArgs {
    #[arg(value_enum)]
    kind: GenKind,
    #[command(flatten)]
    size: SizeArgs,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct SolveArgs {
    #[arg(long, default_value = "fista-p", value_parser = parse_algorithm)]
    alg: Algorithm,
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    solver: SolverArgs,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct CompareArgs {
    /// Comma-separated algorithms; at least two.
    #[arg(long = "alg", value_delimiter = ',', default_value = "adal,aplm-s,ista-p,fista-p,fista", value_parser = parse_algorithm)]
    algs: Vec<Algorithm>,
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    solver: SolverArgs,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct PathArgs {
    #[arg(long, default_value = "fista-p", value_parser = parse_algorithm)]
    alg: Algorithm,
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    solver: SolverArgs,
    /// Increasing lambda grid, comma-separated.
    #[arg(long, value_delimiter = ',', required = true)]
    grid: Vec<f64>,
    /// Read the grid as fractions of the smallest weight giving x = 0.
    #[arg(long)]
    relative: bool,
    /// Also run every grid point from a cold start for comparison.
    #[arg(long)]
    cold: bool,
    /// Entries below this magnitude count as zero when counting active groups.
    #[arg(long, default_value_t = DEFAULT_TRUNCATION)]
    truncate: f64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long, value_enum, default_value = "dct")]
    gen: GenKind,
    /// Problem sizes: features for dct, groups for ogl.
    #[arg(long, value_delimiter = ',', default_value = "1000,2000,4000")]
    sizes: Vec<usize>,
    #[arg(long = "alg", value_delimiter = ',', default_value = "adal,fista-p,fista", value_parser = parse_algorithm)]
    algs: Vec<Algorithm>,
    #[command(flatten)]
    size: SizeArgs,
    #[command(flatten)]
    solver: SolverArgs,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.exit_code())
        }
    }
}

fn dispatch(command: Command) -> Result<u8, BenchError> {
    match command {
        Command::Gen(args) => {
            let source = synthetic(args.kind, &args.size, None);
            let p = run::generate(&source, &args.out)?;
            println!(
                "wrote {} ({} x {}, {} groups) to {}",
                source.describe(),
                p.num_samples(),
                p.num_features(),
                p.groups().num_groups(),
                args.out.display()
            );
            Ok(EXIT_OK)
        }
        Command::Solve(args) => {
            let mut manifest = RunManifest::new(args.data.source()?, args.solver.config(args.alg)?);
            manifest.penalty = args.solver.penalty;
            manifest.lambda = args.solver.lambda();
            manifest.out_dir = args.out;
            let solved = run::run_solve(&manifest)?;
            let line = serde_json::to_string(&solved.summary).expect("summary serializes");
            println!("{line}");
            Ok(status(solved.summary.converged))
        }
        Command::Compare(args) => {
            if args.algs.len() < 2 {
                return Err(BenchError::Input("compare needs at least two algorithms".into()));
            }
            let source = args.data.source()?;
            let problem = source.load(args.solver.penalty, args.solver.lambda())?;
            let configs = args
                .algs
                .iter()
                .map(|&alg| args.solver.config(alg))
                .collect::<Result<Vec<_>, _>>()?;
            let cmp = run::compare(&source.describe(), &problem, &configs)?;
            println!("{:<8} {:>10} {:>6} {:>10} {:>16} {:>9}", "alg", "cpu_s", "iters", "avg_sub", "F(x)", "converged");
            for row in &cmp.rows {
                println!(
                    "{:<8} {:>10.3e} {:>6} {:>10.2} {:>16.8e} {:>9}",
                    row.algorithm, row.cpu_seconds, row.outer_iterations, row.avg_inner_iterations, row.objective_x, row.converged
                );
            }
            println!("max relative discrepancy: {:.3e}", cmp.max_discrepancy);
            if let Some(dir) = &args.out {
                std::fs::create_dir_all(dir).map_err(|e| BenchError::Output {
                    path: dir.clone(),
                    message: e.to_string(),
                })?;
                run::write_csv(&dir.join("compare.csv"), &cmp.rows)?;
                run::write_json(&dir.join("compare.json"), &cmp)?;
            }
            Ok(status(cmp.all_converged()))
        }
        Command::Path(args) => {
            let source = args.data.source()?;
            let lambda = args.solver.lambda();
            let problem = source.load(args.solver.penalty, lambda)?;
            let cfg = args.solver.config(args.alg)?;
            let grid: Vec<f64> = if args.relative {
                let top = problem.zero_solution_lambda();
                args.grid.iter().map(|f| f * top).collect()
            } else {
                args.grid.clone()
            };
            let warm = run::warm_path(&problem, &cfg, &grid, args.truncate)?;
            println!("{:>14} {:>7} {:>16} {:>6} {:>9}", "lambda", "active", "F(x)", "iters", "converged");
            for p in &warm {
                println!(
                    "{:>14.6e} {:>7} {:>16.8e} {:>6} {:>9}",
                    p.lambda, p.active_groups, p.objective_x, p.outer_iterations, p.converged
                );
            }
            println!("warm-start outer iterations: {}", run::total_outer_iterations(&warm));
            let cold = if args.cold {
                let pool = run::thread_pool()?;
                let cold = run::cold_path(&problem, &cfg, &grid, args.truncate, &pool)?;
                println!("cold-start outer iterations: {}", run::total_outer_iterations(&cold));
                Some(cold)
            } else {
                None
            };
            if let Some(dir) = &args.out {
                std::fs::create_dir_all(dir).map_err(|e| BenchError::Output {
                    path: dir.clone(),
                    message: e.to_string(),
                })?;
                run::write_csv(&dir.join("path.csv"), &warm)?;
                if let Some(cold) = &cold {
                    run::write_csv(&dir.join("path_cold.csv"), cold)?;
                }
            }
            let converged = warm.iter().chain(cold.iter().flatten()).all(|p| p.converged);
            Ok(status(converged))
        }
        Command::Sweep(args) => {
            let mut cases = Vec::new();
            for &size in &args.sizes {
                for &alg in &args.algs {
                    cases.push(SweepCase {
                        source: synthetic(args.gen, &args.size, Some(size)),
                        config: args.solver.config(alg)?,
                    });
                }
            }
            let pool = run::thread_pool()?;
            let rows = run::sweep(&cases, args.solver.penalty, args.solver.lambda(), &pool)?;
            println!("{:<24} {:<8} {:>10} {:>6} {:>10} {:>16}", "dataset", "alg", "cpu_s", "iters", "avg_sub", "F(x)");
            for row in &rows {
                println!(
                    "{:<24} {:<8} {:>10.3e} {:>6} {:>10.2} {:>16.8e}",
                    row.dataset, row.algorithm, row.cpu_seconds, row.outer_iterations, row.avg_inner_iterations, row.objective_x
                );
            }
            if let Some(dir) = &args.out {
                std::fs::create_dir_all(dir).map_err(|e| BenchError::Output {
                    path: dir.clone(),
                    message: e.to_string(),
                })?;
                run::write_csv(&dir.join("sweep.csv"), &rows)?;
            }
            Ok(status(rows.iter().all(|r| r.converged)))
        }
    }
}

fn status(converged: bool) -> u8 {
    if converged {
        EXIT_OK
    } else {
        EXIT_NOT_CONVERGED
    }
}
