//! `pgw`: solve partial Gromov-Wasserstein problems from the command line.
//!
//! Exit codes: 0 converged, 1 usage or I/O error (or an LP failure),
//! 2 iteration limit reached.

use std::fs::File;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use pgw::experiments::{
    flb_pot_init, gen_shapes, run_benchmark, run_pu, write_bench_csv, BenchConfig, PuConfig, PuInit, ShapeConfig,
};
use pgw::io::{read_point_cloud, termination_label, write_json, CorrespondenceJson, ReportJson};
use pgw::{FwConfig, LineSearch, PgwProblem, SolveReport, SolverVariant, Termination};

#[derive(Parser, Debug)]
#[command(name = "pgw", version, about = "Partial Gromov-Wasserstein solvers")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Solve PGW between two point clouds (CSV or JSON).
    Solve(SolveArgs),
    /// Match a 2D square/circle mixture against a 3D cube/sphere mixture.
    MatchShapes(ShapeArgs),
    /// Run the positive-unlabeled learning demo on a synthetic task.
    PuDemo(PuArgs),
    /// Time both solvers over a grid of sizes and penalties.
    Bench(BenchArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Solver {
    V1,
    V2,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Init {
    Product,
    FlbPot,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Toggle {
    On,
    Off,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Step {
    Exact,
    Unit,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

/// Frank-Wolfe settings shared by the solving subcommands.
#[derive(Args, Debug)]
struct FwArgs {
    #[arg(long, value_enum, default_value = "v1")]
    solver: Solver,
    #[arg(long, default_value_t = 1000)]
    max_iters: usize,
    #[arg(long, default_value_t = 1e-5)]
    tol: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value = "on")]
    reduction: Toggle,
}

impl FwArgs {
    fn config(&self, line_search: Step, starts: usize) -> FwConfig {
        FwConfig {
            variant: match self.solver {
                Solver::V1 => SolverVariant::V1,
                Solver::V2 => SolverVariant::V2,
            },
            max_iters: self.max_iters,
            tol: self.tol,
            line_search: match line_search {
                Step::Exact => LineSearch::Exact,
                Step::Unit => LineSearch::FixedUnit,
            },
            reduction: self.reduction == Toggle::On,
            starts,
            seed: self.seed,
            ..FwConfig::default()
        }
    }
}

#[derive(Args, Debug)]
struct SolveArgs {
    source: PathBuf,
    target: PathBuf,
    #[arg(long, default_value_t = 1.0)]
    lambda: f64,
    #[command(flatten)]
    fw: FwArgs,
    #[arg(long, value_enum, default_value = "product")]
    init: Init,
    #[arg(long, value_enum, default_value = "exact")]
    line_search: Step,
    /// Number of Frank-Wolfe starts; the best final value wins.
    #[arg(long, default_value_t = 1)]
    starts: usize,
    /// Cost is `||x - x'||^exponent`.
    #[arg(long, default_value_t = 2.0)]
    exponent: f64,
    #[arg(long)]
    out: Option<PathBuf>,
    /// `json` writes the full report, `csv` the plan as `i,j,mass` rows.
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
}

#[derive(Args, Debug)]
struct ShapeArgs {
    #[arg(long, default_value_t = 1.0)]
    lambda: f64,
    #[command(flatten)]
    fw: FwArgs,
    #[arg(long, value_enum, default_value = "exact")]
    line_search: Step,
    #[arg(long, default_value_t = 10)]
    starts: usize,
    #[arg(long, default_value_t = 60)]
    n_per_shape: usize,
    /// Smallest plan entry reported as a correspondence; default `0.5/(nm)`.
    #[arg(long)]
    threshold: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
}

#[derive(Args, Debug)]
struct PuArgs {
    #[arg(long, default_value_t = 100.0)]
    lambda: f64,
    #[command(flatten)]
    fw: FwArgs,
    #[arg(long, value_enum, default_value = "flb-pot")]
    init: Init,
    #[arg(long, value_enum, default_value = "unit")]
    line_search: Step,
    #[arg(long, default_value_t = 0.2)]
    prior: f64,
    #[arg(long, default_value_t = 100)]
    n_positive: usize,
    #[arg(long, default_value_t = 500)]
    m_unlabeled: usize,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
}

#[derive(Args, Debug)]
struct BenchArgs {
    #[arg(long, value_delimiter = ',', default_values_t = vec![10, 50, 100])]
    sizes: Vec<usize>,
    #[arg(long, value_delimiter = ',', default_values_t = vec![0.2, 1.0, 10.0])]
    lambdas: Vec<f64>,
    #[arg(long, default_value_t = 1000)]
    max_iters: usize,
    #[arg(long, default_value_t = 1e-5)]
    tol: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value = "on")]
    reduction: Toggle,
    /// Run the cells concurrently (timings then interfere with each other).
    #[arg(long)]
    parallel: bool,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "csv")]
    format: Format,
}

fn sink(out: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match out {
        Some(path) => Box::new(File::create(path).with_context(|| format!("{}: cannot create", path.display()))?),
        None => Box::new(io::stdout().lock()),
    })
}

fn emit_json<T: Serialize>(out: Option<&Path>, value: &T) -> Result<()> {
    match out {
        Some(path) => write_json(path, value)?,
        None => {
            let mut w = io::stdout().lock();
            serde_json::to_writer_pretty(&mut w, value)?;
            writeln!(w)?;
        }
    }
    Ok(())
}

fn emit_csv<R: Serialize>(out: Option<&Path>, rows: impl IntoIterator<Item = R>) -> Result<()> {
    let mut w = csv::Writer::from_writer(sink(out)?);
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Serialize)]
struct PlanEntry {
    i: usize,
    j: usize,
    mass: f64,
}

fn exit_for(report: &SolveReport) -> ExitCode {
    match &report.termination {
        Termination::Converged(_) => ExitCode::SUCCESS,
        Termination::IterationLimit => ExitCode::from(2),
        Termination::LpFailure(msg) => {
            eprintln!("error: linear subproblem failed: {msg}");
            ExitCode::from(1)
        }
    }
}

fn cmd_solve(args: &SolveArgs) -> Result<ExitCode> {
    let source = read_point_cloud(&args.source)?.into_space(args.exponent)?;
    let target = read_point_cloud(&args.target)?.into_space(args.exponent)?;
    let config = args.fw.config(args.line_search, args.starts);
    let init = match args.init {
        Init::Product => None,
        Init::FlbPot => Some(flb_pot_init(&source, &target, args.lambda, &config.lp)?),
    };
    let problem = PgwProblem::new(source, target, args.lambda)?;
    let report = pgw::solve(&problem, &config, init.as_ref())?;
    log::info!("{} after {} iterations, value {}", termination_label(&report.termination), report.iterations, report.pgw_value);
    let out = args.out.as_deref();
    match args.format {
        Format::Json => emit_json(out, &ReportJson::new(&report, args.fw.seed))?,
        Format::Csv => {
            let rows = report.plan.triples_above(0.0).into_iter().map(|(i, j, mass)| PlanEntry { i, j, mass });
            emit_csv(out, rows)?
        }
    }
    Ok(exit_for(&report))
}

#[derive(Serialize)]
struct ShapeSummary {
    #[serde(flatten)]
    correspondences: CorrespondenceJson,
    component_flow: [[f64; 2]; 2],
    mass_threshold: f64,
    termination: String,
    iterations: usize,
}

fn cmd_match_shapes(args: &ShapeArgs) -> Result<ExitCode> {
    let shapes = ShapeConfig { n_per_shape: args.n_per_shape, seed: args.fw.seed, ..ShapeConfig::default() };
    let pair = gen_shapes(&shapes)?;
    let config = args.fw.config(args.line_search, args.starts);
    let result = pgw::experiments::match_shapes(&pair, args.lambda, &config, args.threshold)?;
    for (a, dom) in result.dominant_targets().iter().enumerate() {
        if let Some((b, share)) = dom {
            log::info!("2D component {a} sends {:.1}% of its mass to 3D component {b}", 100.0 * share);
        }
    }
    let out = args.out.as_deref();
    match args.format {
        Format::Json => emit_json(
            out,
            &ShapeSummary {
                correspondences: CorrespondenceJson {
                    pairs: result.pairs.clone(),
                    pgw_value: result.pgw_value,
                    seed: result.seed,
                },
                component_flow: result.component_flow,
                mass_threshold: result.mass_threshold,
                termination: termination_label(&result.report.termination),
                iterations: result.report.iterations,
            },
        )?,
        Format::Csv => emit_csv(out, result.pairs.iter().map(|&(i, j, mass)| PlanEntry { i, j, mass }))?,
    }
    Ok(exit_for(&result.report))
}

#[derive(Serialize)]
struct PuSummary {
    accuracy: f64,
    seed: u64,
    lambda: f64,
    prior: f64,
    transported_mass: f64,
    iterations: usize,
    termination: String,
}

#[derive(Serialize)]
struct PuLabel {
    index: usize,
    positive: bool,
}

fn cmd_pu_demo(args: &PuArgs) -> Result<ExitCode> {
    let config = PuConfig {
        n_positive: args.n_positive,
        m_unlabeled: args.m_unlabeled,
        pi: args.prior,
        init: match args.init {
            Init::Product => PuInit::Product,
            Init::FlbPot => PuInit::FlbPot,
        },
        lambda: args.lambda,
        seed: args.fw.seed,
        ..PuConfig::default()
    };
    let outcome = run_pu(&config, &args.fw.config(args.line_search, 1))?;
    log::info!("accuracy {:.4}", outcome.accuracy);
    let out = args.out.as_deref();
    match args.format {
        Format::Json => emit_json(
            out,
            &PuSummary {
                accuracy: outcome.accuracy,
                seed: outcome.seed,
                lambda: args.lambda,
                prior: args.prior,
                transported_mass: outcome.report.transported_mass,
                iterations: outcome.report.iterations,
                termination: termination_label(&outcome.report.termination),
            },
        )?,
        Format::Csv => emit_csv(
            out,
            outcome.predicted.iter().enumerate().map(|(index, &positive)| PuLabel { index, positive }),
        )?,
    }
    Ok(exit_for(&outcome.report))
}

fn cmd_bench(args: &BenchArgs) -> Result<ExitCode> {
    let config = BenchConfig {
        sizes: args.sizes.clone(),
        lambdas: args.lambdas.clone(),
        fw: FwConfig {
            max_iters: args.max_iters,
            tol: args.tol,
            reduction: args.reduction == Toggle::On,
            seed: args.seed,
            ..FwConfig::default()
        },
        seed: args.seed,
        parallel: args.parallel,
    };
    let rows = run_benchmark(&config)?;
    let out = args.out.as_deref();
    match args.format {
        Format::Csv => write_bench_csv(&rows, sink(out)?)?,
        Format::Json => emit_json(out, &rows)?,
    }
    Ok(ExitCode::SUCCESS)
}

fn configure_threads() -> Result<()> {
    let Ok(raw) = std::env::var("PGW_NUM_THREADS") else {
        return Ok(());
    };
    let threads: usize = raw.trim().parse().with_context(|| format!("PGW_NUM_THREADS={raw:?} is not a number"))?;
    rayon::ThreadPoolBuilder::new().num_threads(threads).build_global()?;
    Ok(())
}

fn run(cli: Cli) -> Result<ExitCode> {
    configure_threads()?;
    match &cli.command {
        Command::Solve(a) => cmd_solve(a),
        Command::MatchShapes(a) => cmd_match_shapes(a),
        Command::PuDemo(a) => cmd_pu_demo(a),
        Command::Bench(a) => cmd_bench(a),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
