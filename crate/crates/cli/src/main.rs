//! Command-line front end: instance generation, single solves, the
//! strategy-comparison experiment grid, trace export and result summaries.
//!
//! Exit codes: 0 success, 2 validation error, 3 infeasible, 4 I/O error.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use aot_mec::experiment::{
    self, aggregate_cells, compare_summary, read_per_seed_csv, run_experiment, ExperimentConfig,
    ExperimentError, SeedSpec,
};
use aot_mec::greedy::HeuristicError;
use aot_mec::model::{
    generate_instance, validate_instance, GenerationConfig, Instance, InstanceIoError,
};
use aot_mec::oracle::{DelayObjective, SolveError, SolveOptions};
use aot_mec::strategy::{run_strategy, Strategy, StrategyError};

#[derive(Parser)]
#[command(
    name = "aot-mec",
    version,
    about = "Age-of-task scheduling and computation offloading simulator for a single-server MEC system"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a random instance and write it as a key-value text file.
    Gen(GenArgs),
    /// Run one strategy on one instance and print its objectives.
    Solve(SolveArgs),
    /// Run the (seed x energy budget x strategy) comparison grid.
    Experiment(ExperimentArgs),
    /// Export per-slot age traces and the schedule of one strategy as CSV.
    Trace(TraceArgs),
    /// Recompute aggregate statistics from an experiment's per-seed CSV.
    Summary(SummaryArgs),
}

/// Flags resolving one instance: either a seeded generation or a file.
#[derive(Args)]
struct InstanceArgs {
    /// Seed for the instance generator (default 1).
    #[arg(long)]
    seed: Option<u64>,
    /// Read the instance from a file instead of generating one.
    #[arg(long, value_name = "FILE")]
    instance: Option<PathBuf>,
    /// Energy budget override in joules.
    #[arg(long)]
    emax: Option<f64>,
    /// Scheduling horizon in slots (generated instances only).
    #[arg(long)]
    horizon: Option<usize>,
    /// Number of applications (generated instances only).
    #[arg(long)]
    apps: Option<usize>,
    /// Tasks per application (generated instances only).
    #[arg(long)]
    tasks: Option<usize>,
}

impl InstanceArgs {
    fn load(&self) -> Result<Instance, CliError> {
        let mut inst = match &self.instance {
            Some(path) => {
                let text = std::fs::read_to_string(path)
                    .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
                Instance::from_kv_str(&text).map_err(validation)?
            }
            None => {
                let mut cfg = GenerationConfig::default();
                if let Some(e) = self.emax {
                    cfg.e_max = e;
                }
                if let Some(h) = self.horizon {
                    cfg.horizon = h;
                }
                if let Some(a) = self.apps {
                    cfg.apps = a;
                }
                if let Some(t) = self.tasks {
                    cfg.tasks_per_app = t;
                }
                generate_instance(self.seed.unwrap_or(1), &cfg).map_err(validation)?
            }
        };
        if self.instance.is_some() {
            if let Some(e) = self.emax {
                inst.e_max = e;
            }
        }
        let issues = validate_instance(&inst);
        if !issues.is_empty() {
            return Err(CliError::Validation(format!("{issues:?}")));
        }
        Ok(inst)
    }
}

#[derive(Args)]
struct SolverArgs {
    /// Search node budget per task interleaving in the exact solver.
    #[arg(long)]
    node_limit: Option<u64>,
    /// Delay-optimal objective: completion time of the last task, or the
    /// sum of all completion times.
    #[arg(long, value_name = "makespan|sum")]
    delay_objective: Option<String>,
}

impl SolverArgs {
    fn options(&self) -> Result<SolveOptions, CliError> {
        let mut opts = SolveOptions::default();
        if let Some(n) = self.node_limit {
            opts.node_limit = n;
        }
        if let Some(name) = &self.delay_objective {
            opts.delay_objective = DelayObjective::from_name(name).ok_or_else(|| {
                CliError::Validation(format!("unknown delay objective {name:?}"))
            })?;
        }
        Ok(opts)
    }
}

#[derive(Args)]
struct GenArgs {
    #[command(flatten)]
    instance: InstanceArgs,
    /// Output file; stdout when omitted.
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SolveArgs {
    #[command(flatten)]
    instance: InstanceArgs,
    #[command(flatten)]
    solver: SolverArgs,
    /// Strategy to run.
    #[arg(long)]
    strategy: String,
}

#[derive(Args)]
struct ExperimentArgs {
    /// Experiment config file in the key-value format; flags override it.
    #[arg(long, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Base seed of the seed range.
    #[arg(long)]
    seed: Option<u64>,
    /// Number of seeds.
    #[arg(long)]
    seeds: Option<usize>,
    /// Single energy budget (shorthand for a one-point grid).
    #[arg(long)]
    emax: Option<f64>,
    /// Energy budget grid: comma-separated values or lo:hi:step.
    #[arg(long, value_name = "GRID")]
    emax_grid: Option<String>,
    /// Strategies to compare (comma-separated or repeated).
    #[arg(long, value_delimiter = ',')]
    strategy: Vec<String>,
    /// Scheduling horizon in slots.
    #[arg(long)]
    horizon: Option<usize>,
    /// Number of applications.
    #[arg(long)]
    apps: Option<usize>,
    /// Tasks per application.
    #[arg(long)]
    tasks: Option<usize>,
    #[command(flatten)]
    solver: SolverArgs,
    /// Output directory for the CSV files.
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct TraceArgs {
    #[command(flatten)]
    instance: InstanceArgs,
    #[command(flatten)]
    solver: SolverArgs,
    /// Strategy to trace.
    #[arg(long)]
    strategy: String,
    /// Output directory.
    #[arg(long, value_name = "DIR", default_value = ".")]
    out: PathBuf,
}

#[derive(Args)]
struct SummaryArgs {
    /// Directory holding results_per_seed.csv.
    #[arg(long = "in", value_name = "DIR")]
    input: PathBuf,
    /// File for the summary CSV; defaults to summary.csv inside the input
    /// directory.
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
}

#[derive(Debug)]
enum CliError {
    Validation(String),
    Infeasible(String),
    Io(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Validation(_) => 2,
            CliError::Infeasible(_) => 3,
            CliError::Io(_) => 4,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Validation(m) | CliError::Infeasible(m) | CliError::Io(m) => m,
        }
    }
}

fn validation(err: impl std::fmt::Display) -> CliError {
    CliError::Validation(err.to_string())
}

impl From<StrategyError> for CliError {
    fn from(err: StrategyError) -> Self {
        match &err {
            StrategyError::Solve(SolveError::Infeasible { .. })
            | StrategyError::Solve(SolveError::NodeLimit { .. })
            | StrategyError::Heuristic(HeuristicError::NoFeasibleCandidate { .. }) => {
                CliError::Infeasible(err.to_string())
            }
            StrategyError::Heuristic(HeuristicError::Energy(e))
                if matches!(e, aot_mec::energy::EnergyError::InfeasibleBudget { .. }) =>
            {
                CliError::Infeasible(err.to_string())
            }
            _ => CliError::Validation(err.to_string()),
        }
    }
}

impl From<ExperimentError> for CliError {
    fn from(err: ExperimentError) -> Self {
        match err {
            ExperimentError::Io(e) => CliError::Io(e.to_string()),
            ExperimentError::Strategy(e) => e.into(),
            other => CliError::Validation(other.to_string()),
        }
    }
}

impl From<InstanceIoError> for CliError {
    fn from(err: InstanceIoError) -> Self {
        CliError::Validation(err.to_string())
    }
}

fn parse_strategy(name: &str) -> Result<Strategy, CliError> {
    Strategy::from_name(name).ok_or_else(|| {
        let known: Vec<&str> = Strategy::ALL.iter().map(|s| s.name()).collect();
        CliError::Validation(format!("unknown strategy {name:?}; expected one of {known:?}"))
    })
}

fn parse_emax_grid(spec: &str) -> Result<Vec<f64>, CliError> {
    let bad = |msg: String| CliError::Validation(msg);
    let grid = if spec.contains(':') {
        let parts: Vec<&str> = spec.split(':').collect();
        if parts.len() != 3 {
            return Err(bad(format!("grid {spec:?} wants lo:hi:step")));
        }
        let lo: f64 = parts[0].parse().map_err(|_| bad(format!("bad grid start {:?}", parts[0])))?;
        let hi: f64 = parts[1].parse().map_err(|_| bad(format!("bad grid end {:?}", parts[1])))?;
        let step: f64 = parts[2].parse().map_err(|_| bad(format!("bad grid step {:?}", parts[2])))?;
        if !(step > 0.0 && hi >= lo) {
            return Err(bad(format!("grid {spec:?} is empty or descending")));
        }
        let n = ((hi - lo) / step + 1e-9).floor() as usize;
        (0..=n).map(|i| lo + i as f64 * step).collect()
    } else {
        spec.split(',')
            .map(|tok| {
                tok.trim()
                    .parse::<f64>()
                    .map_err(|_| bad(format!("bad grid value {tok:?}")))
            })
            .collect::<Result<Vec<f64>, CliError>>()?
    };
    if grid.is_empty() || grid.iter().any(|&e| e <= 0.0) {
        return Err(bad("energy grid must be non-empty and positive".into()));
    }
    Ok(grid)
}

fn cmd_gen(args: GenArgs) -> Result<(), CliError> {
    let inst = args.instance.load()?;
    let text = inst.to_kv_string();
    match &args.out {
        Some(path) => std::fs::write(path, text)
            .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?,
        None => print!("{text}"),
    }
    Ok(())
}

fn cmd_solve(args: SolveArgs) -> Result<(), CliError> {
    let inst = args.instance.load()?;
    let strategy = parse_strategy(&args.strategy)?;
    let opts = args.solver.options()?;
    let result = run_strategy(&inst, strategy, &opts)?;
    let proved = result
        .proved_optimal
        .map(|p| p.to_string())
        .unwrap_or_else(|| "n/a".to_string());
    println!(
        "strategy={} sum_aot={} completion_time={} energy={} proved_optimal={}",
        result.strategy,
        experiment::fmt_sig(result.sum_aot, 12),
        experiment::fmt_sig(result.completion_time, 12),
        experiment::fmt_sig(result.ledger.total_consumed(), 12),
        proved
    );
    Ok(())
}

fn cmd_experiment(args: ExperimentArgs) -> Result<(), CliError> {
    let mut cfg = match &args.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
            ExperimentConfig::from_kv_str(&text)?
        }
        None => ExperimentConfig::default(),
    };
    if args.seed.is_some() || args.seeds.is_some() {
        let base = args.seed.unwrap_or(match cfg.seeds {
            SeedSpec::Range { base, .. } => base,
            _ => 1,
        });
        let count = args.seeds.unwrap_or(match cfg.seeds {
            SeedSpec::Range { count, .. } => count,
            _ => 50,
        });
        cfg.seeds = SeedSpec::Range { base, count };
    }
    if let Some(grid) = &args.emax_grid {
        cfg.emax_grid = parse_emax_grid(grid)?;
    } else if let Some(e) = args.emax {
        cfg.emax_grid = vec![e];
    }
    if !args.strategy.is_empty() {
        cfg.strategies = args
            .strategy
            .iter()
            .map(|s| parse_strategy(s))
            .collect::<Result<_, _>>()?;
    }
    if let Some(h) = args.horizon {
        cfg.gen.horizon = h;
    }
    if let Some(a) = args.apps {
        cfg.gen.apps = a;
    }
    if let Some(t) = args.tasks {
        cfg.gen.tasks_per_app = t;
    }
    if let Some(n) = args.solver.node_limit {
        cfg.solve.node_limit = n;
    }
    if let Some(name) = &args.solver.delay_objective {
        cfg.solve.delay_objective = DelayObjective::from_name(name)
            .ok_or_else(|| CliError::Validation(format!("unknown delay objective {name:?}")))?;
    }
    if let Some(dir) = &args.out {
        cfg.out_dir = dir.clone();
    }
    cfg.validate()?;

    let output = run_experiment(&cfg)?;
    for row in &output.rows {
        eprintln!(
            "e_max={:<6} {:<16} mean_sum_aot={:<16} mean_completion={:<10} seeds={} runtime={:.2?}",
            experiment::fmt_sig(row.e_max, 4),
            row.strategy.name(),
            experiment::fmt_sig(row.mean_sum_aot, 10),
            experiment::fmt_sig(row.mean_completion_time, 8),
            row.seeds_ok,
            row.runtime
        );
    }
    for file in &output.files {
        println!("wrote {}", file.display());
    }
    match compare_summary(&output.rows) {
        Ok(summary) => {
            let path = cfg.out_dir.join("summary.csv");
            std::fs::write(&path, summary.to_csv())
                .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
            println!("wrote {}", path.display());
            print!("{summary}");
        }
        // The summary needs the heuristic and both oracle strategies; a
        // partial run simply skips it.
        Err(ExperimentError::MissingStrategy(_)) => {}
        Err(e) => return Err(e.into()),
    }
    Ok(())
}

fn cmd_trace(args: TraceArgs) -> Result<(), CliError> {
    let inst = args.instance.load()?;
    let strategy = parse_strategy(&args.strategy)?;
    let opts = args.solver.options()?;
    let result = run_strategy(&inst, strategy, &opts)?;
    let files = experiment::export_trace(&inst, &result, &args.out)?;
    println!("wrote {}", files.ages.display());
    println!("wrote {}", files.schedule.display());
    Ok(())
}

fn cmd_summary(args: SummaryArgs) -> Result<(), CliError> {
    let per_seed = args.input.join("results_per_seed.csv");
    let text = std::fs::read_to_string(&per_seed)
        .map_err(|e| CliError::Io(format!("{}: {e}", per_seed.display())))?;
    let cells = read_per_seed_csv(&text)?;
    let rows = aggregate_cells(&cells);
    let summary = compare_summary(&rows)?;
    let out = args
        .out
        .clone()
        .unwrap_or_else(|| args.input.join("summary.csv"));
    std::fs::write(&out, summary.to_csv())
        .map_err(|e| CliError::Io(format!("{}: {e}", out.display())))?;
    println!("wrote {}", out.display());
    print!("{summary}");
    Ok(())
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Gen(args) => cmd_gen(args),
        Command::Solve(args) => cmd_solve(args),
        Command::Experiment(args) => cmd_experiment(args),
        Command::Trace(args) => cmd_trace(args),
        Command::Summary(args) => cmd_summary(args),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {}", err.message());
            ExitCode::from(err.exit_code())
        }
    }
}
