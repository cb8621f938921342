//! Experiment harness: seeded strategy-comparison grids, CSV emission and
//! trace export.
//!
//! A run sweeps (seed x energy budget x strategy), producing one per-seed
//! CSV and aggregated CSVs whose axes match the comparison figures (mean
//! summed age and mean completion time against the energy budget). All
//! numeric output goes through one fixed 12-significant-digit formatter and
//! aggregate means are computed from the printed-and-reparsed per-seed
//! values, so a rerun of the same config is byte-identical and aggregates
//! recomputed from the per-seed file match the aggregate file exactly.

use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use rayon::prelude::*;
use thiserror::Error;

use crate::age::{age_trace, AgeError};
use crate::energy::{local_energy, offload_energy, EnergyError};
use crate::greedy::HeuristicError;
use crate::kv::{KvError, KvMap};
use crate::model::{
    generate_instance, GenerationConfig, GenerationError, Instance, Schedule, SlotDecision,
    BIT_TOLERANCE,
};
use crate::oracle::{DelayObjective, SolveError, SolveOptions};
use crate::strategy::{run_strategy, Strategy, StrategyError, StrategyResult};

// ---------------------------------------------------------------------------
// Deterministic number formatting
// ---------------------------------------------------------------------------

/// Formats with a fixed number of significant digits: plain decimal notation
/// for moderate exponents, scientific otherwise. Pure function of the input,
/// which is what makes reruns byte-identical.
pub fn fmt_sig(x: f64, sig: usize) -> String {
    assert!(sig >= 1);
    if x == 0.0 {
        return "0".to_string();
    }
    if x.is_nan() {
        return "nan".to_string();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf" } else { "-inf" }.to_string();
    }
    let exp = x.abs().log10().floor() as i32;
    if exp >= -4 && exp < sig as i32 {
        let decimals = (sig as i32 - 1 - exp).max(0) as usize;
        format!("{:.*}", decimals, x)
    } else {
        format!("{:.*e}", sig - 1, x)
    }
}

/// Default significant digits in CSV output.
pub const CSV_SIG_DIGITS: usize = 12;

fn csv_num(x: f64) -> String {
    fmt_sig(x, CSV_SIG_DIGITS)
}

// ---------------------------------------------------------------------------
// Configuration
// ---------------------------------------------------------------------------

/// Which seeds the experiment runs.
#[derive(Debug, Clone, PartialEq)]
pub enum SeedSpec {
    Range { base: u64, count: usize },
    List(Vec<u64>),
}

impl SeedSpec {
    pub fn seeds(&self) -> Vec<u64> {
        match self {
            SeedSpec::Range { base, count } => (0..*count as u64).map(|i| base + i).collect(),
            SeedSpec::List(list) => list.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub seeds: SeedSpec,
    pub emax_grid: Vec<f64>,
    pub strategies: Vec<Strategy>,
    pub gen: GenerationConfig,
    pub solve: SolveOptions,
    pub out_dir: PathBuf,
}

/// The default comparison: 50 seeds, energy budgets 0.12 J to 0.18 J in
/// 0.01 J steps, all four one-shot strategies.
impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            seeds: SeedSpec::Range { base: 1, count: 50 },
            emax_grid: (12..=18).map(|k| k as f64 / 100.0).collect(),
            strategies: vec![
                Strategy::Heuristic,
                Strategy::AgeOptimal,
                Strategy::DelayOptimal,
                Strategy::MecOnly,
            ],
            gen: GenerationConfig::default(),
            solve: SolveOptions::default(),
            out_dir: PathBuf::from("results"),
        }
    }
}

impl ExperimentConfig {
    /// Reads a config in the flat key-value format; missing keys keep their
    /// defaults.
    pub fn from_kv_str(text: &str) -> Result<Self, ExperimentError> {
        let map = KvMap::parse(text)?;
        let mut cfg = ExperimentConfig::default();
        if map.contains("seeds") {
            cfg.seeds = SeedSpec::List(
                map.get_str("seeds")?
                    .split_whitespace()
                    .map(|tok| {
                        tok.parse::<u64>().map_err(|_| KvError::BadValue {
                            key: "seeds".into(),
                            value: tok.into(),
                            wanted: "u64",
                        })
                    })
                    .collect::<Result<_, _>>()?,
            );
        } else {
            let base = if map.contains("seed_base") { map.get_u64("seed_base")? } else { 1 };
            let count = if map.contains("seed_count") { map.get_usize("seed_count")? } else { 50 };
            cfg.seeds = SeedSpec::Range { base, count };
        }
        if map.contains("emax_grid") {
            cfg.emax_grid = map.get_f64_list("emax_grid")?;
        }
        if map.contains("strategies") {
            cfg.strategies = map
                .get_str("strategies")?
                .split_whitespace()
                .map(|name| {
                    Strategy::from_name(name).ok_or_else(|| {
                        ExperimentError::InvalidConfig(format!("unknown strategy {name:?}"))
                    })
                })
                .collect::<Result<_, _>>()?;
        }
        if map.contains("out_dir") {
            cfg.out_dir = PathBuf::from(map.get_str("out_dir")?);
        }
        if map.contains("node_limit") {
            cfg.solve.node_limit = map.get_u64("node_limit")?;
        }
        if map.contains("delay_objective") {
            let name = map.get_str("delay_objective")?;
            cfg.solve.delay_objective = DelayObjective::from_name(name).ok_or_else(|| {
                ExperimentError::InvalidConfig(format!("unknown delay objective {name:?}"))
            })?;
        }
        // Generator overrides.
        if map.contains("apps") {
            cfg.gen.apps = map.get_usize("apps")?;
        }
        if map.contains("tasks_per_app") {
            cfg.gen.tasks_per_app = map.get_usize("tasks_per_app")?;
        }
        if map.contains("horizon") {
            cfg.gen.horizon = map.get_usize("horizon")?;
        }
        if map.contains("tau0") {
            cfg.gen.tau0 = map.get_f64("tau0")?;
        }
        if map.contains("e_max") {
            cfg.gen.e_max = map.get_f64("e_max")?;
        }
        for (key, field) in [
            ("size_range", &mut cfg.gen.size_range),
            ("gen_time_range", &mut cfg.gen.gen_time_range),
            ("gain_range", &mut cfg.gen.gain_range),
        ] {
            if map.contains(key) {
                let list = map.get_f64_list(key)?;
                if list.len() != 2 {
                    return Err(ExperimentError::InvalidConfig(format!(
                        "{key} wants two values, got {}",
                        list.len()
                    )));
                }
                *field = (list[0], list[1]);
            }
        }
        if map.contains("gamma") {
            cfg.gen.params.gamma = map.get_f64("gamma")?;
        }
        if map.contains("omega") {
            cfg.gen.params.omega = map.get_f64("omega")?;
        }
        if map.contains("tau") {
            cfg.gen.params.tau = map.get_f64("tau")?;
        }
        if map.contains("lambda0") {
            cfg.gen.params.lambda0 = map.get_f64("lambda0")?;
        }
        if map.contains("m") {
            cfg.gen.params.m = map.get_u32("m")?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), ExperimentError> {
        if self.seeds.seeds().is_empty() {
            return Err(ExperimentError::InvalidConfig("no seeds".into()));
        }
        if self.emax_grid.is_empty() || self.emax_grid.iter().any(|&e| e <= 0.0) {
            return Err(ExperimentError::InvalidConfig(
                "energy grid must be non-empty and positive".into(),
            ));
        }
        if self.strategies.is_empty() {
            return Err(ExperimentError::InvalidConfig("no strategies".into()));
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// Results
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CellStatus {
    Ok,
    Infeasible,
    NodeLimit,
}

impl CellStatus {
    fn name(&self) -> &'static str {
        match self {
            CellStatus::Ok => "ok",
            CellStatus::Infeasible => "infeasible",
            CellStatus::NodeLimit => "node-limit",
        }
    }

    fn from_name(name: &str) -> Option<Self> {
        match name {
            "ok" => Some(CellStatus::Ok),
            "infeasible" => Some(CellStatus::Infeasible),
            "node-limit" => Some(CellStatus::NodeLimit),
            _ => None,
        }
    }
}

/// One (budget, strategy, seed) measurement.
#[derive(Debug, Clone, PartialEq)]
pub struct CellResult {
    pub e_max: f64,
    pub strategy: Strategy,
    pub seed: u64,
    pub sum_aot: Option<f64>,
    pub completion_time: Option<f64>,
    pub status: CellStatus,
}

/// Aggregated row for one (budget, strategy) pair.
#[derive(Debug, Clone)]
pub struct ComparisonRow {
    pub e_max: f64,
    pub strategy: Strategy,
    pub mean_sum_aot: f64,
    pub mean_completion_time: f64,
    /// Seeds that solved; the means average exactly these.
    pub seeds_ok: usize,
    pub runtime: Duration,
}

#[derive(Debug)]
pub struct ExperimentOutput {
    pub cells: Vec<CellResult>,
    pub rows: Vec<ComparisonRow>,
    pub files: Vec<PathBuf>,
}

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("invalid experiment config: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Kv(#[from] KvError),
    #[error(transparent)]
    Generation(#[from] GenerationError),
    #[error(transparent)]
    Strategy(#[from] StrategyError),
    #[error(transparent)]
    Age(#[from] AgeError),
    #[error(transparent)]
    Energy(#[from] EnergyError),
    #[error("{file} line {line}: {message}")]
    Csv {
        file: String,
        line: usize,
        message: String,
    },
    #[error("summary requires rows for strategy {0}")]
    MissingStrategy(Strategy),
}

// ---------------------------------------------------------------------------
// Running the grid
// ---------------------------------------------------------------------------

fn run_cell(
    gen: &GenerationConfig,
    solve: &SolveOptions,
    e_max: f64,
    strategy: Strategy,
    seed: u64,
) -> Result<(CellResult, Duration), ExperimentError> {
    let cfg = GenerationConfig {
        e_max,
        ..gen.clone()
    };
    let inst = generate_instance(seed, &cfg)?;
    let started = Instant::now();
    let outcome = run_strategy(&inst, strategy, solve);
    let elapsed = started.elapsed();
    let cell = match outcome {
        Ok(result) => CellResult {
            e_max,
            strategy,
            seed,
            sum_aot: Some(result.sum_aot),
            completion_time: Some(result.completion_time),
            status: CellStatus::Ok,
        },
        Err(err) => {
            let status = match &err {
                StrategyError::Solve(SolveError::Infeasible { .. }) => CellStatus::Infeasible,
                StrategyError::Solve(SolveError::NodeLimit { .. }) => CellStatus::NodeLimit,
                StrategyError::Heuristic(HeuristicError::NoFeasibleCandidate { .. }) => {
                    CellStatus::Infeasible
                }
                StrategyError::Heuristic(HeuristicError::Energy(
                    EnergyError::InfeasibleBudget { .. },
                )) => CellStatus::Infeasible,
                _ => return Err(err.into()),
            };
            CellResult {
                e_max,
                strategy,
                seed,
                sum_aot: None,
                completion_time: None,
                status,
            }
        }
    };
    Ok((cell, elapsed))
}

/// Runs the full (budget x strategy x seed) grid and writes the CSV outputs
/// into the config's output directory.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentOutput, ExperimentError> {
    cfg.validate()?;
    let seeds = cfg.seeds.seeds();
    let mut specs = Vec::new();
    for &e_max in &cfg.emax_grid {
        for &strategy in &cfg.strategies {
            for &seed in &seeds {
                specs.push((e_max, strategy, seed));
            }
        }
    }

    let results: Vec<Result<(CellResult, Duration), ExperimentError>> = specs
        .par_iter()
        .map(|&(e_max, strategy, seed)| run_cell(&cfg.gen, &cfg.solve, e_max, strategy, seed))
        .collect();
    let mut cells = Vec::with_capacity(results.len());
    let mut durations = Vec::with_capacity(results.len());
    for r in results {
        let (cell, d) = r?;
        cells.push(cell);
        durations.push(d);
    }

    let mut rows = aggregate_cells(&cells);
    // Attach per-row runtimes (sum of the row's cell durations).
    for row in rows.iter_mut() {
        row.runtime = cells
            .iter()
            .zip(&durations)
            .filter(|(c, _)| c.e_max.to_bits() == row.e_max.to_bits() && c.strategy == row.strategy)
            .map(|(_, d)| *d)
            .sum();
    }

    std::fs::create_dir_all(&cfg.out_dir)?;
    let mut files = Vec::new();
    let per_seed = cfg.out_dir.join("results_per_seed.csv");
    std::fs::write(&per_seed, per_seed_csv(&cells))?;
    files.push(per_seed);
    let mean = cfg.out_dir.join("results_mean.csv");
    std::fs::write(&mean, mean_csv(&rows))?;
    files.push(mean);
    for (name, pick) in [
        ("fig_sum_aot.csv", true),
        ("fig_completion.csv", false),
    ] {
        let path = cfg.out_dir.join(name);
        std::fs::write(&path, wide_csv(&rows, pick))?;
        files.push(path);
    }

    Ok(ExperimentOutput { cells, rows, files })
}

/// Groups cells into aggregated rows, preserving first-appearance order of
/// budgets and strategies. Means are taken over the printed-and-reparsed
/// per-seed values of the cells that solved.
pub fn aggregate_cells(cells: &[CellResult]) -> Vec<ComparisonRow> {
    let mut groups: Vec<((u64, Strategy), Vec<&CellResult>)> = Vec::new();
    for cell in cells {
        let key = (cell.e_max.to_bits(), cell.strategy);
        match groups.iter_mut().find(|(k, _)| *k == key) {
            Some((_, list)) => list.push(cell),
            None => groups.push((key, vec![cell])),
        }
    }
    groups
        .into_iter()
        .map(|((bits, strategy), list)| {
            let ok: Vec<&&CellResult> = list
                .iter()
                .filter(|c| c.status == CellStatus::Ok)
                .collect();
            let mean_of = |get: fn(&CellResult) -> Option<f64>| {
                if ok.is_empty() {
                    return f64::NAN;
                }
                let sum: f64 = ok
                    .iter()
                    .map(|c| rounded(get(c).expect("ok cell has values")))
                    .sum();
                sum / ok.len() as f64
            };
            ComparisonRow {
                e_max: f64::from_bits(bits),
                strategy,
                mean_sum_aot: mean_of(|c| c.sum_aot),
                mean_completion_time: mean_of(|c| c.completion_time),
                seeds_ok: ok.len(),
                runtime: Duration::ZERO,
            }
        })
        .collect()
}

/// Value as it appears in the CSV: printed then reparsed.
fn rounded(x: f64) -> f64 {
    csv_num(x).parse().expect("fmt_sig output parses")
}

// ---------------------------------------------------------------------------
// CSV formats
// ---------------------------------------------------------------------------

pub const PER_SEED_HEADER: &str = "e_max,strategy,seed,sum_aot,completion_time,status";
pub const MEAN_HEADER: &str = "e_max,strategy,mean_sum_aot,mean_completion_time,seeds";

fn per_seed_csv(cells: &[CellResult]) -> String {
    let mut out = String::from(PER_SEED_HEADER);
    out.push('\n');
    for c in cells {
        let (aot, completion) = match c.status {
            CellStatus::Ok => (
                csv_num(c.sum_aot.unwrap()),
                csv_num(c.completion_time.unwrap()),
            ),
            _ => (String::new(), String::new()),
        };
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            csv_num(c.e_max),
            c.strategy,
            c.seed,
            aot,
            completion,
            c.status.name()
        ));
    }
    out
}

fn mean_csv(rows: &[ComparisonRow]) -> String {
    let mut out = String::from(MEAN_HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            csv_num(r.e_max),
            r.strategy,
            csv_num(r.mean_sum_aot),
            csv_num(r.mean_completion_time),
            r.seeds_ok
        ));
    }
    out
}

/// One column per strategy, one row per budget; `sum_aot` picks which mean
/// is tabulated. These are the figure axes.
fn wide_csv(rows: &[ComparisonRow], sum_aot: bool) -> String {
    let mut strategies: Vec<Strategy> = Vec::new();
    let mut emaxes: Vec<u64> = Vec::new();
    for r in rows {
        if !strategies.contains(&r.strategy) {
            strategies.push(r.strategy);
        }
        if !emaxes.contains(&r.e_max.to_bits()) {
            emaxes.push(r.e_max.to_bits());
        }
    }
    let mut out = String::from("e_max");
    for s in &strategies {
        out.push(',');
        out.push_str(s.name());
    }
    out.push('\n');
    for &bits in &emaxes {
        out.push_str(&csv_num(f64::from_bits(bits)));
        for &s in &strategies {
            out.push(',');
            if let Some(row) = rows
                .iter()
                .find(|r| r.e_max.to_bits() == bits && r.strategy == s)
            {
                let v = if sum_aot { row.mean_sum_aot } else { row.mean_completion_time };
                out.push_str(&csv_num(v));
            }
        }
        out.push('\n');
    }
    out
}

/// Parses a per-seed CSV back into cells.
pub fn read_per_seed_csv(text: &str) -> Result<Vec<CellResult>, ExperimentError> {
    let bad = |line: usize, message: String| ExperimentError::Csv {
        file: "results_per_seed.csv".into(),
        line,
        message,
    };
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, header)) if header == PER_SEED_HEADER => {}
        other => {
            return Err(bad(1, format!("unexpected header {:?}", other.map(|(_, h)| h))));
        }
    }
    let mut cells = Vec::new();
    for (i, line) in lines {
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 6 {
            return Err(bad(i + 1, format!("expected 6 fields, got {}", fields.len())));
        }
        let parse_f64 = |s: &str, what: &str| {
            s.parse::<f64>()
                .map_err(|_| bad(i + 1, format!("bad {what}: {s:?}")))
        };
        let status = CellStatus::from_name(fields[5])
            .ok_or_else(|| bad(i + 1, format!("bad status {:?}", fields[5])))?;
        let (sum_aot, completion_time) = if status == CellStatus::Ok {
            (
                Some(parse_f64(fields[3], "sum_aot")?),
                Some(parse_f64(fields[4], "completion_time")?),
            )
        } else {
            (None, None)
        };
        cells.push(CellResult {
            e_max: parse_f64(fields[0], "e_max")?,
            strategy: Strategy::from_name(fields[1])
                .ok_or_else(|| bad(i + 1, format!("bad strategy {:?}", fields[1])))?,
            seed: fields[2]
                .parse()
                .map_err(|_| bad(i + 1, format!("bad seed {:?}", fields[2])))?,
            sum_aot,
            completion_time,
            status,
        });
    }
    Ok(cells)
}

// ---------------------------------------------------------------------------
// Summary statistics
// ---------------------------------------------------------------------------

/// Cross-strategy statistics of one comparison run, each averaged over the
/// budget grid from the per-budget means.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Summary {
    /// Mean summed-age gap: delay-optimal minus age-optimal.
    pub aot_gap_delay_minus_age: f64,
    /// Mean summed-age gap: delay-optimal minus heuristic.
    pub aot_gap_delay_minus_heuristic: f64,
    /// Mean ratio age-optimal / heuristic in summed age.
    pub aot_ratio_age_over_heuristic: f64,
    /// Mean completion-time gap: age-optimal minus delay-optimal.
    pub completion_gap_age_minus_delay: f64,
    /// Mean completion-time gap: heuristic minus delay-optimal.
    pub completion_gap_heuristic_minus_delay: f64,
    /// Mean ratio delay-optimal / heuristic in completion time.
    pub completion_ratio_delay_over_heuristic: f64,
}

impl std::fmt::Display for Summary {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(f, "{:<44} {:>14}", "metric", "value")?;
        for (name, value) in self.entries() {
            writeln!(f, "{:<44} {:>14}", name, fmt_sig(value, 6))?;
        }
        Ok(())
    }
}

impl Summary {
    pub fn entries(&self) -> [(&'static str, f64); 6] {
        [
            ("aot_gap_delay_minus_age", self.aot_gap_delay_minus_age),
            (
                "aot_gap_delay_minus_heuristic",
                self.aot_gap_delay_minus_heuristic,
            ),
            (
                "aot_ratio_age_over_heuristic",
                self.aot_ratio_age_over_heuristic,
            ),
            (
                "completion_gap_age_minus_delay",
                self.completion_gap_age_minus_delay,
            ),
            (
                "completion_gap_heuristic_minus_delay",
                self.completion_gap_heuristic_minus_delay,
            ),
            (
                "completion_ratio_delay_over_heuristic",
                self.completion_ratio_delay_over_heuristic,
            ),
        ]
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("metric,value\n");
        for (name, value) in self.entries() {
            out.push_str(&format!("{},{}\n", name, csv_num(value)));
        }
        out
    }
}

/// Computes the cross-strategy gaps and ratios from aggregated rows.
pub fn compare_summary(rows: &[ComparisonRow]) -> Result<Summary, ExperimentError> {
    let mut emaxes: Vec<u64> = Vec::new();
    for r in rows {
        if !emaxes.contains(&r.e_max.to_bits()) {
            emaxes.push(r.e_max.to_bits());
        }
    }
    let find = |bits: u64, strategy: Strategy| -> Result<&ComparisonRow, ExperimentError> {
        rows.iter()
            .find(|r| r.e_max.to_bits() == bits && r.strategy == strategy)
            .ok_or(ExperimentError::MissingStrategy(strategy))
    };
    let mut acc = [0.0f64; 6];
    for &bits in &emaxes {
        let heuristic = find(bits, Strategy::Heuristic)?;
        let age = find(bits, Strategy::AgeOptimal)?;
        let delay = find(bits, Strategy::DelayOptimal)?;
        acc[0] += delay.mean_sum_aot - age.mean_sum_aot;
        acc[1] += delay.mean_sum_aot - heuristic.mean_sum_aot;
        acc[2] += age.mean_sum_aot / heuristic.mean_sum_aot;
        acc[3] += age.mean_completion_time - delay.mean_completion_time;
        acc[4] += heuristic.mean_completion_time - delay.mean_completion_time;
        acc[5] += delay.mean_completion_time / heuristic.mean_completion_time;
    }
    let n = emaxes.len() as f64;
    Ok(Summary {
        aot_gap_delay_minus_age: acc[0] / n,
        aot_gap_delay_minus_heuristic: acc[1] / n,
        aot_ratio_age_over_heuristic: acc[2] / n,
        completion_gap_age_minus_delay: acc[3] / n,
        completion_gap_heuristic_minus_delay: acc[4] / n,
        completion_ratio_delay_over_heuristic: acc[5] / n,
    })
}

// ---------------------------------------------------------------------------
// Trace export
// ---------------------------------------------------------------------------

pub const AGES_HEADER: &str = "app,t,age";
pub const SCHEDULE_HEADER: &str = "slot,app,task,d_loc,d_off,energy";

/// Per-slot ages of every application as CSV, covering one slot past the
/// last completion so the final drop to zero is visible.
pub fn ages_to_csv(inst: &Instance, result: &StrategyResult) -> Result<String, AgeError> {
    let last = result
        .log
        .last_completion()
        .map(|t| (t - inst.tau0).round() as usize)
        .unwrap_or(0);
    let mut out = String::from(AGES_HEADER);
    out.push('\n');
    for app in 0..inst.num_apps() {
        let trace = age_trace(inst, &result.log, app)?;
        for t in 1..=last + 1 {
            out.push_str(&format!("{},{},{}\n", app, t, csv_num(trace.age_at(t))));
        }
    }
    Ok(out)
}

/// Per-slot decisions as CSV, with each slot's energy recomputed from its
/// split.
pub fn schedule_to_csv(inst: &Instance, schedule: &Schedule) -> Result<String, EnergyError> {
    let mut out = String::from(SCHEDULE_HEADER);
    out.push('\n');
    let mut decisions = schedule.decisions.clone();
    decisions.sort_by_key(|d| d.slot);
    for d in &decisions {
        let Some((app, task)) = d.task else { continue };
        let energy = local_energy(d.d_loc, &inst.params)?
            + offload_energy(d.d_off, inst.channel.gain(d.slot), &inst.params)?;
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            d.slot,
            app,
            task,
            csv_num(d.d_loc),
            csv_num(d.d_off),
            csv_num(energy)
        ));
    }
    Ok(out)
}

/// Parses a schedule CSV and replays it against the instance to reconstruct
/// the completion times.
pub fn schedule_from_csv(inst: &Instance, text: &str) -> Result<Schedule, ExperimentError> {
    let bad = |line: usize, message: String| ExperimentError::Csv {
        file: "schedule.csv".into(),
        line,
        message,
    };
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, header)) if header == SCHEDULE_HEADER => {}
        other => {
            return Err(bad(1, format!("unexpected header {:?}", other.map(|(_, h)| h))));
        }
    }
    let mut decisions = Vec::new();
    for (i, line) in lines {
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 6 {
            return Err(bad(i + 1, format!("expected 6 fields, got {}", fields.len())));
        }
        let slot: usize = fields[0]
            .parse()
            .map_err(|_| bad(i + 1, format!("bad slot {:?}", fields[0])))?;
        let app: usize = fields[1]
            .parse()
            .map_err(|_| bad(i + 1, format!("bad app {:?}", fields[1])))?;
        let task: usize = fields[2]
            .parse()
            .map_err(|_| bad(i + 1, format!("bad task {:?}", fields[2])))?;
        let d_loc: f64 = fields[3]
            .parse()
            .map_err(|_| bad(i + 1, format!("bad d_loc {:?}", fields[3])))?;
        let d_off: f64 = fields[4]
            .parse()
            .map_err(|_| bad(i + 1, format!("bad d_off {:?}", fields[4])))?;
        decisions.push(SlotDecision {
            slot,
            task: Some((app, task)),
            d_loc,
            d_off,
        });
    }
    decisions.sort_by_key(|d| d.slot);

    // Replay the volumes to recover completion times.
    let mut remaining: Vec<Vec<f64>> = inst
        .apps
        .iter()
        .map(|tasks| tasks.iter().map(|t| t.size_bits).collect())
        .collect();
    let mut completion_times = std::collections::BTreeMap::new();
    for d in &decisions {
        if let Some((app, task)) = d.task {
            if app < remaining.len() && task < remaining[app].len() {
                remaining[app][task] -= d.d_loc + d.d_off;
                if remaining[app][task] <= BIT_TOLERANCE
                    && !completion_times.contains_key(&(app, task))
                {
                    completion_times.insert((app, task), inst.completion_time_of_slot(d.slot));
                }
            }
        }
    }
    Ok(Schedule {
        decisions,
        completion_times,
    })
}

pub struct TraceFiles {
    pub ages: PathBuf,
    pub schedule: PathBuf,
}

/// Writes the age-trace and schedule CSVs of one strategy result.
pub fn export_trace(
    inst: &Instance,
    result: &StrategyResult,
    out_dir: &Path,
) -> Result<TraceFiles, ExperimentError> {
    std::fs::create_dir_all(out_dir)?;
    let ages = out_dir.join(format!("trace_ages_{}.csv", result.strategy));
    std::fs::write(&ages, ages_to_csv(inst, result)?)?;
    let schedule = out_dir.join(format!("trace_schedule_{}.csv", result.strategy));
    std::fs::write(&schedule, schedule_to_csv(inst, &result.schedule)?)?;
    Ok(TraceFiles { ages, schedule })
}
