//! Named scheduling strategies and a single entry point to run any of them
//! on an instance.

use thiserror::Error;

use crate::age::{sum_age, CompletionLog};
use crate::energy::{EnergyLedger, OffloadPolicy};
use crate::greedy::{self, HeuristicError};
use crate::model::{Instance, Schedule};
use crate::oracle::{solve_exact, SolveError, SolveMode, SolveOptions};

/// Scheduling strategies compared by the experiment harness.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Strategy {
    /// Greedy age-based scheduling with energy redistribution.
    Heuristic,
    /// Exact minimization of the summed age.
    AgeOptimal,
    /// Exact minimization of the completion time.
    DelayOptimal,
    /// Exact summed-age minimization with all data offloaded.
    MecOnly,
    /// Round-robin scheduling with all data offloaded.
    MecRoundRobin,
}

impl Strategy {
    pub const ALL: [Strategy; 5] = [
        Strategy::Heuristic,
        Strategy::AgeOptimal,
        Strategy::DelayOptimal,
        Strategy::MecOnly,
        Strategy::MecRoundRobin,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Strategy::Heuristic => "heuristic",
            Strategy::AgeOptimal => "age-optimal",
            Strategy::DelayOptimal => "delay-optimal",
            Strategy::MecOnly => "mec-only",
            Strategy::MecRoundRobin => "mec-round-robin",
        }
    }

    pub fn from_name(name: &str) -> Option<Strategy> {
        Strategy::ALL.iter().copied().find(|s| s.name() == name)
    }
}

impl std::fmt::Display for Strategy {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Outcome of one strategy on one instance.
#[derive(Debug, Clone)]
pub struct StrategyResult {
    pub strategy: Strategy,
    /// Summed overall age of all applications.
    pub sum_aot: f64,
    /// Slot in which the last task completed (slots since the scheduling
    /// start).
    pub completion_time: f64,
    pub schedule: Schedule,
    pub log: CompletionLog,
    pub ledger: EnergyLedger,
    /// For exact strategies: whether the search ran to completion.
    pub proved_optimal: Option<bool>,
}

#[derive(Debug, Error)]
pub enum StrategyError {
    #[error(transparent)]
    Heuristic(#[from] HeuristicError),
    #[error(transparent)]
    Solve(#[from] SolveError),
}

/// Round-robin over applications with every task fully offloaded, under
/// cube-proportional budgets.
pub fn mec_round_robin(inst: &Instance) -> Result<StrategyResult, HeuristicError> {
    let mut order = Vec::with_capacity(inst.total_tasks());
    let mut round = 0;
    loop {
        let mut pushed = false;
        for app in 0..inst.num_apps() {
            if round < inst.tasks_of(app).len() {
                order.push(app);
                pushed = true;
            }
        }
        if !pushed {
            break;
        }
        round += 1;
    }
    let ledger = greedy::initial_energy_allocation(inst);
    let outcome = greedy::run_pass(
        inst,
        ledger,
        greedy::Selection::Fixed(&order),
        OffloadPolicy::OffloadOnly,
    )?;
    let sum_aot = sum_age(inst, &outcome.log)?;
    Ok(StrategyResult {
        strategy: Strategy::MecRoundRobin,
        sum_aot,
        completion_time: outcome.last_slot as f64,
        schedule: outcome.schedule,
        log: outcome.log,
        ledger: outcome.ledger,
        proved_optimal: None,
    })
}

/// Runs one strategy on one instance.
pub fn run_strategy(
    inst: &Instance,
    strategy: Strategy,
    opts: &SolveOptions,
) -> Result<StrategyResult, StrategyError> {
    match strategy {
        Strategy::Heuristic => Ok(greedy::schedule_heuristic(inst)?),
        Strategy::MecRoundRobin => Ok(mec_round_robin(inst)?),
        Strategy::AgeOptimal | Strategy::DelayOptimal | Strategy::MecOnly => {
            let mode = match strategy {
                Strategy::AgeOptimal => SolveMode::AgeOptimal,
                Strategy::DelayOptimal => SolveMode::DelayOptimal,
                _ => SolveMode::MecOnly,
            };
            let result = solve_exact(inst, mode, opts)?;
            Ok(StrategyResult {
                strategy,
                sum_aot: result.sum_aot,
                completion_time: result.completion_time,
                schedule: result.schedule,
                log: result.log,
                ledger: result.ledger,
                proved_optimal: Some(result.proved_optimal),
            })
        }
    }
}
