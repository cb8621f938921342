//! Age-of-task scheduling and computation offloading for a single-server
//! mobile-edge-computing system.
//!
//! One mobile device runs several applications, each holding a queue of
//! computation tasks. In every time slot a scheduler selects at most one
//! task and splits its data between local execution and offloading to the
//! edge server, under a total energy budget. The quantity being minimized is
//! the summed age of task: the area under each application's
//! elapsed-time-since-oldest-unprocessed-task curve.
//!
//! Module map:
//! - [`model`]: problem types, validation, seeded instance generation,
//!   schedule legality checking and the instance text format;
//! - [`age`]: instantaneous age traces and overall age, via both the
//!   step-sum recurrence and the geometric closed form;
//! - [`energy`]: energy physics, optimal local/offload splits, cross-slot
//!   partitions and the minimum-slot feasibility test;
//! - [`greedy`]: the age-based greedy scheduler with energy redistribution;
//! - [`oracle`]: exact branch-and-bound solver (age-, delay- and
//!   offload-only-optimal) plus a flat-enumeration verifier;
//! - [`strategy`]: named strategies and a single dispatch entry point;
//! - [`experiment`]: seeded comparison grids, CSV emission, trace export.

pub mod age;
pub mod energy;
pub mod experiment;
pub mod greedy;
pub mod kv;
pub mod model;
pub mod oracle;
pub mod strategy;

pub use age::{age_trace, closed_form_age, sum_age, AgeTrace, CompletionLog};
pub use energy::{
    local_energy, min_slots_plan, offload_energy, optimal_split, partition_across_slots,
    slot_min_energy, EnergyLedger, TaskPlan,
};
pub use experiment::{
    compare_summary, export_trace, run_experiment, ComparisonRow, ExperimentConfig, Summary,
};
pub use greedy::{
    delta_score, greedy_pass, initial_energy_allocation, schedule_heuristic, DeltaScore,
    GreedyState,
};
pub use model::{
    check_schedule, generate_instance, validate_instance, ChannelTrace, EnergyParams,
    GenerationConfig, Instance, Schedule, SlotDecision, Task,
};
pub use oracle::{
    enumerate_orders, solve_exact, verify_optimality_small, OracleResult, SolveMode, SolveOptions,
};
pub use strategy::{run_strategy, Strategy, StrategyResult};
