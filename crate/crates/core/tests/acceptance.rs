//! Acceptance suite: one test per criterion, each printing a PASS/FAIL line
//! (visible with `--nocapture`).
//!
//! The comparison experiment (criteria 4-7) runs the default configuration
//! twice into separate directories; the runs are shared by all tests of
//! this target through a `OnceLock`.

use std::sync::OnceLock;
use std::time::{Duration, Instant};

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use aot_mec::age::{age_trace, closed_form_age, CompletionLog};
use aot_mec::energy::{local_energy, offload_energy, optimal_split, slot_min_energy};
use aot_mec::experiment::{
    compare_summary, run_experiment, CellResult, CellStatus, ComparisonRow, ExperimentConfig,
    Summary,
};
use aot_mec::model::{check_schedule, generate_instance, GenerationConfig, Instance};
use aot_mec::oracle::{solve_exact, verify_optimality_small, SolveMode, SolveOptions};
use aot_mec::strategy::Strategy;

fn report(criterion: &str, pass: bool, detail: &str) {
    println!(
        "acceptance criterion {criterion}: {} ({detail})",
        if pass { "PASS" } else { "FAIL" }
    );
    assert!(pass, "criterion {criterion} failed: {detail}");
}

// -------------------------------------------------------------------------
// Criterion 1: the closed-form age equals the step-sum age on >=1000
// random (instance, feasible completion log) pairs, within 1e-9, in <10 s.
// -------------------------------------------------------------------------

fn random_feasible_log(inst: &Instance, rng: &mut ChaCha8Rng) -> CompletionLog {
    // Random FCFS-respecting completion slots: walk the task list of each
    // application with random positive gaps, interleaved arbitrarily.
    let mut log = CompletionLog::new(inst.num_apps());
    let mut slot = 0usize;
    let mut pending: Vec<(usize, usize)> = Vec::new();
    let mut next = vec![0usize; inst.num_apps()];
    loop {
        pending.clear();
        for app in 0..inst.num_apps() {
            if next[app] < inst.tasks_of(app).len() {
                pending.push((app, next[app]));
            }
        }
        if pending.is_empty() {
            return log;
        }
        let (app, k) = pending[(rng.next_u64() % pending.len() as u64) as usize];
        slot += 1 + (rng.next_u64() % 4) as usize;
        log.record(app, k, inst.completion_time_of_slot(slot));
        next[app] += 1;
    }
}

#[test]
fn criterion_1_age_identity() {
    let started = Instant::now();
    let cfg = GenerationConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(0xA0E);
    let mut pairs = 0usize;
    let mut worst: f64 = 0.0;
    for seed in 0..250 {
        let inst = generate_instance(seed, &cfg).unwrap();
        for _ in 0..4 {
            let log = random_feasible_log(&inst, &mut rng);
            for app in 0..inst.num_apps() {
                let step = age_trace(&inst, &log, app).unwrap().overall;
                let closed = closed_form_age(&inst, &log, app).unwrap();
                worst = worst.max((step - closed).abs());
            }
            pairs += 1;
        }
    }
    let elapsed = started.elapsed();
    report(
        "1 (age identity)",
        pairs >= 1000 && worst < 1e-9 && elapsed < Duration::from_secs(10),
        &format!("{pairs} pairs, worst |step - closed| = {worst:.2e}, {elapsed:.2?}"),
    );
}

// -------------------------------------------------------------------------
// Criterion 2: the closed-form split beats a 10^4-point grid on >=1000
// random (volume, gain) pairs within 1e-9, and the closed-form slot energy
// matches the raw energy at the split within 1e-12 relative, in <30 s.
// -------------------------------------------------------------------------

#[test]
fn criterion_2_split_optimality() {
    let started = Instant::now();
    let params = aot_mec::model::EnergyParams::default();
    let mut rng = ChaCha8Rng::seed_from_u64(0x5B117);
    let unit = |rng: &mut ChaCha8Rng| (rng.next_u64() >> 11) as f64 / (1u64 << 53) as f64;
    let mut beaten = true;
    let mut consistent = true;
    let mut worst_gap: f64 = f64::NEG_INFINITY;
    let mut worst_rel: f64 = 0.0;
    for _ in 0..1000 {
        let d = 50.0 + unit(&mut rng) * 1950.0;
        let h = 1e-5 + unit(&mut rng) * (1e-3 - 1e-5);
        let (d_loc, d_off) = optimal_split(d, h, &params).unwrap();
        let raw_at_split =
            local_energy(d_loc, &params).unwrap() + offload_energy(d_off, h, &params).unwrap();
        let closed = slot_min_energy(d, h, &params).unwrap();
        let rel = (raw_at_split - closed).abs() / closed;
        worst_rel = worst_rel.max(rel);
        consistent &= rel <= 1e-12;
        for i in 0..=10_000 {
            let x = d * (i as f64 / 10_000.0);
            let grid = local_energy(x, &params).unwrap()
                + offload_energy(d - x, h, &params).unwrap();
            let gap = raw_at_split - grid; // must stay <= 1e-9
            worst_gap = worst_gap.max(gap);
            beaten &= gap <= 1e-9;
        }
    }
    let elapsed = started.elapsed();
    report(
        "2 (split optimality)",
        beaten && consistent && elapsed < Duration::from_secs(30),
        &format!(
            "1000 pairs x 10^4 grid, worst excess over grid = {worst_gap:.2e}, worst relative mismatch = {worst_rel:.2e}, {elapsed:.2?}"
        ),
    );
}

// -------------------------------------------------------------------------
// Criterion 3: on 2x2-task instances from 100 seeds, the exact solver
// matches a flat enumeration within 1e-6 for every mode, and every emitted
// schedule is legal and within the energy budget (1e-9 J), in <5 min.
// -------------------------------------------------------------------------

#[test]
fn criterion_3_oracle_soundness() {
    let started = Instant::now();
    let cfg = GenerationConfig {
        apps: 2,
        tasks_per_app: 2,
        horizon: 40,
        e_max: 0.05,
        ..GenerationConfig::default()
    };
    let opts = SolveOptions::default();
    let mut checked = 0usize;
    for seed in 0..100 {
        let inst = generate_instance(seed, &cfg).unwrap();
        for mode in [SolveMode::AgeOptimal, SolveMode::DelayOptimal, SolveMode::MecOnly] {
            let result = solve_exact(&inst, mode, &opts).unwrap();
            assert!(result.proved_optimal, "seed {seed} {mode:?} truncated");
            verify_optimality_small(&inst, &result)
                .unwrap_or_else(|ce| panic!("seed {seed} {mode:?}: {ce}"));
            let violations = check_schedule(&inst, &result.schedule);
            assert!(violations.is_empty(), "seed {seed} {mode:?}: {violations:?}");
            assert!(
                result.ledger.total_consumed() <= inst.e_max + 1e-9,
                "seed {seed} {mode:?} over budget"
            );
            checked += 1;
        }
    }
    let elapsed = started.elapsed();
    report(
        "3 (oracle soundness)",
        checked == 300 && elapsed < Duration::from_secs(300),
        &format!("{checked} solves verified against flat enumeration, {elapsed:.2?}"),
    );
}

// -------------------------------------------------------------------------
// Shared default experiment for criteria 4-7.
// -------------------------------------------------------------------------

struct SharedRuns {
    cells: Vec<CellResult>,
    rows: Vec<ComparisonRow>,
    summary: Summary,
    /// (file name, bytes) of both runs, pairwise comparable.
    files_a: Vec<(String, Vec<u8>)>,
    files_b: Vec<(String, Vec<u8>)>,
    wall: Duration,
}

fn shared() -> &'static SharedRuns {
    static RUNS: OnceLock<SharedRuns> = OnceLock::new();
    RUNS.get_or_init(|| {
        let started = Instant::now();
        let dir_a = tempfile::tempdir().unwrap();
        let dir_b = tempfile::tempdir().unwrap();
        let mut cfg = ExperimentConfig::default();
        cfg.out_dir = dir_a.path().to_path_buf();
        let out_a = run_experiment(&cfg).unwrap();
        cfg.out_dir = dir_b.path().to_path_buf();
        let out_b = run_experiment(&cfg).unwrap();
        let wall = started.elapsed();
        let slurp = |files: &[std::path::PathBuf]| {
            files
                .iter()
                .map(|p| {
                    (
                        p.file_name().unwrap().to_string_lossy().into_owned(),
                        std::fs::read(p).unwrap(),
                    )
                })
                .collect()
        };
        let summary = compare_summary(&out_a.rows).unwrap();
        SharedRuns {
            cells: out_a.cells,
            rows: out_a.rows,
            summary,
            files_a: slurp(&out_a.files),
            files_b: slurp(&out_b.files),
            wall,
        }
    })
}

fn cell(
    cells: &[CellResult],
    e_max: f64,
    strategy: Strategy,
    seed: u64,
) -> &CellResult {
    cells
        .iter()
        .find(|c| c.e_max.to_bits() == e_max.to_bits() && c.strategy == strategy && c.seed == seed)
        .expect("cell present")
}

// -------------------------------------------------------------------------
// Criterion 4: dominance on every instance of the default experiment.
// The age-optimal objective never exceeds the heuristic's; delay-optimal
// completes no later than any strategy; the exact strategies' objectives
// are non-increasing in the budget per seed (guaranteed by feasible-set
// growth), and every strategy's mean objective is non-increasing in the
// budget. The heuristic's per-seed curve is exempt from the last clause: a
// greedy anomaly can make a single instance regress when a larger budget
// reorders the delta scores.
// -------------------------------------------------------------------------

#[test]
fn criterion_4_dominance() {
    let runs = shared();
    let cfg = ExperimentConfig::default();
    let seeds: Vec<u64> = match cfg.seeds {
        aot_mec::experiment::SeedSpec::Range { base, count } => {
            (0..count as u64).map(|i| base + i).collect()
        }
        aot_mec::experiment::SeedSpec::List(ref l) => l.clone(),
    };
    assert!(runs.cells.iter().all(|c| c.status == CellStatus::Ok));

    let mut age_le_heuristic = true;
    let mut delay_completes_first = true;
    let mut oracle_monotone = true;
    for &seed in &seeds {
        let mut prev: Option<[f64; 3]> = None;
        for &e_max in &cfg.emax_grid {
            let heuristic = cell(&runs.cells, e_max, Strategy::Heuristic, seed);
            let age = cell(&runs.cells, e_max, Strategy::AgeOptimal, seed);
            let delay = cell(&runs.cells, e_max, Strategy::DelayOptimal, seed);
            let mec = cell(&runs.cells, e_max, Strategy::MecOnly, seed);
            age_le_heuristic &= age.sum_aot.unwrap() <= heuristic.sum_aot.unwrap() + 1e-9;
            for other in [heuristic, age, mec] {
                delay_completes_first &=
                    delay.completion_time.unwrap() <= other.completion_time.unwrap() + 1e-9;
            }
            let objs = [
                age.sum_aot.unwrap(),
                delay.completion_time.unwrap(),
                mec.sum_aot.unwrap(),
            ];
            if let Some(p) = prev {
                for (a, b) in p.iter().zip(&objs) {
                    oracle_monotone &= *b <= a + 1e-9;
                }
            }
            prev = Some(objs);
        }
    }

    let mut means_monotone = true;
    for strategy in &cfg.strategies {
        let mut prev = f64::INFINITY;
        for &e_max in &cfg.emax_grid {
            let row = runs
                .rows
                .iter()
                .find(|r| r.e_max.to_bits() == e_max.to_bits() && r.strategy == *strategy)
                .unwrap();
            let value = match strategy {
                Strategy::DelayOptimal => row.mean_completion_time,
                _ => row.mean_sum_aot,
            };
            means_monotone &= value <= prev + 1e-9;
            prev = value;
        }
    }

    report(
        "4 (dominance)",
        age_le_heuristic && delay_completes_first && oracle_monotone && means_monotone,
        &format!(
            "age<=heuristic: {age_le_heuristic}, delay completes first: {delay_completes_first}, exact objectives monotone per seed: {oracle_monotone}, mean objectives monotone: {means_monotone}"
        ),
    );
}

// -------------------------------------------------------------------------
// Criterion 5: summed-age statistics of the default experiment.
// -------------------------------------------------------------------------

#[test]
fn criterion_5_sum_aot_statistics() {
    let runs = shared();
    let cfg = ExperimentConfig::default();

    let mut mec_worst_everywhere = true;
    for &e_max in &cfg.emax_grid {
        let aot_of = |s: Strategy| {
            runs.rows
                .iter()
                .find(|r| r.e_max.to_bits() == e_max.to_bits() && r.strategy == s)
                .unwrap()
                .mean_sum_aot
        };
        let mec = aot_of(Strategy::MecOnly);
        for s in [Strategy::Heuristic, Strategy::AgeOptimal, Strategy::DelayOptimal] {
            mec_worst_everywhere &= mec >= aot_of(s);
        }
    }

    let s = &runs.summary;
    let gap_age = s.aot_gap_delay_minus_age;
    let gap_heuristic = s.aot_gap_delay_minus_heuristic;
    let ratio = s.aot_ratio_age_over_heuristic;
    let gap_age_ok = (gap_age - 18.2).abs() <= 0.4 * 18.2;
    let gap_heuristic_ok = (gap_heuristic - 5.7).abs() <= 0.5 * 5.7;
    let ratio_ok = (ratio - 0.932).abs() <= 0.05;
    let runtime_ok = runs.wall < Duration::from_secs(1800);

    report(
        "5 (summed-age statistics)",
        mec_worst_everywhere && gap_age_ok && gap_heuristic_ok && ratio_ok && runtime_ok,
        &format!(
            "mec-only worst everywhere: {mec_worst_everywhere}, delay-age gap {gap_age:.2} (18.2 +/- 40%), delay-heuristic gap {gap_heuristic:.2} (5.7 +/- 50%), optimality ratio {ratio:.4} (0.932 +/- 0.05), two full runs in {:.1?}",
            runs.wall
        ),
    );
}

// -------------------------------------------------------------------------
// Criterion 6: completion-time statistics of the default experiment.
// -------------------------------------------------------------------------

#[test]
fn criterion_6_completion_statistics() {
    let runs = shared();
    let cfg = ExperimentConfig::default();

    let mut mec_slowest_everywhere = true;
    for &e_max in &cfg.emax_grid {
        let completion_of = |s: Strategy| {
            runs.rows
                .iter()
                .find(|r| r.e_max.to_bits() == e_max.to_bits() && r.strategy == s)
                .unwrap()
                .mean_completion_time
        };
        let mec = completion_of(Strategy::MecOnly);
        for s in [Strategy::Heuristic, Strategy::AgeOptimal, Strategy::DelayOptimal] {
            mec_slowest_everywhere &= mec >= completion_of(s);
        }
    }

    let s = &runs.summary;
    let gap_age = s.completion_gap_age_minus_delay;
    let gap_heuristic = s.completion_gap_heuristic_minus_delay;
    let ratio = s.completion_ratio_delay_over_heuristic;
    let gap_age_ok = (gap_age - 0.07).abs() <= 0.5;
    let gap_heuristic_ok = (gap_heuristic - 0.43).abs() <= 0.5;
    let ratio_ok = (ratio - 0.956).abs() <= 0.05;

    report(
        "6 (completion statistics)",
        mec_slowest_everywhere && gap_age_ok && gap_heuristic_ok && ratio_ok,
        &format!(
            "mec-only slowest everywhere: {mec_slowest_everywhere}, age-delay gap {gap_age:.3} (0.07 +/- 0.5), heuristic-delay gap {gap_heuristic:.3} (0.43 +/- 0.5), completion ratio {ratio:.4} (0.956 +/- 0.05)"
        ),
    );
}

// -------------------------------------------------------------------------
// Criterion 7: two executions of the full default experiment produce
// byte-identical CSV output.
// -------------------------------------------------------------------------

#[test]
fn criterion_7_determinism() {
    let runs = shared();
    let mut identical = runs.files_a.len() == runs.files_b.len();
    let mut detail = format!("{} files", runs.files_a.len());
    for ((name_a, bytes_a), (name_b, bytes_b)) in runs.files_a.iter().zip(&runs.files_b) {
        if name_a != name_b || bytes_a != bytes_b {
            identical = false;
            detail = format!("{name_a} differs between runs");
            break;
        }
    }
    report("7 (determinism)", identical, &detail);
}
