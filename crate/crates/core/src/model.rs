//! Problem data types, instance validation, seeded instance generation and
//! schedule legality checking.
//!
//! Conventions used throughout the crate:
//! - applications and tasks are indexed from 0 everywhere, including files
//!   and CSV output;
//! - time slots are indexed from 1; a task finishing in slot `t` has
//!   absolute completion time `tau0 + t`;
//! - data volumes are continuous (real-valued bits); a task counts as
//!   complete once its remaining size is at most [`BIT_TOLERANCE`].

use std::collections::BTreeMap;

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::kv::{KvError, KvMap, KvWriter};

/// A task is complete when its remaining size drops to this many bits.
pub const BIT_TOLERANCE: f64 = 1e-6;

// ---------------------------------------------------------------------------
// Domain types
// ---------------------------------------------------------------------------

/// Physical constants of the energy model.
///
/// The derived coefficients are recomputed on demand so they can never go
/// stale: `alpha = gamma * omega^3 / tau^2` scales the cubic local-computing
/// energy, `lambda = lambda0 / tau^(m-1)` scales the monomial transmit
/// energy.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyParams {
    /// Chip energy coefficient (per CPU cycle, scaled by frequency squared).
    pub gamma: f64,
    /// CPU cycles needed per bit of input data.
    pub omega: f64,
    /// Slot length in seconds.
    pub tau: f64,
    /// Transmit energy coefficient (bandwidth/noise efforts).
    pub lambda0: f64,
    /// Monomial order of the transmit-energy model, 2..=5.
    pub m: u32,
}

impl Default for EnergyParams {
    fn default() -> Self {
        Self {
            gamma: 1e-28,
            omega: 1e5,
            tau: 0.01,
            lambda0: 1e-17,
            m: 3,
        }
    }
}

impl EnergyParams {
    /// Local-computing energy coefficient: energy = alpha * d_loc^3.
    pub fn alpha(&self) -> f64 {
        self.gamma * self.omega.powi(3) / (self.tau * self.tau)
    }

    /// Offloading energy coefficient: energy = lambda * d_off^m / h.
    pub fn lambda(&self) -> f64 {
        self.lambda0 / self.tau.powi(self.m as i32 - 1)
    }

    fn collect_issues(&self, issues: &mut Vec<ValidationIssue>) {
        if !(self.gamma > 0.0) {
            issues.push(ValidationIssue::BadParam {
                name: "gamma",
                value: self.gamma,
            });
        }
        if !(self.omega >= 1.0) {
            issues.push(ValidationIssue::BadParam {
                name: "omega",
                value: self.omega,
            });
        }
        if !(self.tau > 0.0) {
            issues.push(ValidationIssue::BadParam {
                name: "tau",
                value: self.tau,
            });
        }
        if !(self.lambda0 > 0.0) {
            issues.push(ValidationIssue::BadParam {
                name: "lambda0",
                value: self.lambda0,
            });
        }
        if !(2..=5).contains(&self.m) {
            issues.push(ValidationIssue::BadMonomialOrder { m: self.m });
        }
    }
}

/// One computation task of one application.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Task {
    /// Application index (0-based).
    pub app: usize,
    /// Task index within its application (0-based).
    pub index: usize,
    /// Input data size in bits.
    pub size_bits: f64,
    /// Absolute generation time, in slot units.
    pub gen_time: f64,
}

/// Channel gains for slots `1..=horizon`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelTrace {
    gains: Vec<f64>,
}

impl ChannelTrace {
    pub fn new(gains: Vec<f64>) -> Self {
        Self { gains }
    }

    pub fn len(&self) -> usize {
        self.gains.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gains.is_empty()
    }

    /// Gain of a 1-based slot.
    pub fn gain(&self, slot: usize) -> f64 {
        self.gains[slot - 1]
    }

    /// Gains of the 1-based inclusive slot window `start..=end`.
    pub fn window(&self, start: usize, end: usize) -> &[f64] {
        &self.gains[start - 1..end]
    }

    pub fn gains(&self) -> &[f64] {
        &self.gains
    }
}

/// Immutable problem description.
#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    /// Per-application task lists; `apps[n][k]` is task k of application n.
    pub apps: Vec<Vec<Task>>,
    pub channel: ChannelTrace,
    pub params: EnergyParams,
    /// Total energy budget in joules.
    pub e_max: f64,
    /// Absolute start time of the scheduling horizon, in slot units.
    pub tau0: f64,
    /// Number of schedulable slots.
    pub horizon: usize,
}

impl Instance {
    pub fn num_apps(&self) -> usize {
        self.apps.len()
    }

    pub fn tasks_of(&self, app: usize) -> &[Task] {
        &self.apps[app]
    }

    pub fn task(&self, app: usize, index: usize) -> &Task {
        &self.apps[app][index]
    }

    pub fn total_tasks(&self) -> usize {
        self.apps.iter().map(Vec::len).sum()
    }

    /// Absolute completion time of a task finishing in 1-based slot `t`.
    pub fn completion_time_of_slot(&self, t: usize) -> f64 {
        self.tau0 + t as f64
    }
}

/// One slot of a schedule: the selected task (if any) and the split of the
/// data volume processed in that slot.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlotDecision {
    /// 1-based slot index.
    pub slot: usize,
    /// Selected `(app, task)`, or `None` for an idle slot.
    pub task: Option<(usize, usize)>,
    /// Bits executed on the local CPU.
    pub d_loc: f64,
    /// Bits offloaded to the server.
    pub d_off: f64,
}

impl SlotDecision {
    pub fn idle(slot: usize) -> Self {
        Self {
            slot,
            task: None,
            d_loc: 0.0,
            d_off: 0.0,
        }
    }
}

/// A complete schedule: per-slot decisions plus the absolute completion
/// times they imply.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Schedule {
    pub decisions: Vec<SlotDecision>,
    pub completion_times: BTreeMap<(usize, usize), f64>,
}

impl Schedule {
    /// Last slot carrying any decision, 0 when empty.
    pub fn last_slot(&self) -> usize {
        self.decisions.iter().map(|d| d.slot).max().unwrap_or(0)
    }
}

// ---------------------------------------------------------------------------
// Validation
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ValidationIssue {
    #[error("task ({app},{task}): size must be positive, got {size}")]
    NonPositiveSize { app: usize, task: usize, size: f64 },
    #[error("task ({app},{task}): generation times must be strictly increasing within an application")]
    GenTimeNotIncreasing { app: usize, task: usize },
    #[error("task ({app},{task}): generated at {gen} after the scheduling start {tau0}")]
    GenTimeAfterStart {
        app: usize,
        task: usize,
        gen: f64,
        tau0: f64,
    },
    #[error("task ({app},{task}): app/index fields ({field_app},{field_index}) disagree with position")]
    TaskIndexMismatch {
        app: usize,
        task: usize,
        field_app: usize,
        field_index: usize,
    },
    #[error("application {app} has no tasks")]
    EmptyApp { app: usize },
    #[error("instance has no applications")]
    NoApps,
    #[error("channel length {actual} does not match horizon {expected}")]
    ChannelLength { expected: usize, actual: usize },
    #[error("channel gain at slot {slot} must be positive, got {gain}")]
    NonPositiveGain { slot: usize, gain: f64 },
    #[error("energy parameter {name} out of range: {value}")]
    BadParam { name: &'static str, value: f64 },
    #[error("monomial order m={m} outside the supported range 2..=5")]
    BadMonomialOrder { m: u32 },
    #[error("energy budget must be positive, got {0}")]
    NonPositiveBudget(f64),
    #[error("horizon must be at least 1")]
    ZeroHorizon,
}

/// Returns every violated invariant of the instance and its nested types;
/// an empty list means the instance is valid.
pub fn validate_instance(inst: &Instance) -> Vec<ValidationIssue> {
    let mut issues = Vec::new();
    if inst.apps.is_empty() {
        issues.push(ValidationIssue::NoApps);
    }
    for (n, tasks) in inst.apps.iter().enumerate() {
        if tasks.is_empty() {
            issues.push(ValidationIssue::EmptyApp { app: n });
        }
        for (k, task) in tasks.iter().enumerate() {
            if task.app != n || task.index != k {
                issues.push(ValidationIssue::TaskIndexMismatch {
                    app: n,
                    task: k,
                    field_app: task.app,
                    field_index: task.index,
                });
            }
            if !(task.size_bits > 0.0) {
                issues.push(ValidationIssue::NonPositiveSize {
                    app: n,
                    task: k,
                    size: task.size_bits,
                });
            }
            if k > 0 && !(task.gen_time > tasks[k - 1].gen_time) {
                issues.push(ValidationIssue::GenTimeNotIncreasing { app: n, task: k });
            }
            if task.gen_time > inst.tau0 {
                issues.push(ValidationIssue::GenTimeAfterStart {
                    app: n,
                    task: k,
                    gen: task.gen_time,
                    tau0: inst.tau0,
                });
            }
        }
    }
    if inst.horizon == 0 {
        issues.push(ValidationIssue::ZeroHorizon);
    }
    if inst.channel.len() != inst.horizon {
        issues.push(ValidationIssue::ChannelLength {
            expected: inst.horizon,
            actual: inst.channel.len(),
        });
    }
    for (i, &g) in inst.channel.gains().iter().enumerate() {
        if !(g > 0.0) {
            issues.push(ValidationIssue::NonPositiveGain { slot: i + 1, gain: g });
        }
    }
    inst.params.collect_issues(&mut issues);
    if !(inst.e_max > 0.0) {
        issues.push(ValidationIssue::NonPositiveBudget(inst.e_max));
    }
    issues
}

// ---------------------------------------------------------------------------
// Instance generation
// ---------------------------------------------------------------------------

/// Parameters of the random-instance generator.
#[derive(Debug, Clone, PartialEq)]
pub struct GenerationConfig {
    pub apps: usize,
    pub tasks_per_app: usize,
    /// Task sizes are drawn uniformly from this range (bits).
    pub size_range: (f64, f64),
    /// Generation times are drawn uniformly from this range (slot units).
    pub gen_time_range: (f64, f64),
    /// Channel gains are drawn uniformly from this range.
    pub gain_range: (f64, f64),
    pub tau0: f64,
    pub horizon: usize,
    pub e_max: f64,
    pub params: EnergyParams,
}

impl Default for GenerationConfig {
    fn default() -> Self {
        Self {
            apps: 3,
            tasks_per_app: 3,
            size_range: (400.0, 600.0),
            gen_time_range: (1.0, 8.0),
            gain_range: (1e-5, 1e-3),
            tau0: 10.0,
            horizon: 200,
            e_max: 0.15,
            params: EnergyParams::default(),
        }
    }
}

#[derive(Debug, Error)]
pub enum GenerationError {
    #[error("invalid generation config: {0}")]
    InvalidConfig(String),
    #[error("generated instance failed validation: {0:?}")]
    InvalidInstance(Vec<ValidationIssue>),
}

impl GenerationConfig {
    fn check(&self) -> Result<(), GenerationError> {
        let bad = |msg: &str| Err(GenerationError::InvalidConfig(msg.to_string()));
        if self.apps == 0 {
            return bad("apps must be >= 1");
        }
        if self.tasks_per_app == 0 {
            return bad("tasks_per_app must be >= 1");
        }
        if self.horizon == 0 {
            return bad("horizon must be >= 1");
        }
        for (name, (lo, hi)) in [
            ("size_range", self.size_range),
            ("gen_time_range", self.gen_time_range),
            ("gain_range", self.gain_range),
        ] {
            if !(lo > 0.0 && hi >= lo) {
                return bad(&format!("{name} must satisfy 0 < lo <= hi"));
            }
        }
        if self.gen_time_range.1 > self.tau0 {
            return bad("gen_time_range must not extend past tau0");
        }
        if !(self.e_max > 0.0) {
            return bad("e_max must be positive");
        }
        Ok(())
    }
}

/// Maps a raw 64-bit draw to the unit interval `[0, 1)` using the top 53
/// bits. Documented so the stream is reproducible from the seed alone.
fn unit(rng: &mut ChaCha8Rng) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

fn uniform(rng: &mut ChaCha8Rng, range: (f64, f64)) -> f64 {
    range.0 + unit(rng) * (range.1 - range.0)
}

/// Deterministically generates a random instance from a seed.
///
/// Draw order is fixed: task sizes app-major, then generation times
/// app-major (each application's times drawn then sorted ascending), then
/// channel gains for slots `1..=horizon`. The generator is a pure function
/// of `(seed, cfg)`.
pub fn generate_instance(seed: u64, cfg: &GenerationConfig) -> Result<Instance, GenerationError> {
    cfg.check()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let mut sizes = vec![vec![0.0; cfg.tasks_per_app]; cfg.apps];
    for app_sizes in sizes.iter_mut() {
        for s in app_sizes.iter_mut() {
            *s = uniform(&mut rng, cfg.size_range);
        }
    }

    let mut gen_times = vec![vec![0.0; cfg.tasks_per_app]; cfg.apps];
    for app_times in gen_times.iter_mut() {
        for t in app_times.iter_mut() {
            *t = uniform(&mut rng, cfg.gen_time_range);
        }
        app_times.sort_by(|a, b| a.partial_cmp(b).unwrap());
    }

    let gains = (0..cfg.horizon)
        .map(|_| uniform(&mut rng, cfg.gain_range))
        .collect();

    let apps = sizes
        .into_iter()
        .zip(gen_times)
        .enumerate()
        .map(|(n, (ss, ts))| {
            ss.into_iter()
                .zip(ts)
                .enumerate()
                .map(|(k, (size_bits, gen_time))| Task {
                    app: n,
                    index: k,
                    size_bits,
                    gen_time,
                })
                .collect()
        })
        .collect();

    let inst = Instance {
        apps,
        channel: ChannelTrace::new(gains),
        params: cfg.params,
        e_max: cfg.e_max,
        tau0: cfg.tau0,
        horizon: cfg.horizon,
    };
    let issues = validate_instance(&inst);
    if issues.is_empty() {
        Ok(inst)
    } else {
        Err(GenerationError::InvalidInstance(issues))
    }
}

// ---------------------------------------------------------------------------
// Schedule checking
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ScheduleViolation {
    #[error("slot {slot}: more than one task selected")]
    MultipleSelections { slot: usize },
    #[error("slot {slot}: selects unknown task ({app},{task})")]
    UnknownTask { slot: usize, app: usize, task: usize },
    #[error("slot {slot} outside 1..={horizon}")]
    SlotOutOfRange { slot: usize, horizon: usize },
    #[error("slot {slot}: task ({app},{task}) selected before its predecessor completed")]
    FcfsViolation { slot: usize, app: usize, task: usize },
    #[error("slot {slot}: task ({app},{task}) is in progress but not selected")]
    PreemptionViolation { slot: usize, app: usize, task: usize },
    #[error("slot {slot}: task ({app},{task}) processes {amount} bits with only {remaining} remaining")]
    OverProcessed {
        slot: usize,
        app: usize,
        task: usize,
        amount: f64,
        remaining: f64,
    },
    #[error("slot {slot}: negative data volume")]
    NegativeVolume { slot: usize },
    #[error("slot {slot}: data volume without a selected task")]
    VolumeWithoutTask { slot: usize },
    #[error("slot {slot}: task ({app},{task}) selected after completion")]
    SelectedCompleted { slot: usize, app: usize, task: usize },
    #[error("task ({app},{task}) incomplete: {remaining} bits remaining")]
    Incomplete {
        app: usize,
        task: usize,
        remaining: f64,
    },
    #[error("task ({app},{task}): recorded completion time {recorded:?} does not match replay {actual:?}")]
    CompletionTimeMismatch {
        app: usize,
        task: usize,
        recorded: Option<f64>,
        actual: Option<f64>,
    },
}

/// Replays a schedule against the slot-by-slot state update and reports
/// every violated scheduling or offloading rule. An empty list means the
/// schedule is legal and complete.
pub fn check_schedule(inst: &Instance, sched: &Schedule) -> Vec<ScheduleViolation> {
    let mut violations = Vec::new();
    let mut by_slot: BTreeMap<usize, Vec<&SlotDecision>> = BTreeMap::new();
    for d in &sched.decisions {
        if d.slot == 0 || d.slot > inst.horizon {
            violations.push(ScheduleViolation::SlotOutOfRange {
                slot: d.slot,
                horizon: inst.horizon,
            });
            continue;
        }
        by_slot.entry(d.slot).or_default().push(d);
    }

    let mut remaining: Vec<Vec<f64>> = inst
        .apps
        .iter()
        .map(|tasks| tasks.iter().map(|t| t.size_bits).collect())
        .collect();
    let mut actual_completion: BTreeMap<(usize, usize), f64> = BTreeMap::new();

    let last = by_slot.keys().next_back().copied().unwrap_or(0);
    for slot in 1..=last {
        let decisions = by_slot.get(&slot).map(Vec::as_slice).unwrap_or(&[]);
        let selected: Vec<&SlotDecision> = decisions.iter().filter(|d| d.task.is_some()).copied().collect();
        if selected.len() > 1 {
            violations.push(ScheduleViolation::MultipleSelections { slot });
        }
        for d in decisions {
            if d.d_loc < 0.0 || d.d_off < 0.0 {
                violations.push(ScheduleViolation::NegativeVolume { slot });
            }
            if d.task.is_none() && (d.d_loc != 0.0 || d.d_off != 0.0) {
                violations.push(ScheduleViolation::VolumeWithoutTask { slot });
            }
        }

        // A partially processed task must hold the slot until it completes.
        let in_progress = remaining.iter().enumerate().find_map(|(n, rem)| {
            rem.iter().enumerate().find_map(|(k, &r)| {
                let size = inst.apps[n][k].size_bits;
                (r > BIT_TOLERANCE && r < size).then_some((n, k))
            })
        });
        let slot_task = selected.first().and_then(|d| d.task);
        if let Some(active) = in_progress {
            if slot_task != Some(active) {
                violations.push(ScheduleViolation::PreemptionViolation {
                    slot,
                    app: active.0,
                    task: active.1,
                });
            }
        }

        for d in &selected {
            let (n, k) = d.task.unwrap();
            if n >= inst.apps.len() || k >= inst.apps[n].len() {
                violations.push(ScheduleViolation::UnknownTask { slot, app: n, task: k });
                continue;
            }
            if remaining[n][k] <= BIT_TOLERANCE {
                violations.push(ScheduleViolation::SelectedCompleted { slot, app: n, task: k });
                continue;
            }
            if k > 0 && remaining[n][k - 1] > BIT_TOLERANCE {
                violations.push(ScheduleViolation::FcfsViolation { slot, app: n, task: k });
            }
            let amount = d.d_loc + d.d_off;
            if amount > remaining[n][k] + BIT_TOLERANCE {
                violations.push(ScheduleViolation::OverProcessed {
                    slot,
                    app: n,
                    task: k,
                    amount,
                    remaining: remaining[n][k],
                });
            }
            remaining[n][k] -= amount;
            if remaining[n][k] <= BIT_TOLERANCE {
                actual_completion
                    .entry((n, k))
                    .or_insert_with(|| inst.completion_time_of_slot(slot));
            }
        }
    }

    for (n, tasks) in inst.apps.iter().enumerate() {
        for k in 0..tasks.len() {
            if remaining[n][k] > BIT_TOLERANCE {
                violations.push(ScheduleViolation::Incomplete {
                    app: n,
                    task: k,
                    remaining: remaining[n][k],
                });
            }
        }
    }

    // Recorded completion times must agree with the replay.
    let mut keys: Vec<(usize, usize)> = sched.completion_times.keys().copied().collect();
    keys.extend(actual_completion.keys().copied());
    keys.sort_unstable();
    keys.dedup();
    for key in keys {
        let recorded = sched.completion_times.get(&key).copied();
        let actual = actual_completion.get(&key).copied();
        let agree = match (recorded, actual) {
            (Some(r), Some(a)) => (r - a).abs() <= 1e-9,
            _ => false,
        };
        if !agree {
            violations.push(ScheduleViolation::CompletionTimeMismatch {
                app: key.0,
                task: key.1,
                recorded,
                actual,
            });
        }
    }

    violations
}

// ---------------------------------------------------------------------------
// Instance text format
// ---------------------------------------------------------------------------

pub const INSTANCE_FORMAT_TAG: &str = "aot-mec-instance-v1";

#[derive(Debug, Error)]
pub enum InstanceIoError {
    #[error(transparent)]
    Kv(#[from] KvError),
    #[error("unsupported format tag {0:?}")]
    BadFormat(String),
    #[error("instance failed validation: {0:?}")]
    Invalid(Vec<ValidationIssue>),
}

impl Instance {
    /// Serializes the instance to the flat key-value text format.
    /// Round-tripping through [`Instance::from_kv_str`] is lossless.
    pub fn to_kv_string(&self) -> String {
        let mut w = KvWriter::new();
        w.put("format", INSTANCE_FORMAT_TAG);
        w.put("apps", self.apps.len());
        let counts: Vec<usize> = self.apps.iter().map(Vec::len).collect();
        w.put_usize_list("tasks_per_app", &counts);
        w.put("tau0", self.tau0);
        w.put("horizon", self.horizon);
        w.put("e_max", self.e_max);
        w.put("gamma", self.params.gamma);
        w.put("omega", self.params.omega);
        w.put("tau", self.params.tau);
        w.put("lambda0", self.params.lambda0);
        w.put("m", self.params.m);
        for tasks in &self.apps {
            for t in tasks {
                w.put(&format!("app{}.task{}.size_bits", t.app, t.index), t.size_bits);
                w.put(&format!("app{}.task{}.gen_time", t.app, t.index), t.gen_time);
            }
        }
        w.put_f64_list("channel_gains", self.channel.gains());
        w.finish()
    }

    pub fn from_kv_str(text: &str) -> Result<Self, InstanceIoError> {
        let map = KvMap::parse(text)?;
        let tag = map.get_str("format")?;
        if tag != INSTANCE_FORMAT_TAG {
            return Err(InstanceIoError::BadFormat(tag.to_string()));
        }
        let num_apps = map.get_usize("apps")?;
        let counts = map.get_usize_list("tasks_per_app")?;
        if counts.len() != num_apps {
            return Err(InstanceIoError::Kv(KvError::BadValue {
                key: "tasks_per_app".into(),
                value: format!("{} entries", counts.len()),
                wanted: "one count per application",
            }));
        }
        let params = EnergyParams {
            gamma: map.get_f64("gamma")?,
            omega: map.get_f64("omega")?,
            tau: map.get_f64("tau")?,
            lambda0: map.get_f64("lambda0")?,
            m: map.get_u32("m")?,
        };
        let mut apps = Vec::with_capacity(num_apps);
        for (n, &count) in counts.iter().enumerate() {
            let mut tasks = Vec::with_capacity(count);
            for k in 0..count {
                tasks.push(Task {
                    app: n,
                    index: k,
                    size_bits: map.get_f64(&format!("app{n}.task{k}.size_bits"))?,
                    gen_time: map.get_f64(&format!("app{n}.task{k}.gen_time"))?,
                });
            }
            apps.push(tasks);
        }
        let inst = Instance {
            apps,
            channel: ChannelTrace::new(map.get_f64_list("channel_gains")?),
            params,
            e_max: map.get_f64("e_max")?,
            tau0: map.get_f64("tau0")?,
            horizon: map.get_usize("horizon")?,
        };
        let issues = validate_instance(&inst);
        if issues.is_empty() {
            Ok(inst)
        } else {
            Err(InstanceIoError::Invalid(issues))
        }
    }
}
