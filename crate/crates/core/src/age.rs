//! Age-of-task trajectories and overall age.
//!
//! Two independent routes compute the overall age of an application:
//! [`age_trace`] replays the slot-by-slot recurrence (age climbs by one per
//! slot, drops when a task completes, hits zero when the queue empties) and
//! sums the per-slot values, while [`closed_form_age`] evaluates the
//! geometric decomposition of the sawtooth area (one parallelogram strip per
//! completed task plus a final trapezoid). The step-sum is the ground truth;
//! the closed form is validated against it and the two must agree exactly.

use thiserror::Error;

use crate::model::Instance;

/// Per-application record of completion times, ordered by task index.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct CompletionLog {
    per_app: Vec<Vec<(usize, f64)>>,
}

impl CompletionLog {
    pub fn new(num_apps: usize) -> Self {
        Self {
            per_app: vec![Vec::new(); num_apps],
        }
    }

    /// Records the absolute completion time of `(app, task)`.
    pub fn record(&mut self, app: usize, task: usize, time: f64) {
        self.per_app[app].push((task, time));
    }

    pub fn completions(&self, app: usize) -> &[(usize, f64)] {
        &self.per_app[app]
    }

    pub fn num_apps(&self) -> usize {
        self.per_app.len()
    }

    /// Completion time of the last task across all applications, if any.
    pub fn last_completion(&self) -> Option<f64> {
        self.per_app
            .iter()
            .flat_map(|c| c.iter().map(|&(_, t)| t))
            .fold(None, |acc, t| Some(acc.map_or(t, |a: f64| a.max(t))))
    }

    /// All recorded completions as `(app, task, time)`.
    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        self.per_app.iter().enumerate().flat_map(|(app, completions)| {
            completions.iter().map(move |&(task, time)| (app, task, time))
        })
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AgeError {
    #[error("application index {0} out of range")]
    UnknownApp(usize),
    #[error("app {app}: completion log misses task {task}")]
    MissingTask { app: usize, task: usize },
    #[error("app {app} task {task}: completed at {time}, not after the scheduling start {tau0}")]
    CompletionNotAfterStart {
        app: usize,
        task: usize,
        time: f64,
        tau0: f64,
    },
    #[error("app {app} task {task}: completion time {time} is not an integral slot")]
    NonIntegralSlot { app: usize, task: usize, time: f64 },
    #[error("app {app} task {task}: completions must be strictly increasing")]
    OutOfOrder { app: usize, task: usize },
    #[error("app {app} task {task}: completed before it was generated")]
    CompletedBeforeGeneration { app: usize, task: usize },
}

/// Completion slots (slot counts since the scheduling start) of every task
/// of one application, validated against the instance.
fn completion_slots(inst: &Instance, log: &CompletionLog, app: usize) -> Result<Vec<usize>, AgeError> {
    if app >= inst.num_apps() || app >= log.num_apps() {
        return Err(AgeError::UnknownApp(app));
    }
    let tasks = inst.tasks_of(app);
    let completions = log.completions(app);
    let mut slots = Vec::with_capacity(tasks.len());
    let mut prev = 0usize;
    for (k, task) in tasks.iter().enumerate() {
        let &(_, time) = completions
            .iter()
            .find(|&&(idx, _)| idx == k)
            .ok_or(AgeError::MissingTask { app, task: k })?;
        if time <= inst.tau0 {
            return Err(AgeError::CompletionNotAfterStart {
                app,
                task: k,
                time,
                tau0: inst.tau0,
            });
        }
        if time < task.gen_time {
            return Err(AgeError::CompletedBeforeGeneration { app, task: k });
        }
        let raw = time - inst.tau0;
        let slot = raw.round();
        if (raw - slot).abs() > 1e-9 || slot < 1.0 {
            return Err(AgeError::NonIntegralSlot { app, task: k, time });
        }
        let slot = slot as usize;
        if k > 0 && slot <= prev {
            return Err(AgeError::OutOfOrder { app, task: k });
        }
        prev = slot;
        slots.push(slot);
    }
    Ok(slots)
}

/// Instantaneous age sequence of one application.
#[derive(Debug, Clone, PartialEq)]
pub struct AgeTrace {
    pub app: usize,
    /// `ages[t-1]` is the age at slot `t`, for `t = 1..=last completion slot`.
    pub ages: Vec<f64>,
    /// Area under the age curve: the sum of the per-slot ages.
    pub overall: f64,
}

impl AgeTrace {
    /// Age at a 1-based slot; zero after the last task completed.
    pub fn age_at(&self, slot: usize) -> f64 {
        if slot == 0 {
            return 0.0;
        }
        self.ages.get(slot - 1).copied().unwrap_or(0.0)
    }
}

/// Replays the age recurrence slot by slot.
///
/// The age starts at `tau0 - gen_time(first task)`, climbs by one per slot,
/// and when task `k` completes in slot `t-1` it restarts from the elapsed
/// time since task `k+1` was generated. The trace covers slots `1..=c` where
/// `c` is the application's last completion slot; the age is zero afterwards.
pub fn age_trace(inst: &Instance, log: &CompletionLog, app: usize) -> Result<AgeTrace, AgeError> {
    let slots = completion_slots(inst, log, app)?;
    let tasks = inst.tasks_of(app);
    let last = *slots.last().expect("validated non-empty");

    // completion slot -> index of the task completed there
    let mut completed_at = vec![None; last + 1];
    for (k, &c) in slots.iter().enumerate() {
        completed_at[c] = Some(k);
    }

    let mut ages = Vec::with_capacity(last);
    let mut prev = inst.tau0 - tasks[0].gen_time;
    for t in 1..=last {
        let age = match completed_at[t - 1] {
            // No completion in the previous slot: climb.
            None => prev + 1.0,
            // Task k completed in slot t-1: restart from the age of the
            // next unprocessed task (k+1 exists because k completed before
            // the application's last completion slot).
            Some(k) => inst.tau0 + t as f64 - tasks[k + 1].gen_time,
        };
        ages.push(age);
        prev = age;
    }
    let overall = ages.iter().sum();
    Ok(AgeTrace { app, ages, overall })
}

/// Closed-form overall age of one application from its generation times and
/// completion slots. Shared by [`closed_form_age`] and the exact solver so
/// both evaluate the identical arithmetic.
pub(crate) fn overall_age_from_slots(tau0: f64, gen_times: &[f64], slots: &[usize]) -> f64 {
    let k_last = gen_times.len() - 1;
    let c_last = slots[k_last] as f64;
    let trapezoid = c_last * c_last / 2.0 + (tau0 - gen_times[k_last] + 0.5) * c_last;
    let strips: f64 = (0..k_last)
        .map(|k| (gen_times[k + 1] - gen_times[k]) * slots[k] as f64)
        .sum();
    trapezoid + strips
}

/// Overall age via the geometric decomposition of the sawtooth area.
///
/// With completion slots `c_k` and generation gaps `delta_k`, the area is
/// `c_K^2/2 + (tau0 - gen_K + 1/2) * c_K + sum_{k<K} delta_k * c_k`: one
/// parallelogram strip of height `delta_k` per non-final task plus the
/// final task's trapezoid.
pub fn closed_form_age(inst: &Instance, log: &CompletionLog, app: usize) -> Result<f64, AgeError> {
    let slots = completion_slots(inst, log, app)?;
    let tasks = inst.tasks_of(app);
    let gen_times: Vec<f64> = tasks.iter().map(|t| t.gen_time).collect();
    Ok(overall_age_from_slots(inst.tau0, &gen_times, &slots))
}

/// Sum of the overall ages of all applications.
pub fn sum_age(inst: &Instance, log: &CompletionLog) -> Result<f64, AgeError> {
    (0..inst.num_apps())
        .map(|app| closed_form_age(inst, log, app))
        .sum()
}
