//! Energy physics and per-task offloading optimization.
//!
//! Local computing costs `alpha * d^3` joules for `d` bits; offloading `d`
//! bits over a slot with channel gain `h` costs `lambda * d^m / h`. For the
//! cubic case (`m = 3`) the per-slot local/offload split, the per-slot
//! minimum energy and the cross-slot data partition all have closed forms;
//! [`min_slots_plan`] combines them into the feasibility test that finds the
//! minimum number of slots a task needs under its energy budget.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::model::{EnergyParams, Instance, Task};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EnergyError {
    #[error("data volume must be non-negative, got {0}")]
    NegativeData(f64),
    #[error("channel gain must be positive, got {0}")]
    NonPositiveGain(f64),
    #[error("closed-form allocation requires monomial order 3, got {0}")]
    UnsupportedOrder(u32),
    #[error("empty slot window")]
    EmptyWindow,
    #[error("start slot {start_slot} outside 1..={horizon}")]
    BadStartSlot { start_slot: usize, horizon: usize },
    #[error(
        "task ({app},{task}): no slot count within the horizon fits budget {budget} J from slot {start_slot}"
    )]
    InfeasibleBudget {
        app: usize,
        task: usize,
        start_slot: usize,
        budget: f64,
    },
}

/// Energy to execute `d_loc` bits on the local CPU in one slot.
pub fn local_energy(d_loc: f64, p: &EnergyParams) -> Result<f64, EnergyError> {
    if d_loc < 0.0 {
        return Err(EnergyError::NegativeData(d_loc));
    }
    Ok(p.alpha() * d_loc.powi(3))
}

/// Energy to offload `d_off` bits over a slot with channel gain `h`.
pub fn offload_energy(d_off: f64, h: f64, p: &EnergyParams) -> Result<f64, EnergyError> {
    if d_off < 0.0 {
        return Err(EnergyError::NegativeData(d_off));
    }
    if h <= 0.0 {
        return Err(EnergyError::NonPositiveGain(h));
    }
    Ok(p.lambda() * d_off.powi(p.m as i32) / h)
}

fn require_cubic(p: &EnergyParams) -> Result<(), EnergyError> {
    if p.m != 3 {
        return Err(EnergyError::UnsupportedOrder(p.m));
    }
    Ok(())
}

/// Weight of a slot in the cubic closed forms: `1 + sqrt(alpha * h / lambda)`.
/// Split, per-slot minimum energy and cross-slot partition are all expressed
/// through it.
fn slot_weight(h: f64, p: &EnergyParams) -> f64 {
    1.0 + (p.alpha() * h / p.lambda()).sqrt()
}

/// Energy-minimal split of `d_total` bits between local execution and
/// offloading within one slot (cubic case).
pub fn optimal_split(d_total: f64, h: f64, p: &EnergyParams) -> Result<(f64, f64), EnergyError> {
    require_cubic(p)?;
    if d_total < 0.0 {
        return Err(EnergyError::NegativeData(d_total));
    }
    if h <= 0.0 {
        return Err(EnergyError::NonPositiveGain(h));
    }
    let ratio = (p.alpha() * h / p.lambda()).sqrt();
    let d_loc = d_total / (1.0 + ratio);
    let d_off = d_total / (1.0 + 1.0 / ratio);
    Ok((d_loc, d_off))
}

/// Minimum energy to process `d_total` bits in a single slot with gain `h`:
/// `alpha * d^3 / (1 + sqrt(alpha h / lambda))^2`. Equals the slot energy
/// evaluated at the optimal split.
pub fn slot_min_energy(d_total: f64, h: f64, p: &EnergyParams) -> Result<f64, EnergyError> {
    require_cubic(p)?;
    if d_total < 0.0 {
        return Err(EnergyError::NegativeData(d_total));
    }
    if h <= 0.0 {
        return Err(EnergyError::NonPositiveGain(h));
    }
    let w = slot_weight(h, p);
    Ok(p.alpha() * d_total.powi(3) / (w * w))
}

/// Energy-minimal partition of `d_total` bits across a window of slots with
/// the given gains: each slot receives data proportional to its weight
/// `1 + sqrt(alpha h / lambda)` (cubic case).
pub fn partition_across_slots(
    d_total: f64,
    gains: &[f64],
    p: &EnergyParams,
) -> Result<Vec<f64>, EnergyError> {
    require_cubic(p)?;
    if d_total < 0.0 {
        return Err(EnergyError::NegativeData(d_total));
    }
    if gains.is_empty() {
        return Err(EnergyError::EmptyWindow);
    }
    let weights: Vec<f64> = gains
        .iter()
        .map(|&h| {
            if h <= 0.0 {
                Err(EnergyError::NonPositiveGain(h))
            } else {
                Ok(slot_weight(h, p))
            }
        })
        .collect::<Result<_, _>>()?;
    let total: f64 = weights.iter().sum();
    Ok(weights.iter().map(|w| d_total * w / total).collect())
}

/// Energy-minimal partition when all data is offloaded: slot `t` receives
/// data proportional to `h(t)^(1/(m-1))`. Valid for any supported order.
pub fn offload_only_partition(
    d_total: f64,
    gains: &[f64],
    p: &EnergyParams,
) -> Result<Vec<f64>, EnergyError> {
    if d_total < 0.0 {
        return Err(EnergyError::NegativeData(d_total));
    }
    if gains.is_empty() {
        return Err(EnergyError::EmptyWindow);
    }
    let exponent = 1.0 / (p.m as f64 - 1.0);
    let weights: Vec<f64> = gains
        .iter()
        .map(|&h| {
            if h <= 0.0 {
                Err(EnergyError::NonPositiveGain(h))
            } else {
                Ok(h.powf(exponent))
            }
        })
        .collect::<Result<_, _>>()?;
    let total: f64 = weights.iter().sum();
    Ok(weights.iter().map(|w| d_total * w / total).collect())
}

/// How a plan distributes each slot's data between local CPU and server.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OffloadPolicy {
    /// Optimal per-slot split between local execution and offloading.
    Split,
    /// Everything offloaded, local CPU unused.
    OffloadOnly,
}

/// Per-slot share of a task plan.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlotShare {
    pub slot: usize,
    pub d_total: f64,
    pub d_loc: f64,
    pub d_off: f64,
    pub energy: f64,
}

/// Minimum-slot execution plan of one task under its energy budget.
#[derive(Debug, Clone, PartialEq)]
pub struct TaskPlan {
    pub app: usize,
    pub task: usize,
    pub start_slot: usize,
    pub num_slots: usize,
    pub slots: Vec<SlotShare>,
    pub total_energy: f64,
}

impl TaskPlan {
    /// 1-based slot in which the task completes.
    pub fn completion_slot(&self) -> usize {
        self.start_slot + self.num_slots - 1
    }
}

/// Builds the energy-minimal plan of a task over a fixed slot window,
/// without any budget test.
pub fn plan_for_window(
    task: &Task,
    start_slot: usize,
    num_slots: usize,
    inst: &Instance,
    policy: OffloadPolicy,
) -> Result<TaskPlan, EnergyError> {
    if start_slot == 0 || num_slots == 0 || start_slot + num_slots - 1 > inst.horizon {
        return Err(EnergyError::BadStartSlot {
            start_slot,
            horizon: inst.horizon,
        });
    }
    let p = &inst.params;
    let end = start_slot + num_slots - 1;
    let gains = inst.channel.window(start_slot, end);
    let shares = match policy {
        OffloadPolicy::Split => partition_across_slots(task.size_bits, gains, p)?,
        OffloadPolicy::OffloadOnly => offload_only_partition(task.size_bits, gains, p)?,
    };
    let mut slots = Vec::with_capacity(num_slots);
    let mut total = 0.0;
    for (i, (&d, &h)) in shares.iter().zip(gains).enumerate() {
        let (d_loc, d_off, energy) = match policy {
            OffloadPolicy::Split => {
                let (d_loc, d_off) = optimal_split(d, h, p)?;
                (d_loc, d_off, slot_min_energy(d, h, p)?)
            }
            OffloadPolicy::OffloadOnly => (0.0, d, offload_energy(d, h, p)?),
        };
        total += energy;
        slots.push(SlotShare {
            slot: start_slot + i,
            d_total: d,
            d_loc,
            d_off,
            energy,
        });
    }
    Ok(TaskPlan {
        app: task.app,
        task: task.index,
        start_slot,
        num_slots,
        slots,
        total_energy: total,
    })
}

fn plan_with_policy(
    task: &Task,
    start_slot: usize,
    budget: f64,
    inst: &Instance,
    policy: OffloadPolicy,
) -> Result<TaskPlan, EnergyError> {
    if start_slot == 0 || start_slot > inst.horizon {
        return Err(EnergyError::BadStartSlot {
            start_slot,
            horizon: inst.horizon,
        });
    }
    for s in 1..=(inst.horizon - start_slot + 1) {
        let plan = plan_for_window(task, start_slot, s, inst, policy)?;
        if plan.total_energy <= budget {
            return Ok(plan);
        }
    }
    Err(EnergyError::InfeasibleBudget {
        app: task.app,
        task: task.index,
        start_slot,
        budget,
    })
}

/// Feasibility test: finds the smallest number of slots, starting at
/// `start_slot`, in which the task can be completed without exceeding its
/// energy budget, together with the per-slot volumes, splits and energies.
pub fn min_slots_plan(
    task: &Task,
    start_slot: usize,
    budget: f64,
    inst: &Instance,
) -> Result<TaskPlan, EnergyError> {
    plan_with_policy(task, start_slot, budget, inst, OffloadPolicy::Split)
}

/// [`min_slots_plan`] restricted to pure offloading (no local computing).
pub fn min_slots_plan_offload_only(
    task: &Task,
    start_slot: usize,
    budget: f64,
    inst: &Instance,
) -> Result<TaskPlan, EnergyError> {
    plan_with_policy(task, start_slot, budget, inst, OffloadPolicy::OffloadOnly)
}

/// Per-task assigned budgets and consumed energies.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct EnergyLedger {
    assigned: BTreeMap<(usize, usize), f64>,
    consumed: BTreeMap<(usize, usize), f64>,
}

impl EnergyLedger {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn assign(&mut self, app: usize, task: usize, energy: f64) {
        self.assigned.insert((app, task), energy);
    }

    pub fn assigned(&self, app: usize, task: usize) -> f64 {
        self.assigned.get(&(app, task)).copied().unwrap_or(0.0)
    }

    pub fn record_consumed(&mut self, app: usize, task: usize, energy: f64) {
        self.consumed.insert((app, task), energy);
    }

    pub fn consumed(&self, app: usize, task: usize) -> f64 {
        self.consumed.get(&(app, task)).copied().unwrap_or(0.0)
    }

    pub fn total_assigned(&self) -> f64 {
        self.assigned.values().sum()
    }

    pub fn total_consumed(&self) -> f64 {
        self.consumed.values().sum()
    }

    pub fn iter_assigned(&self) -> impl Iterator<Item = (&(usize, usize), &f64)> {
        self.assigned.iter()
    }

    pub fn iter_consumed(&self) -> impl Iterator<Item = (&(usize, usize), &f64)> {
        self.consumed.iter()
    }
}
