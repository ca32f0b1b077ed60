//! Square-root green-time allocation.
//!
//! Each lane gets `g = ⌈λc + βσ√c⌉` green slots per cycle of length `c`,
//! never less than `⌊λc⌋ + 1`. A phase's budget is the largest budget among
//! its lanes; the all-red time is either the residual of `c` or a constant.

use serde::Serialize;
use thiserror::Error;

use crate::scenario::{AllRedPlacement, AllRedPolicy, LaneConfig};

// Slack absorbing floating-point error when λc is mathematically integral.
const INTEGRAL_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AllocationError {
    #[error("infeasible cycle length c={c}: phase budgets sum to {budget_sum} slots")]
    Infeasible { c: u32, budget_sum: u64 },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct AllocationResult {
    pub cycle_length: u32,
    /// `g_{i,c}` by lane position.
    pub per_lane_green: Vec<u32>,
    /// `G_j` by phase position.
    pub per_phase_budget: Vec<u32>,
    pub all_red: u32,
}

impl AllocationResult {
    pub fn budget_sum(&self) -> u64 {
        self.per_phase_budget.iter().map(|&g| g as u64).sum()
    }

    /// Longest possible cycle: all budgets used in full plus the all-red time.
    pub fn max_cycle(&self) -> u64 {
        self.budget_sum() + self.all_red as u64
    }

    /// Red slots following each phase.
    pub fn red_gaps(&self, placement: AllRedPlacement) -> Vec<u32> {
        let m = self.per_phase_budget.len();
        let mut gaps = vec![0; m];
        match placement {
            AllRedPlacement::End => gaps[m - 1] = self.all_red,
            AllRedPlacement::Split => {
                let share = self.all_red / m as u32;
                gaps.iter_mut().for_each(|g| *g = share);
                gaps[m - 1] += self.all_red - share * m as u32;
            }
        }
        gaps
    }
}

/// Green budget of one lane for cycle length `c`.
pub fn allocate_green(lane: &LaneConfig, c: u32) -> u32 {
    assert!(c >= 1, "cycle length must be positive");
    let c = c as f64;
    let mean_load = lane.lambda() * c;
    let hedged = mean_load + lane.beta * lane.sigma() * c.sqrt();
    let rounded_up = (hedged - INTEGRAL_SLACK).ceil();
    let floor = (mean_load + INTEGRAL_SLACK).floor() + 1.0;
    rounded_up.max(floor) as u32
}

/// Budget of a phase: the largest green among its lanes.
pub fn phase_budget(phase_lanes: &[usize], greens: &[u32]) -> u32 {
    phase_lanes.iter().map(|&i| greens[i]).max().expect("phase has at least one lane")
}

pub fn all_red(c: u32, budgets: &[u32], policy: AllRedPolicy) -> Result<u32, AllocationError> {
    match policy {
        AllRedPolicy::Fixed(r) => Ok(r),
        AllRedPolicy::ScalingResidual => {
            let budget_sum: u64 = budgets.iter().map(|&g| g as u64).sum();
            if budget_sum > c as u64 {
                Err(AllocationError::Infeasible { c, budget_sum })
            } else {
                Ok(c - budget_sum as u32)
            }
        }
    }
}

/// Full allocation for cycle length `c`; `phases` holds lane positions.
pub fn allocate(
    lanes: &[LaneConfig],
    phases: &[Vec<usize>],
    c: u32,
    policy: AllRedPolicy,
) -> Result<AllocationResult, AllocationError> {
    let per_lane_green: Vec<u32> = lanes.iter().map(|l| allocate_green(l, c)).collect();
    let per_phase_budget: Vec<u32> = phases.iter().map(|p| phase_budget(p, &per_lane_green)).collect();
    let all_red = all_red(c, &per_phase_budget, policy)?;
    Ok(AllocationResult { cycle_length: c, per_lane_green, per_phase_budget, all_red })
}
