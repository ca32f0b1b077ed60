//! Slot-level queue dynamics.
//!
//! Two engines share one slot rule ([`fctl_slot_step`]): the fixed-cycle
//! traffic light (each lane sees fixed green windows every cycle) and the
//! vehicle-actuated controller (a phase ends as soon as all of its lanes are
//! empty or its budget is spent). Every lane draws exactly one arrival count
//! per slot in both engines, so the two can be driven by identical streams.

use crate::allocation::{AllocationError, AllocationResult};
use crate::arrivals::{make_stream, ArrivalStream, StreamKey};
use crate::scenario::ValidatedScenario;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SlotKind {
    Green,
    Red,
}

/// Queue length after one slot with `arrivals` arrivals.
///
/// On green a nonempty queue discharges one vehicle while arrivals join; an
/// empty queue stays empty because arrivals cross without stopping.
#[inline]
pub fn fctl_slot_step(queue: u64, slot: SlotKind, arrivals: u32) -> u64 {
    match slot {
        SlotKind::Green if queue == 0 => 0,
        SlotKind::Green => queue - 1 + arrivals as u64,
        SlotKind::Red => queue + arrivals as u64,
    }
}

/// Receives the queue length of every lane after every slot.
pub trait SlotObserver {
    fn on_slot(&mut self, lane: usize, queue: u64);
}

impl SlotObserver for () {
    #[inline]
    fn on_slot(&mut self, _lane: usize, _queue: u64) {}
}

/// Full per-lane slot traces.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct LaneTraces(pub Vec<Vec<u64>>);

impl LaneTraces {
    pub fn new(lanes: usize) -> Self {
        LaneTraces(vec![Vec::new(); lanes])
    }
}

impl SlotObserver for LaneTraces {
    fn on_slot(&mut self, lane: usize, queue: u64) {
        self.0[lane].push(queue);
    }
}

/// A green window inside a fixed cycle, in slots from cycle start.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GreenWindow {
    pub start: u32,
    pub len: u32,
}

/// Fixed green windows repeated every `cycle` slots.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FctlSchedule {
    cycle: u32,
    windows: Vec<GreenWindow>,
}

impl FctlSchedule {
    /// `green` slots of green followed by `red` slots of red.
    pub fn new(green: u32, red: u32) -> Self {
        Self::with_windows(green + red, vec![GreenWindow { start: 0, len: green }])
    }

    /// Windows must be sorted, non-overlapping and fit inside the cycle.
    pub fn with_windows(cycle: u32, windows: Vec<GreenWindow>) -> Self {
        let mut end = 0;
        for w in &windows {
            assert!(w.start >= end, "green windows must be sorted and disjoint");
            end = w.start + w.len;
        }
        assert!(end <= cycle, "green windows exceed the cycle");
        FctlSchedule { cycle, windows }
    }

    /// Schedule of lane `lane` when every phase keeps green for its full
    /// budget, followed by its red gap.
    pub fn for_lane(lane: usize, phase_lanes: &[Vec<usize>], budgets: &[u32], red_gaps: &[u32]) -> Self {
        let mut t = 0;
        let mut windows = Vec::new();
        for (j, members) in phase_lanes.iter().enumerate() {
            if members.contains(&lane) {
                windows.push(GreenWindow { start: t, len: budgets[j] });
            }
            t += budgets[j] + red_gaps[j];
        }
        Self::with_windows(t, windows)
    }

    pub fn cycle(&self) -> u32 {
        self.cycle
    }

    pub fn windows(&self) -> &[GreenWindow] {
        &self.windows
    }
}

/// Runs the FCTL queue from empty for `cycles` cycles and returns the queue
/// length at the end of every green window.
pub fn run_fctl(schedule: &FctlSchedule, cycles: u64, stream: &mut ArrivalStream) -> Vec<u64> {
    let mut samples = Vec::with_capacity((cycles as usize).saturating_mul(schedule.windows.len()));
    run_fctl_with(schedule, cycles, stream, |q| samples.push(q), &mut ());
    samples
}

/// Runs the FCTL queue, calling `on_sample` at each end of green and
/// reporting every slot to `observer` as lane 0.
pub fn run_fctl_with<O: SlotObserver>(
    schedule: &FctlSchedule,
    cycles: u64,
    stream: &mut ArrivalStream,
    mut on_sample: impl FnMut(u64),
    observer: &mut O,
) {
    let mut queue = 0u64;
    let mut step = |queue: &mut u64, slot: SlotKind, n: u32, observer: &mut O| {
        for _ in 0..n {
            *queue = fctl_slot_step(*queue, slot, stream.next_arrivals());
            observer.on_slot(0, *queue);
        }
    };
    for _ in 0..cycles {
        let mut t = 0;
        for w in &schedule.windows {
            step(&mut queue, SlotKind::Red, w.start - t, observer);
            step(&mut queue, SlotKind::Green, w.len, observer);
            on_sample(queue);
            t = w.start + w.len;
        }
        step(&mut queue, SlotKind::Red, schedule.cycle - t, observer);
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct LaneState {
    pub queue: u64,
    /// Queue at the end of this lane's access period in the current cycle.
    pub end_of_access_sample: Option<u64>,
}

/// Queue length of one lane at the moment its phase switched.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EndOfAccess {
    pub phase: usize,
    pub lane: usize,
    pub queue: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CycleRecord {
    /// One sample per (phase, member lane), in service order.
    pub samples: Vec<EndOfAccess>,
    pub phase_durations: Vec<u32>,
    pub length: u32,
}

/// Static description of one actuated cycle.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CyclePlan {
    phase_lanes: Vec<Vec<usize>>,
    /// `in_phase[j][i]`: lane `i` has green during phase `j`.
    in_phase: Vec<Vec<bool>>,
    budgets: Vec<u32>,
    red_gaps: Vec<u32>,
}

impl CyclePlan {
    pub fn new(lanes: usize, phase_lanes: Vec<Vec<usize>>, budgets: Vec<u32>, red_gaps: Vec<u32>) -> Self {
        assert_eq!(phase_lanes.len(), budgets.len());
        assert_eq!(phase_lanes.len(), red_gaps.len());
        let in_phase = phase_lanes.iter().map(|members| (0..lanes).map(|i| members.contains(&i)).collect()).collect();
        CyclePlan { phase_lanes, in_phase, budgets, red_gaps }
    }

    pub fn from_scenario(scenario: &ValidatedScenario, alloc: &AllocationResult) -> Self {
        Self::new(
            scenario.num_lanes(),
            scenario.phase_lanes().to_vec(),
            alloc.per_phase_budget.clone(),
            alloc.red_gaps(scenario.config().all_red_placement),
        )
    }

    pub fn lanes(&self) -> usize {
        self.in_phase.first().map_or(0, Vec::len)
    }

    pub fn phase_lanes(&self) -> &[Vec<usize>] {
        &self.phase_lanes
    }

    pub fn budgets(&self) -> &[u32] {
        &self.budgets
    }

    pub fn red_gaps(&self) -> &[u32] {
        &self.red_gaps
    }

    /// FCTL schedule of one lane under this plan with all budgets used in full.
    pub fn fctl_schedule(&self, lane: usize) -> FctlSchedule {
        FctlSchedule::for_lane(lane, &self.phase_lanes, &self.budgets, &self.red_gaps)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ActuatedOptions {
    /// End a phase once all of its lanes are empty. Disabling this turns the
    /// controller into a fixed-cycle one.
    pub early_termination: bool,
}

impl Default for ActuatedOptions {
    fn default() -> Self {
        ActuatedOptions { early_termination: true }
    }
}

#[inline]
fn step_all<O: SlotObserver>(
    states: &mut [LaneState],
    green: Option<&[bool]>,
    streams: &mut [ArrivalStream],
    observer: &mut O,
) {
    for (i, (state, stream)) in states.iter_mut().zip(streams.iter_mut()).enumerate() {
        let slot = match green {
            Some(g) if g[i] => SlotKind::Green,
            _ => SlotKind::Red,
        };
        state.queue = fctl_slot_step(state.queue, slot, stream.next_arrivals());
        observer.on_slot(i, state.queue);
    }
}

/// Runs one actuated cycle: every phase in order, then its red gap.
pub fn run_cycle_actuated<O: SlotObserver>(
    states: &mut [LaneState],
    plan: &CyclePlan,
    streams: &mut [ArrivalStream],
    options: ActuatedOptions,
    observer: &mut O,
) -> CycleRecord {
    debug_assert_eq!(states.len(), streams.len());
    for s in states.iter_mut() {
        s.end_of_access_sample = None;
    }
    let mut samples = Vec::new();
    let mut phase_durations = Vec::with_capacity(plan.budgets.len());
    let mut length = 0;
    for (j, members) in plan.phase_lanes.iter().enumerate() {
        let mut duration = 0;
        while duration < plan.budgets[j] {
            if options.early_termination && members.iter().all(|&i| states[i].queue == 0) {
                break;
            }
            step_all(states, Some(&plan.in_phase[j]), streams, observer);
            duration += 1;
        }
        for &i in members {
            let q = states[i].queue;
            states[i].end_of_access_sample = Some(q);
            samples.push(EndOfAccess { phase: j, lane: i, queue: q });
        }
        for _ in 0..plan.red_gaps[j] {
            step_all(states, None, streams, observer);
        }
        phase_durations.push(duration);
        length += duration + plan.red_gaps[j];
    }
    CycleRecord { samples, phase_durations, length }
}

/// Arrival streams of every lane of a scenario for one replication.
pub fn scenario_streams(scenario: &ValidatedScenario, replication: u32) -> Vec<ArrivalStream> {
    let seed = scenario.config().master_seed;
    scenario.lanes().iter().map(|l| make_stream(StreamKey::new(seed, l.id, replication), &l.arrivals)).collect()
}

/// Runs `cycles_per_run` actuated cycles from empty queues.
pub fn run_actuated(
    scenario: &ValidatedScenario,
    c: u32,
    replication: u32,
) -> Result<Vec<CycleRecord>, AllocationError> {
    let mut records = Vec::with_capacity(scenario.config().cycles_per_run as usize);
    run_actuated_with(scenario, c, replication, ActuatedOptions::default(), &mut (), |r| records.push(r))?;
    Ok(records)
}

/// Like [`run_actuated`], streaming each record to `on_cycle`.
pub fn run_actuated_with<O: SlotObserver>(
    scenario: &ValidatedScenario,
    c: u32,
    replication: u32,
    options: ActuatedOptions,
    observer: &mut O,
    mut on_cycle: impl FnMut(CycleRecord),
) -> Result<(), AllocationError> {
    let alloc = scenario.allocation(c)?;
    let plan = CyclePlan::from_scenario(scenario, &alloc);
    let mut streams = scenario_streams(scenario, replication);
    let mut states = vec![LaneState::default(); scenario.num_lanes()];
    for _ in 0..scenario.config().cycles_per_run {
        on_cycle(run_cycle_actuated(&mut states, &plan, &mut streams, options, observer));
    }
    Ok(())
}
