//! One simulation point: a (cycle length, mode, replication) triple turned
//! into per-lane summaries, plus aggregation into output rows.

use thiserror::Error;

use crate::allocation::{AllocationError, AllocationResult};
use crate::arrivals::{make_stream, StreamKey};
use crate::engine::{run_actuated_with, run_fctl_with, ActuatedOptions, CyclePlan};
use crate::scenario::{Mode, ValidatedScenario};
use crate::stats::{aggregate_replications, rho, ReplicationSummary, SampleTally, StatsError, SummaryRow};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SimError {
    #[error(transparent)]
    Allocation(#[from] AllocationError),
    #[error(transparent)]
    Stats(#[from] StatsError),
}

/// Simulates one replication and summarizes every lane's post-warm-up
/// end-of-access samples.
pub fn simulate_replication(
    scenario: &ValidatedScenario,
    c: u32,
    mode: Mode,
    replication: u32,
) -> Result<Vec<ReplicationSummary>, SimError> {
    let cfg = scenario.config();
    let warmup = cfg.warmup_cycles;
    let mut tallies = vec![SampleTally::default(); scenario.num_lanes()];
    match mode {
        Mode::Actuated => {
            let mut cycle = 0u64;
            run_actuated_with(scenario, c, replication, ActuatedOptions::default(), &mut (), |rec| {
                if cycle >= warmup {
                    for s in &rec.samples {
                        tallies[s.lane].push(s.queue);
                    }
                }
                cycle += 1;
            })?;
        }
        Mode::Fctl => {
            let alloc = scenario.allocation(c)?;
            let plan = CyclePlan::from_scenario(scenario, &alloc);
            for (i, lane) in scenario.lanes().iter().enumerate() {
                let schedule = plan.fctl_schedule(i);
                let skip = warmup * schedule.windows().len() as u64;
                let mut stream = make_stream(StreamKey::new(cfg.master_seed, lane.id, replication), &lane.arrivals);
                let mut seen = 0u64;
                let tally = &mut tallies[i];
                run_fctl_with(
                    &schedule,
                    cfg.cycles_per_run,
                    &mut stream,
                    |q| {
                        if seen >= skip {
                            tally.push(q);
                        }
                        seen += 1;
                    },
                    &mut (),
                );
            }
        }
    }
    scenario
        .lanes()
        .iter()
        .zip(&tallies)
        .map(|(lane, tally)| Ok(ReplicationSummary { c, lane: lane.id, mode, replication, summary: tally.summary(c)? }))
        .collect()
}

/// Aggregates replications into one row per lane, sorted by lane id.
pub fn summary_rows(
    scenario: &ValidatedScenario,
    alloc: &AllocationResult,
    mode: Mode,
    replications: &[Vec<ReplicationSummary>],
) -> Result<Vec<SummaryRow>, SimError> {
    let cfg = scenario.config();
    let (rho_lane, rho_weighted) = rho(scenario.lanes(), alloc);
    let mut rows = Vec::with_capacity(scenario.num_lanes());
    for (i, lane) in scenario.lanes().iter().enumerate() {
        let reps: Vec<ReplicationSummary> = replications.iter().map(|r| r[i]).collect();
        let agg = aggregate_replications(&reps)?;
        let phase = scenario
            .phase_lanes()
            .iter()
            .position(|members| members.contains(&i))
            .expect("validated: every lane is in a phase");
        rows.push(SummaryRow {
            c: alloc.cycle_length,
            lane: lane.id,
            mode,
            all_red_policy: cfg.all_red_policy,
            g: alloc.per_lane_green[i],
            g_phase: alloc.per_phase_budget[phase],
            rho_lane: rho_lane[i],
            rho_weighted,
            p_empty: agg.p_empty,
            p_empty_ci: agg.p_empty_ci,
            mean_queue: agg.mean_queue,
            mean_queue_ci: agg.mean_queue_ci,
            mean_queue_norm: agg.mean_queue_norm,
            replications: agg.replications,
            cycles: cfg.cycles_per_run,
        });
    }
    rows.sort_by_key(|r| r.lane);
    Ok(rows)
}

/// Runs every replication of one (c, mode) point sequentially.
pub fn run_point(scenario: &ValidatedScenario, c: u32, mode: Mode) -> Result<Vec<SummaryRow>, SimError> {
    let alloc = scenario.allocation(c)?;
    let reps = (0..scenario.config().replications)
        .map(|r| simulate_replication(scenario, c, mode, r))
        .collect::<Result<Vec<_>, _>>()?;
    summary_rows(scenario, &alloc, mode, &reps)
}

/// One line of the per-cycle trace dump.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TraceRow {
    pub cycle: u64,
    /// 1-based phase number.
    pub phase: usize,
    pub duration: u32,
    pub lane: u32,
    pub sample: u64,
}

/// Per-cycle trace of one replication. FCTL mode uses the actuated engine
/// with early termination disabled, which follows the same slot dynamics.
pub fn trace(scenario: &ValidatedScenario, c: u32, mode: Mode, replication: u32) -> Result<Vec<TraceRow>, SimError> {
    let options = ActuatedOptions { early_termination: mode == Mode::Actuated };
    let mut rows = Vec::new();
    let mut cycle = 0u64;
    run_actuated_with(scenario, c, replication, options, &mut (), |rec| {
        for s in &rec.samples {
            rows.push(TraceRow {
                cycle,
                phase: s.phase + 1,
                duration: rec.phase_durations[s.phase],
                lane: scenario.lanes()[s.lane].id,
                sample: s.queue,
            });
        }
        cycle += 1;
    })?;
    Ok(rows)
}
