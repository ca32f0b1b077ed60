//! Replay checker for actuated cycles: every slot is recomputed from an
//! independent copy of the arrival streams and compared with the engine.

use proptest::prelude::*;
use signal_core::{
    make_stream, run_cycle_actuated, validate, ActuatedOptions, AllRedPlacement, AllRedPolicy, ArrivalDistribution,
    ArrivalStream, CyclePlan, LaneConfig, LaneState, Mode, PhaseConfig, ScenarioConfig, SlotObserver, StreamKey,
};

/// Every queue value the engine reports, slot by slot, per lane.
#[derive(Default)]
struct Recorder {
    lanes: usize,
    slots: Vec<Vec<u64>>,
}

impl SlotObserver for Recorder {
    fn on_slot(&mut self, lane: usize, queue: u64) {
        if lane == 0 {
            self.slots.push(Vec::with_capacity(self.lanes));
        }
        self.slots.last_mut().unwrap().push(queue);
    }
}

#[derive(Debug, Clone)]
pub struct Case {
    pub config: ScenarioConfig,
    pub c: u32,
    pub initial: Vec<u64>,
    pub cycles: u64,
}

fn arrivals() -> impl Strategy<Value = ArrivalDistribution> {
    prop_oneof![
        (0.0f64..0.35).prop_map(ArrivalDistribution::poisson),
        (0.0f64..0.35).prop_map(ArrivalDistribution::bernoulli),
    ]
}

/// Lane count, per-lane phase membership and loads. Each lane joins one
/// home phase and optionally a second one.
pub fn case() -> impl Strategy<Value = Case> {
    (1usize..=5, 1usize..=4)
        .prop_flat_map(|(n, m)| {
            (
                prop::collection::vec((arrivals(), 0.01f64..1.5, 0..m, prop::option::weighted(0.2, 0..m)), n),
                Just(m),
                prop_oneof![Just(AllRedPolicy::ScalingResidual), (0u32..6).prop_map(AllRedPolicy::Fixed)],
                prop_oneof![Just(AllRedPlacement::End), Just(AllRedPlacement::Split)],
                10u32..300,
                prop::collection::vec(0u64..40, n),
                any::<u64>(),
            )
        })
        .prop_map(|(lanes, m, policy, placement, c_hint, initial, seed)| {
            let mut phases = vec![Vec::new(); m];
            let mut configs = Vec::new();
            for (i, (d, beta, home, extra)) in lanes.iter().enumerate() {
                let id = i as u32 + 1;
                phases[*home].push(id);
                if let Some(e) = extra {
                    if e != home {
                        phases[*e].push(id);
                    }
                }
                configs.push(LaneConfig::new(id, *d, *beta));
            }
            phases.retain(|p| !p.is_empty());
            // phases share the cycle, so scale each lane down by the phase count
            let share = phases.len() as f64;
            for l in &mut configs {
                let mean = (l.arrivals.mean() / share).max(1e-3);
                l.arrivals = match l.arrivals {
                    ArrivalDistribution::Poisson { .. } => ArrivalDistribution::poisson(mean),
                    ArrivalDistribution::Bernoulli { .. } => ArrivalDistribution::bernoulli(mean),
                };
            }
            let mut config = ScenarioConfig {
                lanes: configs,
                phases: phases.into_iter().map(PhaseConfig::new).collect(),
                cycle_lengths: vec![c_hint],
                mode: Mode::Actuated,
                all_red_policy: policy,
                all_red_placement: placement,
                cycles_per_run: 2,
                warmup_cycles: 0,
                replications: 2,
                master_seed: seed,
            };
            // smallest feasible cycle length at or above the hint
            let mut c = c_hint;
            loop {
                config.cycle_lengths = vec![c];
                if validate(config.clone()).is_ok() {
                    break;
                }
                c += 1;
            }
            Case { config, c, initial, cycles: 160 }
        })
}

#[allow(clippy::too_many_arguments)]
fn check_cycle(
    plan: &CyclePlan,
    policy: AllRedPolicy,
    c: u32,
    start: &[u64],
    states: &[LaneState],
    slots: &[Vec<u64>],
    arrivals: &[Vec<u32>],
    record: &signal_core::CycleRecord,
) -> Result<(), TestCaseError> {
    let n = start.len();
    let budgets = plan.budgets();
    let gaps = plan.red_gaps();

    prop_assert_eq!(record.phase_durations.len(), budgets.len());
    for (d, g) in record.phase_durations.iter().zip(budgets) {
        prop_assert!(d <= g, "phase duration {} over budget {}", d, g);
    }
    let total: u32 = record.phase_durations.iter().sum::<u32>() + gaps.iter().sum::<u32>();
    prop_assert_eq!(record.length, total);
    prop_assert_eq!(slots.len(), total as usize);
    if policy == AllRedPolicy::ScalingResidual {
        prop_assert!(record.length <= c);
    }

    // which lanes are green in each slot, from the realized durations
    let mut green = Vec::with_capacity(slots.len());
    let mut switch_at = Vec::new();
    for (j, members) in plan.phase_lanes().iter().enumerate() {
        for _ in 0..record.phase_durations[j] {
            green.push((0..n).map(|i| members.contains(&i)).collect::<Vec<_>>());
        }
        switch_at.push(green.len());
        for _ in 0..gaps[j] {
            green.push(vec![false; n]);
        }
    }

    let mut sample_iter = record.samples.iter();
    for i in 0..n {
        let mut q = start[i];
        let mut added = 0u64;
        let mut departed = 0u64;
        let mut served_nonempty = 0u64;
        let mut emptied_in_access = false;
        for (t, row) in slots.iter().enumerate() {
            let a = arrivals[i][t] as u64;
            let next = row[i];
            if green[t][i] {
                if q > 0 {
                    served_nonempty += 1;
                    departed += 1;
                    added += a;
                } else {
                    // pass-through: nothing joins an empty queue on green
                    prop_assert_eq!(next, 0);
                }
                if emptied_in_access {
                    prop_assert_eq!(next, 0, "lane {} refilled inside its access period", i);
                }
                emptied_in_access |= next == 0;
            } else {
                added += a;
                emptied_in_access = false;
            }
            prop_assert_eq!(next, if green[t][i] && q == 0 { 0 } else { q + a - green[t][i] as u64 });
            q = next;
        }
        prop_assert_eq!(q, states[i].queue);
        prop_assert_eq!(q, start[i] + added - departed, "conservation on lane {}", i);
        prop_assert!(departed <= served_nonempty);
    }

    // samples: one per (phase, member), equal to the queue at the switch
    for (j, members) in plan.phase_lanes().iter().enumerate() {
        let at = switch_at[j];
        for &i in members {
            let s = sample_iter.next().expect("sample per member");
            prop_assert_eq!((s.phase, s.lane), (j, i));
            let expected = if at == 0 { start[i] } else { slots[at - 1][i] };
            prop_assert_eq!(s.queue, expected);
        }
        // early switch only when every member is empty, and not earlier than that
        let d = record.phase_durations[j] as usize;
        let phase_start = at - d;
        let queue_at = |t: usize, i: usize| if t == 0 { start[i] } else { slots[t - 1][i] };
        if (d as u32) < budgets[j] {
            prop_assert!(members.iter().all(|&i| queue_at(at, i) == 0));
        }
        for t in phase_start..at {
            prop_assert!(members.iter().any(|&i| queue_at(t, i) > 0), "phase {} ran past an all-empty boundary", j);
        }
    }
    prop_assert!(sample_iter.next().is_none());
    Ok(())
}

/// Runs `case.cycles` cycles from the case's initial queues and checks each
/// one. Returns the number of cycles checked.
pub fn check_case(case: &Case) -> Result<u64, TestCaseError> {
    let scenario = validate(case.config.clone()).unwrap();
    let alloc = scenario.allocation(case.c).unwrap();
    let plan = CyclePlan::from_scenario(&scenario, &alloc);
    let mut streams: Vec<ArrivalStream> = scenario
        .lanes()
        .iter()
        .map(|l| make_stream(StreamKey::new(case.config.master_seed, l.id, 0), &l.arrivals))
        .collect();
    let mut states: Vec<LaneState> =
        case.initial.iter().map(|&q| LaneState { queue: q, end_of_access_sample: None }).collect();

    for _ in 0..case.cycles {
        let start: Vec<u64> = states.iter().map(|s| s.queue).collect();
        let mut replay = streams.clone();
        let mut rec = Recorder { lanes: states.len(), slots: Vec::new() };
        let record = run_cycle_actuated(&mut states, &plan, &mut streams, ActuatedOptions::default(), &mut rec);
        let arrivals: Vec<Vec<u32>> =
            replay.iter_mut().map(|s| (0..rec.slots.len()).map(|_| s.next_arrivals()).collect()).collect();
        check_cycle(&plan, case.config.all_red_policy, case.c, &start, &states, &rec.slots, &arrivals, &record)?;
        for (i, s) in states.iter().enumerate() {
            let last = record.samples.iter().rev().find(|e| e.lane == i).map(|e| e.queue);
            prop_assert_eq!(s.end_of_access_sample, last);
        }
    }
    Ok(case.cycles)
}
