//! The actuated engine without early termination against the FCTL engine, and
//! FCTL simulation against the exact stationary oracle.

use proptest::prelude::*;
use signal_core::{
    fctl_stationary, make_stream, run_actuated_with, run_fctl_with, run_point, validate, ActuatedOptions,
    AllRedPlacement, AllRedPolicy, ArrivalDistribution, CyclePlan, LaneConfig, LaneTraces, Mode, OracleSettings,
    PhaseConfig, Preset, ScenarioConfig, StreamKey, ValidatedScenario,
};

fn bytes(trace: &[u64]) -> Vec<u8> {
    trace.iter().flat_map(|q| q.to_le_bytes()).collect()
}

/// Per-lane slot traces and end-of-green samples.
type Run = (Vec<Vec<u64>>, Vec<Vec<u64>>);

/// Both engines on the same streams: (actuated, fctl).
fn both_engines(scenario: &ValidatedScenario, c: u32) -> (Run, Run) {
    let cfg = scenario.config();
    let n = scenario.num_lanes();
    let mut actuated = LaneTraces::new(n);
    let mut actuated_samples = vec![Vec::new(); n];
    run_actuated_with(scenario, c, 0, ActuatedOptions { early_termination: false }, &mut actuated, |rec| {
        for s in rec.samples {
            actuated_samples[s.lane].push(s.queue);
        }
    })
    .unwrap();

    let plan = CyclePlan::from_scenario(scenario, &scenario.allocation(c).unwrap());
    let mut fctl = Vec::new();
    let mut fctl_samples = Vec::new();
    for (i, lane) in scenario.lanes().iter().enumerate() {
        let mut stream = make_stream(StreamKey::new(cfg.master_seed, lane.id, 0), &lane.arrivals);
        let mut trace = LaneTraces::new(1);
        let mut samples = Vec::new();
        run_fctl_with(&plan.fctl_schedule(i), cfg.cycles_per_run, &mut stream, |q| samples.push(q), &mut trace);
        fctl.push(trace.0.pop().unwrap());
        fctl_samples.push(samples);
    }
    ((actuated.0, actuated_samples), (fctl, fctl_samples))
}

fn with_run(mut cfg: ScenarioConfig, cycles: u64) -> ValidatedScenario {
    cfg.cycles_per_run = cycles;
    cfg.warmup_cycles = 0;
    validate(cfg).unwrap()
}

#[test]
fn example_1a_traces_match_fctl_byte_for_byte() {
    let scenario = with_run(Preset::Ex1a.config(), 1_000);
    let ((act, act_samples), (fctl, fctl_samples)) = both_engines(&scenario, 110);
    for i in 0..4 {
        assert_eq!(act[i].len(), 110 * 1_000);
        assert_eq!(bytes(&act[i]), bytes(&fctl[i]), "lane {}", i + 1);
        assert_eq!(act_samples[i], fctl_samples[i]);
    }
}

#[test]
fn shared_phases_and_split_red_couple_too() {
    for preset in [Preset::Ex2a, Preset::Ex2b] {
        let mut cfg = preset.config();
        cfg.all_red_placement = AllRedPlacement::Split;
        let scenario = with_run(cfg, 300);
        let ((act, _), (fctl, _)) = both_engines(&scenario, 220);
        assert_eq!(act, fctl, "{}", preset.name());
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 24, ..ProptestConfig::default() })]

    #[test]
    fn coupling_holds_for_random_loads(
        means in prop::collection::vec(0.01f64..0.2, 2..5),
        seed in any::<u64>(),
        fixed in prop::option::of(0u32..5),
        c in 60u32..200,
    ) {
        let lanes: Vec<_> = means
            .iter()
            .enumerate()
            .map(|(i, &m)| LaneConfig::new(i as u32 + 1, ArrivalDistribution::poisson(m), 0.2))
            .collect();
        let phases = (1..=lanes.len() as u32).map(|j| PhaseConfig::new([j])).collect();
        let cfg = ScenarioConfig {
            lanes,
            phases,
            cycle_lengths: vec![c],
            mode: Mode::Actuated,
            all_red_policy: fixed.map_or(AllRedPolicy::ScalingResidual, AllRedPolicy::Fixed),
            all_red_placement: AllRedPlacement::End,
            cycles_per_run: 50,
            warmup_cycles: 0,
            replications: 2,
            master_seed: seed,
        };
        prop_assume!(validate(cfg.clone()).is_ok());
        let scenario = with_run(cfg, 50);
        let ((act, act_samples), (fctl, fctl_samples)) = both_engines(&scenario, c);
        prop_assert_eq!(act, fctl);
        prop_assert_eq!(act_samples, fctl_samples);
    }
}

fn single_lane(d: ArrivalDistribution, beta: f64, c: u32) -> ValidatedScenario {
    validate(ScenarioConfig {
        lanes: vec![LaneConfig::new(1, d, beta)],
        phases: vec![PhaseConfig::new([1])],
        cycle_lengths: vec![c],
        mode: Mode::Fctl,
        all_red_policy: AllRedPolicy::ScalingResidual,
        all_red_placement: AllRedPlacement::End,
        cycles_per_run: 100_000,
        warmup_cycles: 1_000,
        replications: 4,
        master_seed: 7,
    })
    .unwrap()
}

#[test]
fn fctl_simulation_matches_the_oracle() {
    let cases = [
        (ArrivalDistribution::bernoulli(0.25), 0.5, 2),
        (ArrivalDistribution::poisson(0.3), 0.5, 10),
        (ArrivalDistribution::bernoulli(0.4), 1.0, 5),
    ];
    for (d, beta, c) in cases {
        let scenario = single_lane(d, beta, c);
        let g = scenario.allocation(c).unwrap().per_lane_green[0];
        let exact = fctl_stationary(c, g, &d, OracleSettings::default()).unwrap();
        let row = &run_point(&scenario, c, Mode::Fctl).unwrap()[0];
        assert!(
            (row.p_empty - exact.p_empty).abs() <= 3.0 * row.p_empty_ci,
            "{d} c={c} g={g}: p_empty {} vs {} ± {}",
            row.p_empty,
            exact.p_empty,
            row.p_empty_ci
        );
        assert!(
            (row.mean_queue - exact.mean).abs() <= 3.0 * row.mean_queue_ci,
            "{d} c={c} g={g}: mean {} vs {} ± {}",
            row.mean_queue,
            exact.mean,
            row.mean_queue_ci
        );
    }
}

#[test]
fn tiny_instance_hits_closed_form() {
    let scenario = single_lane(ArrivalDistribution::bernoulli(0.25), 0.5, 2);
    assert_eq!(scenario.allocation(2).unwrap().per_lane_green, vec![1]);
    let row = &run_point(&scenario, 2, Mode::Fctl).unwrap()[0];
    assert!((row.p_empty - 8.0 / 9.0).abs() <= 3.0 * row.p_empty_ci);
    assert!((row.mean_queue - 0.125).abs() <= 3.0 * row.mean_queue_ci);
    assert!(row.p_empty_ci < 0.01, "halfwidth {}", row.p_empty_ci);
}
