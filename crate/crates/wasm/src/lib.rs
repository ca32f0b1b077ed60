//! Browser bindings: green allocation, short single-replication sweeps and
//! the exact single-lane oracle, each returning a JSON string.
//!
//! The plain functions are usable from native code; the `#[wasm_bindgen]`
//! wrappers only turn their errors into JS exceptions.

use serde::Serialize;
use signal_core::{
    fctl_stationary, rho, simulate_replication, validate_allow_infeasible, AllRedPolicy, ArrivalDistribution, Mode,
    OracleSettings, Preset,
};
use wasm_bindgen::prelude::*;

/// Cap on the cycles one sweep point may simulate from the page.
pub const MAX_DEMO_CYCLES: u64 = 200_000;

#[derive(Debug, Serialize)]
pub struct AllocationView {
    pub preset: &'static str,
    pub c: u32,
    pub lane_ids: Vec<u32>,
    pub lambda: Vec<f64>,
    pub green: Vec<u32>,
    pub phase_lanes: Vec<Vec<u32>>,
    pub phase_budget: Vec<u32>,
    pub all_red: u32,
    pub red_gaps: Vec<u32>,
    pub rho_lane: Vec<f64>,
    pub rho_weighted: f64,
}

#[derive(Debug, Serialize)]
pub struct LanePoint {
    pub lane: u32,
    pub p_empty: f64,
    pub mean_queue: f64,
    pub mean_queue_norm: f64,
    pub rho_lane: f64,
}

#[derive(Debug, Serialize)]
pub struct SweepPoint {
    pub c: u32,
    pub mode: Mode,
    pub rho_weighted: f64,
    pub lanes: Vec<LanePoint>,
}

#[derive(Debug, Serialize)]
pub struct SweepView {
    pub preset: &'static str,
    pub points: Vec<SweepPoint>,
    /// Cycle lengths whose budgets do not fit.
    pub infeasible: Vec<u32>,
}

#[derive(Debug, Serialize)]
pub struct OracleView {
    pub c: u32,
    pub g: u32,
    pub p_empty: f64,
    pub mean: f64,
    pub iterations: usize,
    /// End-of-green queue distribution, trimmed where the tail is negligible.
    pub distribution: Vec<f64>,
}

fn parse_preset(name: &str) -> Result<Preset, String> {
    name.parse()
}

fn parse_policy(all_red: &str) -> Result<AllRedPolicy, String> {
    all_red.parse()
}

pub fn allocation_view(preset: &str, c: u32, all_red: &str) -> Result<AllocationView, String> {
    let preset = parse_preset(preset)?;
    let mut cfg = preset.config();
    cfg.cycle_lengths = vec![c];
    cfg.all_red_policy = parse_policy(all_red)?;
    let scenario = validate_allow_infeasible(cfg).map_err(|e| e.to_string())?;
    let alloc = scenario.allocation(c).map_err(|e| e.to_string())?;
    let (rho_lane, rho_weighted) = rho(scenario.lanes(), &alloc);
    let ids: Vec<u32> = scenario.lanes().iter().map(|l| l.id).collect();
    Ok(AllocationView {
        preset: preset.name(),
        c,
        lambda: scenario.lanes().iter().map(|l| l.lambda()).collect(),
        phase_lanes: scenario.phase_lanes().iter().map(|p| p.iter().map(|&i| ids[i]).collect()).collect(),
        lane_ids: ids,
        green: alloc.per_lane_green.clone(),
        phase_budget: alloc.per_phase_budget.clone(),
        all_red: alloc.all_red,
        red_gaps: alloc.red_gaps(scenario.config().all_red_placement),
        rho_lane,
        rho_weighted,
    })
}

/// One replication per (c, mode) with a tenth of the cycles as warm-up.
pub fn sweep_view(
    preset: &str,
    mode: &str,
    all_red: &str,
    cycle_lengths: &[u32],
    cycles: u64,
    seed: u64,
) -> Result<SweepView, String> {
    let preset = parse_preset(preset)?;
    let modes = match mode {
        "both" => vec![Mode::Actuated, Mode::Fctl],
        m => vec![m.parse::<Mode>()?],
    };
    if !(10..=MAX_DEMO_CYCLES).contains(&cycles) {
        return Err(format!("cycles must be within 10..={MAX_DEMO_CYCLES}"));
    }
    let mut cs = cycle_lengths.to_vec();
    cs.sort_unstable();
    cs.dedup();
    let mut cfg = preset.config();
    cfg.cycle_lengths = cs;
    cfg.all_red_policy = parse_policy(all_red)?;
    cfg.cycles_per_run = cycles;
    cfg.warmup_cycles = cycles / 10;
    cfg.master_seed = seed;
    let scenario = validate_allow_infeasible(cfg).map_err(|e| e.to_string())?;

    let mut points = Vec::new();
    let mut infeasible = Vec::new();
    for (c, alloc) in scenario.allocations() {
        let Ok(alloc) = alloc else {
            infeasible.push(*c);
            continue;
        };
        let (rho_lane, rho_weighted) = rho(scenario.lanes(), alloc);
        for &m in &modes {
            let reps = simulate_replication(&scenario, *c, m, 0).map_err(|e| e.to_string())?;
            let lanes = reps
                .iter()
                .zip(&rho_lane)
                .map(|(r, &rho_lane)| LanePoint {
                    lane: r.lane,
                    p_empty: r.summary.p_empty,
                    mean_queue: r.summary.mean_queue,
                    mean_queue_norm: r.summary.mean_queue_norm,
                    rho_lane,
                })
                .collect();
            points.push(SweepPoint { c: *c, mode: m, rho_weighted, lanes });
        }
    }
    Ok(SweepView { preset: preset.name(), points, infeasible })
}

pub fn oracle_view(c: u32, g: u32, dist: &str) -> Result<OracleView, String> {
    let d: ArrivalDistribution = dist.parse()?;
    let exact = fctl_stationary(c, g, &d, OracleSettings::default()).map_err(|e| e.to_string())?;
    let mut distribution = exact.end_of_green.probabilities;
    while distribution.len() > 1 && distribution.last().is_some_and(|&p| p < 1e-6) {
        distribution.pop();
    }
    Ok(OracleView { c, g, p_empty: exact.p_empty, mean: exact.mean, iterations: exact.iterations, distribution })
}

fn to_js<T: Serialize>(r: Result<T, String>) -> Result<String, JsValue> {
    r.and_then(|v| serde_json::to_string(&v).map_err(|e| e.to_string())).map_err(|e| JsValue::from_str(&e))
}

/// Green times, phase budgets, all-red and utilization of a preset at `c`.
#[wasm_bindgen]
pub fn allocation(preset: &str, c: u32, all_red: &str) -> Result<String, JsValue> {
    to_js(allocation_view(preset, c, all_red))
}

#[wasm_bindgen]
pub fn sweep(
    preset: &str,
    mode: &str,
    all_red: &str,
    cycle_lengths: &[u32],
    cycles: u32,
    seed: u32,
) -> Result<String, JsValue> {
    to_js(sweep_view(preset, mode, all_red, cycle_lengths, cycles as u64, seed as u64))
}

/// `dist` is `poisson:<mean>` or `bernoulli:<mean>`.
#[wasm_bindgen]
pub fn oracle(c: u32, g: u32, dist: &str) -> Result<String, JsValue> {
    to_js(oracle_view(c, g, dist))
}
