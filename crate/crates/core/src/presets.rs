//! The four built-in intersection scenarios.

use std::fmt;
use std::str::FromStr;

use crate::scenario::{
    AllRedPlacement, AllRedPolicy, ArrivalDistribution, LaneConfig, Mode, PhaseConfig, ScenarioConfig,
};

pub const PRESET_CYCLES_PER_RUN: u64 = 100_000;
pub const PRESET_WARMUP_CYCLES: u64 = 1_000;
pub const PRESET_REPLICATIONS: u32 = 4;
pub const PRESET_SEED: u64 = 20_200_101;
/// Multiples of 110 keep λc integral for the single-lane presets.
pub const PRESET_CYCLE_LENGTHS: [u32; 4] = [110, 220, 440, 880];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Preset {
    /// Four singleton phases, Poisson λ_i = i/11, β = 0.1.
    Ex1a,
    /// Four singleton phases, Poisson λ = 5/22, β_i = i/10.
    Ex1b,
    /// Phases {1,3}, {2,4}, Poisson λ = (1/4, 1/2, 3/20, 3/10), β = 0.1.
    Ex2a,
    /// As ex2a with balanced phases, λ = (1/4, 1/2, 1/4, 1/2).
    Ex2b,
}

impl Preset {
    pub const ALL: [Preset; 4] = [Preset::Ex1a, Preset::Ex1b, Preset::Ex2a, Preset::Ex2b];

    pub fn name(&self) -> &'static str {
        match self {
            Preset::Ex1a => "ex1a",
            Preset::Ex1b => "ex1b",
            Preset::Ex2a => "ex2a",
            Preset::Ex2b => "ex2b",
        }
    }

    pub fn description(&self) -> &'static str {
        match self {
            Preset::Ex1a => "4 lanes, singleton phases, Poisson λ_i = i/11, β = 0.1",
            Preset::Ex1b => "4 lanes, singleton phases, Poisson λ = 5/22, β_i = i/10",
            Preset::Ex2a => "4 lanes, phases {1,3},{2,4}, Poisson λ = (1/4, 1/2, 3/20, 3/10), β = 0.1",
            Preset::Ex2b => "4 lanes, phases {1,3},{2,4}, Poisson λ = (1/4, 1/2, 1/4, 1/2), β = 0.1",
        }
    }

    pub fn config(&self) -> ScenarioConfig {
        let lane = |id: u32, mean: f64, beta: f64| LaneConfig::new(id, ArrivalDistribution::poisson(mean), beta);
        let singletons = || (1..=4).map(|j| PhaseConfig::new([j])).collect::<Vec<_>>();
        let paired = || vec![PhaseConfig::new([1, 3]), PhaseConfig::new([2, 4])];
        let (lanes, phases) = match self {
            Preset::Ex1a => ((1..=4).map(|i| lane(i, i as f64 / 11.0, 0.1)).collect(), singletons()),
            Preset::Ex1b => ((1..=4).map(|i| lane(i, 5.0 / 22.0, i as f64 / 10.0)).collect(), singletons()),
            Preset::Ex2a => {
                (vec![lane(1, 0.25, 0.1), lane(2, 0.5, 0.1), lane(3, 0.15, 0.1), lane(4, 0.3, 0.1)], paired())
            }
            Preset::Ex2b => {
                (vec![lane(1, 0.25, 0.1), lane(2, 0.5, 0.1), lane(3, 0.25, 0.1), lane(4, 0.5, 0.1)], paired())
            }
        };
        ScenarioConfig {
            lanes,
            phases,
            cycle_lengths: PRESET_CYCLE_LENGTHS.to_vec(),
            mode: Mode::Actuated,
            all_red_policy: AllRedPolicy::ScalingResidual,
            all_red_placement: AllRedPlacement::End,
            cycles_per_run: PRESET_CYCLES_PER_RUN,
            warmup_cycles: PRESET_WARMUP_CYCLES,
            replications: PRESET_REPLICATIONS,
            master_seed: PRESET_SEED,
        }
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Preset {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Preset::ALL
            .into_iter()
            .find(|p| p.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| format!("unknown preset `{s}` (expected one of ex1a, ex1b, ex2a, ex2b)"))
    }
}

/// Scenario for a preset name.
pub fn preset(name: &str) -> Result<ScenarioConfig, String> {
    name.parse::<Preset>().map(|p| p.config())
}
