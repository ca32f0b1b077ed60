//! Scenario configuration: lanes, phases, cycle sweep and run parameters.
//!
//! A [`ScenarioConfig`] is the raw document form (JSON). [`validate`] checks
//! every invariant, computes the green allocation for each swept cycle
//! length and freezes the result into a [`ValidatedScenario`].

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::allocation::{allocate, AllocationError, AllocationResult};

pub const DEFAULT_WARMUP_CYCLES: u64 = 1000;
pub const DEFAULT_REPLICATIONS: u32 = 4;

/// Per-slot arrival distribution of one lane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum ArrivalDistribution {
    Poisson { mean: f64 },
    Bernoulli { mean: f64 },
}

impl ArrivalDistribution {
    pub fn poisson(mean: f64) -> Self {
        ArrivalDistribution::Poisson { mean }
    }

    pub fn bernoulli(mean: f64) -> Self {
        ArrivalDistribution::Bernoulli { mean }
    }

    /// Expected arrivals per slot.
    pub fn mean(&self) -> f64 {
        match *self {
            ArrivalDistribution::Poisson { mean } | ArrivalDistribution::Bernoulli { mean } => mean,
        }
    }

    pub fn is_valid(&self) -> bool {
        match *self {
            ArrivalDistribution::Poisson { mean } => mean.is_finite() && mean >= 0.0,
            ArrivalDistribution::Bernoulli { mean } => (0.0..=1.0).contains(&mean),
        }
    }

    /// Standard deviation of the per-slot arrival count.
    pub fn sigma(&self) -> f64 {
        sigma_of(self)
    }
}

impl fmt::Display for ArrivalDistribution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ArrivalDistribution::Poisson { mean } => write!(f, "poisson:{mean}"),
            ArrivalDistribution::Bernoulli { mean } => write!(f, "bernoulli:{mean}"),
        }
    }
}

impl std::str::FromStr for ArrivalDistribution {
    type Err = String;

    /// Parses `poisson:<mean>` or `bernoulli:<mean>`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (kind, mean) =
            s.split_once(':').ok_or_else(|| format!("expected <poisson|bernoulli>:<mean>, got `{s}`"))?;
        let mean: f64 = mean.trim().parse().map_err(|e| format!("invalid mean `{mean}`: {e}"))?;
        let d = match kind.trim().to_ascii_lowercase().as_str() {
            "poisson" => ArrivalDistribution::poisson(mean),
            "bernoulli" => ArrivalDistribution::bernoulli(mean),
            other => return Err(format!("unknown distribution `{other}`")),
        };
        if !d.is_valid() {
            return Err(format!("mean {mean} out of range for {kind}"));
        }
        Ok(d)
    }
}

/// σ of the per-slot arrival count: √m for Poisson, √(m(1−m)) for Bernoulli.
pub fn sigma_of(d: &ArrivalDistribution) -> f64 {
    match *d {
        ArrivalDistribution::Poisson { mean } => mean.max(0.0).sqrt(),
        ArrivalDistribution::Bernoulli { mean } => (mean * (1.0 - mean)).max(0.0).sqrt(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LaneConfig {
    pub id: u32,
    pub arrivals: ArrivalDistribution,
    /// Slack coefficient of the square-root hedge.
    pub beta: f64,
}

impl LaneConfig {
    pub fn new(id: u32, arrivals: ArrivalDistribution, beta: f64) -> Self {
        LaneConfig { id, arrivals, beta }
    }

    pub fn lambda(&self) -> f64 {
        self.arrivals.mean()
    }

    pub fn sigma(&self) -> f64 {
        sigma_of(&self.arrivals)
    }
}

/// Lanes that receive green together.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhaseConfig {
    pub lanes: Vec<u32>,
}

impl PhaseConfig {
    pub fn new(lanes: impl Into<Vec<u32>>) -> Self {
        PhaseConfig { lanes: lanes.into() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// Fixed-cycle traffic light: every phase keeps green for its full budget.
    Fctl,
    /// Vehicle-actuated: a phase ends as soon as all its lanes are empty.
    Actuated,
}

impl Mode {
    pub fn as_str(&self) -> &'static str {
        match self {
            Mode::Fctl => "fctl",
            Mode::Actuated => "actuated",
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "fctl" => Ok(Mode::Fctl),
            "actuated" => Ok(Mode::Actuated),
            other => Err(format!("unknown mode `{other}` (expected fctl or actuated)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum AllRedPolicy {
    /// All-red time is whatever is left of `c` after the phase budgets.
    #[default]
    #[serde(rename = "scaling")]
    ScalingResidual,
    /// Constant all-red time in slots, independent of `c`.
    #[serde(rename = "fixed")]
    Fixed(u32),
}

impl fmt::Display for AllRedPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AllRedPolicy::ScalingResidual => f.write_str("scaling"),
            AllRedPolicy::Fixed(r) => write!(f, "fixed:{r}"),
        }
    }
}

impl std::str::FromStr for AllRedPolicy {
    type Err = String;

    /// Parses `scaling` or `fixed:<R>`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s.eq_ignore_ascii_case("scaling") {
            return Ok(AllRedPolicy::ScalingResidual);
        }
        match s.split_once(':') {
            Some((kind, r)) if kind.eq_ignore_ascii_case("fixed") => {
                r.trim().parse().map(AllRedPolicy::Fixed).map_err(|e| format!("invalid all-red length `{r}`: {e}"))
            }
            _ => Err(format!("unknown all-red policy `{s}` (expected scaling or fixed:<R>)")),
        }
    }
}

/// Where the all-red slots go inside a cycle.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum AllRedPlacement {
    /// One block after the last phase.
    #[default]
    End,
    /// Equal gaps after every phase, remainder to the last gap.
    Split,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub lanes: Vec<LaneConfig>,
    /// Served cyclically in listed order.
    pub phases: Vec<PhaseConfig>,
    pub cycle_lengths: Vec<u32>,
    pub mode: Mode,
    #[serde(default)]
    pub all_red_policy: AllRedPolicy,
    #[serde(default)]
    pub all_red_placement: AllRedPlacement,
    pub cycles_per_run: u64,
    #[serde(default = "default_warmup")]
    pub warmup_cycles: u64,
    #[serde(default = "default_replications")]
    pub replications: u32,
    pub master_seed: u64,
}

fn default_warmup() -> u64 {
    DEFAULT_WARMUP_CYCLES
}

fn default_replications() -> u32 {
    DEFAULT_REPLICATIONS
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("syntax error at line {line}, column {column}: {message}")]
    Syntax { line: usize, column: usize, message: String },
    #[error("unknown key `{key}` at line {line}, column {column}")]
    UnknownKey { key: String, line: usize, column: usize },
    #[error("missing required key `{key}` at line {line}, column {column}")]
    MissingKey { key: String, line: usize, column: usize },
    #[error("invalid document at line {line}, column {column}: {message}")]
    Schema { line: usize, column: usize, message: String },
    #[error("{field}: {reason}")]
    Invalid { field: String, reason: String },
    #[error("phase {phase}: unknown lane id {lane}")]
    UnknownLane { phase: usize, lane: u32 },
    #[error("lane {lane}: beta must be positive")]
    NonPositiveBeta { lane: u32 },
    #[error("lane {lane}: unstable: g cannot exceed λc within c (arrival mean {mean} ≥ 1 per slot)")]
    Unstable { lane: u32, mean: f64 },
    #[error("lane {lane} belongs to no phase")]
    LaneWithoutPhase { lane: u32 },
    #[error("infeasible cycle length c={c}: {source}")]
    Infeasible {
        c: u32,
        #[source]
        source: AllocationError,
    },
}

impl ConfigError {
    fn invalid(field: impl Into<String>, reason: impl Into<String>) -> Self {
        ConfigError::Invalid { field: field.into(), reason: reason.into() }
    }

    fn from_json(e: serde_json::Error) -> Self {
        let (line, column) = (e.line(), e.column());
        let msg = e.to_string();
        // serde_json appends " at line X column Y" to the message
        let message = match msg.rfind(" at line ") {
            Some(i) => msg[..i].to_string(),
            None => msg,
        };
        let quoted = || message.split('`').nth(1).map(str::to_string).unwrap_or_default();
        match e.classify() {
            serde_json::error::Category::Data if message.starts_with("unknown field") => {
                ConfigError::UnknownKey { key: quoted(), line, column }
            }
            serde_json::error::Category::Data if message.starts_with("missing field") => {
                ConfigError::MissingKey { key: quoted(), line, column }
            }
            serde_json::error::Category::Data => ConfigError::Schema { line, column, message },
            _ => ConfigError::Syntax { line, column, message },
        }
    }
}

/// Parses a JSON scenario document, applying defaults for optional keys.
pub fn parse_scenario(text: &str) -> Result<ScenarioConfig, ConfigError> {
    serde_json::from_str(text).map_err(ConfigError::from_json)
}

/// Serializes a scenario to the JSON document form accepted by [`parse_scenario`].
pub fn serialize_scenario(cfg: &ScenarioConfig) -> String {
    serde_json::to_string_pretty(cfg).expect("scenario config is always serializable")
}

/// An immutable, checked scenario with its allocation precomputed for each
/// swept cycle length.
#[derive(Debug, Clone)]
pub struct ValidatedScenario {
    config: ScenarioConfig,
    lane_index: BTreeMap<u32, usize>,
    /// Phase membership as lane indices (positions in `config.lanes`).
    phase_lanes: Vec<Vec<usize>>,
    allocations: Vec<(u32, Result<AllocationResult, AllocationError>)>,
    warnings: Vec<String>,
}

impl ValidatedScenario {
    pub fn config(&self) -> &ScenarioConfig {
        &self.config
    }

    pub fn lanes(&self) -> &[LaneConfig] {
        &self.config.lanes
    }

    pub fn num_lanes(&self) -> usize {
        self.config.lanes.len()
    }

    /// Position of the lane with the given id.
    pub fn lane_index(&self, id: u32) -> Option<usize> {
        self.lane_index.get(&id).copied()
    }

    /// Phases as lists of lane indices.
    pub fn phase_lanes(&self) -> &[Vec<usize>] {
        &self.phase_lanes
    }

    pub fn warnings(&self) -> &[String] {
        &self.warnings
    }

    /// Allocation outcome for every swept cycle length, in sweep order.
    pub fn allocations(&self) -> &[(u32, Result<AllocationResult, AllocationError>)] {
        &self.allocations
    }

    /// The allocation for `c`; computed on the fly if `c` is not in the sweep.
    pub fn allocation(&self, c: u32) -> Result<AllocationResult, AllocationError> {
        match self.allocations.iter().find(|(cc, _)| *cc == c) {
            Some((_, r)) => r.clone(),
            None => allocate(&self.config.lanes, &self.phase_lanes, c, self.config.all_red_policy),
        }
    }

    /// Cycle lengths whose allocation is feasible.
    pub fn feasible_cycle_lengths(&self) -> Vec<u32> {
        self.allocations.iter().filter(|(_, r)| r.is_ok()).map(|(c, _)| *c).collect()
    }
}

/// Checks every invariant and requires every swept cycle length to be feasible.
pub fn validate(cfg: ScenarioConfig) -> Result<ValidatedScenario, ConfigError> {
    let v = validate_allow_infeasible(cfg)?;
    if let Some((c, Err(e))) = v.allocations.iter().find(|(_, r)| r.is_err()) {
        return Err(ConfigError::Infeasible { c: *c, source: e.clone() });
    }
    Ok(v)
}

/// Like [`validate`], but infeasible cycle lengths are kept as errors inside
/// the result so that a sweep can skip them.
pub fn validate_allow_infeasible(cfg: ScenarioConfig) -> Result<ValidatedScenario, ConfigError> {
    if cfg.lanes.is_empty() {
        return Err(ConfigError::invalid("lanes", "at least one lane is required"));
    }
    if cfg.phases.is_empty() {
        return Err(ConfigError::invalid("phases", "at least one phase is required"));
    }
    let n = cfg.lanes.len();
    let mut lane_index = BTreeMap::new();
    for (idx, lane) in cfg.lanes.iter().enumerate() {
        if lane.id == 0 || lane.id as usize > n {
            return Err(ConfigError::invalid(
                format!("lanes[{idx}].id"),
                format!("lane id {} outside 1..={n}", lane.id),
            ));
        }
        if lane_index.insert(lane.id, idx).is_some() {
            return Err(ConfigError::invalid(format!("lanes[{idx}].id"), format!("duplicate lane id {}", lane.id)));
        }
        if !(lane.beta > 0.0 && lane.beta.is_finite()) {
            return Err(ConfigError::NonPositiveBeta { lane: lane.id });
        }
        if !lane.arrivals.is_valid() {
            return Err(ConfigError::invalid(
                format!("lanes[{idx}].arrivals"),
                format!("mean {} out of range for {}", lane.arrivals.mean(), lane.arrivals),
            ));
        }
        if lane.lambda() >= 1.0 {
            return Err(ConfigError::Unstable { lane: lane.id, mean: lane.lambda() });
        }
        if lane.lambda() <= 0.0 {
            return Err(ConfigError::invalid(format!("lanes[{idx}].arrivals"), "arrival mean must be positive"));
        }
    }

    let mut phase_lanes = Vec::with_capacity(cfg.phases.len());
    let mut memberships = vec![0usize; n];
    for (j, phase) in cfg.phases.iter().enumerate() {
        if phase.lanes.is_empty() {
            return Err(ConfigError::invalid(format!("phases[{j}].lanes"), "phase is empty"));
        }
        let mut members = Vec::with_capacity(phase.lanes.len());
        for &id in &phase.lanes {
            let idx = *lane_index.get(&id).ok_or(ConfigError::UnknownLane { phase: j + 1, lane: id })?;
            if members.contains(&idx) {
                return Err(ConfigError::invalid(format!("phases[{j}].lanes"), format!("lane {id} listed twice")));
            }
            members.push(idx);
            memberships[idx] += 1;
        }
        phase_lanes.push(members);
    }
    let mut warnings = Vec::new();
    for (idx, &count) in memberships.iter().enumerate() {
        let id = cfg.lanes[idx].id;
        if count == 0 {
            return Err(ConfigError::LaneWithoutPhase { lane: id });
        }
        if count > 1 {
            warnings.push(format!("lane {id} belongs to {count} phases and receives green in each"));
        }
    }

    if cfg.cycle_lengths.is_empty() {
        return Err(ConfigError::invalid("cycle_lengths", "at least one cycle length is required"));
    }
    if cfg.cycle_lengths[0] == 0 {
        return Err(ConfigError::invalid("cycle_lengths", "cycle lengths must be positive"));
    }
    if cfg.cycle_lengths.windows(2).any(|w| w[0] >= w[1]) {
        return Err(ConfigError::invalid("cycle_lengths", "must be strictly increasing"));
    }
    if cfg.cycles_per_run == 0 {
        return Err(ConfigError::invalid("cycles_per_run", "must be positive"));
    }
    if cfg.warmup_cycles >= cfg.cycles_per_run {
        return Err(ConfigError::invalid(
            "warmup_cycles",
            format!("warm-up ({}) must be shorter than the run ({} cycles)", cfg.warmup_cycles, cfg.cycles_per_run),
        ));
    }
    if cfg.replications == 0 {
        return Err(ConfigError::invalid("replications", "must be positive"));
    }

    let allocations =
        cfg.cycle_lengths.iter().map(|&c| (c, allocate(&cfg.lanes, &phase_lanes, c, cfg.all_red_policy))).collect();

    Ok(ValidatedScenario { config: cfg, lane_index, phase_lanes, allocations, warnings })
}
