//! Square-root green-time allocation for isolated intersections, with
//! slot-level simulators of the fixed-cycle and vehicle-actuated controllers.
//!
//! Each lane `i` with per-slot arrival mean `λ_i` and standard deviation
//! `σ_i` receives `⌈λ_i c + β_i σ_i √c⌉` green slots out of a cycle of at
//! most `c` slots. The crate computes these budgets ([`allocation`]),
//! simulates the resulting queues ([`engine`]), checks the fixed-cycle case
//! against an exact Markov-chain solution ([`oracle`]) and reports
//! end-of-access queue statistics ([`stats`], [`experiment`]).

pub mod allocation;
pub mod arrivals;
pub mod engine;
pub mod experiment;
pub mod oracle;
pub mod presets;
pub mod scenario;
pub mod stats;

pub use allocation::{all_red, allocate, allocate_green, phase_budget, AllocationError, AllocationResult};
pub use arrivals::{make_stream, ArrivalStream, StreamKey};
pub use engine::{
    fctl_slot_step, run_actuated, run_actuated_with, run_cycle_actuated, run_fctl, run_fctl_with, scenario_streams,
    ActuatedOptions, CyclePlan, CycleRecord, EndOfAccess, FctlSchedule, GreenWindow, LaneState, LaneTraces, SlotKind,
    SlotObserver,
};
pub use experiment::{run_point, simulate_replication, summary_rows, trace, SimError, TraceRow};
pub use oracle::{
    arrival_pmf, fctl_stationary, fctl_transition, ExactDistribution, FctlStationary, OracleError, OracleSettings,
};
pub use presets::{preset, Preset};
pub use scenario::{
    parse_scenario, serialize_scenario, sigma_of, validate, validate_allow_infeasible, AllRedPlacement, AllRedPolicy,
    ArrivalDistribution, ConfigError, LaneConfig, Mode, PhaseConfig, ScenarioConfig, ValidatedScenario,
};
pub use stats::{
    aggregate_replications, mean_and_halfwidth, rho, summarize, t_quantile_975, Aggregate, QueueSummary,
    ReplicationSummary, SampleTally, StatsError, SummaryRow,
};
