//! Experiment orchestration for `sigsim`: sweeps cycle lengths, fans
//! replications out over a worker pool and writes one CSV row per
//! (c, mode, lane).

use std::fs::File;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use signal_core::experiment::{simulate_replication, summary_rows, trace};
use signal_core::stats::ReplicationSummary;
use signal_core::{AllocationError, Mode, SimError, SummaryRow, ValidatedScenario};
use thiserror::Error;

pub const CSV_HEADER: [&str; 15] = [
    "c",
    "lane",
    "mode",
    "all_red_policy",
    "g",
    "G_phase",
    "rho_lane",
    "rho_weighted",
    "p_empty",
    "p_empty_ci",
    "mean_queue",
    "mean_queue_ci",
    "mean_queue_norm",
    "replications",
    "cycles",
];

pub const TRACE_HEADER: [&str; 5] = ["cycle", "phase", "duration", "lane", "sample"];

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error(transparent)]
    Simulation(#[from] SimError),
    #[error("worker pool: {0}")]
    Pool(String),
}

impl ExperimentError {
    fn io(path: &Path, source: impl Into<io::Error>) -> Self {
        ExperimentError::Io { path: path.to_path_buf(), source: source.into() }
    }
}

#[derive(Debug, Clone)]
pub struct ExperimentPlan {
    pub scenario: ValidatedScenario,
    pub output: PathBuf,
    pub parallelism: usize,
    /// Modes to run, in any order; output is sorted.
    pub modes: Vec<Mode>,
    /// When set, a per-cycle trace of replication 0 is written here for
    /// every (c, mode).
    pub trace_dir: Option<PathBuf>,
}

#[derive(Debug, Clone)]
pub struct ExperimentReport {
    pub rows: Vec<SummaryRow>,
    /// Swept cycle lengths whose allocation did not fit; their rows are absent.
    pub infeasible: Vec<(u32, AllocationError)>,
}

/// Output ordering of modes: lexicographic by name.
fn sorted_modes(modes: &[Mode]) -> Vec<Mode> {
    let mut m = modes.to_vec();
    m.sort_by_key(|m| m.as_str());
    m.dedup();
    m
}

/// Runs every replication of every feasible (c, mode) point and aggregates.
/// Output does not depend on `parallelism`.
pub fn compute_rows(
    scenario: &ValidatedScenario,
    modes: &[Mode],
    parallelism: usize,
) -> Result<ExperimentReport, ExperimentError> {
    let modes = sorted_modes(modes);
    let mut infeasible = Vec::new();
    let mut points = Vec::new();
    for (c, alloc) in scenario.allocations() {
        match alloc {
            Ok(alloc) => points.extend(modes.iter().map(|&m| (*c, m, alloc.clone()))),
            Err(e) => infeasible.push((*c, e.clone())),
        }
    }
    let reps = scenario.config().replications;
    let jobs: Vec<(usize, u32)> = (0..points.len()).flat_map(|p| (0..reps).map(move |r| (p, r))).collect();

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(parallelism.max(1))
        .build()
        .map_err(|e| ExperimentError::Pool(e.to_string()))?;
    let results: Vec<Vec<ReplicationSummary>> = pool.install(|| {
        jobs.par_iter()
            .map(|&(p, r)| {
                let (c, mode, _) = &points[p];
                simulate_replication(scenario, *c, *mode, r)
            })
            .collect::<Result<_, _>>()
    })?;

    let mut rows = Vec::new();
    for (p, chunk) in results.chunks(reps as usize).enumerate() {
        let (_, mode, alloc) = &points[p];
        rows.extend(summary_rows(scenario, alloc, *mode, chunk)?);
    }
    rows.sort_by(|a, b| (a.c, a.mode.as_str(), a.lane).cmp(&(b.c, b.mode.as_str(), b.lane)));
    Ok(ExperimentReport { rows, infeasible })
}

fn fmt_f(x: f64) -> String {
    format!("{x:.6}")
}

/// Writes rows with the fixed header.
pub fn write_csv<W: Write>(rows: &[SummaryRow], out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER)?;
    for r in rows {
        w.write_record([
            r.c.to_string(),
            r.lane.to_string(),
            r.mode.to_string(),
            r.all_red_policy.to_string(),
            r.g.to_string(),
            r.g_phase.to_string(),
            fmt_f(r.rho_lane),
            fmt_f(r.rho_weighted),
            fmt_f(r.p_empty),
            fmt_f(r.p_empty_ci),
            fmt_f(r.mean_queue),
            fmt_f(r.mean_queue_ci),
            fmt_f(r.mean_queue_norm),
            r.replications.to_string(),
            r.cycles.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

fn write_traces(plan: &ExperimentPlan, dir: &Path, cs: &[u32]) -> Result<(), ExperimentError> {
    std::fs::create_dir_all(dir).map_err(|e| ExperimentError::io(dir, e))?;
    for &c in cs {
        for mode in sorted_modes(&plan.modes) {
            let path = dir.join(format!("trace_c{c}_{mode}.csv"));
            let rows = trace(&plan.scenario, c, mode, 0)?;
            let file = File::create(&path).map_err(|e| ExperimentError::io(&path, e))?;
            let mut w = csv::Writer::from_writer(io::BufWriter::new(file));
            let io_err = |e: csv::Error| ExperimentError::io(&path, e);
            w.write_record(TRACE_HEADER).map_err(io_err)?;
            for t in rows {
                w.write_record([
                    t.cycle.to_string(),
                    t.phase.to_string(),
                    t.duration.to_string(),
                    t.lane.to_string(),
                    t.sample.to_string(),
                ])
                .map_err(io_err)?;
            }
            w.flush().map_err(|e| ExperimentError::io(&path, e))?;
        }
    }
    Ok(())
}

/// Computes all rows and writes the CSV (and optional traces).
pub fn run_experiment(plan: &ExperimentPlan) -> Result<ExperimentReport, ExperimentError> {
    let report = compute_rows(&plan.scenario, &plan.modes, plan.parallelism)?;
    let file = File::create(&plan.output).map_err(|e| ExperimentError::io(&plan.output, e))?;
    write_csv(&report.rows, io::BufWriter::new(file)).map_err(|e| ExperimentError::io(&plan.output, e))?;
    if let Some(dir) = &plan.trace_dir {
        write_traces(plan, dir, &plan.scenario.feasible_cycle_lengths())?;
    }
    Ok(report)
}
