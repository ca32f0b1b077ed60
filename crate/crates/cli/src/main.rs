use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{ArgGroup, Parser, Subcommand, ValueEnum};
use signal_cli::{run_experiment, ExperimentError, ExperimentPlan};
use signal_core::{
    fctl_stationary, parse_scenario, validate_allow_infeasible, AllRedPolicy, ArrivalDistribution, Mode,
    OracleSettings, Preset, ScenarioConfig,
};

const EXIT_CONFIG: u8 = 1;
const EXIT_INFEASIBLE: u8 = 2;
const EXIT_IO: u8 = 3;

#[derive(Parser)]
#[command(name = "sigsim", version, about = "Square-root green allocation: FCTL and actuated intersection simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Fctl,
    Actuated,
    Both,
}

#[derive(Subcommand)]
enum Command {
    /// Sweep cycle lengths and write one CSV row per (c, mode, lane).
    #[command(group(ArgGroup::new("source").required(true).args(["config", "preset"])))]
    Simulate {
        /// Scenario JSON document.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Built-in scenario (ex1a, ex1b, ex2a, ex2b).
        #[arg(long)]
        preset: Option<Preset>,
        #[arg(long, value_enum)]
        mode: Option<ModeArg>,
        /// `scaling` or `fixed:<R>`.
        #[arg(long = "all-red")]
        all_red: Option<AllRedPolicy>,
        /// Cycles per replication (including warm-up).
        #[arg(long)]
        cycles: Option<u64>,
        #[arg(long)]
        warmup: Option<u64>,
        #[arg(long)]
        replications: Option<u32>,
        #[arg(long)]
        seed: Option<u64>,
        /// Comma-separated cycle lengths replacing the scenario's sweep.
        #[arg(long, value_delimiter = ',')]
        sweep: Option<Vec<u32>>,
        /// Worker threads.
        #[arg(long, default_value_t = 1)]
        parallel: usize,
        /// Write per-cycle traces of replication 0 into this directory.
        #[arg(long)]
        trace_dir: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Exact stationary end-of-green metrics of a single FCTL lane.
    Oracle {
        #[arg(long)]
        c: u32,
        #[arg(long)]
        g: u32,
        /// `poisson:<mean>` or `bernoulli:<mean>`.
        #[arg(long)]
        dist: ArrivalDistribution,
        #[arg(long, default_value_t = 512)]
        q_max: usize,
    },
    /// Built-in scenarios.
    Presets {
        #[command(subcommand)]
        action: PresetAction,
    },
}

#[derive(Subcommand)]
enum PresetAction {
    List,
    /// Print a preset as a scenario JSON document.
    Show {
        name: Preset,
    },
}

fn load_config(config: Option<PathBuf>, preset: Option<Preset>) -> Result<ScenarioConfig, (u8, String)> {
    match (config, preset) {
        (_, Some(p)) => Ok(p.config()),
        (Some(path), None) => {
            let text = std::fs::read_to_string(&path)
                .map_err(|e| (EXIT_IO, format!("cannot read {}: {e}", path.display())))?;
            parse_scenario(&text).map_err(|e| (EXIT_CONFIG, format!("{}: {e}", path.display())))
        }
        (None, None) => Err((EXIT_CONFIG, "either --config or --preset is required".into())),
    }
}

#[allow(clippy::too_many_arguments)]
fn simulate(
    config: Option<PathBuf>,
    preset: Option<Preset>,
    mode: Option<ModeArg>,
    all_red: Option<AllRedPolicy>,
    cycles: Option<u64>,
    warmup: Option<u64>,
    replications: Option<u32>,
    seed: Option<u64>,
    sweep: Option<Vec<u32>>,
    parallel: usize,
    trace_dir: Option<PathBuf>,
    out: PathBuf,
) -> Result<(), (u8, String)> {
    let mut cfg = load_config(config, preset)?;
    let modes = match mode {
        None => vec![cfg.mode],
        Some(ModeArg::Fctl) => vec![Mode::Fctl],
        Some(ModeArg::Actuated) => vec![Mode::Actuated],
        Some(ModeArg::Both) => vec![Mode::Actuated, Mode::Fctl],
    };
    cfg.mode = modes[0];
    if let Some(p) = all_red {
        cfg.all_red_policy = p;
    }
    if let Some(n) = cycles {
        cfg.cycles_per_run = n;
    }
    if let Some(n) = warmup {
        cfg.warmup_cycles = n;
    }
    if let Some(n) = replications {
        cfg.replications = n;
    }
    if let Some(s) = seed {
        cfg.master_seed = s;
    }
    if let Some(s) = sweep {
        cfg.cycle_lengths = s;
    }
    if cfg.replications < 2 {
        return Err((EXIT_CONFIG, "replications: need ≥2 replications for confidence intervals".into()));
    }
    if parallel == 0 {
        return Err((EXIT_CONFIG, "--parallel must be at least 1".into()));
    }
    let scenario = validate_allow_infeasible(cfg).map_err(|e| (EXIT_CONFIG, e.to_string()))?;
    for w in scenario.warnings() {
        eprintln!("warning: {w}");
    }
    let plan = ExperimentPlan { scenario, output: out, parallelism: parallel, modes, trace_dir };
    let report = run_experiment(&plan).map_err(|e| match e {
        ExperimentError::Io { .. } => (EXIT_IO, e.to_string()),
        other => (EXIT_CONFIG, other.to_string()),
    })?;
    for (c, e) in &report.infeasible {
        eprintln!("warning: skipped c={c}: {e}");
    }
    if report.infeasible.is_empty() {
        Ok(())
    } else {
        Err((EXIT_INFEASIBLE, format!("{} infeasible cycle length(s) skipped", report.infeasible.len())))
    }
}

/// Writes to stdout; a closed pipe is not an error.
fn emit(text: &str) -> Result<(), (u8, String)> {
    match std::io::stdout().lock().write_all(text.as_bytes()) {
        Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err((EXIT_IO, format!("stdout: {e}"))),
        _ => Ok(()),
    }
}

fn run(cli: Cli) -> Result<(), (u8, String)> {
    match cli.command {
        Command::Simulate {
            config,
            preset,
            mode,
            all_red,
            cycles,
            warmup,
            replications,
            seed,
            sweep,
            parallel,
            trace_dir,
            out,
        } => {
            simulate(config, preset, mode, all_red, cycles, warmup, replications, seed, sweep, parallel, trace_dir, out)
        }
        Command::Oracle { c, g, dist, q_max } => {
            let settings = OracleSettings { q_max, ..OracleSettings::default() };
            let s = fctl_stationary(c, g, &dist, settings).map_err(|e| (EXIT_CONFIG, e.to_string()))?;
            emit(&format!("p_empty {:.6}\nmean {:.6}\n", s.p_empty, s.mean))
        }
        Command::Presets { action: PresetAction::List } => {
            let list: String = Preset::ALL.iter().map(|p| format!("{:<6}{}\n", p.name(), p.description())).collect();
            emit(&list)
        }
        Command::Presets { action: PresetAction::Show { name } } => {
            emit(&format!("{}\n", signal_core::serialize_scenario(&name.config())))
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_CONFIG } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err((code, msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(code)
        }
    }
}
