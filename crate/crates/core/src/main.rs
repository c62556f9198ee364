//! Thin command-line front end over the `tiltsim` library.
//!
//! Three subcommands: `run` one scenario and export its trace, `compare`
//! the three controllers on a shared scenario with phase-segmented error
//! tables, and `check` the structural invariant suite. Exit codes: 0
//! success, 1 configuration error, 2 numerical failure (including failed
//! invariant checks), 3 I/O error.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use tiltsim::arsmc::ControllerKind;
use tiltsim::config::{self, ScenarioConfig};
use tiltsim::report::{self, ControllerMetrics, PhaseWindows};
use tiltsim::simkernel::{self, SimTrace};
use tiltsim::{selfcheck, Result, SimError};

#[derive(Parser)]
#[command(
    name = "tiltsim",
    version,
    about = "Deterministic tiltrotor transition-mode attitude control simulator"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate one scenario and print a summary (optionally exporting the
    /// full trace as CSV).
    Run(RunArgs),
    /// Simulate the same scenario under all three controllers and print the
    /// phase-segmented comparison tables.
    Compare(CompareArgs),
    /// Run the structural invariant suite against a scenario's parameters.
    Check(CheckArgs),
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum ControllerArg {
    Sac,
    Ftsmc,
    Rsmc,
    None,
}

impl From<ControllerArg> for ControllerKind {
    fn from(c: ControllerArg) -> ControllerKind {
        match c {
            ControllerArg::Sac => ControllerKind::Sac,
            ControllerArg::Ftsmc => ControllerKind::Ftsmc,
            ControllerArg::Rsmc => ControllerKind::Rsmc,
            ControllerArg::None => ControllerKind::None,
        }
    }
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum Switch {
    On,
    Off,
}

/// Scenario source plus the overrides shared by the subcommands.
#[derive(Args, Clone)]
struct ScenarioArgs {
    /// Scenario file (TOML, schema tag `tiltsim/scenario@1`); the built-in
    /// default scenario when omitted.
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Scripted disturbance injection: `on` keeps the scenario's profile,
    /// `off` zeroes it. The tilt-coupled transition effect is part of the
    /// plant and stays either way.
    #[arg(long, value_enum, value_name = "on|off")]
    disturbance: Option<Switch>,
    /// Override the integration step [s].
    #[arg(long, value_name = "SECONDS")]
    step: Option<f64>,
    /// Override the run duration [s].
    #[arg(long, value_name = "SECONDS")]
    duration: Option<f64>,
}

impl ScenarioArgs {
    fn load(&self) -> Result<ScenarioConfig> {
        let mut cfg = match &self.config {
            Some(path) => config::load_scenario(path)?,
            None => ScenarioConfig::default(),
        };
        if let Some(step) = self.step {
            cfg.step = step;
        }
        if let Some(duration) = self.duration {
            cfg.duration = duration;
        }
        if self.disturbance == Some(Switch::Off) {
            cfg = cfg.without_injected_disturbance();
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    scenario: ScenarioArgs,
    /// Attitude controller for this run.
    #[arg(long, value_enum)]
    controller: Option<ControllerArg>,
    /// Directory for the trace CSV (created if missing). Nothing is
    /// written when omitted.
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct CompareArgs {
    #[command(flatten)]
    scenario: ScenarioArgs,
    /// Directory for the three trace CSVs and the comparison table
    /// (created if missing). Nothing is written when omitted.
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct CheckArgs {
    /// Scenario file whose parameters the suite should use; the built-in
    /// default scenario when omitted.
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(args) => cmd_run(args),
        Command::Compare(args) => cmd_compare(args),
        Command::Check(args) => cmd_check(args),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code().clamp(0, 255) as u8)
        }
    }
}

fn ensure_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| SimError::Io {
        path: dir.display().to_string(),
        source: e,
    })
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| SimError::Io {
        path: path.display().to_string(),
        source: e,
    })
}

const RAD_TO_DEG: f64 = 180.0 / std::f64::consts::PI;

fn cmd_run(args: RunArgs) -> Result<ExitCode> {
    let mut cfg = args.scenario.load()?;
    if let Some(controller) = args.controller {
        cfg = cfg.with_controller(controller.into());
    }
    let trace = simkernel::run(&cfg)?;
    print_run_summary(&cfg, &trace);

    if let Some(dir) = &args.out {
        ensure_dir(dir)?;
        let path = dir.join(format!("trace_{}.csv", cfg.controller));
        report::write_trace_csv(&path, &trace)?;
        println!("trace written to {}", path.display());
    }
    Ok(ExitCode::SUCCESS)
}

fn print_run_summary(cfg: &ScenarioConfig, trace: &SimTrace) {
    println!(
        "controller {} | {} s at {} s step | {} records",
        cfg.controller,
        cfg.duration,
        cfg.step,
        trace.len()
    );
    let last = trace.final_record();
    println!(
        "final attitude [deg]: roll {:+.5}  pitch {:+.5}  yaw {:+.5}",
        last.body.phi * RAD_TO_DEG,
        last.body.theta * RAD_TO_DEG,
        last.body.psi * RAD_TO_DEG
    );
    if cfg.controller != ControllerKind::None {
        let threshold = 0.05 / RAD_TO_DEG;
        let names = ["roll", "pitch", "yaw"];
        let mut parts = Vec::new();
        for (axis, name) in names.iter().enumerate() {
            let t = report::settling_time(trace, axis, threshold, cfg.duration);
            parts.push(match t {
                Some(t) => format!("{name} {t:.3} s"),
                None => format!("{name} —"),
            });
        }
        println!("settling to |e| < 0.05 deg: {}", parts.join(", "));
    }
    if let Ok(windows) = PhaseWindows::from_timeline(&cfg.tilt) {
        for (label, span) in [
            ("conversion", windows.conversion),
            ("reconversion", windows.reconversion),
        ] {
            if let Ok(m) = report::compute_metrics(trace, span) {
                println!(
                    "{label} ({:.1}-{:.1} s) MAX_e [deg]: roll {:.4}, pitch {:.4}, yaw {:.4}",
                    span.0,
                    span.1,
                    m[0].max_e * RAD_TO_DEG,
                    m[1].max_e * RAD_TO_DEG,
                    m[2].max_e * RAD_TO_DEG
                );
            }
        }
    }
}

fn cmd_compare(args: CompareArgs) -> Result<ExitCode> {
    let base = args.scenario.load()?;
    let windows = PhaseWindows::from_timeline(&base.tilt)?;

    let kinds = [ControllerKind::Ftsmc, ControllerKind::Rsmc, ControllerKind::Sac];
    let configs = kinds.map(|k| base.clone().with_controller(k));

    // The three runs are independent; integrate them concurrently. The
    // result order is fixed by the `kinds` array, not completion order.
    let mut traces: [Option<Result<SimTrace>>; 3] = [None, None, None];
    std::thread::scope(|scope| {
        let handles = configs.each_ref().map(|cfg| scope.spawn(move || simkernel::run(cfg)));
        for (slot, handle) in traces.iter_mut().zip(handles) {
            *slot = Some(handle.join().expect("simulation thread panicked"));
        }
    });
    let [ftsmc_trace, rsmc_trace, sac_trace] = traces.map(|t| t.expect("all slots filled"));
    let (ftsmc_trace, rsmc_trace, sac_trace) = (ftsmc_trace?, rsmc_trace?, sac_trace?);

    let ftsmc = ControllerMetrics::from_trace(ControllerKind::Ftsmc, &ftsmc_trace, &windows)?;
    let rsmc = ControllerMetrics::from_trace(ControllerKind::Rsmc, &rsmc_trace, &windows)?;
    let sac = ControllerMetrics::from_trace(ControllerKind::Sac, &sac_trace, &windows)?;
    let table = report::render_comparison(&windows, &ftsmc, &rsmc, &sac);
    print!("{table}");

    if let Some(dir) = &args.out {
        ensure_dir(dir)?;
        for (kind, trace) in kinds.iter().zip([&ftsmc_trace, &rsmc_trace, &sac_trace]) {
            let path = dir.join(format!("trace_{kind}.csv"));
            report::write_trace_csv(&path, trace)?;
        }
        let table_path = dir.join("comparison.txt");
        write_text(&table_path, &table)?;
        println!(
            "traces and comparison table written to {}",
            dir.display()
        );
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_check(args: CheckArgs) -> Result<ExitCode> {
    let cfg = match &args.config {
        Some(path) => config::load_scenario(path)?,
        None => ScenarioConfig::default(),
    };
    let outcomes = selfcheck::run_all(&cfg);
    let mut failed = 0usize;
    for o in &outcomes {
        let verdict = if o.passed { "PASS" } else { "FAIL" };
        println!("{verdict}  {} — {}", o.name, o.detail);
        if !o.passed {
            failed += 1;
        }
    }
    if failed == 0 {
        println!("all {} checks passed", outcomes.len());
        Ok(ExitCode::SUCCESS)
    } else {
        println!("{failed} of {} checks failed", outcomes.len());
        Ok(ExitCode::from(2))
    }
}
