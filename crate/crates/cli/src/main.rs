use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand};

use resilient_core::par;
use resilient_core::simulator::randomized;
use resilient_core::workflow::{
    run_feasibility, run_simulation, status_for_error, write_report, write_simulation_outputs,
    write_trace_files, ExitStatus, RunConfig, DEMO_SEED,
};
use resilient_core::Error;

const OUTPUT_ENV: &str = "RESILIENT_OUTPUT_DIR";

#[derive(Parser)]
#[command(
    name = "resilient",
    version,
    about = "Resilient piecewise-constant control simulator",
    args_conflicts_with_subcommands = true
)]
struct Cli {
    /// Simulate every `*.json` config in a directory concurrently.
    #[arg(long, value_name = "DIR")]
    batch: Option<PathBuf>,
    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Subcommand)]
enum Command {
    /// Check the feasibility conditions and write feasibility.json.
    Feasibility { config: PathBuf },
    /// Run the closed loop and write traces and a summary.
    Simulate { config: PathBuf },
    /// Run the ADMIRE demonstration.
    DemoAdmire {
        #[arg(long, default_value_t = DEMO_SEED)]
        seed: u64,
        /// One of constant, sinusoid, bang_bang, greedy_adversary, cancellation_probe.
        #[arg(long)]
        strategy: Option<String>,
    },
}

fn output_dir(cfg: &RunConfig) -> PathBuf {
    std::env::var_os(OUTPUT_ENV)
        .map(PathBuf::from)
        .unwrap_or_else(|| cfg.output_dir.clone())
}

fn base_dir(config_path: &Path) -> PathBuf {
    config_path
        .parent()
        .map(Path::to_path_buf)
        .unwrap_or_else(|| PathBuf::from("."))
}

fn load(path: &Path) -> Result<RunConfig, ExitStatus> {
    let text = std::fs::read_to_string(path).map_err(|e| {
        eprintln!("error: cannot read {}: {e}", path.display());
        ExitStatus::ConfigError
    })?;
    RunConfig::from_json(&text).map_err(|e| {
        eprintln!("error: {}: {e}", path.display());
        ExitStatus::ConfigError
    })
}

fn report_error(err: anyhow::Error) -> ExitStatus {
    eprintln!("error: {err:#}");
    ExitStatus::ConfigError
}

fn feasibility(path: &Path) -> ExitStatus {
    let cfg = match load(path) {
        Ok(cfg) => cfg,
        Err(status) => return status,
    };
    let run = || -> anyhow::Result<ExitStatus> {
        let out = run_feasibility(&cfg, &base_dir(path))?;
        println!("{}", serde_json::to_string_pretty(&out.report)?);
        write_report(&out.report, &output_dir(&cfg)).context("writing feasibility report")?;
        for note in &out.report.notes {
            eprintln!("note: {note}");
        }
        Ok(out.status)
    };
    run().unwrap_or_else(report_error)
}

fn simulate(cfg: &RunConfig, base: &Path, out_dir: &Path, quiet: bool) -> ExitStatus {
    match run_simulation(cfg, base) {
        Ok(out) => {
            if let Err(e) = write_simulation_outputs(&out, out_dir) {
                return report_error(anyhow::Error::new(e).context("writing outputs"));
            }
            if !quiet {
                println!(
                    "final_error = {}  constraint_max = {}  n_bar = {}  runtime = {:.3} s",
                    out.summary.final_error,
                    out.summary.constraint_max,
                    out.summary.n_bar,
                    out.summary.runtime_seconds
                );
                println!("outputs written to {}", out_dir.display());
            }
            out.status
        }
        Err(err) => {
            let status = status_for_error(&err);
            if let Error::Divergence { partial, t, .. } = &err {
                eprintln!("error: trajectory diverged at t = {t}; writing partial trace");
                if let Err(e) = write_trace_files(partial, out_dir) {
                    eprintln!("error: writing partial trace: {e}");
                }
            } else {
                eprintln!("error: {err}");
            }
            status
        }
    }
}

fn simulate_file(path: &Path) -> ExitStatus {
    match load(path) {
        Ok(cfg) => simulate(&cfg, &base_dir(path), &output_dir(&cfg), false),
        Err(status) => status,
    }
}

fn demo(seed: u64, strategy: Option<&str>) -> ExitStatus {
    let strategy = match strategy.filter(|s| *s != "bang_bang") {
        Some(kind) => match randomized(kind, seed, 1) {
            Ok(s) => Some(s),
            Err(e) => {
                eprintln!("error: {e}");
                return ExitStatus::ConfigError;
            }
        },
        None => None,
    };
    let cfg = RunConfig::admire_demo(seed, strategy);
    simulate(&cfg, Path::new("."), &output_dir(&cfg), false)
}

fn batch(dir: &Path) -> ExitStatus {
    let mut configs: Vec<PathBuf> = match std::fs::read_dir(dir) {
        Ok(entries) => entries
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|ext| ext == "json"))
            .collect(),
        Err(e) => {
            eprintln!("error: cannot read {}: {e}", dir.display());
            return ExitStatus::ConfigError;
        }
    };
    configs.sort();
    let statuses = par::map_slice(&configs, |path| {
        let cfg = match load(path) {
            Ok(cfg) => cfg,
            Err(status) => return status,
        };
        let stem = path.file_stem().unwrap_or_default();
        let out = output_dir(&cfg).join(stem);
        simulate(&cfg, &base_dir(path), &out, true)
    });
    for (path, status) in configs.iter().zip(&statuses) {
        println!("{}: exit {}", path.display(), status.code());
    }
    statuses
        .into_iter()
        .max_by_key(|s| s.code())
        .unwrap_or(ExitStatus::Success)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let status = match (&cli.batch, &cli.command) {
        (Some(dir), _) => batch(dir),
        (None, Some(Command::Feasibility { config })) => feasibility(config),
        (None, Some(Command::Simulate { config })) => simulate_file(config),
        (None, Some(Command::DemoAdmire { seed, strategy })) => demo(*seed, strategy.as_deref()),
        (None, None) => {
            eprintln!("error: a subcommand or --batch <DIR> is required");
            ExitStatus::ConfigError
        }
    };
    ExitCode::from(status.code() as u8)
}
