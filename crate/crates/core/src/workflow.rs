//! Run configuration and the feasibility / simulation workflows behind the
//! command-line tool.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::controller::ControlSchedule;
use crate::error::{Error, Result};
use crate::feasibility::{analyze, FeasibilityReport};
use crate::linalg::Vector;
use crate::simulator::{
    run_closed_loop, verify_trace, write_nodes_csv, write_trace_csv, SimulationTrace,
    TraceDiagnostics, UncontrolledStrategy, DEFAULT_STEPS_PER_INTERVAL,
};
use crate::system::{build_admire, ControlSystem, SystemDocument, ADMIRE_X0};

/// Samples used by the Lipschitz spot check during feasibility analysis.
const LIPSCHITZ_SAMPLES: usize = 10_000;

/// Demo switching period of the seeded canard signal.
pub const DEMO_SWITCH_PERIOD: f64 = 0.01;
pub const DEMO_SEED: u64 = 0;
pub const DEMO_EPSILON: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExitStatus {
    Success = 0,
    ConfigError = 1,
    Advisory = 2,
    MissedTarget = 3,
    Diverged = 4,
}

impl ExitStatus {
    pub fn code(self) -> i32 {
        self as i32
    }
}

/// Either a builtin name or a system document (inline or a path to one).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SystemSource {
    Named(String),
    Inline(Box<SystemDocument>),
}

fn default_steps() -> usize {
    DEFAULT_STEPS_PER_INTERVAL
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}

fn default_strategy() -> UncontrolledStrategy {
    UncontrolledStrategy::BangBang {
        switch_period: DEMO_SWITCH_PERIOD,
        seed: 0,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// `"admire"`, a path to a system JSON (relative to the config file), or
    /// an inline system document.
    pub system: SystemSource,
    /// Defaults to the system's own initial state.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x0: Option<Vector>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub xtg: Option<Vector>,
    pub t_f: f64,
    /// Target radius at `t_f`.
    pub epsilon: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_bar_override: Option<usize>,
    #[serde(default = "default_strategy")]
    pub strategy: UncontrolledStrategy,
    #[serde(default = "default_steps")]
    pub steps_per_interval: usize,
    /// Replaces the seed of a `bang_bang` strategy when present.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: RunConfig = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.t_f > 0.0 && self.t_f.is_finite()) {
            return Err(Error::Config(format!("t_f must be positive, got {}", self.t_f)));
        }
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return Err(Error::Config(format!("epsilon must be positive, got {}", self.epsilon)));
        }
        Ok(())
    }

    /// The demo configuration for the ADMIRE model.
    pub fn admire_demo(seed: u64, strategy: Option<UncontrolledStrategy>) -> Self {
        RunConfig {
            system: SystemSource::Named("admire".into()),
            x0: Some(Vector::from(ADMIRE_X0)),
            xtg: Some(Vector::zeros(3)),
            t_f: 20.0,
            epsilon: DEMO_EPSILON,
            n_bar_override: Some(8),
            strategy: strategy.unwrap_or_else(default_strategy),
            steps_per_interval: DEFAULT_STEPS_PER_INTERVAL,
            seed: Some(seed),
            output_dir: default_output_dir(),
        }
    }

    pub fn effective_strategy(&self) -> UncontrolledStrategy {
        match (&self.strategy, self.seed) {
            (UncontrolledStrategy::BangBang { switch_period, .. }, Some(seed)) => {
                UncontrolledStrategy::BangBang {
                    switch_period: *switch_period,
                    seed,
                }
            }
            (s, _) => s.clone(),
        }
    }

    /// System, initial state and target. `base_dir` resolves relative system
    /// paths.
    pub fn resolve(&self, base_dir: &Path) -> Result<(ControlSystem, Vector, Vector)> {
        let (sys, x0, xtg) = match &self.system {
            SystemSource::Named(name) if name == "admire" => {
                (build_admire(), Vector::from(ADMIRE_X0), Vector::zeros(3))
            }
            SystemSource::Named(path) => {
                let full = base_dir.join(path);
                let text = fs::read_to_string(&full).map_err(|e| {
                    Error::Config(format!("cannot read system file {}: {e}", full.display()))
                })?;
                let doc = SystemDocument::from_json(&text)?;
                (doc.to_system()?, doc.x0.clone(), doc.xtg.clone())
            }
            SystemSource::Inline(doc) => (doc.to_system()?, doc.x0.clone(), doc.xtg.clone()),
        };
        let x0 = self.x0.clone().unwrap_or(x0);
        let xtg = self.xtg.clone().unwrap_or(xtg);
        x0.check_dim(sys.state_dim(), "x0")
            .and_then(|_| xtg.check_dim(sys.state_dim(), "xtg"))
            .map_err(|e| Error::Config(e.to_string()))?;
        Ok((sys, x0, xtg))
    }
}

pub struct FeasibilityOutcome {
    pub report: FeasibilityReport,
    pub status: ExitStatus,
}

/// Feasibility report for the configured `t_f`, with a note when sampled
/// difference quotients exceed the declared Lipschitz constants.
pub fn run_feasibility(cfg: &RunConfig, base_dir: &Path) -> Result<FeasibilityOutcome> {
    let (sys, x0, xtg) = cfg.resolve(base_dir)?;
    let approx = sys.linearize_at(&x0)?;
    let mut report = analyze(&sys, &approx, &xtg, cfg.t_f)?;
    let lip = sys.check_lipschitz(LIPSCHITZ_SAMPLES, 0)?;
    if !lip.consistent {
        report.notes.push(format!(
            "sampled Lipschitz ratios (f: {}, g: {}) exceed the declared constants (Df = {}, Dg = {})",
            lip.max_ratio_f,
            lip.max_ratio_g,
            sys.lipschitz_f(),
            sys.lipschitz_g()
        ));
    }
    let status = if report.tf_valid {
        ExitStatus::Success
    } else {
        ExitStatus::Advisory
    };
    Ok(FeasibilityOutcome { report, status })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunSummary {
    pub final_error: f64,
    pub constraint_max: f64,
    pub violations: TraceDiagnostics,
    pub runtime_seconds: f64,
    pub epsilon: f64,
    pub n1: usize,
    pub n_bar: usize,
    pub tf_valid: bool,
    pub exit_code: i32,
    pub config: RunConfig,
}

pub struct SimulationOutcome {
    pub report: FeasibilityReport,
    pub schedule: ControlSchedule,
    pub trace: SimulationTrace,
    pub diagnostics: TraceDiagnostics,
    pub summary: RunSummary,
    pub status: ExitStatus,
}

/// Feasibility (advisory), schedule, closed loop and verification.
pub fn run_simulation(cfg: &RunConfig, base_dir: &Path) -> Result<SimulationOutcome> {
    let started = Instant::now();
    let (sys, x0, xtg) = cfg.resolve(base_dir)?;
    let approx = sys.linearize_at(&x0)?;
    let report = analyze(&sys, &approx, &xtg, cfg.t_f)?;
    let mut schedule = ControlSchedule::new(
        approx,
        xtg,
        cfg.t_f,
        cfg.epsilon,
        report.constants(),
        cfg.n_bar_override,
    )?;
    let strategy = cfg.effective_strategy();
    let trace = run_closed_loop(&sys, &mut schedule, &strategy, cfg.steps_per_interval)?;
    let diagnostics = verify_trace(&trace, &report, &schedule);
    let status = if diagnostics.final_error_ok {
        ExitStatus::Success
    } else {
        ExitStatus::MissedTarget
    };
    let summary = RunSummary {
        final_error: trace.final_error,
        constraint_max: trace.constraint_max,
        violations: diagnostics.clone(),
        runtime_seconds: started.elapsed().as_secs_f64(),
        epsilon: cfg.epsilon,
        n1: schedule.n1(),
        n_bar: schedule.n_bar(),
        tf_valid: report.tf_valid,
        exit_code: status.code(),
        config: cfg.clone(),
    };
    Ok(SimulationOutcome {
        report,
        schedule,
        trace,
        diagnostics,
        summary,
        status,
    })
}

/// Exit status for a workflow error.
pub fn status_for_error(err: &Error) -> ExitStatus {
    match err {
        Error::Divergence { .. } => ExitStatus::Diverged,
        _ => ExitStatus::ConfigError,
    }
}

pub fn write_report(report: &FeasibilityReport, dir: &Path) -> Result<PathBuf> {
    fs::create_dir_all(dir)?;
    let path = dir.join("feasibility.json");
    fs::write(&path, serde_json::to_string_pretty(report)?)?;
    Ok(path)
}

pub fn write_trace_files(trace: &SimulationTrace, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    write_trace_csv(trace, fs::File::create(dir.join("trace.csv"))?)?;
    write_nodes_csv(trace, fs::File::create(dir.join("nodes.csv"))?)?;
    Ok(())
}

/// Writes `feasibility.json`, `schedule.json`, `trace.csv`, `nodes.csv` and
/// `summary.json`.
pub fn write_simulation_outputs(out: &SimulationOutcome, dir: &Path) -> Result<()> {
    write_report(&out.report, dir)?;
    write_trace_files(&out.trace, dir)?;
    fs::write(dir.join("schedule.json"), out.schedule.inputs_json()?)?;
    fs::write(dir.join("summary.json"), serde_json::to_string_pretty(&out.summary)?)?;
    Ok(())
}
