use serde::Serialize;

use crate::controller::ControlSchedule;
use crate::feasibility::FeasibilityReport;

use super::SimulationTrace;

/// Slack on the unit input bound before an interval is flagged.
pub const CONSTRAINT_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundViolation {
    pub n: usize,
    pub t_n: f64,
    pub err: f64,
    pub bound: f64,
    pub tol: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConstraintViolation {
    pub n: usize,
    pub norm: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TraceDiagnostics {
    pub bound_violations: Vec<BoundViolation>,
    pub constraint_violations: Vec<ConstraintViolation>,
    pub final_error_ok: bool,
    pub notes: Vec<String>,
}

impl TraceDiagnostics {
    pub fn is_clean(&self) -> bool {
        self.bound_violations.is_empty() && self.constraint_violations.is_empty() && self.final_error_ok
    }
}

/// Node-error tolerance for an interval of length `dt` split into `steps`
/// RK4 steps: `1e-9 + 10 (dt / steps)^4 * scale`.
pub fn integrator_allowance(dt: f64, steps: usize, scale: f64) -> f64 {
    1e-9 + 10.0 * (dt / steps as f64).powi(4) * scale
}

/// Compares node errors with their bounds and every held input with the
/// unit bound. `scale` in the integrator allowance is `1 + max |x|` over the
/// trace.
pub fn verify_trace(
    trace: &SimulationTrace,
    report: &FeasibilityReport,
    schedule: &ControlSchedule,
) -> TraceDiagnostics {
    let scale = 1.0 + trace.states.iter().map(|x| x.inf_norm()).fold(0.0, f64::max);
    let steps = trace.steps_per_interval.max(1);
    let partition = schedule.partition();

    let bound_violations = trace
        .node_errors
        .iter()
        .filter_map(|node| {
            let (s, e) = partition.interval(node.n);
            let tol = integrator_allowance(e - s, steps, scale);
            (node.err > node.bound + tol).then_some(BoundViolation {
                n: node.n,
                t_n: node.t_n,
                err: node.err,
                bound: node.bound,
                tol,
            })
        })
        .collect::<Vec<_>>();

    let constraint_violations = schedule
        .inputs()
        .iter()
        .filter(|i| i.u_c.inf_norm() > 1.0 + CONSTRAINT_TOL)
        .map(|i| ConstraintViolation {
            n: i.n,
            norm: i.u_c.inf_norm(),
        })
        .collect::<Vec<_>>();

    let mut notes = Vec::new();
    if !report.tf_valid {
        notes.push(
            "feasibility conditions were not validated for this t_f; node bounds and input limits are not guaranteed"
                .to_string(),
        );
    }
    if !bound_violations.is_empty() {
        notes.push(format!("{} node(s) exceed their error bound", bound_violations.len()));
    }
    if !constraint_violations.is_empty() {
        notes.push(format!(
            "{} interval(s) command inputs outside the unit ball",
            constraint_violations.len()
        ));
    }

    TraceDiagnostics {
        bound_violations,
        constraint_violations,
        final_error_ok: trace.final_error <= schedule.epsilon(),
        notes,
    }
}
