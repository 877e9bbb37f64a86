//! Closed-loop simulation of the control schedule against an uncontrolled
//! input strategy, with node-error monitoring.

mod export;
mod integrator;
mod strategy;
mod verify;

use serde::Serialize;

use crate::controller::ControlSchedule;
use crate::error::{Error, Result};
use crate::linalg::Vector;
use crate::system::ControlSystem;

pub use export::{write_nodes_csv, write_trace_csv};
pub use integrator::rk4_step;
pub use strategy::{randomized, SampleContext, UncontrolledStrategy, STRATEGY_KINDS};
pub use verify::{
    integrator_allowance, verify_trace, BoundViolation, ConstraintViolation, TraceDiagnostics,
    CONSTRAINT_TOL,
};

pub const DEFAULT_STEPS_PER_INTERVAL: usize = 256;
pub const MIN_STEPS_PER_INTERVAL: usize = 16;

/// Error at the node closing interval `n` next to its a-priori bound.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NodeError {
    pub n: usize,
    pub t_n: f64,
    pub err: f64,
    pub bound: f64,
}

/// Samples at every integrator step start plus the final time. `uc_values[k]`
/// is the input held over `[times[k], times[k+1])`; `uuc_values[k]` is the
/// uncontrolled input at `times[k]`.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct SimulationTrace {
    pub times: Vec<f64>,
    pub states: Vec<Vector>,
    pub uc_values: Vec<Vector>,
    pub uuc_values: Vec<Vector>,
    pub node_errors: Vec<NodeError>,
    pub constraint_max: f64,
    pub final_error: f64,
    pub steps_per_interval: usize,
}

impl SimulationTrace {
    fn push(&mut self, t: f64, x: &Vector, uc: &Vector, uuc: Vector) {
        self.times.push(t);
        self.states.push(x.clone());
        self.uc_values.push(uc.clone());
        self.uuc_values.push(uuc);
    }

    pub fn final_state(&self) -> Option<&Vector> {
        self.states.last()
    }
}

fn sample_checked(strategy: &UncontrolledStrategy, t: f64, x: &Vector, ctx: &SampleContext<'_>) -> Vector {
    let u = strategy.sample(t, x, ctx);
    assert!(
        u.inf_norm() <= 1.0,
        "uncontrolled sample {u:?} left the unit ball"
    );
    u
}

/// Runs the schedule from its initial state. Each interval reads the state at
/// its start, computes the held input, and integrates with
/// `steps_per_interval` equal RK4 steps. Inputs are written into `schedule`,
/// replacing any from an earlier run.
pub fn run_closed_loop(
    sys: &ControlSystem,
    schedule: &mut ControlSchedule,
    strategy: &UncontrolledStrategy,
    steps_per_interval: usize,
) -> Result<SimulationTrace> {
    if steps_per_interval < MIN_STEPS_PER_INTERVAL {
        return Err(Error::Domain(format!(
            "steps_per_interval must be at least {MIN_STEPS_PER_INTERVAL}, got {steps_per_interval}"
        )));
    }
    let approx = schedule.approx().clone();
    if approx.state_dim() != sys.state_dim()
        || approx.controlled_dim() != sys.controlled_dim()
        || approx.uncontrolled_dim() != sys.uncontrolled_dim()
    {
        return Err(Error::Dimension("schedule was built for a different system".into()));
    }
    strategy.validate(sys.uncontrolled_dim())?;

    let x_tg = schedule.x_target().clone();
    let partition = schedule.partition().clone();
    let ctx = SampleContext {
        t_f: partition.t_f(),
        x_target: &x_tg,
        approx: &approx,
    };
    let uuc = |t: f64, x: &Vector| sample_checked(strategy, t, x, &ctx);

    schedule.clear_inputs();
    let n_samples = partition.n_bar() * steps_per_interval + 1;
    let mut trace = SimulationTrace {
        steps_per_interval,
        times: Vec::with_capacity(n_samples),
        states: Vec::with_capacity(n_samples),
        uc_values: Vec::with_capacity(n_samples),
        uuc_values: Vec::with_capacity(n_samples),
        ..Default::default()
    };

    let mut x = approx.x0().clone();
    let mut last_uc = Vector::zeros(sys.controlled_dim());
    for (n, t_start, t_end) in partition.intervals() {
        let uc = schedule.input_for(n, &x)?;
        trace.constraint_max = trace.constraint_max.max(uc.inf_norm());
        let h = (t_end - t_start) / steps_per_interval as f64;
        for j in 0..steps_per_interval {
            let t = t_start + j as f64 * h;
            let t_next = if j + 1 == steps_per_interval {
                t_end
            } else {
                t_start + (j + 1) as f64 * h
            };
            trace.push(t, &x, &uc, uuc(t, &x));
            x = match rk4_step(sys, &x, &uc, uuc, t, t_next - t) {
                Ok(next) => next,
                Err(Error::Divergence { t, last_state, .. }) => {
                    schedule.record(uc);
                    return Err(Error::Divergence {
                        t,
                        last_state,
                        partial: Box::new(trace),
                    });
                }
                Err(e) => return Err(e),
            };
        }
        trace.node_errors.push(NodeError {
            n,
            t_n: t_end,
            err: (&x_tg - &x).inf_norm(),
            bound: schedule.node_bound(n),
        });
        schedule.record(uc.clone());
        last_uc = uc;
    }
    let t_f = partition.t_f();
    trace.push(t_f, &x, &last_uc, uuc(t_f, &x));
    trace.final_error = (&x_tg - &x).inf_norm();
    Ok(trace)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::feasibility::{compute_constants, BoundConstants};
    use crate::linalg::Matrix;

    fn driftless(guc: Matrix) -> ControlSystem {
        let d = guc.rows();
        ControlSystem::linear_with_drift(
            Matrix::zeros(d, d),
            move |_| Vector::zeros(d),
            Matrix::from_rows(&[[2.0, 0.0], [0.5, 1.0]]),
            guc,
            0.0,
        )
        .unwrap()
    }

    fn schedule_for(sys: &ControlSystem, x0: Vector, t_f: f64, n_bar: usize) -> ControlSchedule {
        let approx = sys.linearize_at(&x0).unwrap();
        let xtg = Vector::zeros(sys.state_dim());
        let k: BoundConstants = compute_constants(sys, &approx, &xtg).unwrap();
        ControlSchedule::new(approx, xtg, t_f, 1e-3, k, Some(n_bar)).unwrap()
    }

    #[test]
    fn cancellation_probe_hits_every_node() {
        let sys = driftless(Matrix::from_rows(&[[0.3], [-0.2]]));
        let mut sched = schedule_for(&sys, Vector::from([1.0, -0.5]), 4.0, 10);
        let trace = run_closed_loop(&sys, &mut sched, &UncontrolledStrategy::CancellationProbe, 32).unwrap();
        for node in &trace.node_errors {
            assert!(node.err <= 1e-9, "{node:?}");
        }
        assert!(trace.final_error <= 1e-9);
    }

    #[test]
    fn trace_layout() {
        let sys = driftless(Matrix::from_rows(&[[0.3], [-0.2]]));
        let mut sched = schedule_for(&sys, Vector::from([1.0, -0.5]), 4.0, 3);
        let trace = run_closed_loop(&sys, &mut sched, &UncontrolledStrategy::Constant { value: Vector::from([0.5]) }, 16).unwrap();
        assert_eq!(trace.times.len(), 3 * 16 + 1);
        assert_eq!(trace.states.len(), trace.times.len());
        assert_eq!(trace.uc_values.len(), trace.times.len());
        assert_eq!(trace.uuc_values.len(), trace.times.len());
        assert_eq!(trace.times[0], 0.0);
        assert_eq!(*trace.times.last().unwrap(), 4.0);
        assert!(trace.times.windows(2).all(|w| w[1] > w[0]));
        assert_eq!(trace.node_errors.len(), 3);
        assert_eq!(sched.inputs().len(), 3);
        // interval boundaries are exact partition times and carry the
        // state integrated up to them
        assert_eq!(trace.times[16], 2.0);
        assert_eq!(trace.times[32], 3.0);
        assert_eq!(sched.inputs()[1].t_start, 2.0);
        assert_eq!(trace.uc_values[16], sched.inputs()[1].u_c);
    }

    #[test]
    fn rerun_is_bitwise_identical() {
        let sys = driftless(Matrix::from_rows(&[[0.3], [-0.2]]));
        let strat = UncontrolledStrategy::BangBang { switch_period: 0.1, seed: 4 };
        let mut a = schedule_for(&sys, Vector::from([1.0, -0.5]), 4.0, 6);
        let mut b = a.clone();
        let ta = run_closed_loop(&sys, &mut a, &strat, 64).unwrap();
        let tb = run_closed_loop(&sys, &mut b, &strat, 64).unwrap();
        assert_eq!(ta, tb);
        let tc = run_closed_loop(&sys, &mut a, &strat, 64).unwrap();
        assert_eq!(ta, tc);
        assert_eq!(a.inputs().len(), 6);
    }

    #[test]
    fn too_few_steps_rejected() {
        let sys = driftless(Matrix::from_rows(&[[0.3], [-0.2]]));
        let mut sched = schedule_for(&sys, Vector::from([1.0, -0.5]), 4.0, 3);
        assert!(run_closed_loop(&sys, &mut sched, &UncontrolledStrategy::CancellationProbe, 8).is_err());
    }

    #[test]
    fn divergence_returns_partial_trace() {
        let sys = ControlSystem::linear_with_drift(
            Matrix::from_rows(&[[1e200, 0.0], [0.0, 1e200]]),
            |_| Vector::zeros(2),
            Matrix::identity(2),
            Matrix::from_rows(&[[0.0], [0.0]]),
            1e200,
        )
        .unwrap();
        let mut sched = schedule_for(&sys, Vector::from([1.0, 1.0]), 1.0, 2);
        match run_closed_loop(&sys, &mut sched, &UncontrolledStrategy::CancellationProbe, 16) {
            Err(Error::Divergence { partial, last_state, .. }) => {
                assert!(!partial.times.is_empty());
                assert!(last_state.is_finite());
            }
            other => panic!("expected divergence, got {other:?}"),
        }
    }
}
