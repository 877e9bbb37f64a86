//! Piecewise-constant resilient control law.
//!
//! On interval `n` the controlled input is held at
//!
//! ```text
//! u_n = -(1 / Δt_n) g0c^+ (x_{n-1} - x_tg + g0uc α_n),   α_n = 2^-n 1_p
//! ```
//!
//! where `x_{n-1}` is the measured state at the interval start. After the
//! terminal index `n̄` the last input is held until `t_f`. That final input
//! keeps the divisor `Δt_n̄` even though it is applied over `2 Δt_n̄`; the
//! two halves then cancel any bias that is constant across the last two
//! intervals.
//!
//! Inputs are never clipped. Constraint violations are reported by the
//! simulator diagnostics instead.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::feasibility::{error_bound, smallest_n1, BoundConstants};
use crate::linalg::Vector;
use crate::partition::{interval_length, HorizonPartition, MAX_INTERVALS};
use crate::system::DriftlessApproximation;

/// `α_n = 2^-n 1_p`
pub fn alpha(n: u32, p: usize) -> Vector {
    assert!(n >= 1, "alpha index starts at 1");
    Vector::filled(p, 0.5_f64.powi(n as i32))
}

/// Input for interval `n` with divisor `dt`, given the state measured at the
/// interval start.
pub fn control_input(
    n: u32,
    x_prev: &Vector,
    x_tg: &Vector,
    approx: &DriftlessApproximation,
    dt: f64,
) -> Vector {
    let shift = approx.g0uc() * &alpha(n, approx.uncontrolled_dim());
    let offset = &(x_prev - x_tg) + &shift;
    (approx.g0c_pinv() * &offset).scale(-1.0 / dt)
}

/// Input held over the merged last interval `[t_{n̄-1}, t_f]`.
pub fn final_interval_input(
    n_bar: u32,
    x_prev: &Vector,
    x_tg: &Vector,
    approx: &DriftlessApproximation,
    t_f: f64,
) -> Vector {
    control_input(n_bar, x_prev, x_tg, approx, t_f * 0.5_f64.powi(n_bar as i32))
}

/// `(n1, n̄)` with `n1` the first index where `ē_n1 <= epsilon` and the
/// minimal `n̄ = n1 + 1` satisfying `t_f - t_{n̄-1} <= Δt_n1`.
pub fn select_terminal_index(epsilon: f64, c: f64, d_s: f64, t_f: f64) -> Result<(usize, usize)> {
    let n1 = smallest_n1(epsilon, c, d_s, t_f)?;
    let n_bar = n1 + 1;
    if n_bar > MAX_INTERVALS {
        return Err(Error::Cap {
            cap: MAX_INTERVALS,
            epsilon,
        });
    }
    Ok((n1, n_bar))
}

/// A-priori bound on `|u_n|` from the node error bounds:
/// `(1 / Δt_n) |g0c^+| (e_{n-1} + |g0uc| 2^-n)` with `e_0 = |x0 - x_tg|`.
pub fn a_priori_input_bound(n: u32, k: &BoundConstants, t_f: f64, initial_distance: f64) -> f64 {
    let prev = if n == 1 {
        initial_distance
    } else {
        error_bound(n - 1, k.c, k.d_s, t_f)
    };
    let dt = t_f * 0.5_f64.powi(n as i32);
    k.pinv_norm * (prev + k.guc_norm * 0.5_f64.powi(n as i32)) / dt
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IntervalInput {
    pub n: usize,
    pub t_start: f64,
    pub t_end: f64,
    pub u_c: Vector,
}

/// Partition, terminal index and the inputs realized so far.
///
/// Inputs are appended by a single closed-loop driver, one per interval.
#[derive(Debug, Clone)]
pub struct ControlSchedule {
    partition: HorizonPartition,
    alpha_seq: Vec<Vector>,
    n1: usize,
    epsilon: f64,
    x_target: Vector,
    approx: DriftlessApproximation,
    constants: BoundConstants,
    inputs: Vec<IntervalInput>,
}

impl ControlSchedule {
    /// With no override, `n̄` comes from [`select_terminal_index`]. With an
    /// override, `n1` is taken as `n̄ - 1`.
    pub fn new(
        approx: DriftlessApproximation,
        x_target: Vector,
        t_f: f64,
        epsilon: f64,
        constants: BoundConstants,
        n_bar_override: Option<usize>,
    ) -> Result<Self> {
        x_target.check_dim(approx.state_dim(), "target state")?;
        if !(epsilon > 0.0) {
            return Err(Error::Domain(format!("epsilon must be positive, got {epsilon}")));
        }
        let (n1, n_bar) = match n_bar_override {
            Some(n_bar) => (n_bar.saturating_sub(1), n_bar),
            None => select_terminal_index(epsilon, constants.c, constants.d_s, t_f)?,
        };
        let partition = HorizonPartition::new(t_f, n_bar)?;
        let alpha_seq = (1..=n_bar as u32)
            .map(|n| alpha(n, approx.uncontrolled_dim()))
            .collect();
        Ok(Self {
            partition,
            alpha_seq,
            n1,
            epsilon,
            x_target,
            approx,
            constants,
            inputs: Vec::with_capacity(n_bar),
        })
    }

    pub fn partition(&self) -> &HorizonPartition {
        &self.partition
    }

    pub fn alpha_seq(&self) -> &[Vector] {
        &self.alpha_seq
    }

    pub fn n1(&self) -> usize {
        self.n1
    }

    pub fn n_bar(&self) -> usize {
        self.partition.n_bar()
    }

    pub fn t_f(&self) -> f64 {
        self.partition.t_f()
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn x_target(&self) -> &Vector {
        &self.x_target
    }

    pub fn approx(&self) -> &DriftlessApproximation {
        &self.approx
    }

    pub fn constants(&self) -> &BoundConstants {
        &self.constants
    }

    pub fn inputs(&self) -> &[IntervalInput] {
        &self.inputs
    }

    /// `ē_n` for the node closing interval `n`. The merged last interval is
    /// bounded by `ē_{n̄-1}`.
    pub fn node_bound(&self, n: usize) -> f64 {
        let idx = if n == self.n_bar() { n - 1 } else { n };
        error_bound(idx as u32, self.constants.c, self.constants.d_s, self.t_f())
    }

    /// Input for interval `n` given the state measured at its start.
    pub fn input_for(&self, n: usize, x_prev: &Vector) -> Result<Vector> {
        x_prev.check_dim(self.approx.state_dim(), "measured state")?;
        if n == 0 || n > self.n_bar() {
            return Err(Error::Domain(format!(
                "interval {n} outside 1..={}",
                self.n_bar()
            )));
        }
        Ok(if n == self.n_bar() {
            final_interval_input(n as u32, x_prev, &self.x_target, &self.approx, self.t_f())
        } else {
            let dt = interval_length(self.t_f(), n as u32)?;
            control_input(n as u32, x_prev, &self.x_target, &self.approx, dt)
        })
    }

    /// Appends the input applied on the next interval.
    pub(crate) fn record(&mut self, u_c: Vector) {
        let n = self.inputs.len() + 1;
        let (t_start, t_end) = self.partition.interval(n);
        self.inputs.push(IntervalInput {
            n,
            t_start,
            t_end,
            u_c,
        });
    }

    pub(crate) fn clear_inputs(&mut self) {
        self.inputs.clear();
    }

    pub fn inputs_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&self.inputs)?)
    }
}
