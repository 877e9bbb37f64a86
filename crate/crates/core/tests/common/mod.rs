#![allow(dead_code)]

use resilient_core::controller::ControlSchedule;
use resilient_core::feasibility::{analyze, FeasibilityReport};
use resilient_core::linalg::{Matrix, Vector};
use resilient_core::system::ControlSystem;

pub const SYNTH_TF: f64 = 4.0;

/// `x' = 0.05 sin(x) + u^c + [0.01, -0.01]^T u^uc` on R^2, elementwise sine.
pub fn synthetic_system() -> ControlSystem {
    ControlSystem::linear_with_drift(
        Matrix::zeros(2, 2),
        |x: &Vector| x.map(|v| 0.05 * v.sin()),
        Matrix::identity(2),
        Matrix::from_rows(&[[0.01], [-0.01]]),
        0.05,
    )
    .unwrap()
}

pub fn synthetic_x0() -> Vector {
    Vector::from([1.0, -0.8])
}

pub fn synthetic_report() -> FeasibilityReport {
    let sys = synthetic_system();
    let approx = sys.linearize_at(&synthetic_x0()).unwrap();
    analyze(&sys, &approx, &Vector::zeros(2), SYNTH_TF).unwrap()
}

pub fn synthetic_schedule(epsilon: f64, n_bar: Option<usize>) -> (ControlSystem, ControlSchedule) {
    let sys = synthetic_system();
    let approx = sys.linearize_at(&synthetic_x0()).unwrap();
    let report = analyze(&sys, &approx, &Vector::zeros(2), SYNTH_TF).unwrap();
    let sched =
        ControlSchedule::new(approx, Vector::zeros(2), SYNTH_TF, epsilon, report.constants(), n_bar)
            .unwrap();
    (sys, sched)
}

/// Driftless system with constant input maps; `g^c` has full row rank.
pub fn driftless_system(gc: Matrix, guc: Matrix) -> ControlSystem {
    let d = gc.rows();
    ControlSystem::linear_with_drift(Matrix::zeros(d, d), move |_| Vector::zeros(d), gc, guc, 0.0)
        .unwrap()
}
