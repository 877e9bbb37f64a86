//! ADMIRE fighter-jet roll/pitch/yaw-rate model with nonlinear wind effects,
//! canard input uncontrolled.

use crate::linalg::{Matrix, Vector};

use super::{default_state_space_bound, ControlSystem};

pub const ADMIRE_A: [[f64; 3]; 3] = [
    [-0.9967, 0.0, 0.6176],
    [0.0, -0.5057, 0.0],
    [-0.0939, 0.0, -0.2127],
];

/// Left elevon, right elevon, rudder.
pub const ADMIRE_BC: [[f64; 3]; 3] = [
    [-4.2423, 4.2423, 1.4871],
    [-1.2735, -1.2735, 0.0024],
    [-0.2805, 0.2805, -0.8823],
];

/// Canard.
pub const ADMIRE_BUC: [[f64; 1]; 3] = [[0.0], [1.6532], [0.0]];

/// `|A|_inf + 1`; the wind terms have slope at most one per coordinate.
pub const ADMIRE_LIPSCHITZ_F: f64 = 2.6143;

pub const ADMIRE_X0: [f64; 3] = [5.13, 2.76, -3.07];

/// `0.5 [sin(p) cos^2(p), -sin(2q), 1]`
pub fn wind(x: &Vector) -> Vector {
    let (p, q) = (x[0], x[1]);
    Vector::from([
        0.5 * p.sin() * p.cos() * p.cos(),
        -0.5 * (2.0 * q).sin(),
        0.5,
    ])
}

/// The three-state model with `m = 3` controlled and `p = 1` uncontrolled
/// inputs. The sampling region is centred on the demo initial state.
pub fn build_admire() -> ControlSystem {
    let x0 = Vector::from(ADMIRE_X0);
    let radius = default_state_space_bound(&x0, &Vector::zeros(3));
    ControlSystem::linear_with_drift(
        Matrix::from_rows(&ADMIRE_A),
        wind,
        Matrix::from_rows(&ADMIRE_BC),
        Matrix::from_rows(&ADMIRE_BUC),
        ADMIRE_LIPSCHITZ_F,
    )
    .and_then(|s| s.with_region(x0, radius))
    .expect("builtin ADMIRE model is well formed")
}
