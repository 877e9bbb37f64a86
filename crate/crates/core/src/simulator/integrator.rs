//! Classical fixed-step Runge-Kutta 4 for the closed loop.

use crate::error::{Error, Result};
use crate::linalg::Vector;
use crate::system::ControlSystem;

/// One RK4 step of `x' = f(x) + g^c(x) uc + g^uc(x) uuc(t, x)` with `uc` held
/// constant and `uuc` sampled at each stage time and stage state.
pub fn rk4_step(
    sys: &ControlSystem,
    x: &Vector,
    uc: &Vector,
    uuc: impl Fn(f64, &Vector) -> Vector,
    t: f64,
    dt: f64,
) -> Result<Vector> {
    if !(dt > 0.0) {
        return Err(Error::Domain(format!("step must be positive, got {dt}")));
    }
    let half = 0.5 * dt;
    let k1 = sys.rhs(x, uc, &uuc(t, x));
    let x2 = x.axpy(half, &k1);
    let k2 = sys.rhs(&x2, uc, &uuc(t + half, &x2));
    let x3 = x.axpy(half, &k2);
    let k3 = sys.rhs(&x3, uc, &uuc(t + half, &x3));
    let x4 = x.axpy(dt, &k3);
    let k4 = sys.rhs(&x4, uc, &uuc(t + dt, &x4));

    let mut next = x.clone();
    for i in 0..x.dim() {
        next[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
    if !next.is_finite() {
        return Err(Error::Divergence {
            t: t + dt,
            last_state: x.clone(),
            partial: Box::default(),
        });
    }
    Ok(next)
}
