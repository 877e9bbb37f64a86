//! Horizon feasibility: the bound constants `c`, `c1`, `c2`, the function
//! `h(t) = exp(t D_S / 2) - 1 - (t D_S - c2) / c1`, its non-positive interval,
//! the lower bound on `t_f`, and the node error bounds `ē_n`.
//!
//! A failed validation is advisory. Callers may still simulate; the report
//! only states whether the a-priori guarantees apply.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Vector;
use crate::partition::MAX_INTERVALS;
use crate::system::{ControlSystem, DriftlessApproximation};

/// Absolute tolerance on `|h|` at the returned interval endpoints.
pub const DEFAULT_ROOT_TOL: f64 = 1e-10;

/// Upper-bracket doublings before giving up on the right root.
const MAX_DOUBLINGS: usize = 200;

/// `|α_n|_inf = 2^-n`; the constants use `n = 2`.
const ALPHA2_NORM: f64 = 0.25;

/// Scalars entering every bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundConstants {
    pub c: f64,
    pub c1: f64,
    pub c2: f64,
    pub d_s: f64,
    /// `|g0c^+|_inf`
    pub pinv_norm: f64,
    /// `|g0uc|_inf`
    pub guc_norm: f64,
}

impl BoundConstants {
    /// From the underlying norms: `|f(x0)|`, `|g0uc|`, `|g0c^+|`, `D_S` and
    /// `|x_tg - x0|`.
    pub fn from_norms(f0_norm: f64, guc_norm: f64, pinv_norm: f64, d_s: f64, distance: f64) -> Self {
        let c = f0_norm + guc_norm + d_s * distance;
        Self {
            c,
            c1: 4.0 * c * pinv_norm,
            c2: 4.0 * d_s * pinv_norm * guc_norm * ALPHA2_NORM,
            d_s,
            pinv_norm,
            guc_norm,
        }
    }
}

pub fn compute_constants(
    sys: &ControlSystem,
    approx: &DriftlessApproximation,
    x_tg: &Vector,
) -> Result<BoundConstants> {
    x_tg.check_dim(sys.state_dim(), "target state")?;
    let f0 = sys.drift(approx.x0());
    Ok(BoundConstants::from_norms(
        f0.inf_norm(),
        approx.g0uc().inf_norm(),
        approx.g0c_pinv().inf_norm(),
        sys.lipschitz_sum(),
        (x_tg - approx.x0()).inf_norm(),
    ))
}

/// `c1 < 2` and `c2 < c1 - 2 (1 - ln(2 / c1))`, both strict.
pub fn check_conditions(c1: f64, c2: f64) -> bool {
    c1 < 2.0 && c2 < c1 - 2.0 * (1.0 - (2.0 / c1).ln())
}

pub fn h_eval(t: f64, c1: f64, c2: f64, d_s: f64) -> Result<f64> {
    if c1 <= 0.0 || d_s <= 0.0 {
        return Err(Error::Degenerate(format!(
            "h(t) needs c1 > 0 and D_S > 0 (c1 = {c1}, D_S = {d_s})"
        )));
    }
    Ok(h_unchecked(t, c1, c2, d_s))
}

fn h_unchecked(t: f64, c1: f64, c2: f64, d_s: f64) -> f64 {
    // exp(x) - 1 via expm1 keeps h accurate near t = 0
    (0.5 * t * d_s).exp_m1() - (t * d_s - c2) / c1
}

/// Unique stationary point `t* = (2 / D_S) ln(2 / c1)` of `h`, present when
/// `0 < c1 < 2` and `D_S > 0`.
pub fn critical_time(c1: f64, d_s: f64) -> Option<f64> {
    (c1 > 0.0 && c1 < 2.0 && d_s > 0.0).then(|| 2.0 / d_s * (2.0 / c1).ln())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeasibleInterval {
    pub lower: f64,
    /// Serialized as `null` when unbounded.
    #[serde(with = "unbounded")]
    pub upper: f64,
}

mod unbounded {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(*v)
        } else {
            s.serialize_none()
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::INFINITY))
    }
}

impl FeasibleInterval {
    pub fn contains(&self, t: f64) -> bool {
        self.lower <= t && t <= self.upper
    }
}

/// Bisection for a sign change of `f` on `[lo, hi]`. Stops when `|f| <= tol`
/// or the bracket can no longer be split in floating point.
fn bisect(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, tol: f64) -> f64 {
    let mut flo = f(lo);
    let fhi = f(hi);
    if flo.abs() <= tol {
        return lo;
    }
    if fhi.abs() <= tol {
        return hi;
    }
    loop {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            return if f(lo).abs() <= f(hi).abs() { lo } else { hi };
        }
        let fm = f(mid);
        if fm.abs() <= tol {
            return mid;
        }
        if (fm > 0.0) == (flo > 0.0) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
}

/// Roots `t_lo <= t* <= t_hi` of `h`, or `None` when the conditions fail.
pub fn feasible_interval(c1: f64, c2: f64, d_s: f64, root_tol: f64) -> Result<Option<FeasibleInterval>> {
    if c1 < 0.0 || c2 < 0.0 {
        return Err(Error::Domain("c1 and c2 must be non-negative".into()));
    }
    if !check_conditions(c1, c2) {
        return Ok(None);
    }
    let t_star = critical_time(c1, d_s).ok_or_else(|| {
        Error::Degenerate(format!("feasible interval needs c1 > 0 and D_S > 0 (c1 = {c1}, D_S = {d_s})"))
    })?;
    let h = |t: f64| h_unchecked(t, c1, c2, d_s);

    let lower = bisect(h, 0.0, t_star, root_tol);

    let mut hi = t_star;
    let mut doublings = 0;
    while h(hi) <= 0.0 {
        if doublings == MAX_DOUBLINGS {
            return Err(Error::Numeric(format!(
                "no upper bracket for h after {MAX_DOUBLINGS} doublings"
            )));
        }
        hi *= 2.0;
        doublings += 1;
    }
    let upper = bisect(h, t_star, hi, root_tol);

    for root in [lower, upper] {
        let hv = h(root);
        if hv.abs() > root_tol {
            return Err(Error::Numeric(format!(
                "bisection stalled at t = {root} with |h| = {:e} > {root_tol:e}",
                hv.abs()
            )));
        }
    }
    Ok(Some(FeasibleInterval { lower, upper }))
}

/// `2 |g0c^+| (|x0 - x_tg| + |g0uc| / 2)`: the smallest `t_f` keeping the
/// first-interval input inside the unit ball.
pub fn tf_lower_bound(approx: &DriftlessApproximation, x_tg: &Vector) -> f64 {
    2.0 * approx.g0c_pinv().inf_norm()
        * ((approx.x0() - x_tg).inf_norm() + 0.5 * approx.g0uc().inf_norm())
}

/// `ē_n = (c / D_S)(exp(Δt_n D_S) - 1)` with `Δt_n = t_f / 2^n`; equals
/// `c Δt_n` at `D_S = 0`. `n = 0` gives the bound over the whole horizon.
pub fn error_bound(n: u32, c: f64, d_s: f64, t_f: f64) -> f64 {
    let dt = t_f * 0.5_f64.powi(n as i32);
    if d_s == 0.0 {
        c * dt
    } else {
        c / d_s * (dt * d_s).exp_m1()
    }
}

/// Smallest `n >= 1` with `ē_n <= epsilon`.
pub fn smallest_n1(epsilon: f64, c: f64, d_s: f64, t_f: f64) -> Result<usize> {
    if !(epsilon > 0.0) {
        return Err(Error::Domain(format!("epsilon must be positive, got {epsilon}")));
    }
    (1..=MAX_INTERVALS)
        .find(|&n| error_bound(n as u32, c, d_s, t_f) <= epsilon)
        .ok_or(Error::Cap {
            cap: MAX_INTERVALS,
            epsilon,
        })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeasibilityReport {
    pub c: f64,
    pub c1: f64,
    pub c2: f64,
    pub d_s: f64,
    pub pinv_norm: f64,
    pub guc_norm: f64,
    pub conditions_hold: bool,
    pub t_star: Option<f64>,
    pub feasible_interval: Option<FeasibleInterval>,
    pub tf_lower_bound: f64,
    pub t_f: f64,
    pub tf_valid: bool,
    pub notes: Vec<String>,
}

impl FeasibilityReport {
    pub fn constants(&self) -> BoundConstants {
        BoundConstants {
            c: self.c,
            c1: self.c1,
            c2: self.c2,
            d_s: self.d_s,
            pinv_norm: self.pinv_norm,
            guc_norm: self.guc_norm,
        }
    }
}

/// Report for the constants and interval, before any `t_f` is checked.
pub fn build_report(
    constants: BoundConstants,
    tf_lower_bound: f64,
    root_tol: f64,
) -> Result<FeasibilityReport> {
    let BoundConstants { c, c1, c2, d_s, .. } = constants;
    let conditions_hold = check_conditions(c1, c2);
    let mut notes = Vec::new();
    let (t_star, interval) = if d_s > 0.0 && c1 > 0.0 {
        (critical_time(c1, d_s), feasible_interval(c1, c2, d_s, root_tol)?)
    } else if conditions_hold {
        // D_S -> 0 limit of h(t) <= 0: t (1 - c1 / 2) >= |g0c^+| |g0uc|.
        notes.push(format!(
            "degenerate constants (c1 = {c1}, D_S = {d_s}): feasible interval from the D_S -> 0 limit"
        ));
        let lower = constants.pinv_norm * constants.guc_norm / (1.0 - 0.5 * c1);
        (None, Some(FeasibleInterval { lower, upper: f64::INFINITY }))
    } else {
        (None, None)
    };
    Ok(FeasibilityReport {
        c,
        c1,
        c2,
        d_s,
        pinv_norm: constants.pinv_norm,
        guc_norm: constants.guc_norm,
        conditions_hold,
        t_star,
        feasible_interval: interval,
        tf_lower_bound,
        t_f: f64::NAN,
        tf_valid: false,
        notes,
    })
}

/// Checks `t_f` against the lower bound and the feasible interval. Earlier
/// validation notes are replaced.
pub fn validate_tf(t_f: f64, mut report: FeasibilityReport) -> FeasibilityReport {
    report.notes.retain(|n| !n.starts_with("t_f") && !n.starts_with("interval conditions"));
    report.t_f = t_f;
    let mut valid = true;
    if !report.conditions_hold {
        valid = false;
        report.notes.push(format!(
            "interval conditions violated: need c1 < 2 and c2 < c1 - 2(1 - ln(2/c1)), got c1 = {}, c2 = {}",
            report.c1, report.c2
        ));
    }
    if t_f < report.tf_lower_bound {
        valid = false;
        report.notes.push(format!(
            "t_f = {t_f} is below the first-interval input bound {}",
            report.tf_lower_bound
        ));
    }
    if let Some(iv) = report.feasible_interval {
        if !iv.contains(t_f) {
            valid = false;
            report.notes.push(format!(
                "t_f = {t_f} lies outside the feasible interval [{}, {}]",
                iv.lower, iv.upper
            ));
        }
    }
    report.tf_valid = valid;
    report
}

/// Full analysis for one system, target and final time.
pub fn analyze(
    sys: &ControlSystem,
    approx: &DriftlessApproximation,
    x_tg: &Vector,
    t_f: f64,
) -> Result<FeasibilityReport> {
    let constants = compute_constants(sys, approx, x_tg)?;
    let report = build_report(constants, tf_lower_bound(approx, x_tg), DEFAULT_ROOT_TOL)?;
    Ok(validate_tf(t_f, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::Matrix;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn constants_by_substitution() {
        let k = BoundConstants::from_norms(1.0, 0.5, 0.25, 0.1, 2.0);
        assert!(close(k.c, 1.7, 1e-15));
        assert!(close(k.c1, 1.7, 1e-15));
        assert!(close(k.c2, 0.0125, 1e-15));
    }

    #[test]
    fn constants_from_system() {
        let sys = ControlSystem::linear_with_drift(
            Matrix::zeros(2, 2),
            |_| Vector::from([1.0, 0.0]),
            Matrix::identity(2).matmul(&Matrix::from_rows(&[[4.0, 0.0], [0.0, 4.0]])).unwrap(),
            Matrix::from_rows(&[[0.5], [0.0]]),
            0.1,
        )
        .unwrap();
        let approx = sys.linearize_at(&Vector::from([2.0, 0.0])).unwrap();
        let k = compute_constants(&sys, &approx, &Vector::zeros(2)).unwrap();
        assert!(close(k.c, 1.7, 1e-14), "{k:?}");
        assert!(close(k.c1, 1.7, 1e-14));
        assert!(close(k.c2, 0.0125, 1e-14));
    }

    #[test]
    fn conditions() {
        assert!(!check_conditions(2.5, 0.0));
        assert!(check_conditions(1.0, 0.3));
        assert!(!check_conditions(1.0, 0.5));
        // right-hand side at c1 = 1 is 2 ln 2 - 1
        let rhs = 2.0 * 2f64.ln() - 1.0;
        assert!(close(rhs, 0.3863, 1e-4));
    }

    #[test]
    fn h_values() {
        assert!(close(h_eval(0.0, 1.0, 0.3, 1.0).unwrap(), 0.3, 1e-15));
        let ts = critical_time(1.0, 1.0).unwrap();
        assert!(close(ts, 2.0 * 2f64.ln(), 1e-15));
        let expected = 2.0 - 1.0 - (2.0 * 2f64.ln() - 0.3);
        assert!(close(h_eval(ts, 1.0, 0.3, 1.0).unwrap(), expected, 1e-14));
        assert!(close(expected, -0.0863, 1e-4));
        assert!(matches!(h_eval(1.0, 0.0, 0.3, 1.0), Err(Error::Degenerate(_))));
        assert!(matches!(h_eval(1.0, 1.0, 0.3, 0.0), Err(Error::Degenerate(_))));
        assert_eq!(critical_time(2.5, 1.0), None);
    }

    #[test]
    fn interval_absent_when_conditions_fail() {
        assert_eq!(feasible_interval(2.5, 0.0, 1.0, DEFAULT_ROOT_TOL).unwrap(), None);
    }

    #[test]
    fn interval_for_reference_constants() {
        let iv = feasible_interval(1.0, 0.3, 1.0, DEFAULT_ROOT_TOL).unwrap().unwrap();
        assert!(iv.lower > 0.7 && iv.lower < 0.8, "{iv:?}");
        assert!(iv.upper > 1.9 && iv.upper < 2.0, "{iv:?}");
        // independent check: e^{t/2} = t + 0.7 at both roots
        for t in [iv.lower, iv.upper] {
            assert!(((0.5 * t).exp() - t - 0.7).abs() <= 1e-10);
        }
    }

    #[test]
    fn interval_collapses_at_boundary() {
        let c1: f64 = 1.0;
        let edge = c1 - 2.0 * (1.0 - (2.0 / c1).ln());
        let ts = critical_time(c1, 1.0).unwrap();
        let mut last_width = f64::INFINITY;
        for gap in [1e-2, 1e-4, 1e-6] {
            let iv = feasible_interval(c1, edge - gap, 1.0, 1e-14).unwrap().unwrap();
            let width = iv.upper - iv.lower;
            assert!(iv.lower <= ts && ts <= iv.upper);
            assert!(width < last_width);
            last_width = width;
        }
        assert!(last_width < 1e-2);
    }

    #[test]
    fn zero_c2_puts_lower_root_at_origin() {
        let iv = feasible_interval(1.0, 0.0, 1.0, DEFAULT_ROOT_TOL).unwrap().unwrap();
        assert_eq!(iv.lower, 0.0);
    }

    #[test]
    fn lower_bound_substitution() {
        let approx = DriftlessApproximation::new(
            Matrix::from_rows(&[[4.0, 0.0], [0.0, 4.0]]),
            Matrix::from_rows(&[[0.5], [0.0]]),
            Vector::from([1.0, 0.0]),
        )
        .unwrap();
        assert!(close(tf_lower_bound(&approx, &Vector::zeros(2)), 0.625, 1e-15));

        let at_target = DriftlessApproximation::new(
            Matrix::identity(2),
            Matrix::zeros(2, 1),
            Vector::from([1.0, 1.0]),
        )
        .unwrap();
        assert_eq!(tf_lower_bound(&at_target, &Vector::from([1.0, 1.0])), 0.0);
    }

    #[test]
    fn error_bounds() {
        let t_f = 2.0 * 2f64.ln();
        assert!(close(error_bound(1, 1.0, 1.0, t_f), 1.0, 1e-15));
        assert!(close(error_bound(2, 1.0, 1.0, t_f), 2f64.sqrt() - 1.0, 1e-15));
        assert_eq!(error_bound(2, 1.0, 0.0, 20.0), 5.0);
        let near = error_bound(2, 1.0, 1e-12, 20.0);
        assert!(((near - 5.0) / 5.0).abs() < 1e-6);
    }

    #[test]
    fn n1_selection() {
        let t_f = 2.0 * 2f64.ln();
        assert_eq!(smallest_n1(1.0, 1.0, 1.0, t_f).unwrap(), 1);
        assert_eq!(smallest_n1(0.2, 1.0, 1.0, t_f).unwrap(), 3);
        assert_eq!(smallest_n1(5.0, 1.0, 1.0, t_f).unwrap(), 1);
        assert!(matches!(
            smallest_n1(1e-300, 1.0, 1.0, t_f),
            Err(Error::Cap { cap: MAX_INTERVALS, .. })
        ));
        assert!(smallest_n1(0.0, 1.0, 1.0, t_f).is_err());
    }

    fn report_for(c1: f64, c2: f64, lb: f64) -> FeasibilityReport {
        let k = BoundConstants {
            c: c1 / 4.0,
            c1,
            c2,
            d_s: 1.0,
            pinv_norm: 1.0,
            guc_norm: c2,
        };
        build_report(k, lb, DEFAULT_ROOT_TOL).unwrap()
    }

    #[test]
    fn validation_notes() {
        let r = validate_tf(1.0, report_for(2.5, 0.0, 0.0));
        assert!(!r.tf_valid);
        assert!(r.notes.iter().any(|n| n.starts_with("interval conditions violated")));

        let r = validate_tf(1.5, report_for(1.0, 0.3, 0.0));
        assert!(r.tf_valid, "{:?}", r.notes);
        assert!(r.notes.is_empty());

        let r = validate_tf(1.5, report_for(1.0, 0.3, 1.6));
        assert!(!r.tf_valid);
        assert_eq!(r.notes.len(), 1);
        assert!(r.notes[0].contains("below the first-interval input bound"));

        let r = validate_tf(3.0, r);
        assert!(!r.tf_valid);
        assert_eq!(r.notes.len(), 1);
        assert!(r.notes[0].contains("outside the feasible interval"));
    }

    #[test]
    fn zero_lipschitz_uses_limit_interval() {
        let k = BoundConstants::from_norms(0.0, 0.3, 1.0, 0.0, 0.2);
        let r = validate_tf(2.0, build_report(k, 1.0, DEFAULT_ROOT_TOL).unwrap());
        assert!(r.conditions_hold);
        let iv = r.feasible_interval.unwrap();
        assert!(close(iv.lower, 0.3 / (1.0 - 0.5 * k.c1), 1e-15));
        assert!(iv.upper.is_infinite());
        assert!(r.tf_valid, "{:?}", r.notes);
        let back: FeasibilityReport =
            serde_json::from_str(&serde_json::to_string(&r).unwrap()).unwrap();
        assert_eq!(back, r);
    }

    #[test]
    fn report_serializes_full_precision() {
        let r = validate_tf(1.5, report_for(1.0, 0.3, 0.1));
        let json = serde_json::to_string(&r).unwrap();
        let back: FeasibilityReport = serde_json::from_str(&json).unwrap();
        assert_eq!(back, r);
    }
}
