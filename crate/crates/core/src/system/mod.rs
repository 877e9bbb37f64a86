//! The malfunctioning plant `x' = f(x) + g^c(x) u^c + g^uc(x) u^uc` and its
//! linear driftless approximation at the initial state.

mod admire;
mod document;

use std::fmt;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{right_pseudoinverse, Matrix, Vector, DEFAULT_RANK_TOL};
use crate::par;

pub use admire::{build_admire, ADMIRE_A, ADMIRE_BC, ADMIRE_BUC, ADMIRE_LIPSCHITZ_F, ADMIRE_X0};
pub use document::{DriftKind, DriftTerm, SystemDocument};

/// Slack allowed on the unit input bound when validating inputs.
pub const INPUT_NORM_SLACK: f64 = 1e-12;

pub type DriftFn = Arc<dyn Fn(&Vector) -> Vector + Send + Sync>;
pub type InputMapFn = Arc<dyn Fn(&Vector) -> Matrix + Send + Sync>;

/// Nonlinear control-affine system with split input channels.
///
/// Callbacks must be pure. Lipschitz constants are declared by the caller
/// and can be spot-checked with [`ControlSystem::check_lipschitz`].
#[derive(Clone)]
pub struct ControlSystem {
    state_dim: usize,
    controlled_dim: usize,
    uncontrolled_dim: usize,
    drift: DriftFn,
    controlled_map: InputMapFn,
    uncontrolled_map: InputMapFn,
    lipschitz_f: f64,
    lipschitz_g: f64,
    region_center: Vector,
    state_space_bound: f64,
}

impl fmt::Debug for ControlSystem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ControlSystem")
            .field("state_dim", &self.state_dim)
            .field("controlled_dim", &self.controlled_dim)
            .field("uncontrolled_dim", &self.uncontrolled_dim)
            .field("lipschitz_f", &self.lipschitz_f)
            .field("lipschitz_g", &self.lipschitz_g)
            .field("region_center", &self.region_center)
            .field("state_space_bound", &self.state_space_bound)
            .finish_non_exhaustive()
    }
}

/// Radius of the sampling region when none is given: `2 |x0 - xtg| + 1`.
pub fn default_state_space_bound(x0: &Vector, x_tg: &Vector) -> f64 {
    2.0 * (x0 - x_tg).inf_norm() + 1.0
}

impl ControlSystem {
    /// The state region defaults to the unit ball around the origin; see
    /// [`ControlSystem::with_region`].
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        state_dim: usize,
        controlled_dim: usize,
        uncontrolled_dim: usize,
        drift: DriftFn,
        controlled_map: InputMapFn,
        uncontrolled_map: InputMapFn,
        lipschitz_f: f64,
        lipschitz_g: f64,
    ) -> Result<Self> {
        if state_dim == 0 || controlled_dim == 0 || uncontrolled_dim == 0 {
            return Err(Error::Dimension(
                "state, controlled and uncontrolled dimensions must be positive".into(),
            ));
        }
        if !(lipschitz_f >= 0.0 && lipschitz_f.is_finite())
            || !(lipschitz_g >= 0.0 && lipschitz_g.is_finite())
        {
            return Err(Error::Domain(
                "Lipschitz constants must be finite and non-negative".into(),
            ));
        }
        Ok(Self {
            state_dim,
            controlled_dim,
            uncontrolled_dim,
            drift,
            controlled_map,
            uncontrolled_map,
            lipschitz_f,
            lipschitz_g,
            region_center: Vector::zeros(state_dim),
            state_space_bound: 1.0,
        })
    }

    /// State-independent input maps and drift `a x + extra(x)`.
    pub fn linear_with_drift(
        a: Matrix,
        extra: impl Fn(&Vector) -> Vector + Send + Sync + 'static,
        bc: Matrix,
        buc: Matrix,
        lipschitz_f: f64,
    ) -> Result<Self> {
        let d = a.rows();
        if a.cols() != d || bc.rows() != d || buc.rows() != d {
            return Err(Error::Dimension(format!(
                "A must be {d}x{d} and input matrices must have {d} rows"
            )));
        }
        let (m, p) = (bc.cols(), buc.cols());
        let drift: DriftFn = Arc::new(move |x: &Vector| &(&a * x) + &extra(x));
        Self::new(
            d,
            m,
            p,
            drift,
            constant_map(bc),
            constant_map(buc),
            lipschitz_f,
            0.0,
        )
    }

    pub fn with_region(mut self, center: Vector, radius: f64) -> Result<Self> {
        center.check_dim(self.state_dim, "region center")?;
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::Domain("state-space bound must be positive".into()));
        }
        self.region_center = center;
        self.state_space_bound = radius;
        Ok(self)
    }

    pub fn with_lipschitz(mut self, lipschitz_f: f64, lipschitz_g: f64) -> Self {
        self.lipschitz_f = lipschitz_f;
        self.lipschitz_g = lipschitz_g;
        self
    }

    pub fn state_dim(&self) -> usize {
        self.state_dim
    }

    pub fn controlled_dim(&self) -> usize {
        self.controlled_dim
    }

    pub fn uncontrolled_dim(&self) -> usize {
        self.uncontrolled_dim
    }

    pub fn lipschitz_f(&self) -> f64 {
        self.lipschitz_f
    }

    pub fn lipschitz_g(&self) -> f64 {
        self.lipschitz_g
    }

    /// `D_S = D_f + D_g`
    pub fn lipschitz_sum(&self) -> f64 {
        self.lipschitz_f + self.lipschitz_g
    }

    pub fn region_center(&self) -> &Vector {
        &self.region_center
    }

    pub fn state_space_bound(&self) -> f64 {
        self.state_space_bound
    }

    pub fn drift(&self, x: &Vector) -> Vector {
        (self.drift)(x)
    }

    pub fn controlled_map(&self, x: &Vector) -> Matrix {
        (self.controlled_map)(x)
    }

    pub fn uncontrolled_map(&self, x: &Vector) -> Matrix {
        (self.uncontrolled_map)(x)
    }

    /// Right-hand side without input-bound checks; used by the integrator.
    pub(crate) fn rhs(&self, x: &Vector, uc: &Vector, uuc: &Vector) -> Vector {
        let f = self.drift(x);
        let gc = self.controlled_map(x);
        let guc = self.uncontrolled_map(x);
        &(&f + &(&gc * uc)) + &(&guc * uuc)
    }

    /// `f(x) + g^c(x) uc + g^uc(x) uuc`, rejecting inputs outside the unit ball.
    pub fn evaluate_dynamics(&self, x: &Vector, uc: &Vector, uuc: &Vector) -> Result<Vector> {
        x.check_dim(self.state_dim, "state")?;
        uc.check_dim(self.controlled_dim, "controlled input")?;
        uuc.check_dim(self.uncontrolled_dim, "uncontrolled input")?;
        for (channel, u) in [("controlled", uc), ("uncontrolled", uuc)] {
            let norm = u.inf_norm();
            if norm > 1.0 + INPUT_NORM_SLACK {
                return Err(Error::Constraint { channel, norm });
            }
        }
        let f = self.drift(x);
        f.check_dim(self.state_dim, "drift output")?;
        let gc = self.controlled_map(x);
        let guc = self.uncontrolled_map(x);
        self.check_map_shape(&gc, self.controlled_dim, "controlled map")?;
        self.check_map_shape(&guc, self.uncontrolled_dim, "uncontrolled map")?;
        Ok(&(&f + &gc.mul_vec(uc)?) + &guc.mul_vec(uuc)?)
    }

    fn check_map_shape(&self, g: &Matrix, cols: usize, what: &str) -> Result<()> {
        if g.rows() != self.state_dim || g.cols() != cols {
            return Err(Error::Dimension(format!(
                "{what}: expected {}x{cols}, got {}x{}",
                self.state_dim,
                g.rows(),
                g.cols()
            )));
        }
        Ok(())
    }

    /// Evaluates both input maps at `x0` and caches the right pseudoinverse
    /// of the controlled map.
    pub fn linearize_at(&self, x0: &Vector) -> Result<DriftlessApproximation> {
        x0.check_dim(self.state_dim, "initial state")?;
        let g0c = self.controlled_map(x0);
        let g0uc = self.uncontrolled_map(x0);
        self.check_map_shape(&g0c, self.controlled_dim, "controlled map")?;
        self.check_map_shape(&g0uc, self.uncontrolled_dim, "uncontrolled map")?;
        DriftlessApproximation::new(g0c, g0uc, x0.clone())
    }

    /// Samples state pairs uniformly from the infinity ball of radius
    /// `state_space_bound` around the region center and reports the largest
    /// observed difference quotients of `f` and of `[g^c | g^uc]`.
    ///
    /// Pairs are drawn sequentially from a seeded stream, so the report is
    /// deterministic regardless of how the ratios are evaluated.
    pub fn check_lipschitz(&self, n_samples: usize, rng_seed: u64) -> Result<LipschitzReport> {
        if n_samples < 2 {
            return Err(Error::Domain("check_lipschitz needs at least 2 samples".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
        let r = self.state_space_bound;
        let draw = |rng: &mut ChaCha8Rng| -> Vector {
            let mut x = self.region_center.clone();
            for i in 0..self.state_dim {
                x[i] += rng.gen_range(-r..=r);
            }
            x
        };
        let pairs: Vec<(Vector, Vector)> = (0..n_samples)
            .map(|_| {
                let a = draw(&mut rng);
                let b = draw(&mut rng);
                (a, b)
            })
            .collect();

        let ratios: Vec<Option<(f64, f64)>> = par::map_slice(&pairs, |(x1, x2)| {
            let dx = (x1 - x2).inf_norm();
            if dx == 0.0 {
                return None;
            }
            let df = (&self.drift(x1) - &self.drift(x2)).inf_norm();
            let g1 = self.controlled_map(x1).hstack(&self.uncontrolled_map(x1)).ok()?;
            let g2 = self.controlled_map(x2).hstack(&self.uncontrolled_map(x2)).ok()?;
            let dg = g1.sub(&g2).ok()?.inf_norm();
            Some((df / dx, dg / dx))
        });

        let mut report = LipschitzReport {
            max_ratio_f: 0.0,
            max_ratio_g: 0.0,
            consistent: true,
            pairs_used: 0,
        };
        for (rf, rg) in ratios.into_iter().flatten() {
            report.max_ratio_f = report.max_ratio_f.max(rf);
            report.max_ratio_g = report.max_ratio_g.max(rg);
            report.pairs_used += 1;
        }
        report.consistent =
            report.max_ratio_f <= self.lipschitz_f && report.max_ratio_g <= self.lipschitz_g;
        Ok(report)
    }
}

pub fn constant_map(m: Matrix) -> InputMapFn {
    Arc::new(move |_: &Vector| m.clone())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LipschitzReport {
    pub max_ratio_f: f64,
    pub max_ratio_g: f64,
    pub consistent: bool,
    pub pairs_used: usize,
}

/// Input maps frozen at `x0`, with the cached right pseudoinverse of `g0c`.
#[derive(Debug, Clone)]
pub struct DriftlessApproximation {
    g0c: Matrix,
    g0uc: Matrix,
    g0c_pinv: Matrix,
    x0: Vector,
}

impl DriftlessApproximation {
    pub fn new(g0c: Matrix, g0uc: Matrix, x0: Vector) -> Result<Self> {
        if g0c.rows() != g0uc.rows() || g0c.rows() != x0.dim() {
            return Err(Error::Dimension(
                "input maps and initial state disagree on state dimension".into(),
            ));
        }
        let g0c_pinv = right_pseudoinverse(&g0c, DEFAULT_RANK_TOL)?;
        Ok(Self {
            g0c,
            g0uc,
            g0c_pinv,
            x0,
        })
    }

    pub fn g0c(&self) -> &Matrix {
        &self.g0c
    }

    pub fn g0uc(&self) -> &Matrix {
        &self.g0uc
    }

    pub fn g0c_pinv(&self) -> &Matrix {
        &self.g0c_pinv
    }

    pub fn x0(&self) -> &Vector {
        &self.x0
    }

    pub fn state_dim(&self) -> usize {
        self.g0c.rows()
    }

    pub fn controlled_dim(&self) -> usize {
        self.g0c.cols()
    }

    pub fn uncontrolled_dim(&self) -> usize {
        self.g0uc.cols()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn integrator_2d() -> ControlSystem {
        ControlSystem::new(
            2,
            2,
            1,
            Arc::new(|_: &Vector| Vector::zeros(2)),
            constant_map(Matrix::identity(2)),
            constant_map(Matrix::zeros(2, 1)),
            0.0,
            0.0,
        )
        .unwrap()
    }

    #[test]
    fn pure_input_dynamics() {
        let sys = integrator_2d();
        let dx = sys
            .evaluate_dynamics(&Vector::zeros(2), &Vector::from([1.0, -1.0]), &Vector::from([0.3]))
            .unwrap();
        assert_eq!(dx, Vector::from([1.0, -1.0]));
    }

    #[test]
    fn input_bound_violation_names_channel() {
        let sys = integrator_2d();
        let err = sys
            .evaluate_dynamics(&Vector::zeros(2), &Vector::from([0.0, 0.0]), &Vector::from([1.5]))
            .unwrap_err();
        assert!(matches!(err, Error::Constraint { channel: "uncontrolled", .. }));
        let err = sys
            .evaluate_dynamics(&Vector::zeros(2), &Vector::from([1.01, 0.0]), &Vector::from([0.0]))
            .unwrap_err();
        assert!(matches!(err, Error::Constraint { channel: "controlled", .. }));
    }

    #[test]
    fn dimension_mismatch() {
        let sys = integrator_2d();
        let err = sys
            .evaluate_dynamics(&Vector::zeros(3), &Vector::from([0.0, 0.0]), &Vector::from([0.0]))
            .unwrap_err();
        assert!(matches!(err, Error::Dimension(_)));
    }

    #[test]
    fn wrong_callback_shape_detected() {
        let sys = ControlSystem::new(
            2,
            2,
            1,
            Arc::new(|_: &Vector| Vector::zeros(3)),
            constant_map(Matrix::identity(2)),
            constant_map(Matrix::zeros(2, 1)),
            0.0,
            0.0,
        )
        .unwrap();
        let err = sys
            .evaluate_dynamics(&Vector::zeros(2), &Vector::zeros(2), &Vector::zeros(1))
            .unwrap_err();
        assert!(matches!(err, Error::Dimension(_)));
    }

    #[test]
    fn constant_maps_linearize_to_themselves() {
        let bc = Matrix::from_rows(&[[2.0, 0.0], [1.0, 3.0]]);
        let buc = Matrix::from_rows(&[[0.5], [0.25]]);
        let sys = ControlSystem::linear_with_drift(
            Matrix::zeros(2, 2),
            |_| Vector::zeros(2),
            bc.clone(),
            buc.clone(),
            0.0,
        )
        .unwrap();
        let approx = sys.linearize_at(&Vector::from([4.0, -1.0])).unwrap();
        assert_eq!(approx.g0c(), &bc);
        assert_eq!(approx.g0uc(), &buc);
    }

    #[test]
    fn state_dependent_map_evaluated_at_x0_only() {
        let sys = ControlSystem::new(
            2,
            2,
            1,
            Arc::new(|_: &Vector| Vector::zeros(2)),
            Arc::new(|x: &Vector| {
                let s = 1.0 + x[0] * x[0];
                Matrix::from_rows(&[[s, 0.0], [0.0, 2.0 * s]])
            }),
            Arc::new(|x: &Vector| Matrix::from_rows(&[[x[1]], [0.0]])),
            0.0,
            0.0,
        )
        .unwrap();
        let x0 = Vector::from([2.0, 3.0]);
        let approx = sys.linearize_at(&x0).unwrap();
        assert_eq!(approx.g0c(), &Matrix::from_rows(&[[5.0, 0.0], [0.0, 10.0]]));
        assert_eq!(approx.g0uc(), &Matrix::from_rows(&[[3.0], [0.0]]));
        let pinv = approx.g0c_pinv();
        assert!((pinv[(0, 0)] - 0.2).abs() < 1e-15);
        assert!((pinv[(1, 1)] - 0.1).abs() < 1e-15);
    }

    #[test]
    fn rank_failure_propagates() {
        let sys = ControlSystem::linear_with_drift(
            Matrix::zeros(2, 2),
            |_| Vector::zeros(2),
            Matrix::from_rows(&[[1.0, 1.0], [1.0, 1.0]]),
            Matrix::zeros(2, 1),
            0.0,
        )
        .unwrap();
        assert!(matches!(
            sys.linearize_at(&Vector::zeros(2)),
            Err(Error::Rank { .. })
        ));
    }

    #[test]
    fn lipschitz_check_on_linear_drift() {
        let a = Matrix::from_rows(&[[1.0, -2.0], [0.5, 0.25]]);
        let norm = a.inf_norm();
        let sys = ControlSystem::linear_with_drift(
            a,
            |_| Vector::zeros(2),
            Matrix::identity(2),
            Matrix::zeros(2, 1),
            norm,
        )
        .unwrap()
        .with_region(Vector::zeros(2), 3.0)
        .unwrap();
        let report = sys.check_lipschitz(2000, 1).unwrap();
        assert!(report.consistent);
        assert!(report.max_ratio_f <= norm);
        assert!(report.max_ratio_f > 0.5 * norm);
        assert_eq!(report.max_ratio_g, 0.0);
        assert_eq!(report, sys.check_lipschitz(2000, 1).unwrap());
    }

    #[test]
    fn lipschitz_needs_two_samples() {
        assert!(integrator_2d().check_lipschitz(1, 0).is_err());
    }
}
