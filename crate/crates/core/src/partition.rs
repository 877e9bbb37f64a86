//! Geometric partition of the horizon `[0, t_f]`: `t_n = t_f - t_f / 2^n`,
//! so interval `n` has length `t_f / 2^n`.

use serde::Serialize;

use crate::error::{Error, Result};

/// Largest supported terminal index.
pub const MAX_INTERVALS: usize = 50;

fn check_tf(t_f: f64) -> Result<()> {
    if !(t_f > 0.0 && t_f.is_finite()) {
        return Err(Error::Domain(format!("final time must be positive, got {t_f}")));
    }
    Ok(())
}

/// `t_n`, computed as `t_f - t_f / 2^n` to avoid cancellation.
pub fn partition_time(t_f: f64, n: u32) -> Result<f64> {
    check_tf(t_f)?;
    Ok(t_f - t_f * 0.5_f64.powi(n as i32))
}

/// `Δt_n = t_f / 2^n`
pub fn interval_length(t_f: f64, n: u32) -> Result<f64> {
    check_tf(t_f)?;
    if n == 0 {
        return Err(Error::Domain("interval index starts at 1".into()));
    }
    Ok(t_f * 0.5_f64.powi(n as i32))
}

/// Boundaries `[t_0, ..., t_{n̄-1}, t_f]`. The last interval merges
/// `[t_{n̄-1}, t_n̄]` and `[t_n̄, t_f]`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HorizonPartition {
    t_f: f64,
    boundaries: Vec<f64>,
}

impl HorizonPartition {
    pub fn new(t_f: f64, n_bar: usize) -> Result<Self> {
        check_tf(t_f)?;
        if n_bar == 0 || n_bar > MAX_INTERVALS {
            return Err(Error::Domain(format!(
                "terminal index must be in 1..={MAX_INTERVALS}, got {n_bar}"
            )));
        }
        let mut boundaries: Vec<f64> = (0..n_bar as u32)
            .map(|n| partition_time(t_f, n))
            .collect::<Result<_>>()?;
        boundaries.push(t_f);
        Ok(Self { t_f, boundaries })
    }

    pub fn t_f(&self) -> f64 {
        self.t_f
    }

    pub fn n_bar(&self) -> usize {
        self.boundaries.len() - 1
    }

    pub fn boundaries(&self) -> &[f64] {
        &self.boundaries
    }

    /// `(t_start, t_end)` of interval `n` (1-based).
    pub fn interval(&self, n: usize) -> (f64, f64) {
        (self.boundaries[n - 1], self.boundaries[n])
    }

    pub fn intervals(&self) -> impl Iterator<Item = (usize, f64, f64)> + '_ {
        self.boundaries
            .windows(2)
            .enumerate()
            .map(|(i, w)| (i + 1, w[0], w[1]))
    }
}

pub fn build_partition(t_f: f64, n_bar: usize) -> Result<HorizonPartition> {
    HorizonPartition::new(t_f, n_bar)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn partition_times() {
        assert_eq!(partition_time(20.0, 0).unwrap(), 0.0);
        assert_eq!(partition_time(20.0, 1).unwrap(), 10.0);
        assert_eq!(partition_time(20.0, 2).unwrap(), 15.0);
        assert_eq!(partition_time(20.0, 3).unwrap(), 17.5);
        assert!(matches!(partition_time(0.0, 1), Err(Error::Domain(_))));
        assert!(partition_time(-1.0, 1).is_err());
    }

    #[test]
    fn interval_lengths() {
        assert_eq!(interval_length(20.0, 1).unwrap(), 10.0);
        assert_eq!(interval_length(20.0, 8).unwrap(), 0.078125);
        assert!(interval_length(20.0, 0).is_err());
        let total: f64 = (1..=30).map(|n| interval_length(20.0, n).unwrap()).sum();
        assert!((total - 20.0 * (1.0 - 0.5_f64.powi(30))).abs() < 1e-12);
    }

    #[test]
    fn partitions() {
        assert_eq!(build_partition(20.0, 1).unwrap().boundaries(), &[0.0, 20.0]);
        assert_eq!(build_partition(20.0, 3).unwrap().boundaries(), &[0.0, 10.0, 15.0, 20.0]);
        let p = build_partition(20.0, 8).unwrap();
        assert_eq!(p.n_bar(), 8);
        assert_eq!(
            p.boundaries(),
            &[0.0, 10.0, 15.0, 17.5, 18.75, 19.375, 19.6875, 19.84375, 20.0]
        );
        assert_eq!(p.interval(8), (19.84375, 20.0));
        assert!(build_partition(20.0, 0).is_err());
        assert!(build_partition(20.0, MAX_INTERVALS + 1).is_err());
    }

    proptest! {
        #[test]
        fn halving_is_exact(t_f in 1e-3f64..1e3, n in 1u32..40) {
            prop_assert_eq!(
                interval_length(t_f, n + 1).unwrap(),
                0.5 * interval_length(t_f, n).unwrap()
            );
        }

        #[test]
        fn covers_horizon(t_f in 1e-3f64..1e3, n_bar in 1usize..=MAX_INTERVALS) {
            let p = build_partition(t_f, n_bar).unwrap();
            let b = p.boundaries();
            prop_assert_eq!(b[0], 0.0);
            prop_assert_eq!(*b.last().unwrap(), t_f);
            prop_assert!(b.windows(2).all(|w| w[1] > w[0]));
            let sum: f64 = b.windows(2).map(|w| w[1] - w[0]).sum();
            prop_assert!((sum - t_f).abs() <= 1e-12 * t_f);
            let (s, e) = p.interval(n_bar);
            prop_assert!(((e - s) - t_f / 2f64.powi(n_bar as i32 - 1)).abs() <= 1e-12 * t_f);
        }
    }
}
