//! Admissible uncontrolled-input signals. Every emitted value is clamped to
//! the unit infinity ball.

use std::f64::consts::PI;

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Vector;
use crate::system::DriftlessApproximation;

/// Largest greedy candidate grid (`resolution^p`).
const MAX_GREEDY_CANDIDATES: usize = 1 << 16;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum UncontrolledStrategy {
    Constant {
        value: Vector,
    },
    Sinusoid {
        amplitude: Vector,
        frequency: f64,
        #[serde(default)]
        phase: f64,
    },
    /// Independent `±1` per channel, redrawn every `switch_period`.
    BangBang {
        switch_period: f64,
        #[serde(default)]
        seed: u64,
    },
    /// Myopic adversary: picks, from a grid of `resolution` points per
    /// channel, the input that most increases the currently largest error
    /// coordinate through `g0uc`.
    GreedyAdversary {
        resolution: usize,
    },
    /// `u = 1_p / t_f`, which cancels the `α_n` offset exactly.
    CancellationProbe,
}

/// Data a strategy may read while sampling.
#[derive(Debug, Clone, Copy)]
pub struct SampleContext<'a> {
    pub t_f: f64,
    pub x_target: &'a Vector,
    pub approx: &'a DriftlessApproximation,
}

impl UncontrolledStrategy {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Constant { .. } => "constant",
            Self::Sinusoid { .. } => "sinusoid",
            Self::BangBang { .. } => "bang_bang",
            Self::GreedyAdversary { .. } => "greedy_adversary",
            Self::CancellationProbe => "cancellation_probe",
        }
    }

    pub fn validate(&self, p: usize) -> Result<()> {
        match self {
            Self::Constant { value } => value.check_dim(p, "constant strategy value"),
            Self::Sinusoid {
                amplitude,
                frequency,
                phase,
            } => {
                amplitude.check_dim(p, "sinusoid amplitude")?;
                if !frequency.is_finite() || !phase.is_finite() {
                    return Err(Error::Config("sinusoid parameters must be finite".into()));
                }
                Ok(())
            }
            Self::BangBang { switch_period, .. } => {
                if !(*switch_period > 0.0 && switch_period.is_finite()) {
                    return Err(Error::Config("bang_bang switch_period must be positive".into()));
                }
                Ok(())
            }
            Self::GreedyAdversary { resolution } => {
                if *resolution < 2 {
                    return Err(Error::Config("greedy_adversary resolution must be >= 2".into()));
                }
                match resolution.checked_pow(p as u32) {
                    Some(n) if n <= MAX_GREEDY_CANDIDATES => Ok(()),
                    _ => Err(Error::Config(format!(
                        "greedy_adversary grid {resolution}^{p} exceeds {MAX_GREEDY_CANDIDATES} candidates"
                    ))),
                }
            }
            Self::CancellationProbe => Ok(()),
        }
    }

    /// Value at time `t` for state `x`, clamped entrywise to `[-1, 1]`.
    pub fn sample(&self, t: f64, x: &Vector, ctx: &SampleContext<'_>) -> Vector {
        let p = ctx.approx.uncontrolled_dim();
        let raw = match self {
            Self::Constant { value } => value.clone(),
            Self::Sinusoid {
                amplitude,
                frequency,
                phase,
            } => amplitude.scale((2.0 * PI * frequency * t + phase).sin()),
            Self::BangBang {
                switch_period,
                seed,
            } => bang_bang(*seed, *switch_period, t, p),
            Self::GreedyAdversary { resolution } => greedy(*resolution, x, ctx),
            Self::CancellationProbe => Vector::filled(p, 1.0 / ctx.t_f),
        };
        raw.clamp_unit()
    }
}

/// Random-access `±1` draw: slot `floor(t / period)`, one stream word per
/// channel, so the signal is a pure function of `(seed, t)`.
fn bang_bang(seed: u64, period: f64, t: f64, p: usize) -> Vector {
    let slot = (t / period).floor().max(0.0) as u128;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_word_pos(slot * p as u128);
    let mut out = Vector::zeros(p);
    for i in 0..p {
        out[i] = if rng.next_u32() & 1 == 1 { 1.0 } else { -1.0 };
    }
    out
}

fn greedy(resolution: usize, x: &Vector, ctx: &SampleContext<'_>) -> Vector {
    let p = ctx.approx.uncontrolled_dim();
    let err = x - ctx.x_target;
    let mut k = 0;
    for i in 1..err.dim() {
        if err[i].abs() > err[k].abs() {
            k = i;
        }
    }
    let sign = if err[k] > 0.0 {
        1.0
    } else if err[k] < 0.0 {
        -1.0
    } else {
        0.0
    };
    let row = ctx.approx.g0uc().row(k);
    let level = |j: usize| -1.0 + 2.0 * j as f64 / (resolution - 1) as f64;

    // Channels are independent in a linear score, but enumerate the grid so
    // ties resolve in a fixed order.
    let total = resolution.pow(p as u32);
    let mut best = Vector::filled(p, -1.0);
    let mut best_score = f64::NEG_INFINITY;
    let mut cand = Vector::zeros(p);
    for idx in 0..total {
        let mut rem = idx;
        for ch in 0..p {
            cand[ch] = level(rem % resolution);
            rem /= resolution;
        }
        let score = sign * row.iter().zip(cand.iter()).map(|(g, u)| g * u).sum::<f64>();
        if score > best_score {
            best_score = score;
            best = cand.clone();
        }
    }
    best
}

/// Strategy of the given kind with parameters drawn from `seed`; used for
/// randomized stress batches.
pub fn randomized(kind: &str, seed: u64, p: usize) -> Result<UncontrolledStrategy> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed_5eed);
    let mut draw = |lo: f64, hi: f64| rng.gen_range(lo..hi);
    Ok(match kind {
        "constant" => UncontrolledStrategy::Constant {
            value: Vector::new((0..p).map(|_| draw(-1.0, 1.0)).collect())?,
        },
        "sinusoid" => UncontrolledStrategy::Sinusoid {
            amplitude: Vector::new((0..p).map(|_| draw(-1.0, 1.0)).collect())?,
            frequency: draw(0.05, 2.0),
            phase: draw(0.0, 2.0 * PI),
        },
        "bang_bang" => UncontrolledStrategy::BangBang {
            switch_period: draw(0.05, 1.0),
            seed,
        },
        "greedy_adversary" => UncontrolledStrategy::GreedyAdversary {
            resolution: 2 + (seed % 4) as usize,
        },
        "cancellation_probe" => UncontrolledStrategy::CancellationProbe,
        other => return Err(Error::Config(format!("unknown strategy kind '{other}'"))),
    })
}

pub const STRATEGY_KINDS: [&str; 5] = [
    "constant",
    "sinusoid",
    "bang_bang",
    "greedy_adversary",
    "cancellation_probe",
];
