//! JSON description of linear-plus-sinusoidal-drift systems.
//!
//! ```json
//! {
//!   "A":   [[...]], "Bc": [[...]], "Buc": [[...]],
//!   "drift_terms": [{"kind": "sin", "coeff": 0.5, "state_index": 0, "frequency": 1.0, "row": 0}],
//!   "Df": 1.0, "Dg": 0.0, "x0": [...], "xtg": [...]
//! }
//! ```
//!
//! A term adds `coeff * sin(frequency * x[state_index])` (or `cos`, or the
//! constant `coeff`) to drift component `row`, which defaults to
//! `state_index`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{Matrix, Vector};

use super::{default_state_space_bound, ControlSystem};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DriftKind {
    Sin,
    Cos,
    Const,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DriftTerm {
    pub kind: DriftKind,
    pub coeff: f64,
    pub state_index: usize,
    #[serde(default = "one")]
    pub frequency: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub row: Option<usize>,
}

fn one() -> f64 {
    1.0
}

impl DriftTerm {
    fn value(&self, x: &Vector) -> f64 {
        match self.kind {
            DriftKind::Sin => self.coeff * (self.frequency * x[self.state_index]).sin(),
            DriftKind::Cos => self.coeff * (self.frequency * x[self.state_index]).cos(),
            DriftKind::Const => self.coeff,
        }
    }

    fn row(&self) -> usize {
        self.row.unwrap_or(self.state_index)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemDocument {
    #[serde(rename = "A")]
    pub a: Matrix,
    #[serde(rename = "Bc")]
    pub bc: Matrix,
    #[serde(rename = "Buc")]
    pub buc: Matrix,
    #[serde(default)]
    pub drift_terms: Vec<DriftTerm>,
    #[serde(rename = "Df")]
    pub df: f64,
    #[serde(rename = "Dg", default)]
    pub dg: f64,
    pub x0: Vector,
    pub xtg: Vector,
}

impl SystemDocument {
    pub fn from_json(text: &str) -> Result<Self> {
        let doc: SystemDocument = serde_json::from_str(text)?;
        doc.validate()?;
        Ok(doc)
    }

    pub fn validate(&self) -> Result<()> {
        let d = self.a.rows();
        if self.a.cols() != d {
            return Err(Error::Config(format!("A must be square, got {}x{}", d, self.a.cols())));
        }
        for (name, m) in [("Bc", &self.bc), ("Buc", &self.buc)] {
            if m.rows() != d {
                return Err(Error::Config(format!("{name} must have {d} rows, got {}", m.rows())));
            }
        }
        for (name, v) in [("x0", &self.x0), ("xtg", &self.xtg)] {
            if v.dim() != d {
                return Err(Error::Config(format!("{name} must have {d} entries, got {}", v.dim())));
            }
        }
        for (i, t) in self.drift_terms.iter().enumerate() {
            if t.state_index >= d || t.row() >= d {
                return Err(Error::Config(format!(
                    "drift_terms[{i}]: index out of range for dimension {d}"
                )));
            }
            if !t.coeff.is_finite() || !t.frequency.is_finite() {
                return Err(Error::Config(format!("drift_terms[{i}]: non-finite parameter")));
            }
        }
        if !(self.df >= 0.0) || !(self.dg >= 0.0) {
            return Err(Error::Config("Df and Dg must be non-negative".into()));
        }
        Ok(())
    }

    /// Builds the system; the sampling region is centred on `x0` with the
    /// default radius.
    pub fn to_system(&self) -> Result<ControlSystem> {
        self.validate()?;
        let terms = self.drift_terms.clone();
        let d = self.a.rows();
        let extra = move |x: &Vector| {
            let mut out = Vector::zeros(d);
            for t in &terms {
                out[t.row()] += t.value(x);
            }
            out
        };
        let radius = default_state_space_bound(&self.x0, &self.xtg);
        ControlSystem::linear_with_drift(
            self.a.clone(),
            extra,
            self.bc.clone(),
            self.buc.clone(),
            self.df,
        )?
        .with_lipschitz(self.df, self.dg)
        .with_region(self.x0.clone(), radius)
    }

    /// The builtin ADMIRE model as a document. The roll wind term
    /// `0.5 sin(p) cos^2(p)` is written as `(sin(p) + sin(3p)) / 8`.
    pub fn admire() -> Self {
        use super::admire::*;
        let term = |kind, coeff, state_index, frequency, row| DriftTerm {
            kind,
            coeff,
            state_index,
            frequency,
            row: Some(row),
        };
        SystemDocument {
            a: Matrix::from_rows(&ADMIRE_A),
            bc: Matrix::from_rows(&ADMIRE_BC),
            buc: Matrix::from_rows(&ADMIRE_BUC),
            drift_terms: vec![
                term(DriftKind::Sin, 0.125, 0, 1.0, 0),
                term(DriftKind::Sin, 0.125, 0, 3.0, 0),
                term(DriftKind::Sin, -0.5, 1, 2.0, 1),
                term(DriftKind::Const, 0.5, 2, 1.0, 2),
            ],
            df: ADMIRE_LIPSCHITZ_F,
            dg: 0.0,
            x0: Vector::from(ADMIRE_X0),
            xtg: Vector::zeros(3),
        }
    }
}
