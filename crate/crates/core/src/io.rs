//! Ensemble files (JSON) and failure-curve sweeps (CSV).
//!
//! An ensemble file looks like
//!
//! ```json
//! {
//!   "dimension": 2,
//!   "states": [
//!     { "amplitudes": [[1.0, 0.0], [0.0, 0.0]], "prior": 0.5 },
//!     { "amplitudes": [[0.6, 0.0], [0.8, 0.0]], "prior": 0.5 }
//!   ],
//!   "target_index": 0
//! }
//! ```
//!
//! Amplitudes are `[re, im]` pairs. Unknown fields are rejected.

use std::fs;
use std::io::Write;
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::ensemble::{FilteringProblem, StateVector};
use crate::strategies::CurveRow;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnsembleState {
    pub amplitudes: Vec<[f64; 2]>,
    pub prior: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnsembleFile {
    pub dimension: usize,
    pub states: Vec<EnsembleState>,
    pub target_index: usize,
}

impl EnsembleFile {
    /// Target written first, `target_index = 0`.
    pub fn from_problem(problem: &FilteringProblem) -> Self {
        let states = problem
            .states()
            .iter()
            .zip(problem.priors())
            .map(|(s, &prior)| EnsembleState {
                amplitudes: s.amplitudes().iter().map(|c| [c.re, c.im]).collect(),
                prior,
            })
            .collect();
        Self {
            dimension: problem.dim(),
            states,
            target_index: 0,
        }
    }

    pub fn to_problem(&self) -> Result<FilteringProblem> {
        let mut states = Vec::with_capacity(self.states.len());
        let mut priors = Vec::with_capacity(self.states.len());
        for (i, s) in self.states.iter().enumerate() {
            if s.amplitudes.len() != self.dimension {
                return Err(Error::InvalidInput(format!(
                    "state {i} has {} amplitudes, file declares dimension {}",
                    s.amplitudes.len(),
                    self.dimension
                )));
            }
            let amps = s
                .amplitudes
                .iter()
                .map(|[re, im]| Complex64::new(*re, *im))
                .collect();
            states.push(
                StateVector::new(amps)
                    .map_err(|e| Error::InvalidInput(format!("state {i}: {e}")))?,
            );
            priors.push(s.prior);
        }
        FilteringProblem::new(states, priors, self.target_index)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text)
            .map_err(|e| Error::InvalidInput(format!("malformed ensemble file: {e}")))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("ensemble files always serialize")
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_json(&text)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_json()).map_err(|source| Error::Io {
            path: path.display().to_string(),
            source,
        })
    }
}

/// Reads and validates an ensemble file in one step.
pub fn load_problem(path: &Path) -> Result<FilteringProblem> {
    EnsembleFile::read(path)?.to_problem()
}

/// Decimal rendering with `digits` significant digits, trailing zeros
/// trimmed.
pub fn format_sig(x: f64, digits: usize) -> String {
    if x == 0.0 || !x.is_finite() {
        return if x == 0.0 {
            "0".to_string()
        } else {
            x.to_string()
        };
    }
    let exp = x.abs().log10().floor() as i64;
    let decimals = (digits as i64 - 1 - exp).max(0) as usize;
    let s = format!("{x:.decimals$}");
    let s = if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    };
    if s == "-0" {
        "0".to_string()
    } else {
        s
    }
}

pub const SWEEP_HEADER: &str = "S,Q_sqm1,Q_sqm2,Q_povm,Q_opt,regime";

/// `steps` evenly spaced values from `smin` to `smax` inclusive.
pub fn sweep_grid(smin: f64, smax: f64, steps: usize) -> Result<Vec<f64>> {
    if !(smin.is_finite() && smax.is_finite() && smin >= 0.0 && smin < smax) {
        return Err(Error::InvalidInput(format!(
            "sweep range must satisfy 0 <= smin < smax, got [{smin}, {smax}]"
        )));
    }
    if steps < 2 {
        return Err(Error::InvalidInput(format!(
            "sweep needs at least 2 steps, got {steps}"
        )));
    }
    let h = (smax - smin) / (steps - 1) as f64;
    Ok((0..steps)
        .map(|j| {
            if j == steps - 1 {
                smax
            } else {
                smin + j as f64 * h
            }
        })
        .collect())
}

pub fn write_sweep_csv(rows: &[CurveRow], out: &mut dyn Write) -> std::io::Result<()> {
    writeln!(out, "{SWEEP_HEADER}")?;
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{},{}",
            format_sig(r.s, 12),
            format_sig(r.q_sqm1, 12),
            format_sig(r.q_sqm2, 12),
            r.q_povm.map(|q| format_sig(q, 12)).unwrap_or_default(),
            format_sig(r.q_opt, 12),
            r.regime
        )?;
    }
    Ok(())
}
