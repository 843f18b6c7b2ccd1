//! Optimal unambiguous quantum state filtering.
//!
//! Given `N` pure states with prior probabilities, *filtering* decides whether
//! an unknown member of the ensemble is the designated target `ψ₁` or one of
//! the remaining states, never answering wrongly but sometimes answering
//! "fail". This crate provides:
//!
//! - [`ensemble`]: state vectors, Gram matrices, orthonormal span bases and the
//!   split of the target into components parallel and perpendicular to the
//!   span of the other states.
//! - [`strategies`]: closed-form failure probabilities of the two projective
//!   strategies and of the optimal generalized measurement, and the piecewise
//!   optimum with its per-state allocations.
//! - [`neumark`]: an explicit unitary on the system space plus a one-dimensional
//!   failure ancilla that realizes the optimal measurement, and the
//!   measurement operators of all three schemes.
//! - [`simulation`]: seeded Monte Carlo sampling of any scheme.
//! - [`boolean`]: the Deutsch–Jozsa style encoding of Boolean functions and the
//!   discrimination of the biased family `W_k` from balanced functions.
//! - [`io`] and [`cli`]: the JSON ensemble format, CSV sweeps, and the
//!   `qfilter` command line.
//!
//! ```
//! use qfilter::boolean::{boolean_problem, PriorMode, Variant};
//! use qfilter::strategies::{optimal_filtering, Regime};
//!
//! let problem = boolean_problem(2, 2, PriorMode::EqualStatesBasis, Variant::Basis).unwrap();
//! let report = optimal_filtering(&problem).unwrap();
//! assert_eq!(report.regime, Regime::Povm);
//! assert!((report.optimal_q - 3f64.sqrt() / 4.0).abs() < 1e-12);
//! ```

pub mod boolean;
pub mod cli;
pub mod ensemble;
mod error;
pub mod io;
pub mod neumark;
pub mod simulation;
pub mod strategies;

pub use error::{Error, Result};
pub use num_complex::Complex64;
