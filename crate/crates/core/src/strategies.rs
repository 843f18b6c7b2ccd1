//! Failure probabilities of the filtering strategies.
//!
//! With `S = Σ_{i≥2} η_i |⟨ψ₁|ψ_i⟩|²` and `f = ‖ψ₁^∥‖²`:
//!
//! | strategy | failure probability |
//! |----------|---------------------|
//! | SQM1, project onto `ψ₁` | `η₁ + S` |
//! | SQM2, project onto `ψ̃₁^⊥`, `ψ̃₁^∥` | `η₁ f + S / f` |
//! | optimal POVM | `2 √(η₁ S)` |
//!
//! The POVM fails on the target with probability `q₁` and on each other
//! state with `q_i = |⟨ψ₁|ψ_i⟩|² / q₁`, so the average failure is
//! `η₁ q₁ + S / q₁`, minimized over `q₁ ∈ [f, 1]`. The unconstrained minimum
//! `q₁ = √(S/η₁)` is admissible iff `η₁ f² ≤ S ≤ η₁`; outside that window
//! the optimum sits on a boundary and coincides with one of the projective
//! strategies.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::ensemble::{decompose_target, FilteringProblem};
use crate::{Error, Result};

/// Slack used when deciding whether `S` lies on a regime boundary.
pub const BOUNDARY_TOL: f64 = 1e-12;

/// `f` below this is treated as an exactly orthogonal target.
const ZERO_PARALLEL: f64 = 1e-14;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Regime {
    /// Interior optimum, `q₁ = √(S/η₁)`.
    Povm,
    /// Clamped at `q₁ = 1`; equals the SQM1 failure probability.
    Sqm1Boundary,
    /// Clamped at `q₁ = f`; equals the SQM2 failure probability.
    Sqm2Boundary,
}

impl Regime {
    pub fn as_str(self) -> &'static str {
        match self {
            Regime::Povm => "POVM",
            Regime::Sqm1Boundary => "SQM1_BOUNDARY",
            Regime::Sqm2Boundary => "SQM2_BOUNDARY",
        }
    }
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// `S = Σ_{i≥2} η_i |⟨ψ₁|ψ_i⟩|²`.
pub fn average_overlap(problem: &FilteringProblem) -> f64 {
    let target = problem.target();
    problem
        .complement()
        .iter()
        .zip(&problem.priors()[1..])
        .map(|(s, eta)| eta * target.inner(s).norm_sqr())
        .sum()
}

pub fn q_sqm1(eta1: f64, s: f64) -> f64 {
    eta1 + s
}

/// Fails with [`Error::InvalidState`] for `f = 0, S > 0`: a positive
/// overlap forces a nonzero parallel component.
pub fn q_sqm2(eta1: f64, f: f64, s: f64) -> Result<f64> {
    if f == 0.0 {
        return if s == 0.0 {
            Ok(0.0)
        } else {
            Err(Error::InvalidState(format!(
                "average overlap {s} > 0 with zero parallel component"
            )))
        };
    }
    Ok(eta1 * f + s / f)
}

/// Unconstrained optimum `2√(η₁S)`; only meaningful inside [`povm_window`].
pub fn q_povm(eta1: f64, s: f64) -> f64 {
    2.0 * (eta1 * s).sqrt()
}

/// `[η₁ f², η₁]`, the range of `S` where the interior optimum is admissible.
pub fn povm_window(eta1: f64, f: f64) -> (f64, f64) {
    (eta1 * f * f, eta1)
}

/// Regime for `(η₁, f, S)`. Boundary ties resolve to [`Regime::Povm`].
pub fn classify(eta1: f64, f: f64, s: f64) -> Regime {
    let (lo, hi) = povm_window(eta1, f);
    if s > hi + BOUNDARY_TOL {
        Regime::Sqm1Boundary
    } else if s < lo - BOUNDARY_TOL {
        Regime::Sqm2Boundary
    } else {
        Regime::Povm
    }
}

/// Optimal target failure probability `q₁` and its regime.
pub fn optimal_q1(eta1: f64, f: f64, s: f64) -> (Regime, f64) {
    let regime = classify(eta1, f, s);
    let q1 = match regime {
        Regime::Sqm1Boundary => 1.0,
        Regime::Sqm2Boundary => f,
        Regime::Povm => (s / eta1).sqrt().clamp(f, 1.0),
    };
    (regime, q1)
}

/// Failure probability of the clamped optimum, by regime.
fn regime_q(regime: Regime, eta1: f64, f: f64, s: f64) -> Result<f64> {
    Ok(match regime {
        Regime::Povm => q_povm(eta1, s),
        Regime::Sqm1Boundary => q_sqm1(eta1, s),
        Regime::Sqm2Boundary => q_sqm2(eta1, f, s)?,
    })
}

/// Full analysis of a filtering problem.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrategyReport {
    pub q_sqm1: f64,
    pub q_sqm2: f64,
    /// Present only when `S` lies inside the POVM window.
    pub q_povm: Option<f64>,
    pub regime: Regime,
    pub optimal_q1: f64,
    #[serde(rename = "optimal_Q")]
    pub optimal_q: f64,
    pub per_state_failure: Vec<f64>,
    pub per_state_success: Vec<f64>,
    pub average_success: f64,
    #[serde(rename = "overlap_S")]
    pub overlap_s: f64,
    pub parallel_norm_f: f64,
}

/// Per-state failure probabilities for a given `q₁`: `q_i = |⟨ψ₁|ψ_i⟩|²/q₁`.
pub(crate) fn allocate(overlaps_sq: &[f64], q1: f64) -> Vec<f64> {
    let mut q = Vec::with_capacity(overlaps_sq.len());
    q.push(q1);
    q.extend(
        overlaps_sq[1..]
            .iter()
            .map(|&c2| if q1 > 0.0 { (c2 / q1).min(1.0) } else { 0.0 }),
    );
    q
}

/// `f` and `S` for a problem, with an orthogonal target snapped to exact zeros.
pub(crate) fn parallel_and_overlap(problem: &FilteringProblem) -> (f64, f64, Vec<f64>) {
    let f = decompose_target(problem).parallel_norm_sq;
    let mut overlaps_sq: Vec<f64> = problem
        .target_overlaps()
        .iter()
        .map(|c| c.norm_sqr())
        .collect();
    overlaps_sq[0] = 1.0;
    if f < ZERO_PARALLEL {
        overlaps_sq[1..].iter_mut().for_each(|c| *c = 0.0);
        return (0.0, 0.0, overlaps_sq);
    }
    let s = overlaps_sq[1..]
        .iter()
        .zip(&problem.priors()[1..])
        .map(|(c, eta)| c * eta)
        .sum();
    (f, s, overlaps_sq)
}

/// The optimal unambiguous filtering measurement for `problem`.
pub fn optimal_filtering(problem: &FilteringProblem) -> Result<StrategyReport> {
    let eta1 = problem.target_prior();
    if problem.complement().is_empty() {
        return Err(Error::invalid("complement set is empty"));
    }
    if !(eta1 > 0.0 && eta1 < 1.0) {
        return Err(Error::InvalidInput(format!(
            "target prior must lie in (0, 1), got {eta1}"
        )));
    }
    let (f, s, overlaps_sq) = parallel_and_overlap(problem);
    let (regime, q1) = optimal_q1(eta1, f, s);
    let (lo, hi) = povm_window(eta1, f);
    let in_window = s >= lo - BOUNDARY_TOL && s <= hi + BOUNDARY_TOL;

    let per_state_failure = allocate(&overlaps_sq, q1);
    let per_state_success = per_state_failure.iter().map(|q| 1.0 - q).collect();
    let optimal_q = regime_q(regime, eta1, f, s)?;

    Ok(StrategyReport {
        q_sqm1: q_sqm1(eta1, s),
        q_sqm2: q_sqm2(eta1, f, s)?,
        q_povm: in_window.then(|| q_povm(eta1, s)),
        regime,
        optimal_q1: q1,
        optimal_q,
        per_state_failure,
        per_state_success,
        average_success: 1.0 - optimal_q,
        overlap_s: s,
        parallel_norm_f: f,
    })
}

/// One point of the failure-probability curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CurveRow {
    pub s: f64,
    pub q_sqm1: f64,
    pub q_sqm2: f64,
    pub q_povm: Option<f64>,
    pub q_opt: f64,
    pub regime: Regime,
}

/// Failure probabilities versus average overlap at fixed `η₁` and `f`.
pub fn failure_curve(eta1: f64, f: f64, s_values: &[f64]) -> Result<Vec<CurveRow>> {
    if !(eta1 > 0.0 && eta1 < 1.0) {
        return Err(Error::InvalidInput(format!(
            "eta1 must lie in (0, 1), got {eta1}"
        )));
    }
    if !(0.0..=1.0).contains(&f) {
        return Err(Error::InvalidInput(format!(
            "f must lie in [0, 1], got {f}"
        )));
    }
    let (lo, hi) = povm_window(eta1, f);
    s_values
        .iter()
        .map(|&s| {
            if !(s.is_finite() && s >= 0.0) {
                return Err(Error::InvalidInput(format!(
                    "average overlap must be finite and nonnegative, got {s}"
                )));
            }
            let regime = classify(eta1, f, s);
            let in_window = s >= lo - BOUNDARY_TOL && s <= hi + BOUNDARY_TOL;
            Ok(CurveRow {
                s,
                q_sqm1: q_sqm1(eta1, s),
                q_sqm2: q_sqm2(eta1, f, s)?,
                q_povm: in_window.then(|| q_povm(eta1, s)),
                q_opt: regime_q(regime, eta1, f, s)?,
                regime,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ensemble::StateVector;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    /// `D = 3`: `ψ₁ = |0⟩/2 + (√3/2)|1⟩`, complement `{|0⟩, |2⟩}` with priors
    /// `0.4, 0.2`. Gives `η₁ = 0.4, f = 0.25, S = 0.1`.
    fn fig_point() -> FilteringProblem {
        let t = StateVector::from_real(&[0.5, 0.75f64.sqrt(), 0.0]).unwrap();
        FilteringProblem::new(
            vec![t, StateVector::basis(3, 0), StateVector::basis(3, 2)],
            vec![0.4, 0.4, 0.2],
            0,
        )
        .unwrap()
    }

    fn walsh_problem(eta1: f64) -> FilteringProblem {
        let rows = [
            [1., 1., 1., -1.],
            [1., -1., 1., -1.],
            [1., 1., -1., -1.],
            [1., -1., -1., 1.],
        ];
        let states = rows
            .iter()
            .map(|r| StateVector::from_real(&r.map(|x| x / 2.0)).unwrap())
            .collect();
        let eta = (1.0 - eta1) / 3.0;
        FilteringProblem::new(states, vec![eta1, eta, eta, eta], 0).unwrap()
    }

    #[test]
    fn overlap_examples() {
        let p = FilteringProblem::new(
            vec![StateVector::basis(2, 0), StateVector::basis(2, 1)],
            vec![0.5, 0.5],
            0,
        )
        .unwrap();
        assert_eq!(average_overlap(&p), 0.0);
        assert_abs_diff_eq!(
            average_overlap(&walsh_problem(0.25)),
            3.0 / 16.0,
            epsilon = 1e-15
        );
        assert_abs_diff_eq!(average_overlap(&fig_point()), 0.1, epsilon = 1e-15);
    }

    #[test]
    fn closed_forms() {
        assert_abs_diff_eq!(q_sqm1(0.4, 0.1), 0.5, epsilon = 1e-15);
        assert_eq!(q_sqm1(0.3, 0.0), 0.3);
        assert_abs_diff_eq!(q_sqm1(0.25, 3.0 / 16.0), 7.0 / 16.0, epsilon = 1e-15);

        assert_abs_diff_eq!(q_sqm2(0.4, 0.25, 0.1).unwrap(), 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(q_sqm2(0.4, 0.25, 0.025).unwrap(), 0.2, epsilon = 1e-15);
        assert_abs_diff_eq!(
            q_sqm2(0.25, 0.75, 3.0 / 16.0).unwrap(),
            7.0 / 16.0,
            epsilon = 1e-15
        );
        assert_eq!(q_sqm2(0.4, 0.0, 0.0).unwrap(), 0.0);
        assert!(matches!(q_sqm2(0.4, 0.0, 0.1), Err(Error::InvalidState(_))));

        assert_abs_diff_eq!(q_povm(0.4, 0.1), 0.4, epsilon = 1e-15);
        assert_eq!(q_povm(0.4, 0.0), 0.0);
        assert_abs_diff_eq!(q_povm(0.4, 0.4), 0.8, epsilon = 1e-15);
    }

    #[test]
    fn optimal_at_figure_point() {
        let r = optimal_filtering(&fig_point()).unwrap();
        assert_eq!(r.regime, Regime::Povm);
        assert_abs_diff_eq!(r.optimal_q, 0.4, epsilon = 1e-12);
        assert_abs_diff_eq!(r.optimal_q1, 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(r.q_sqm1, 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(r.q_sqm2, 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(r.parallel_norm_f, 0.25, epsilon = 1e-12);
    }

    #[test]
    fn sqm1_regime_above_window() {
        let (regime, q1) = optimal_q1(0.4, 0.25, 0.5);
        assert_eq!(regime, Regime::Sqm1Boundary);
        assert_eq!(q1, 1.0);
        let rows = failure_curve(0.4, 0.25, &[0.5]).unwrap();
        assert_abs_diff_eq!(rows[0].q_opt, 0.9, epsilon = 1e-15);
        assert_eq!(rows[0].q_povm, None);
    }

    #[test]
    fn walsh_equal_priors() {
        let r = optimal_filtering(&walsh_problem(0.25)).unwrap();
        assert_eq!(r.regime, Regime::Povm);
        let sqrt3 = 3f64.sqrt();
        assert_abs_diff_eq!(r.optimal_q, sqrt3 / 4.0, epsilon = 1e-12);
        assert_abs_diff_eq!(r.optimal_q1, sqrt3 / 2.0, epsilon = 1e-12);
        for q in &r.per_state_failure[1..] {
            assert_abs_diff_eq!(*q, 1.0 / (2.0 * sqrt3), epsilon = 1e-12);
        }
        let avg: f64 = r.per_state_failure.iter().map(|q| 0.25 * q).sum();
        assert_abs_diff_eq!(avg, r.optimal_q, epsilon = 1e-12);
        assert_abs_diff_eq!(r.average_success, 1.0 - sqrt3 / 4.0, epsilon = 1e-12);
    }

    #[test]
    fn curve_boundaries() {
        let rows = failure_curve(0.4, 0.25, &[0.025, 0.4, 0.0]).unwrap();
        assert_eq!(rows[0].regime, Regime::Povm);
        assert_abs_diff_eq!(rows[0].q_povm.unwrap(), 0.2, epsilon = 1e-15);
        assert_abs_diff_eq!(rows[0].q_sqm2, 0.2, epsilon = 1e-15);
        assert_eq!(rows[1].regime, Regime::Povm);
        assert_abs_diff_eq!(rows[1].q_povm.unwrap(), 0.8, epsilon = 1e-15);
        assert_abs_diff_eq!(rows[1].q_sqm1, 0.8, epsilon = 1e-15);
        assert_eq!(rows[2].regime, Regime::Sqm2Boundary);
        assert_eq!(rows[2].q_povm, None);
        assert_abs_diff_eq!(rows[2].q_opt, 0.1, epsilon = 1e-15);
    }

    #[test]
    fn curve_rejects_bad_inputs() {
        assert!(failure_curve(0.0, 0.25, &[0.1]).is_err());
        assert!(failure_curve(0.4, 1.5, &[0.1]).is_err());
        assert!(failure_curve(0.4, 0.25, &[-0.1]).is_err());
        assert!(failure_curve(0.4, 0.25, &[f64::NAN]).is_err());
    }

    #[test]
    fn orthogonal_target_is_perfectly_filtered() {
        let p = FilteringProblem::new(
            vec![
                StateVector::basis(3, 0),
                StateVector::basis(3, 1),
                StateVector::basis(3, 2),
            ],
            vec![0.3, 0.3, 0.4],
            0,
        )
        .unwrap();
        let r = optimal_filtering(&p).unwrap();
        assert_eq!(r.optimal_q, 0.0);
        assert_eq!(r.regime, Regime::Povm);
        assert!(r.per_state_failure.iter().all(|&q| q == 0.0));
    }

    fn grid_min(eta1: f64, f: f64, s: f64, points: usize) -> f64 {
        (0..points)
            .map(|j| f + (1.0 - f) * j as f64 / (points - 1) as f64)
            .map(|q| eta1 * q + s / q)
            .fold(f64::INFINITY, f64::min)
    }

    fn arb_point() -> impl Strategy<Value = (f64, f64, f64)> {
        (0.01f64..0.99, 0.05f64..1.0, 0.0f64..1.0).prop_map(|(e, f, u)| (e, f, u * (1.0 - e) * f))
    }

    fn arb_problem() -> impl Strategy<Value = FilteringProblem> {
        (2usize..6, 2usize..7).prop_flat_map(|(dim, n)| {
            (
                prop::collection::vec(prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), dim), n),
                prop::collection::vec(0.05f64..1.0, n),
            )
                .prop_filter_map("degenerate", |(raw, w)| {
                    let states: Option<Vec<_>> = raw
                        .into_iter()
                        .map(|v| {
                            StateVector::normalized(
                                v.into_iter()
                                    .map(|(a, b)| num_complex::Complex64::new(a, b))
                                    .collect(),
                            )
                            .ok()
                        })
                        .collect();
                    let t: f64 = w.iter().sum();
                    FilteringProblem::new(states?, w.iter().map(|x| x / t).collect(), 0).ok()
                })
        })
    }

    proptest! {
        #[test]
        fn closed_form_matches_grid((eta1, f, s) in arb_point()) {
            let row = failure_curve(eta1, f, &[s]).unwrap()[0];
            let g = grid_min(eta1, f, s, 20_001);
            // coarse grid; the acceptance suite runs the 10^6-point version
            prop_assert!(row.q_opt <= g + 1e-12);
            prop_assert!(g - row.q_opt < 1e-5);
        }

        #[test]
        fn continuity_at_boundaries(eta1 in 0.01f64..0.99, f in 0.05f64..1.0) {
            for b in [eta1 * f * f, eta1] {
                let rows = failure_curve(eta1, f, &[b - 1e-9, b + 1e-9]).unwrap();
                prop_assert!((rows[0].q_opt - rows[1].q_opt).abs() < 1e-7);
            }
        }

        #[test]
        fn povm_dominates_inside_window(eta1 in 0.01f64..0.99, f in 0.05f64..1.0, u in 0.0f64..=1.0) {
            let (lo, hi) = povm_window(eta1, f);
            let s = lo + u * (hi - lo);
            let row = failure_curve(eta1, f, &[s]).unwrap()[0];
            let qp = row.q_povm.unwrap();
            prop_assert!(qp <= row.q_sqm1 + 1e-12);
            prop_assert!(qp <= row.q_sqm2 + 1e-12);
            let edges = failure_curve(eta1, f, &[lo, hi]).unwrap();
            prop_assert!((edges[0].q_povm.unwrap() - edges[0].q_sqm2).abs() < 1e-12);
            prop_assert!((edges[1].q_povm.unwrap() - edges[1].q_sqm1).abs() < 1e-12);
        }

        #[test]
        fn report_invariants(p in arb_problem()) {
            let r = optimal_filtering(&p).unwrap();
            let avg: f64 = r.per_state_failure.iter().zip(p.priors()).map(|(q, e)| q * e).sum();
            prop_assert!((avg - r.optimal_q).abs() < 1e-12);
            prop_assert!(r.optimal_q <= r.q_sqm1.min(r.q_sqm2) + 1e-12);
            prop_assert!(r.optimal_q1 >= r.parallel_norm_f - 1e-15 && r.optimal_q1 <= 1.0);
            for (q, pp) in r.per_state_failure.iter().zip(&r.per_state_success) {
                prop_assert!((0.0..=1.0).contains(q));
                prop_assert!((q + pp - 1.0).abs() <= f64::EPSILON);
            }
            let overlaps = p.target_overlaps();
            for (q, o) in r.per_state_failure.iter().zip(&overlaps).skip(1) {
                let resid = r.optimal_q1 * q - o.norm_sqr();
                prop_assert!(resid.abs() < 1e-12);
            }
        }
    }
}
