//! Optimal strategy for a small qutrit ensemble.

use qfilter::ensemble::{decompose_target, FilteringProblem, StateVector};
use qfilter::strategies::optimal_filtering;

fn main() -> qfilter::Result<()> {
    let states = vec![
        StateVector::from_real(&[0.5, 0.75f64.sqrt(), 0.0])?,
        StateVector::from_real(&[1.0, 0.0, 0.0])?,
        StateVector::from_real(&[0.0, 0.0, 1.0])?,
    ];
    let problem = FilteringProblem::new(states, vec![0.4, 0.4, 0.2], 0)?;

    let parts = decompose_target(&problem);
    println!("f = |ψ∥|² = {:.6}", parts.parallel_norm_sq);

    let report = optimal_filtering(&problem)?;
    println!("S         = {:.6}", report.overlap_s);
    println!("Q_sqm1    = {:.6}", report.q_sqm1);
    println!("Q_sqm2    = {:.6}", report.q_sqm2);
    println!("Q_povm    = {:?}", report.q_povm);
    println!("regime    = {}", report.regime);
    println!("q1        = {:.6}", report.optimal_q1);
    println!("per state = {:?}", report.per_state_failure);
    Ok(())
}
