//! Builds the unitary that realizes the optimal POVM and checks it.

use qfilter::ensemble::{FilteringProblem, StateVector};
use qfilter::neumark::{failure_allocations, numerical_rank, povm_scheme, success_gram, Outcome};
use qfilter::strategies::optimal_filtering;

fn main() -> qfilter::Result<()> {
    let states = vec![
        StateVector::from_real(&[1.0, 0.0, 0.0])?,
        StateVector::from_real(&[0.6, 0.8, 0.0])?,
        StateVector::from_real(&[0.6, 0.0, 0.8])?,
    ];
    let problem = FilteringProblem::new(states, vec![0.5, 0.25, 0.25], 0)?;
    let q1 = optimal_filtering(&problem)?.optimal_q1;

    let alloc = failure_allocations(&problem, q1)?;
    let gram = success_gram(&problem, &alloc);
    println!("q = {:?}", alloc.failure);
    println!("success Gram min eigenvalue {:.3e}", gram.min_eigenvalue);

    let (model, scheme) = povm_scheme(&problem, Some(q1))?;
    println!(
        "U is {0}x{0}, ‖U†U − I‖ = {1:.2e}",
        model.unitary().nrows(),
        model.unitarity_defect()
    );
    println!("completeness defect {:.2e}", scheme.completeness_defect());
    let fail = scheme.element(Outcome::Fail).expect("fail element");
    println!("rank of the failure operator: {}", numerical_rank(fail));
    for (i, s) in problem.states().iter().enumerate() {
        let p = Outcome::ALL.map(|o| scheme.expectation(o, s.amplitudes()).max(0.0));
        println!(
            "state {i}: target {:.4} complement {:.4} fail {:.4}",
            p[0], p[1], p[2]
        );
    }
    Ok(())
}
