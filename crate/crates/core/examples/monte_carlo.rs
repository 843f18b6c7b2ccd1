//! Samples every strategy on the n = 2, k = 2 Boolean problem.

use qfilter::boolean::{boolean_problem, PriorMode, Variant};
use qfilter::neumark::{scheme_for, SchemeKind};
use qfilter::simulation::{aggregate_failure, analytic_failure, simulate};

fn main() -> qfilter::Result<()> {
    let problem = boolean_problem(2, 2, PriorMode::EqualStatesBasis, Variant::Basis)?;
    for kind in [SchemeKind::Sqm1, SchemeKind::Sqm2, SchemeKind::Povm] {
        let scheme = scheme_for(&problem, kind, None)?;
        let stats = simulate(&scheme, &problem, 100_000, 42)?;
        println!(
            "{:<5} empirical Q {:.5}  analytic Q {:.5}  misidentified {}",
            kind.as_str(),
            aggregate_failure(&stats, problem.priors()),
            analytic_failure(&stats, problem.priors()),
            stats.misidentifications()
        );
    }
    Ok(())
}
