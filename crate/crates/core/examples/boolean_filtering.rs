//! How much a generalized measurement gains when telling the biased pair
//! W_k apart from balanced functions, with one state per Walsh function.

use qfilter::boolean::{
    boolean_problem, classical_query_count, fk_closed_form, povm_advantage, PriorMode, Variant,
};
use qfilter::strategies::optimal_filtering;

fn main() -> qfilter::Result<()> {
    let n = 8;
    println!(" k      f_k   regime          Q_opt   POVM/SQM  4/2^(k/2)  classical");
    for k in 2..=n {
        let problem = boolean_problem(n, k, PriorMode::EqualStatesBasis, Variant::Basis)?;
        let report = optimal_filtering(&problem)?;
        let adv = povm_advantage(n, k)?;
        let queries = classical_query_count(n, k)?;
        println!(
            "{k:>2} {:>8.5}   {:<13} {:>8.5} {:>10.5} {:>10.5} {:>10}",
            fk_closed_form(k),
            report.regime.as_str(),
            report.optimal_q,
            adv.exact_ratio,
            adv.approx_ratio,
            queries.wk_vs_balanced
        );
    }
    Ok(())
}
