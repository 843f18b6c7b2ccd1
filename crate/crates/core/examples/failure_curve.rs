//! Failure probability of each strategy as the average overlap grows, at
//! η₁ = 0.4 and f = 0.25. Pipe the output into any plotting tool.

use qfilter::io::{sweep_grid, write_sweep_csv};
use qfilter::strategies::{failure_curve, povm_window};

fn main() -> qfilter::Result<()> {
    let (eta1, f) = (0.4, 0.25);
    let (lo, hi) = povm_window(eta1, f);
    eprintln!("POVM is optimal for {lo} <= S <= {hi}");
    let rows = failure_curve(eta1, f, &sweep_grid(0.0, 0.6, 25)?)?;
    write_sweep_csv(&rows, &mut std::io::stdout().lock()).expect("stdout");
    Ok(())
}
