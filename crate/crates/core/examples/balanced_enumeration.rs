//! Checks the average overlap against every balanced function, not just a
//! basis.

use qfilter::boolean::{average_overlap_basis, average_overlap_full, enumerate_balanced};

fn main() -> qfilter::Result<()> {
    for n in 1..=4 {
        println!(
            "n = {n}: {} balanced functions",
            enumerate_balanced(n)?.len()
        );
    }
    for (n, k) in [(2, 2), (3, 2), (3, 3), (4, 2), (4, 4)] {
        let full = average_overlap_full(n, k, 0.1)?;
        let basis = average_overlap_basis(n, k, 0.1)?;
        println!(
            "n = {n}, k = {k}: S closed form {:.12}, basis {:.12}, all balanced {:.12}",
            full.closed_form, basis.direct, full.direct
        );
    }
    Ok(())
}
