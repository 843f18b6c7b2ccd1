//! Writes an ensemble file, reads it back and analyzes it.

use qfilter::boolean::{boolean_problem, PriorMode, Variant};
use qfilter::io::{load_problem, EnsembleFile};
use qfilter::strategies::optimal_filtering;

fn main() -> qfilter::Result<()> {
    let problem = boolean_problem(3, 2, PriorMode::EqualSets, Variant::Basis)?;
    let file = EnsembleFile::from_problem(&problem);
    let path = std::env::temp_dir().join("qfilter-example-ensemble.json");
    file.write(&path)?;
    println!("wrote {}", path.display());

    let back = load_problem(&path)?;
    let a = optimal_filtering(&problem)?;
    let b = optimal_filtering(&back)?;
    println!("Q before {:.15}, after {:.15}", a.optimal_q, b.optimal_q);
    println!(
        "{}",
        serde_json::to_string_pretty(&b).expect("report serializes")
    );
    Ok(())
}
