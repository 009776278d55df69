//! Runs the full property suite at the default seed and prints one
//! pass/fail line per acceptance criterion.

use toda_tri::verify::DEFAULT_SEED;
use toda_tri_suite::{acceptance_report, failing, lines};

#[test]
fn acceptance_criteria() {
    let report = acceptance_report(DEFAULT_SEED).expect("tolerance scale");
    println!();
    for line in lines(&report) {
        println!("{line}");
    }
    let failed = failing(&report);
    assert!(failed.is_empty(), "criteria failing: {failed:?}");
}
