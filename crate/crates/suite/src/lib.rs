//! Acceptance harness: runs the seeded verification suite and renders one
//! line per criterion.

use toda_tri::verify::{run, VerifyConfig, VerifyReport};
use toda_tri::Result;

/// Runs the suite at `seed` with the tolerance scale taken from the environment.
pub fn acceptance_report(seed: u64) -> Result<VerifyReport> {
    Ok(run(&VerifyConfig::from_env(seed, None)?))
}

pub fn lines(report: &VerifyReport) -> Vec<String> {
    report.criteria.iter().map(|c| c.line()).collect()
}

/// Ids of the criteria that did not pass.
pub fn failing(report: &VerifyReport) -> Vec<u32> {
    report.criteria.iter().filter(|c| !c.passed).map(|c| c.id).collect()
}
