use std::path::Path;

use mpf_core::verify::{run_checks, CheckOutcome};
use serde::Serialize;

use crate::args::VerifyArgs;
use crate::output::{print_json, write_json};
use crate::UsageError;

#[derive(Debug, Serialize)]
struct VerifySummary {
    command: &'static str,
    passed: bool,
    checks: Vec<CheckOutcome>,
}

/// Runs the suites, prints one line per suite to stderr and the JSON summary
/// to stdout. Returns whether everything passed.
pub fn run(args: &VerifyArgs, out: &Path) -> anyhow::Result<bool> {
    let known = mpf_core::verify::suite_names();
    if let Some(bad) = args.only.iter().find(|n| !known.contains(&n.as_str())) {
        anyhow::bail!(UsageError(format!(
            "unknown check '{bad}'; available: {}",
            known.join(", ")
        )));
    }
    let checks = run_checks(&args.only)?;
    for c in &checks {
        eprintln!("{c}");
    }
    let summary = VerifySummary {
        command: "verify",
        passed: checks.iter().all(|c| c.passed),
        checks,
    };
    write_json(out, "verify.json", &summary)?;
    print_json(&summary)?;
    Ok(summary.passed)
}
