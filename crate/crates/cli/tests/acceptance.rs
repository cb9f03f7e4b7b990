//! One PASS/FAIL line per acceptance criterion, with the measured values
//! indented below. Known-unattainable sub-checks report FAIL (known) and do
//! not fail the target; any other failure does.

use std::process::ExitCode;

use loschmidt_cli::validate::{run_all, Status, KNOWN_UNATTAINABLE};

fn main() -> ExitCode {
    let report = run_all();
    print!("{}", report.text());
    let known: Vec<String> = report
        .criteria
        .iter()
        .filter(|c| c.status() == Status::KnownFail)
        .map(|c| c.id.to_string())
        .collect();
    println!(
        "acceptance: {} criteria, {} pass, known-unattainable failing: [{}] (registered: {})",
        report.criteria.len(),
        report.criteria.iter().filter(|c| c.status() == Status::Pass).count(),
        known.join(", "),
        KNOWN_UNATTAINABLE.len()
    );
    if report.ok() {
        ExitCode::SUCCESS
    } else {
        println!("unexpected failures: {}", report.unexpected_failures().join("; "));
        ExitCode::FAILURE
    }
}
