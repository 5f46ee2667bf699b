//! Runs every acceptance criterion and prints one verdict line each.
//!
//! Lines go straight to stderr so they show even when libtest captures output.

use std::io::Write;

use ecf_core::acceptance::{Runner, Suite};

#[test]
fn all_criteria() {
    let runner = Runner::new();
    // libtest prints the test name without a newline first.
    let _ = writeln!(std::io::stderr());
    let reports = runner.run_suite(Suite::Full, |r| {
        let _ = writeln!(std::io::stderr(), "{r}");
    });
    let failed: Vec<u8> = reports.iter().filter(|r| !r.passed).map(|r| r.id).collect();
    let _ = writeln!(std::io::stderr(), "acceptance: {} of {} passed", reports.len() - failed.len(), reports.len());
    assert!(failed.is_empty(), "failing criteria: {failed:?}");
}
