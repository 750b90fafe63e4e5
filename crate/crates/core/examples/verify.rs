//! Runs every closed-form cross-check with a small case count.

use metasep::experiments::suites::{run_suites, SuiteParams};
use metasep::risk::Workers;

fn main() -> metasep::Result<()> {
    let reports = run_suites(&[], &SuiteParams::new(20, 1), &Workers::available()?)?;
    for r in &reports {
        println!(
            "{:<5} {:<18} cases {:>5}  residual {:.2e}  tol {:.0e}",
            if r.passed { "ok" } else { "FAIL" },
            r.name,
            r.cases,
            r.max_residual,
            r.tolerance
        );
    }
    Ok(())
}
