//! Runs the quick verification suites and prints one line per check.
//! `softq verify --suite <name>` prints the full JSON report instead.
//!
//! ```text
//! cargo run --release --example verification [seed]
//! ```

use softq::harness::{run_verification_suite, Suite};

pub fn run(seed: u64) -> softq::Result<()> {
    for suite in [
        Suite::Identities,
        Suite::Reductions,
        Suite::TreebackupEquiv,
        Suite::IsUnbiased,
        Suite::LambdaEquiv,
        Suite::BehaviourIndependence,
    ] {
        let report = run_verification_suite(suite, seed)?;
        println!("{suite}: {}", if report.passed { "pass" } else { "FAIL" });
        for c in &report.checks {
            println!(
                "  {:<45} {:>6} cases  max error {:.3e}  (tol {:.0e})  {}",
                c.name,
                c.cases,
                c.max_error,
                c.tolerance,
                if c.passed { "ok" } else { "FAIL" }
            );
        }
    }
    Ok(())
}

#[allow(dead_code)]
fn main() {
    let seed = std::env::args()
        .nth(1)
        .and_then(|s| s.parse().ok())
        .unwrap_or(0);
    if let Err(e) = run(seed) {
        eprintln!("error: {e}");
        std::process::exit(1);
    }
}
