//! Runs the built-in checks against brute-force references.

use tonetrim::selfcheck::{run_selfcheck, SelfCheckOptions};

fn main() -> tonetrim::Result<()> {
    let report = run_selfcheck(&SelfCheckOptions::default())?;
    for c in &report.checks {
        println!("{} {}: {}", if c.passed { "ok  " } else { "FAIL" }, c.name, c.detail);
    }
    println!("{:.2} s", report.elapsed.as_secs_f64());
    if !report.passed() {
        std::process::exit(1);
    }
    Ok(())
}
