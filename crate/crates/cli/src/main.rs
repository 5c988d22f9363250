use std::process::ExitCode;

use clap::Parser;
use ginoe_lab::{resolve, run, Cli};

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let outcome = resolve(&cli).and_then(|cfg| run(&cfg));
    match outcome {
        Ok(m) => {
            for c in &m.checks {
                let tag = if c.passed { "PASS" } else { "FAIL" };
                eprintln!("{tag} {}: measured {:e}, tolerance {:e}", c.name, c.measured, c.tolerance);
            }
            if m.passed {
                ExitCode::SUCCESS
            } else {
                let failed: Vec<&str> = m.failed_checks().map(|c| c.name.as_str()).collect();
                eprintln!("failed checks: {}", failed.join(", "));
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("ginoe-lab: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
