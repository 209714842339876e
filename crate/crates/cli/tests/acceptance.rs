//! Runs every acceptance criterion at its stated tolerance and prints one
//! pass/fail line per criterion. Uses its own harness so the lines are never
//! captured.

use std::process::ExitCode;

use roughinc_cli::acceptance::{check, criteria, DETERMINISM_ID};

fn main() -> ExitCode {
    let dir = tempfile::tempdir().expect("temporary directory");
    let records = match check(dir.path(), &[], |r| println!("{}", r.line())) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("acceptance suite did not run: {e}");
            return ExitCode::FAILURE;
        }
    };
    assert_eq!(records.len(), criteria().len() + 1);
    assert_eq!(records.last().unwrap().id, DETERMINISM_ID);
    let failed = records.iter().filter(|r| !r.pass()).count();
    println!("acceptance: {} passed, {failed} failed", records.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
