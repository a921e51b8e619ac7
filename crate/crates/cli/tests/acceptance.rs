//! Runs acceptance criteria 1–10 and prints one line per criterion.
//! Exits nonzero if any criterion fails.

use std::process::ExitCode;

use kerr_qsd_cli::executor::Threads;
use kerr_qsd_cli::validate::{run_all, CRITERIA};

fn main() -> ExitCode {
    let ids: Vec<u8> = match std::env::var("KERR_QSD_CRITERIA") {
        Ok(list) => list.split(',').filter_map(|s| s.trim().parse().ok()).collect(),
        Err(_) => CRITERIA.iter().map(|c| c.0).collect(),
    };
    let exec = Threads::from_env();
    println!("acceptance: running criteria {ids:?} on {} worker(s)", exec.workers());
    let outcomes = run_all(&ids, &exec, |o| println!("{}", o.line()));
    let failed: Vec<u8> = outcomes.iter().filter(|o| !o.passed).map(|o| o.id).collect();
    println!("acceptance: {} passed, {} failed {failed:?}", outcomes.len() - failed.len(), failed.len());
    if failed.is_empty() {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
