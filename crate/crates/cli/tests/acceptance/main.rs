//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails. Pass criterion numbers as arguments to
//! run a subset. Set `WFOPT_BLESS=1` to rewrite the golden YAML files.

mod criteria;
mod gen;
mod oracle;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::ExitCode;
use std::time::Instant;

type Check = fn() -> Result<String, String>;

fn main() -> ExitCode {
    let checks: [(u32, &str, Check); 9] = [
        (1, "graph math matches brute-force oracles", criteria::graph_math),
        (2, "laplacian identity and importance values", criteria::laplacian_and_importance),
        (3, "admission replay and capacity invariant", criteria::admission),
        (4, "policy ordering and near-optimal importance", criteria::policy_ordering),
        (5, "splitter partitions within budget", criteria::splitter),
        (6, "emitter golden files and parse-back", criteria::emitter),
        (7, "calibration loop and model-selection synthesis", criteria::synthesis),
        (8, "hyperparameter selection", criteria::tuning),
        (9, "round-trip and command determinism", criteria::determinism),
    ];
    let only: Vec<u32> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut failed = 0;
    for (n, title, check) in checks {
        if !only.is_empty() && !only.contains(&n) {
            continue;
        }
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panic".into());
            Err(format!("panicked: {msg}"))
        });
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS criterion {n}: {title} [{detail}] ({secs:.2}s)"),
            Err(why) => {
                failed += 1;
                println!("FAIL criterion {n}: {title} [{why}] ({secs:.2}s)");
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} criterion/criteria failed");
        ExitCode::FAILURE
    }
}
