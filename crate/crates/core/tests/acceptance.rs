//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Exits nonzero if any criterion fails, except one whose claim is
//! contradicted by direct evaluation; that one is still printed as FAIL with
//! the counterexample.

use progressftx::selftest::{run_all, Status};

fn main() {
    let reports = run_all();
    for r in &reports {
        println!("{}", r.line());
    }
    let passed = reports.iter().filter(|r| r.status == Status::Pass).count();
    let disproved: Vec<u8> = reports.iter().filter(|r| r.status == Status::Disproved).map(|r| r.id).collect();
    let failed: Vec<u8> = reports.iter().filter(|r| r.status == Status::Fail).map(|r| r.id).collect();
    println!(
        "{passed}/{} criteria pass; failing as stated (claim disproved): {disproved:?}; failing: {failed:?}",
        reports.len()
    );
    if !failed.is_empty() {
        std::process::exit(1);
    }
}
