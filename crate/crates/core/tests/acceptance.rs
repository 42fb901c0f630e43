use std::io::Write;

use pdcrys::selftest::{run, CRITERIA};

const SEED: u64 = 2024;

#[test]
fn acceptance() {
    let mut failed = Vec::new();
    for k in 1..=CRITERIA.len() {
        let r = run(k, SEED);
        let _ = writeln!(
            std::io::stdout(),
            "criterion {}: {} ({}, {:.2?} of {:?}) {}",
            r.number,
            if r.pass { "PASS" } else { "FAIL" },
            r.name,
            r.elapsed,
            r.budget,
            r.detail
        );
        if !r.pass {
            failed.push(k);
        }
    }
    assert!(failed.is_empty(), "failing criteria: {failed:?}");
}
