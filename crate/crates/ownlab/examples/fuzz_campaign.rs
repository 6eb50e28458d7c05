//! A small differential campaign: generate programs, check that access
//! errors always come with permission errors, that accepted programs run
//! without undefined behaviour, and that the checker pipeline agrees with
//! the brute-force oracle.
//!
//! ```sh
//! cargo run --example fuzz_campaign
//! ```

use ownlab::diffcheck::{campaign, FuzzConfig, Property};

fn main() {
    let report = campaign(
        &FuzzConfig::monomorphic(2024),
        &[Property::Theorem, Property::Soundness],
        500,
    );
    print!("{}", report.human_summary());

    println!("\nsample incompleteness witness (rejected yet terminating):");
    if let Some(entry) = report.incompleteness_catalog.first() {
        println!("seed {}:\n{}", entry.seed, entry.program);
    }

    let report = campaign(&FuzzConfig::oracle_sized(2024), &[Property::OracleEquivalence], 200);
    print!("{}", report.human_summary());
    assert!(report.violations.is_empty());
}
