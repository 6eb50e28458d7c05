//! Checker conservatism at runtime: the loan-conflict program is rejected
//! by both static models, yet its execution is benign — nothing is ever
//! deallocated, so the read through the invalidated loan simply observes
//! the mutation.
//!
//! ```sh
//! cargo run --example counterfactual_run
//! ```

use ownlab::diffcheck::Verdicts;
use ownlab::interp::{run, Outcome, RunLimits};
use ownlab::lang::{parse_program, type_check};

fn main() {
    let src = ownlab::corpus::source("loan_conflict");
    println!("{src}");
    let tp = type_check(&parse_program(src).unwrap()).unwrap();

    let v = Verdicts::compute(&tp);
    println!("static verdicts:");
    for e in &v.access {
        println!("  {e}");
    }
    for e in &v.perm {
        println!("  {e}");
    }

    match run(&tp, RunLimits::default()).unwrap() {
        Outcome::Terminated { value, steps } => {
            println!("\nexecuted anyway: terminated with {value} after {steps} steps");
            println!("(rejected, yet no undefined behaviour occurs on this trace)");
        }
        other => panic!("expected clean termination, got {other:?}"),
    }
}
