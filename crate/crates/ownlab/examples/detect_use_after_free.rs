//! Execute a program that reads through a dangling box and watch the
//! interpreter stop at the use-after-free, printing the full trace in the
//! unrolled diagram form.
//!
//! ```sh
//! cargo run --example detect_use_after_free
//! ```

use ownlab::interp::{run, trace, Outcome, RunLimits};
use ownlab::lang::{parse_program, type_check};
use ownlab::render::{render_memory_trace, DocFormat, RenderOptions};

fn main() {
    let src = ownlab::corpus::source("use_after_free");
    println!("{src}");
    let tp = type_check(&parse_program(src).unwrap()).unwrap();

    let snaps = trace(&tp, &[], RunLimits::default()).unwrap();
    let doc = render_memory_trace(&snaps, &RenderOptions::default(), DocFormat::Text);
    print!("{doc}");

    match run(&tp, RunLimits::default()).unwrap() {
        Outcome::Ub { report, .. } => println!("\noutcome: {report}"),
        other => panic!("expected undefined behaviour, got {other:?}"),
    }
}
