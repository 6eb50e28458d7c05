//! At runtime a move is just a copy: after `y = x` both variables hold the
//! same heap address, so dropping both frees the allocation twice. The
//! static invalidation of `x` is display-only — the final snapshot strikes
//! it through — while the dynamic model reports the double free.
//!
//! ```sh
//! cargo run --example move_is_a_copy
//! ```

use ownlab::interp::{run, Outcome, RunLimits, UbKind};
use ownlab::lang::{parse_program, type_check};
use ownlab::render::{render_memory_trace, DocFormat, RenderOptions};

fn main() {
    let src = ownlab::corpus::source("double_free_move");
    println!("{src}");
    let tp = type_check(&parse_program(src).unwrap()).unwrap();

    match run(&tp, RunLimits::default()).unwrap() {
        Outcome::Ub { report, trace } => {
            assert_eq!(report.kind, UbKind::DoubleFree);
            let doc = render_memory_trace(&trace, &RenderOptions::default(), DocFormat::Text);
            print!("{doc}");
            println!("\noutcome: {report}");
        }
        other => panic!("expected a double free, got {other:?}"),
    }
}
