//! Permission steps: how each instruction changes the permission state.
//! The box-borrow program shows the full arc — birth with R, W, O; the
//! borrow removing W and O while the borrower comes alive; and the
//! death/regain pair once the borrower's live range ends.
//!
//! ```sh
//! cargo run --example permission_steps
//! ```

use ownlab::facts::build_facts;
use ownlab::lang::{parse_program, type_check};
use ownlab::perms::{steps, PermAnalysis};
use ownlab::render::{render_perm_table, DocFormat, RenderOptions};

fn main() {
    let src = ownlab::corpus::source("box_borrow_steps");
    println!("{src}");
    let tp = type_check(&parse_program(src).unwrap()).unwrap();

    let facts = build_facts(&tp);
    let analysis = PermAnalysis::compute(&tp, facts.get("main"));
    let all = steps(tp.function("main"), &analysis.states, None).unwrap();

    let doc = render_perm_table(&all, &RenderOptions::default(), DocFormat::Text);
    print!("{doc}");

    // Branch-spanning steps attach to CFG edges instead of instructions.
    let tp = type_check(&parse_program(ownlab::corpus::source("branch_disjoint")).unwrap()).unwrap();
    let facts = build_facts(&tp);
    let analysis = PermAnalysis::compute(&tp, facts.get("main"));
    let all = steps(tp.function("main"), &analysis.states, None).unwrap();
    println!("\nbranch-disjoint program (note the edge-labeled regain):");
    let doc = render_perm_table(&all, &RenderOptions::default(), DocFormat::Text);
    print!("{doc}");
}
