//! Expectation marks: the permissions an operation expects from its path
//! operands, inline in the listing. Satisfied expectations render as plain
//! letters (or a filled circle), unsatisfied ones as hollow glyphs.
//!
//! ```sh
//! cargo run --example expectation_marks
//! ```

use ownlab::facts::build_facts;
use ownlab::lang::{parse_program, type_check};
use ownlab::perms::{expectations, MarkStyle, PermAnalysis};
use ownlab::render::{render_annotated_listing, DocFormat, RenderOptions};
use std::collections::BTreeMap;

fn main() {
    let src = ownlab::corpus::source("loan_conflict");
    let tp = type_check(&parse_program(src).unwrap()).unwrap();
    let facts = build_facts(&tp);
    let analysis = PermAnalysis::compute(&tp, facts.get("main"));

    println!("letter marks (hollow = missing permission):");
    let marks = expectations(&analysis.needs, &analysis.states, &BTreeMap::new());
    let doc =
        render_annotated_listing(&tp.program, &marks, &RenderOptions::default(), DocFormat::Text);
    print!("{doc}");

    println!("\ncircle marks:");
    let mut overrides = BTreeMap::new();
    for (path, _, at) in &analysis.needs {
        overrides.insert((at.clone(), path.clone()), MarkStyle::Circle);
    }
    let marks = expectations(&analysis.needs, &analysis.states, &overrides);
    let doc =
        render_annotated_listing(&tp.program, &marks, &RenderOptions::default(), DocFormat::Text);
    print!("{doc}");
}
