//! Lifetime parameter errors: a reference flowing from one abstract
//! lifetime into another demands an outlives annotation. Without it the
//! access model reports a subset error and the permissions model a missing
//! flow permission; with it, both are clean.
//!
//! ```sh
//! cargo run --example lifetime_flows
//! ```

use ownlab::diffcheck::Verdicts;
use ownlab::facts::build_facts;
use ownlab::lang::{parse_program, type_check};

fn main() {
    for name in ["id_unannotated", "id_annotated"] {
        let src = ownlab::corpus::source(name);
        println!("── {name} ──\n{src}");
        let tp = type_check(&parse_program(src).unwrap()).unwrap();

        let facts = build_facts(&tp);
        for (a, b, path, at) in &facts.get("id").flows {
            println!("required flow: '{a} must outlive '{b} via `{path}` at {at}");
        }

        let v = Verdicts::compute(&tp);
        if v.subset.is_empty() && v.perm.is_empty() {
            println!("verdict: accepted\n");
        } else {
            for e in &v.subset {
                println!("verdict: {e}");
            }
            for e in &v.perm {
                println!("verdict: {e}");
            }
            println!();
        }
    }
}
