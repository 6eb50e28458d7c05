//! Run both borrow-check models over the whole corpus and show how their
//! verdicts relate: everything the access model rejects, the permissions
//! model rejects too.
//!
//! ```sh
//! cargo run --example check_borrow_models
//! ```

use ownlab::diffcheck::Verdicts;
use ownlab::lang::{parse_program, type_check};

fn main() {
    println!("{:<20} {:>8} {:>8} {:>12}", "program", "access", "subset", "permission");
    for (name, src) in ownlab::corpus::ALL {
        let tp = type_check(&parse_program(src).unwrap()).unwrap();
        let v = Verdicts::compute(&tp);
        println!(
            "{:<20} {:>8} {:>8} {:>12}",
            name,
            v.access.len(),
            v.subset.len(),
            v.perm.len()
        );
        assert!(
            v.access.is_empty() || !v.perm.is_empty(),
            "an access error always comes with a permission error"
        );
    }
    println!("\ninvariant held: access errors imply permission errors on every program");
}
