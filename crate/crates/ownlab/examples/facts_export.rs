//! Dump the relational facts both checker models share, in the sorted
//! line-delimited shape used for golden-file diffing.
//!
//! ```sh
//! cargo run --example facts_export
//! ```

use ownlab::facts::build_facts;
use ownlab::lang::{parse_program, type_check};

fn main() {
    let src = ownlab::corpus::source("loan_conflict");
    println!("{src}");
    let tp = type_check(&parse_program(src).unwrap()).unwrap();
    print!("{}", build_facts(&tp).export());
}
