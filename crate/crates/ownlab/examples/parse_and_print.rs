//! Parse a source program, show its canonical form, and demonstrate the
//! parse/print round trip.
//!
//! ```sh
//! cargo run --example parse_and_print
//! ```

use ownlab::lang::{parse_program, pretty_print, pretty_print_with, PrintOptions};

fn main() {
    let src = ownlab::corpus::source("loan_conflict");
    println!("input:\n{src}");

    let program = parse_program(src).expect("corpus programs parse");
    println!("canonical form (sorted declarations):");
    print!("{}", pretty_print_with(&program, PrintOptions { canonical: true }));

    let printed = pretty_print(&program);
    let reparsed = parse_program(&printed).expect("printed programs reparse");
    assert_eq!(program, reparsed);
    println!("\nround trip: parse(pretty_print(p)) == p holds");
}
