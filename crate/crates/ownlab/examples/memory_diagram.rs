//! Emit self-contained SVG and HTML memory diagrams for a program whose
//! callee reads a boxed value through a shared reference — the diagram
//! shows the callee frame pointing back into the caller's frame and into
//! the heap.
//!
//! ```sh
//! cargo run --example memory_diagram
//! ```

use ownlab::interp::{trace, RunLimits};
use ownlab::lang::{parse_program, type_check};
use ownlab::render::{render_memory_trace, DocFormat, RenderOptions};

fn main() {
    let src = ownlab::corpus::source("call_shared_read");
    let tp = type_check(&parse_program(src).unwrap()).unwrap();
    let snaps = trace(&tp, &[], RunLimits::default()).unwrap();

    let out = std::env::temp_dir().join("ownlab_memory_diagram");
    std::fs::create_dir_all(&out).unwrap();
    for format in [DocFormat::Text, DocFormat::Svg, DocFormat::Html] {
        let doc = render_memory_trace(&snaps, &RenderOptions::default(), format);
        let path = out.join(format!("call_shared_read.{}", doc.format.extension()));
        std::fs::write(&path, &doc.content).unwrap();
        println!(
            "wrote {} ({} bytes, content hash {})",
            path.display(),
            doc.content.len(),
            doc.provenance.content_hash
        );
    }
    println!("\nopen the .html file in a browser for the embedded diagram");
}
