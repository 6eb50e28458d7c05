//! Deterministic diagram emitters: memory-trace diagrams from interpreter
//! snapshots, permission tables from step sequences, and annotated listings
//! with expectation marks, as plain text, SVG, and HTML.
//!
//! Identical inputs and options produce byte-identical documents. The text
//! and SVG renderings of one model carry the same logical facts: every
//! fact string of the model appears verbatim in both outputs (SVG carries
//! them in its `desc` metadata alongside the drawn content).

mod listing;
mod svg;
mod tables;
mod text;

pub use listing::render_annotated_listing;
pub use svg::render_memory_trace_svg;
pub use tables::render_perm_table;
pub use text::render_memory_trace_text;

use crate::interp::Snapshot;
use crate::lang::Program;
use crate::perms::{ExpectationMark, PermStep};
use std::fmt;

pub const RENDERER_VERSION: &str = "ownlab-render/1";

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DocFormat {
    Text,
    Svg,
    Html,
}

impl DocFormat {
    pub fn extension(&self) -> &'static str {
        match self {
            DocFormat::Text => "txt",
            DocFormat::Svg => "svg",
            DocFormat::Html => "html",
        }
    }
}

/// How deeply composite values are displayed in memory diagrams.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Abstraction {
    /// Boxes show as plain pointers into the heap.
    #[default]
    Abstracted,
    /// Boxed payload structure is spelled out on the cell.
    Expanded,
}

/// Icon glyphs for permission-step causes.
#[derive(Clone, Debug)]
pub struct IconSet {
    pub birth: char,
    pub borrow_start: char,
    pub death: char,
    pub regain: char,
    pub moved_out: char,
}

impl Default for IconSet {
    fn default() -> Self {
        IconSet { birth: '↑', borrow_start: '→', death: '↓', regain: '⟲', moved_out: '✕' }
    }
}

#[derive(Clone, Debug, Default)]
pub struct RenderOptions {
    pub abstraction: Abstraction,
    pub icons: IconSet,
    pub color: bool,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Provenance {
    pub content_hash: String,
    pub renderer: &'static str,
}

/// A finished document: deterministic bytes plus provenance.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DiagramDoc {
    pub format: DocFormat,
    pub content: String,
    pub provenance: Provenance,
}

impl DiagramDoc {
    pub fn new(format: DocFormat, content: String) -> Self {
        let provenance =
            Provenance { content_hash: fnv1a_hex(content.as_bytes()), renderer: RENDERER_VERSION };
        DiagramDoc { format, content, provenance }
    }
}

impl fmt::Display for DiagramDoc {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.content)
    }
}

/// FNV-1a, stable across platforms and releases; the content hash in
/// provenance lines and golden files.
pub fn fnv1a_hex(bytes: &[u8]) -> String {
    let mut hash: u64 = 0xcbf2_9ce4_8422_2325;
    for b in bytes {
        hash ^= *b as u64;
        hash = hash.wrapping_mul(0x100_0000_01b3);
    }
    format!("{hash:016x}")
}

/// Renders a memory trace in the requested format. The HTML document embeds
/// the SVG above a `pre` rendering of the text form.
pub fn render_memory_trace(snaps: &[Snapshot], opts: &RenderOptions, format: DocFormat) -> DiagramDoc {
    assert!(!snaps.is_empty(), "render_memory_trace needs at least one snapshot");
    match format {
        DocFormat::Text => render_memory_trace_text(snaps, opts),
        DocFormat::Svg => render_memory_trace_svg(snaps, opts),
        DocFormat::Html => {
            let svg = render_memory_trace_svg(snaps, opts);
            let text = render_memory_trace_text(snaps, opts);
            let content = html_wrap("memory trace", &svg.content, &text.content);
            DiagramDoc::new(DocFormat::Html, content)
        }
    }
}

/// Wraps pre-rendered parts into a self-contained HTML document.
pub fn html_wrap(title: &str, svg: &str, text: &str) -> String {
    format!(
        "<!DOCTYPE html>\n<html>\n<head><meta charset=\"utf-8\"><title>{}</title></head>\n<body>\n{}\n<pre>\n{}</pre>\n</body>\n</html>\n",
        escape(title),
        svg,
        escape(text)
    )
}

pub(crate) fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Annotated listing and permission tables keep their model types close by
/// for callers that render all three artifact kinds.
pub struct RenderInputs<'a> {
    pub program: &'a Program,
    pub steps: &'a [PermStep],
    pub marks: &'a [ExpectationMark],
}

#[cfg(test)]
mod tests;
