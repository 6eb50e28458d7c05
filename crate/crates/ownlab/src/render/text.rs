//! Text renderer for memory traces. States are unrolled in time order, one
//! block per snapshot: frame tables, heap cells with tombstones, and a UB
//! banner. Rows that changed since the previous state are marked with `*`,
//! and the canonical fact list is appended as comment lines for the
//! logical-content parity check against the SVG rendering.

use super::{Abstraction, DiagramDoc, DocFormat, RenderOptions, RENDERER_VERSION};
use crate::interp::{PointerTarget, Snapshot, ValueView};
use std::fmt::Write;

fn value_text(v: &ValueView, snap: &Snapshot, abstraction: Abstraction) -> String {
    match v {
        ValueView::Num(n) => n.to_string(),
        ValueView::Bool(b) => b.to_string(),
        ValueView::Pointer { target, .. } => {
            let arrow = v.label().replace("->", "→ ");
            // Expanded display spells out the boxed payload on the pointer;
            // abstracted display leaves just the arrow into the heap.
            if let (Abstraction::Expanded, PointerTarget::Heap { loc, .. }) = (abstraction, target)
            {
                if let Some(cell) = snap.heap.iter().find(|c| c.loc == *loc) {
                    if let Some(payload) = &cell.value {
                        return format!("{arrow} {{{}}}", value_text(payload, snap, abstraction));
                    }
                }
            }
            arrow
        }
        ValueView::Tuple(vs) => {
            let parts: Vec<String> = vs.iter().map(|v| value_text(v, snap, abstraction)).collect();
            format!("({})", parts.join(", "))
        }
    }
}

pub fn render_memory_trace_text(snaps: &[Snapshot], opts: &RenderOptions) -> DiagramDoc {
    let mut out = String::new();
    writeln!(out, "# memory trace ({RENDERER_VERSION})").unwrap();

    let mut prev: Option<&Snapshot> = None;
    for snap in snaps {
        writeln!(out, "\n== state {} ==", snap.label).unwrap();
        for frame in &snap.frames {
            writeln!(out, "frame {} {} (at {})", frame.depth, frame.func, frame.pc).unwrap();
            if frame.vars.is_empty() {
                writeln!(out, "  (no variables)").unwrap();
            }
            for var in &frame.vars {
                let changed = prev
                    .and_then(|p| p.frames.get(frame.depth))
                    .and_then(|pf| pf.vars.iter().find(|v| v.name == var.name))
                    .map(|pv| pv != var)
                    .unwrap_or(true);
                let marker = if changed { "*" } else { " " };
                let moved = if var.moved { " (moved)" } else { "" };
                writeln!(out, " {marker}{} = {}{moved}", var.name, value_text(&var.value, snap, opts.abstraction))
                    .unwrap();
            }
        }
        writeln!(out, "heap").unwrap();
        if snap.heap.is_empty() {
            writeln!(out, "  (empty)").unwrap();
        }
        for cell in &snap.heap {
            let changed = prev
                .and_then(|p| p.heap.iter().find(|c| c.loc == cell.loc))
                .map(|pc| pc != cell)
                .unwrap_or(true);
            let marker = if changed { "*" } else { " " };
            match &cell.value {
                Some(v) => {
                    writeln!(out, " {marker}k{} = {}", cell.loc, value_text(v, snap, opts.abstraction))
                        .unwrap()
                }
                None => writeln!(out, " {marker}k{} = ⟂ freed", cell.loc).unwrap(),
            }
        }
        if let Some(ub) = &snap.ub {
            writeln!(out, "‼ undefined behavior: {} via `{}`", ub.kind, ub.path).unwrap();
        }
        prev = Some(snap);
    }

    out.push_str("\n# facts\n");
    for snap in snaps {
        for fact in snap.facts() {
            writeln!(out, "# fact: {fact}").unwrap();
        }
    }
    DiagramDoc::new(DocFormat::Text, out)
}
