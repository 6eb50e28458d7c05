//! SVG renderer for memory traces. States are unrolled left to right; each
//! state column stacks its frames above the heap. Address values become
//! arrows from their slot to the target cell or tombstone, which is always
//! drawn in the same state. Self-contained: no external assets.

use super::{escape, Abstraction, DiagramDoc, DocFormat, RenderOptions, RENDERER_VERSION};
use crate::interp::{PointerTarget, Snapshot, ValueView};
use std::collections::BTreeMap;
use std::fmt::Write;

const ROW_H: i64 = 22;
const CELL_W: i64 = 150;
const HEAP_W: i64 = 120;
const COL_W: i64 = 330;
const PAD: i64 = 16;

fn value_inline(v: &ValueView, snap: &Snapshot, abstraction: Abstraction) -> String {
    match v {
        ValueView::Num(n) => n.to_string(),
        ValueView::Bool(b) => b.to_string(),
        ValueView::Pointer { target, dangling } => {
            let dot = if *dangling { "● ⟂".to_string() } else { "●".into() };
            if let (Abstraction::Expanded, PointerTarget::Heap { loc, .. }) = (abstraction, target)
            {
                if let Some(cell) = snap.heap.iter().find(|c| c.loc == *loc) {
                    if let Some(payload) = &cell.value {
                        return format!("{dot} {{{}}}", value_inline(payload, snap, abstraction));
                    }
                }
            }
            dot
        }
        ValueView::Tuple(vs) => {
            let parts: Vec<String> =
                vs.iter().map(|x| value_inline(x, snap, abstraction)).collect();
            format!("({})", parts.join(", "))
        }
    }
}

/// Collects the pointers of a value with their slot row, for arrow drawing.
fn pointers(v: &ValueView, out: &mut Vec<PointerTarget>) {
    match v {
        ValueView::Pointer { target, .. } => out.push(target.clone()),
        ValueView::Tuple(vs) => vs.iter().for_each(|v| pointers(v, out)),
        _ => {}
    }
}

pub fn render_memory_trace_svg(snaps: &[Snapshot], opts: &RenderOptions) -> DiagramDoc {
    let mut body = String::new();
    let mut max_y: i64 = 0;

    for (si, snap) in snaps.iter().enumerate() {
        let x0 = PAD + si as i64 * COL_W;
        let mut y = PAD + ROW_H;
        writeln!(
            body,
            "<text x=\"{x0}\" y=\"{}\" class=\"label\">state {}</text>",
            PAD + 8,
            escape(&snap.label)
        )
        .unwrap();

        // Slot coordinates for arrows: variable rows and heap cells.
        let mut var_pos: BTreeMap<(usize, String), (i64, i64)> = BTreeMap::new();
        let mut heap_pos: BTreeMap<u64, (i64, i64)> = BTreeMap::new();

        for frame in &snap.frames {
            writeln!(
                body,
                "<text x=\"{x0}\" y=\"{y}\" class=\"frame\">{} #{}</text>",
                escape(&frame.func),
                frame.depth
            )
            .unwrap();
            y += 6;
            let rows = frame.vars.len().max(1) as i64;
            writeln!(
                body,
                "<rect x=\"{x0}\" y=\"{y}\" width=\"{CELL_W}\" height=\"{}\" class=\"box\"/>",
                rows * ROW_H
            )
            .unwrap();
            for (vi, var) in frame.vars.iter().enumerate() {
                let ry = y + vi as i64 * ROW_H;
                let text_y = ry + ROW_H - 6;
                let style = if var.moved { " text-decoration=\"line-through\"" } else { "" };
                writeln!(
                    body,
                    "<text x=\"{}\" y=\"{text_y}\"{style}>{} = {}</text>",
                    x0 + 6,
                    escape(&var.name),
                    escape(&value_inline(&var.value, snap, opts.abstraction))
                )
                .unwrap();
                var_pos.insert((frame.depth, var.name.clone()), (x0 + CELL_W, ry + ROW_H / 2));
            }
            y += rows * ROW_H + 10;
        }

        // Heap column to the right of the frames.
        let hx = x0 + CELL_W + 40;
        let mut hy = PAD + ROW_H + 6;
        writeln!(body, "<text x=\"{hx}\" y=\"{}\" class=\"frame\">heap</text>", hy - 8).unwrap();
        for cell in &snap.heap {
            let class = if cell.freed { "tomb" } else { "box" };
            writeln!(
                body,
                "<rect x=\"{hx}\" y=\"{hy}\" width=\"{HEAP_W}\" height=\"{ROW_H}\" class=\"{class}\"/>"
            )
            .unwrap();
            let label = match &cell.value {
                Some(v) => format!("k{} = {}", cell.loc, value_inline(v, snap, opts.abstraction)),
                None => format!("k{} ⟂", cell.loc),
            };
            writeln!(body, "<text x=\"{}\" y=\"{}\">{}</text>", hx + 6, hy + ROW_H - 6, escape(&label))
                .unwrap();
            heap_pos.insert(cell.loc, (hx, hy + ROW_H / 2));
            hy += ROW_H + 6;
        }

        // Arrows from variable slots to their targets within this state.
        for frame in &snap.frames {
            for var in &frame.vars {
                let mut ptrs = Vec::new();
                pointers(&var.value, &mut ptrs);
                let Some(&(sx, sy)) = var_pos.get(&(frame.depth, var.name.clone())) else {
                    continue;
                };
                for p in ptrs {
                    let target = match &p {
                        PointerTarget::Heap { loc, .. } => heap_pos.get(loc).copied(),
                        PointerTarget::Frame { depth, var, .. } => {
                            var_pos.get(&(*depth, var.clone())).map(|(x, ty)| (*x - CELL_W, *ty))
                        }
                    };
                    if let Some((tx, ty)) = target {
                        let dangle = matches!(
                            p,
                            PointerTarget::Frame { stale: true, .. }
                        );
                        let class = if dangle { "arrow dangling" } else { "arrow" };
                        writeln!(
                            body,
                            "<line x1=\"{sx}\" y1=\"{sy}\" x2=\"{tx}\" y2=\"{ty}\" class=\"{class}\" marker-end=\"url(#arr)\"/>"
                        )
                        .unwrap();
                    }
                }
            }
        }

        if let Some(ub) = &snap.ub {
            let by = y.max(hy) + ROW_H;
            writeln!(
                body,
                "<text x=\"{x0}\" y=\"{by}\" class=\"ub\">‼ undefined behavior: {}</text>",
                escape(&ub.kind.to_string())
            )
            .unwrap();
            max_y = max_y.max(by);
        }
        max_y = max_y.max(y.max(hy));
    }

    let width = PAD * 2 + snaps.len() as i64 * COL_W;
    let height = max_y + PAD + ROW_H;

    let mut facts = String::new();
    for snap in snaps {
        for fact in snap.facts() {
            writeln!(facts, "fact: {}", escape(&fact)).unwrap();
        }
    }

    let content = format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{width}\" height=\"{height}\" viewBox=\"0 0 {width} {height}\">\n\
         <!-- {RENDERER_VERSION} -->\n\
         <desc>\n{facts}</desc>\n\
         <defs><marker id=\"arr\" markerWidth=\"8\" markerHeight=\"8\" refX=\"6\" refY=\"3\" orient=\"auto\"><path d=\"M0,0 L6,3 L0,6 z\"/></marker></defs>\n\
         <style>\n\
         text {{ font: 12px monospace; }}\n\
         .label {{ font-weight: bold; }}\n\
         .frame {{ fill: #444; }}\n\
         .box {{ fill: none; stroke: #333; }}\n\
         .tomb {{ fill: #eee; stroke: #999; stroke-dasharray: 3 2; }}\n\
         .arrow {{ stroke: #06c; fill: none; }}\n\
         .dangling {{ stroke: #c00; stroke-dasharray: 4 2; }}\n\
         .ub {{ fill: #c00; font-weight: bold; }}\n\
         </style>\n{body}</svg>\n"
    );
    DiagramDoc::new(DocFormat::Svg, content)
}
