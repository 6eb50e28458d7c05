//! Permission tables in the style of the step diagrams: one table per
//! step showing each path's gained and lost permissions with a cause icon.
//! Steps caused by a branch are labeled with the edge instead of an
//! instruction.

use super::{escape, html_wrap, DiagramDoc, DocFormat, RenderOptions, RENDERER_VERSION};
use crate::perms::{PermStep, StepCause};
use std::fmt::Write;

fn icon(opts: &RenderOptions, cause: StepCause) -> char {
    match cause {
        StepCause::Birth => opts.icons.birth,
        StepCause::BorrowStart => opts.icons.borrow_start,
        StepCause::Death => opts.icons.death,
        StepCause::Regain => opts.icons.regain,
        StepCause::MovedOut => opts.icons.moved_out,
    }
}

fn step_title(step: &PermStep) -> String {
    if step.branch_edge {
        format!("edge {} -> {}", step.from, step.to)
    } else {
        format!("after {}", step.from)
    }
}

fn change_cells(step: &PermStep, opts: &RenderOptions) -> Vec<(String, String, char)> {
    step.changes
        .iter()
        .map(|(path, change)| {
            let mut cell = String::new();
            for p in &change.gains {
                write!(cell, "+{p} ").unwrap();
            }
            for p in &change.losses {
                write!(cell, "-{p} ").unwrap();
            }
            (path.to_string(), cell.trim_end().to_string(), icon(opts, change.cause))
        })
        .collect()
}

/// Renders the step tables of one function.
pub fn render_perm_table(steps: &[PermStep], opts: &RenderOptions, format: DocFormat) -> DiagramDoc {
    match format {
        DocFormat::Text => {
            let mut out = String::new();
            writeln!(out, "# permission steps ({RENDERER_VERSION})").unwrap();
            for step in steps {
                if step.is_empty() {
                    continue;
                }
                writeln!(out, "\n{}", step_title(step)).unwrap();
                let cells = change_cells(step, opts);
                let width = cells.iter().map(|(p, _, _)| p.len()).max().unwrap_or(4).max(4);
                for (path, change, icon) in cells {
                    writeln!(out, "  {path:width$} | {change} {icon}").unwrap();
                }
            }
            DiagramDoc::new(DocFormat::Text, out)
        }
        DocFormat::Svg => {
            let mut body = String::new();
            let row_h = 20i64;
            let mut y = 28i64;
            let mut width = 260i64;
            for step in steps {
                if step.is_empty() {
                    continue;
                }
                writeln!(
                    body,
                    "<text x=\"12\" y=\"{y}\" class=\"title\">{}</text>",
                    escape(&step_title(step))
                )
                .unwrap();
                y += 6;
                let cells = change_cells(step, opts);
                let h = cells.len() as i64 * row_h;
                writeln!(body, "<rect x=\"12\" y=\"{y}\" width=\"300\" height=\"{h}\" class=\"box\"/>")
                    .unwrap();
                for (path, change, icon) in cells {
                    y += row_h;
                    writeln!(
                        body,
                        "<text x=\"18\" y=\"{}\">{}</text><text x=\"150\" y=\"{}\">{} {}</text>",
                        y - 6,
                        escape(&path),
                        y - 6,
                        escape(&change),
                        icon
                    )
                    .unwrap();
                }
                y += row_h;
                width = width.max(330);
            }
            let height = y + 12;
            let content = format!(
                "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{width}\" height=\"{height}\" viewBox=\"0 0 {width} {height}\">\n\
                 <!-- {RENDERER_VERSION} -->\n\
                 <style>text {{ font: 12px monospace; }} .title {{ font-weight: bold; }} .box {{ fill: none; stroke: #333; }}</style>\n\
                 {body}</svg>\n"
            );
            DiagramDoc::new(DocFormat::Svg, content)
        }
        DocFormat::Html => {
            let svg = render_perm_table(steps, opts, DocFormat::Svg);
            let text = render_perm_table(steps, opts, DocFormat::Text);
            DiagramDoc::new(DocFormat::Html, html_wrap("permission steps", &svg.content, &text.content))
        }
    }
}
