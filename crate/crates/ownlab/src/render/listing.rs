//! Annotated listings: the pretty-printed program with expectation marks
//! inserted next to the path operands they describe. Letter marks stack the
//! permission letters, satisfied as plain letters and unsatisfied as hollow
//! (double-struck) letters; circle marks render one filled or hollow circle.

use super::{escape, html_wrap, DiagramDoc, DocFormat, RenderOptions, RENDERER_VERSION};
use crate::lang::Program;
use crate::perms::{ExpectationMark, MarkStyle, Permission};
use std::fmt::Write;

fn hollow(letter: char) -> char {
    match letter {
        'R' => 'ℝ',
        'W' => '𝕎',
        'O' => '𝕆',
        'F' => '𝔽',
        other => other,
    }
}

fn mark_text(mark: &ExpectationMark) -> String {
    match mark.style {
        MarkStyle::Circle => {
            if mark.all_satisfied() {
                "⟨●⟩".into()
            } else {
                "⟨○⟩".into()
            }
        }
        MarkStyle::Letter => {
            let mut s = String::from("⟨");
            for perm in &mark.expected {
                let letter = perm.letter();
                if mark.satisfied.get(perm).copied().unwrap_or(false) {
                    s.push(letter);
                } else {
                    s.push(hollow(letter));
                }
            }
            s.push('⟩');
            s
        }
    }
}

/// Tracks F specially so the letter ordering matches R, W, O, F.
fn sorted_marks(marks: &[ExpectationMark]) -> Vec<&ExpectationMark> {
    let mut out: Vec<&ExpectationMark> = marks.iter().collect();
    out.sort_by_key(|m| (m.at.clone(), std::cmp::Reverse(m.path.to_string().len()), m.path.clone()));
    out
}

/// Renders the listing with marks placed immediately before each marked
/// path operand. Marks on longer path texts are placed first so a mark for
/// `x` never lands inside an occurrence of `x.0`.
pub fn render_annotated_listing(
    program: &Program,
    marks: &[ExpectationMark],
    _opts: &RenderOptions,
    format: DocFormat,
) -> DiagramDoc {
    let marks = sorted_marks(marks);
    let mut lines: Vec<String> = Vec::new();
    for f in &program.functions {
        let printed = crate::lang::pretty_print(&Program { functions: vec![f.clone()] });
        for (lineno, line) in printed.lines().enumerate() {
            let _ = lineno;
            lines.push(line.to_string());
        }
    }

    // Instruction lines start with "    {index}: "; map them per function.
    let mut annotated: Vec<String> = Vec::new();
    let mut current_fn: Option<String> = None;
    for line in &lines {
        let trimmed = line.trim_start();
        if trimmed.starts_with("fn ") {
            let name =
                trimmed[3..].split(|c: char| c == '(' || c == '<').next().unwrap_or("").to_string();
            current_fn = Some(name);
        }
        let mut out_line = line.clone();
        if let (Some(func), Some((index, _))) = (&current_fn, split_instruction_label(trimmed)) {
            let mut insertions: Vec<(usize, String)> = Vec::new();
            for mark in &marks {
                if &mark.at.func != func || mark.at.index != index {
                    continue;
                }
                let needle = mark.path.to_string();
                if let Some(pos) = find_operand(&out_line, &needle) {
                    insertions.push((pos, mark_text(mark)));
                }
            }
            insertions.sort_by(|a, b| b.0.cmp(&a.0));
            for (pos, text) in insertions {
                out_line.insert_str(pos, &format!("{text} "));
            }
        }
        annotated.push(out_line);
    }
    let listing = annotated.join("\n") + "\n";

    match format {
        DocFormat::Text => {
            let mut out = format!("# annotated listing ({RENDERER_VERSION})\n");
            out.push_str(&listing);
            // Fact lines for the logical-content parity check.
            out.push_str("# marks\n");
            for mark in &marks {
                writeln!(out, "# mark: {}", mark_fact(mark)).unwrap();
            }
            DiagramDoc::new(DocFormat::Text, out)
        }
        DocFormat::Svg => {
            let row_h = 18i64;
            let mut body = String::new();
            let mut y = 24i64;
            for line in listing.lines() {
                let class = if line.contains('⟨') { " class=\"marked\"" } else { "" };
                writeln!(body, "<text x=\"12\" y=\"{y}\"{class}>{}</text>", escape(line)).unwrap();
                y += row_h;
            }
            let width = 8 * listing.lines().map(|l| l.chars().count()).max().unwrap_or(40) as i64 + 24;
            let mut facts = String::new();
            for mark in &marks {
                writeln!(facts, "mark: {}", escape(&mark_fact(mark))).unwrap();
            }
            let content = format!(
                "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{width}\" height=\"{}\" viewBox=\"0 0 {width} {}\">\n\
                 <!-- {RENDERER_VERSION} -->\n<desc>\n{facts}</desc>\n\
                 <style>text {{ font: 13px monospace; white-space: pre; }} .marked {{ fill: #06c; }}</style>\n\
                 {body}</svg>\n",
                y + 12,
                y + 12
            );
            DiagramDoc::new(DocFormat::Svg, content)
        }
        DocFormat::Html => {
            let svg = render_annotated_listing(program, marks_owned(&marks).as_slice(), _opts, DocFormat::Svg);
            let text = render_annotated_listing(program, marks_owned(&marks).as_slice(), _opts, DocFormat::Text);
            DiagramDoc::new(DocFormat::Html, html_wrap("annotated listing", &svg.content, &text.content))
        }
    }
}

fn marks_owned(marks: &[&ExpectationMark]) -> Vec<ExpectationMark> {
    marks.iter().map(|m| (*m).clone()).collect()
}

/// The canonical fact line for one mark.
fn mark_fact(mark: &ExpectationMark) -> String {
    let perms: Vec<String> = mark
        .expected
        .iter()
        .map(|p: &Permission| {
            let ok = mark.satisfied.get(p).copied().unwrap_or(false);
            format!("{p}{}", if ok { "+" } else { "-" })
        })
        .collect();
    format!("{} {} {}", mark.at, mark.path, perms.join(""))
}

fn split_instruction_label(line: &str) -> Option<(usize, &str)> {
    let (label, rest) = line.split_once(':')?;
    let index: usize = label.trim().parse().ok()?;
    Some((index, rest))
}

/// Position of the path text as an operand in the line: after the label,
/// bounded by non-identifier characters.
fn find_operand(line: &str, needle: &str) -> Option<usize> {
    let start_search = line.find(':').map(|i| i + 1).unwrap_or(0);
    let hay = &line[start_search..];
    let mut from = 0usize;
    while let Some(rel) = hay[from..].find(needle) {
        let pos = from + rel;
        let before_ok = pos == 0
            || !hay[..pos]
                .chars()
                .next_back()
                .map(|c| c.is_ascii_alphanumeric() || c == '_' || c == '.')
                .unwrap_or(false);
        let after = hay[pos + needle.len()..].chars().next();
        let after_ok =
            !after.map(|c| c.is_ascii_alphanumeric() || c == '_' || c == '.').unwrap_or(false);
        if before_ok && after_ok {
            return Some(start_search + pos);
        }
        from = pos + needle.len().max(1);
    }
    None
}
