//! Pretty-printer. `parse_program(pretty_print(p))` is structurally `p`.

use super::ast::*;
use std::fmt::Write;

#[derive(Clone, Copy, Debug, Default)]
pub struct PrintOptions {
    /// Canonical form: declarations sorted by name. Instructions are always
    /// one per line.
    pub canonical: bool,
}

fn write_signature(out: &mut String, f: &FunctionDef) {
    write!(out, "fn {}", f.name).unwrap();
    if !f.lifetime_params.is_empty() {
        out.push('<');
        // An outlives item `'a :> 'b` declares both sides, so the two-param
        // single-constraint signature prints in its compact form. Otherwise
        // all parameters are declared bare and constraints follow, which
        // reparses to the same declaration order and pair list.
        let compact = f.outlives.len() == 1
            && f.lifetime_params.len() == 2
            && f.outlives[0].0 == f.lifetime_params[0]
            && f.outlives[0].1 == f.lifetime_params[1];
        if compact {
            write!(out, "'{} :> '{}", f.outlives[0].0, f.outlives[0].1).unwrap();
        } else {
            for (i, name) in f.lifetime_params.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                write!(out, "'{name}").unwrap();
            }
            for (a, b) in &f.outlives {
                write!(out, ", '{a} :> '{b}").unwrap();
            }
        }
        out.push('>');
    }
    out.push('(');
    for (i, p) in f.params.iter().enumerate() {
        if i > 0 {
            out.push_str(", ");
        }
        write!(out, "{}: {}", p.name, p.ty).unwrap();
    }
    out.push(')');
    if f.ret_ty != LangType::unit() {
        write!(out, " -> {}", f.ret_ty).unwrap();
    }
}

/// Renders a program back to source text.
pub fn pretty_print_with(program: &Program, opts: PrintOptions) -> String {
    let mut out = String::new();
    for (fi, f) in program.functions.iter().enumerate() {
        if fi > 0 {
            out.push('\n');
        }
        write_signature(&mut out, f);
        out.push_str(" {\n");
        let mut locals: Vec<&LocalDecl> = f.locals.iter().collect();
        if opts.canonical {
            locals.sort_by(|a, b| a.name.cmp(&b.name));
        }
        for l in locals {
            let mut_kw = if l.mutable { "mut " } else { "" };
            writeln!(out, "    let {mut_kw}{}: {};", l.name, l.ty).unwrap();
        }
        for (i, instr) in f.body.instructions.iter().enumerate() {
            writeln!(out, "    {i}: {instr};").unwrap();
        }
        out.push_str("}\n");
    }
    out
}

/// Default rendering: one instruction per line, declarations in source order.
pub fn pretty_print(program: &Program) -> String {
    pretty_print_with(program, PrintOptions::default())
}
