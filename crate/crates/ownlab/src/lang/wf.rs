//! Structural well-formedness: target ranges, guaranteed returns, name
//! resolution, declared-lifetime hygiene, and call-graph acyclicity.

use super::ast::*;
use super::Diagnostic;
use std::collections::BTreeSet;

/// Checks every CFG invariant. Returns an empty list iff branch targets are
/// in range, no reachable execution falls off the end of a body, every name
/// resolves, outlives pairs reference declared lifetime parameters, and the
/// call graph is acyclic.
pub fn well_formed(program: &Program) -> Vec<Diagnostic> {
    let mut diags = Vec::new();

    for f in &program.functions {
        check_function(program, f, &mut diags);
    }
    check_call_graph(program, &mut diags);
    diags
}

fn check_function(program: &Program, f: &FunctionDef, diags: &mut Vec<Diagnostic>) {
    if f.body.is_empty() {
        diags.push(Diagnostic::in_func("empty body", &f.name));
        return;
    }

    let len = f.body.len();
    for (index, instr) in f.body.instructions.iter().enumerate() {
        match instr {
            Instruction::If { then_target, else_target, .. } => {
                for t in [then_target, else_target] {
                    if *t >= len {
                        diags.push(Diagnostic::at_instr(
                            format!("branch target {t} out of range (body has {len} instructions)"),
                            &f.name,
                            index,
                        ));
                    }
                }
            }
            Instruction::Call { callee, args, .. } => {
                match program.function(callee) {
                    None => diags.push(Diagnostic::at_instr(
                        format!("call to unknown function `{callee}`"),
                        &f.name,
                        index,
                    )),
                    Some(g) => {
                        if g.params.len() != args.len() {
                            diags.push(Diagnostic::at_instr(
                                format!(
                                    "call to `{callee}` passes {} arguments, expected {}",
                                    args.len(),
                                    g.params.len()
                                ),
                                &f.name,
                                index,
                            ));
                        }
                    }
                }
            }
            _ => {}
        }
    }

    // Reachable fall-through off the end of the body. Walk the graph from
    // the entry; a reachable non-branch, non-return instruction in the last
    // slot has nowhere to fall.
    let mut seen = vec![false; len];
    let mut stack = vec![0usize];
    while let Some(i) = stack.pop() {
        if i >= len || seen[i] {
            continue;
        }
        seen[i] = true;
        let is_terminal = matches!(
            f.body.instructions[i],
            Instruction::Return { .. } | Instruction::If { .. }
        );
        if !is_terminal && i + 1 == len {
            diags.push(Diagnostic::at_instr("missing return: control falls off the end", &f.name, i));
        }
        for s in f.body.successors(i) {
            stack.push(s);
        }
    }

    // Name resolution (programs may be built without the parser).
    let check_path = |p: &Path, index: usize, diags: &mut Vec<Diagnostic>| {
        if f.var_type(&p.base).is_none() {
            diags.push(Diagnostic::at_instr(format!("unknown identifier `{}`", p.base), &f.name, index));
        }
    };
    for (index, instr) in f.body.instructions.iter().enumerate() {
        match instr {
            Instruction::Assign { dest, rv } => {
                check_path(dest, index, diags);
                match rv {
                    Rvalue::Use(p) => check_path(p, index, diags),
                    Rvalue::Loan(l) => check_path(&l.target, index, diags),
                    Rvalue::Tuple(ops) => {
                        for op in ops {
                            if let Operand::Path(p) = op {
                                check_path(p, index, diags);
                            }
                        }
                    }
                    Rvalue::Box(Operand::Path(p)) => check_path(p, index, diags),
                    _ => {}
                }
            }
            Instruction::If { cond, .. } => check_path(cond, index, diags),
            Instruction::Call { dest, args, .. } => {
                check_path(dest, index, diags);
                for a in args {
                    check_path(a, index, diags);
                }
            }
            Instruction::Return { operand } | Instruction::Drop { operand } => {
                check_path(operand, index, diags)
            }
        }
    }

    // Declared outlives pairs and abstract lifetimes in types must reference
    // declared lifetime parameters.
    let declared: BTreeSet<&str> = f.lifetime_params.iter().map(String::as_str).collect();
    for (a, b) in &f.outlives {
        for side in [a, b] {
            if !declared.contains(side.as_str()) {
                diags.push(Diagnostic::in_func(
                    format!("outlives constraint references undeclared lifetime `'{side}`"),
                    &f.name,
                ));
            }
        }
    }
    let check_ty = |ty: &LangType, what: &str, diags: &mut Vec<Diagnostic>| {
        for lt in ty.lifetimes() {
            if let Lifetime::Abstract(name) = lt {
                if !declared.contains(name.as_str()) {
                    diags.push(Diagnostic::in_func(
                        format!("{what} references undeclared lifetime `'{name}`"),
                        &f.name,
                    ));
                }
            }
        }
    };
    for p in &f.params {
        check_ty(&p.ty, &format!("parameter `{}`", p.name), diags);
    }
    for l in &f.locals {
        check_ty(&l.ty, &format!("local `{}`", l.name), diags);
    }
    check_ty(&f.ret_ty, "return type", diags);
}

/// Call graphs must be acyclic; recursion is rejected.
fn check_call_graph(program: &Program, diags: &mut Vec<Diagnostic>) {
    fn visit(
        program: &Program,
        name: &str,
        visiting: &mut Vec<String>,
        done: &mut BTreeSet<String>,
        diags: &mut Vec<Diagnostic>,
    ) {
        if done.contains(name) {
            return;
        }
        if visiting.iter().any(|v| v == name) {
            diags.push(Diagnostic::in_func(
                format!("recursive call cycle involving `{name}` is not supported"),
                name,
            ));
            return;
        }
        visiting.push(name.to_string());
        if let Some(f) = program.function(name) {
            for instr in &f.body.instructions {
                if let Instruction::Call { callee, .. } = instr {
                    visit(program, callee, visiting, done, diags);
                }
            }
        }
        visiting.pop();
        done.insert(name.to_string());
    }

    let mut done = BTreeSet::new();
    for f in &program.functions {
        visit(program, &f.name, &mut Vec::new(), &mut done, diags);
    }
}
