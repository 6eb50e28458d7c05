//! Greedy counterexample shrinking. Each pass proposes structurally smaller
//! candidates (drop a function, drop an instruction, simplify an rvalue,
//! collapse a branch, drop a local); a candidate is accepted when it is
//! still a valid program and still violates the property. The result is a
//! local minimum: no single step preserves the violation.

use crate::lang::{
    type_check, well_formed, Constant, FunctionDef, Instruction, LangType, Operand, Program,
    Rvalue,
};

fn valid(p: &Program) -> bool {
    well_formed(p).is_empty() && type_check(p).is_ok()
}

/// Removes instruction `index` from `f`, remapping branch targets.
fn remove_instruction(f: &FunctionDef, index: usize) -> FunctionDef {
    let mut f = f.clone();
    f.body.instructions.remove(index);
    for instr in &mut f.body.instructions {
        if let Instruction::If { then_target, else_target, .. } = instr {
            for t in [then_target, else_target] {
                if *t > index {
                    *t -= 1;
                }
            }
        }
    }
    f
}

fn simplify_rvalue(rv: &Rvalue, dest_ty: Option<&LangType>) -> Option<Rvalue> {
    let zero = |ty: &LangType| match ty {
        LangType::U32 => Some(Constant::Num(0)),
        LangType::Bool => Some(Constant::Bool(false)),
        _ => None,
    };
    match rv {
        Rvalue::Use(_) => dest_ty.and_then(zero).map(Rvalue::Const),
        Rvalue::Tuple(ops) if ops.iter().any(|op| matches!(op, Operand::Path(_))) => {
            // Replace path operands with zero constants where types permit.
            let LangType::Tuple(parts) = dest_ty? else { return None };
            let mut simplified = Vec::new();
            for (op, ty) in ops.iter().zip(parts) {
                match op {
                    Operand::Path(_) => simplified.push(Operand::Const(zero(ty)?)),
                    other => simplified.push(other.clone()),
                }
            }
            Some(Rvalue::Tuple(simplified))
        }
        Rvalue::Box(Operand::Path(_)) => {
            let LangType::Boxed(inner) = dest_ty? else { return None };
            zero(inner).map(|c| Rvalue::Box(Operand::Const(c)))
        }
        _ => None,
    }
}

fn candidates(p: &Program) -> Vec<Program> {
    let mut out = Vec::new();

    // Drop uncalled non-main functions.
    for (fi, f) in p.functions.iter().enumerate() {
        if f.name == "main" {
            continue;
        }
        let called = p.functions.iter().any(|g| {
            g.body.instructions.iter().any(
                |i| matches!(i, Instruction::Call { callee, .. } if callee == &f.name),
            )
        });
        if !called {
            let mut q = p.clone();
            q.functions.remove(fi);
            out.push(q);
        }
    }

    for (fi, f) in p.functions.iter().enumerate() {
        // Drop instructions, later ones first.
        for index in (0..f.body.len()).rev() {
            let mut q = p.clone();
            q.functions[fi] = remove_instruction(f, index);
            out.push(q);
        }
        // Simplify rvalues.
        for (index, instr) in f.body.instructions.iter().enumerate() {
            if let Instruction::Assign { dest, rv } = instr {
                let dest_ty = crate::lang::path_type(f, dest).ok();
                if let Some(simpler) = simplify_rvalue(rv, dest_ty.as_ref()) {
                    let mut q = p.clone();
                    if let Instruction::Assign { rv, .. } =
                        &mut q.functions[fi].body.instructions[index]
                    {
                        *rv = simpler;
                    }
                    out.push(q);
                }
            }
        }
        // Collapse branches to a single arm.
        for (index, instr) in f.body.instructions.iter().enumerate() {
            if let Instruction::If { then_target, else_target, .. } = instr {
                for target in [*then_target, *else_target] {
                    let mut q = p.clone();
                    if let Instruction::If { then_target, else_target, .. } =
                        &mut q.functions[fi].body.instructions[index]
                    {
                        *then_target = target;
                        *else_target = target;
                    }
                    out.push(q);
                }
            }
        }
        // Drop unreferenced locals.
        for (li, l) in f.locals.iter().enumerate() {
            let referenced = f.body.instructions.iter().any(|instr| {
                crate::lang::instruction_paths(instr).iter().any(|p| p.base == l.name)
            });
            if !referenced {
                let mut q = p.clone();
                q.functions[fi].locals.remove(li);
                out.push(q);
            }
        }
    }
    out
}

/// Shrinks `program` while `violates` holds. `violates` must be true of the
/// input; the result still violates the property and no single shrink step
/// preserves the violation.
pub fn shrink(program: &Program, violates: &dyn Fn(&Program) -> bool) -> Program {
    assert!(violates(program), "shrink precondition: the property must be violated");
    let mut current = program.clone();
    loop {
        let mut improved = false;
        for cand in candidates(&current) {
            if valid(&cand) && violates(&cand) {
                current = cand;
                improved = true;
                break;
            }
        }
        if !improved {
            return current;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lang::parse_program;

    #[test]
    fn shrinks_to_the_violating_core() {
        // Property: the program still moves a box and reads it afterwards.
        let src = "fn main() -> u32 { \
            let x: box u32; let y: box u32; let a: u32; let mut b: u32; let z: u32; \
            0: x = box 0; 1: a = 7; 2: b = a; 3: y = x; 4: b = 9; 5: z = *x; 6: return z; }";
        let p = parse_program(src).unwrap();
        let violates = |p: &Program| {
            let Ok(tp) = type_check(p) else { return false };
            let facts = crate::facts::build_facts(&tp);
            facts.per_fn.values().any(|fb| {
                fb.read_at
                    .iter()
                    .any(|(path, at)| fb.moved_before.contains(&(path.clone(), at.clone())))
            })
        };
        let small = shrink(&p, &violates);
        assert!(violates(&small));
        assert!(
            small.functions[0].body.len() <= 4,
            "expected a minimal core, got:\n{}",
            crate::lang::pretty_print(&small)
        );
    }

    #[test]
    fn minimal_program_is_returned_unchanged() {
        let src = "fn main() -> u32 { let r: u32; 0: r = 0; 1: return r; }";
        let p = parse_program(src).unwrap();
        let violates = |q: &Program| q.functions[0].body.len() >= 2;
        let small = shrink(&p, &violates);
        assert_eq!(small, p);
    }

    #[test]
    #[should_panic(expected = "shrink precondition")]
    fn non_violating_input_panics() {
        let src = "fn main() -> u32 { let r: u32; 0: r = 0; 1: return r; }";
        let p = parse_program(src).unwrap();
        shrink(&p, &|_| false);
    }
}
