//! Lifetime flows: instructions that require one abstract lifetime to
//! outlive another. Assignments and returns unify the source type against
//! the destination type positionally; calls instantiate the callee's
//! declared outlives pairs with the caller's lifetimes.

use crate::lang::{
    Instruction, InstructionId, LangType, Lifetime, Operand, Path, Rvalue, TypedProgram,
};
use std::collections::{BTreeMap, BTreeSet};

/// Pairs of lifetimes at matching reference positions of two compatible
/// types, source first.
fn lifetime_pairs<'t>(src: &'t LangType, dst: &'t LangType, out: &mut Vec<(&'t Lifetime, &'t Lifetime)>) {
    match (src, dst) {
        (LangType::Tuple(a), LangType::Tuple(b)) => {
            for (x, y) in a.iter().zip(b) {
                lifetime_pairs(x, y, out);
            }
        }
        (
            LangType::Ref { lifetime: la, inner: ia, .. },
            LangType::Ref { lifetime: lb, inner: ib, .. },
        ) => {
            out.push((la, lb));
            lifetime_pairs(ia, ib, out);
        }
        (LangType::Boxed(a), LangType::Boxed(b)) => lifetime_pairs(a, b, out),
        _ => {}
    }
}

fn emit(
    flows: &mut BTreeSet<(String, String, Path, InstructionId)>,
    src: &LangType,
    dst: &LangType,
    blame: &Path,
    at: &InstructionId,
) {
    let mut pairs = Vec::new();
    lifetime_pairs(src, dst, &mut pairs);
    for (a, b) in pairs {
        if let (Lifetime::Abstract(a), Lifetime::Abstract(b)) = (a, b) {
            if a != b {
                flows.insert((a.clone(), b.clone(), blame.clone(), at.clone()));
            }
        }
    }
}

/// The type an rvalue produces, with loan expressions typed at their fresh
/// concrete lifetime, and the path to blame for any flow it causes.
fn rvalue_type_and_blame(
    tp: &TypedProgram,
    func: &str,
    index: usize,
    rv: &Rvalue,
    dest: &Path,
) -> Option<(LangType, Path)> {
    match rv {
        Rvalue::Const(_) => None,
        Rvalue::Use(p) => tp.type_of(func, p).map(|t| (t, p.clone())),
        Rvalue::Loan(l) => {
            let target_ty = tp.type_of(func, &l.target)?;
            let lifetime = tp.typed(func).loan_lifetimes.get(&index)?.clone();
            Some((
                LangType::Ref { lifetime, qualifier: l.qualifier, inner: Box::new(target_ty) },
                l.target.clone(),
            ))
        }
        Rvalue::Tuple(ops) => {
            let mut parts = Vec::new();
            let mut blame = dest.clone();
            for op in ops {
                match op {
                    Operand::Const(c) => parts.push(match c {
                        crate::lang::Constant::Num(_) => LangType::U32,
                        crate::lang::Constant::Bool(_) => LangType::Bool,
                    }),
                    Operand::Path(p) => {
                        let t = tp.type_of(func, p)?;
                        if blame == *dest && t.lifetimes().iter().any(|l| l.is_abstract()) {
                            blame = p.clone();
                        }
                        parts.push(t);
                    }
                }
            }
            Some((LangType::Tuple(parts), blame))
        }
        Rvalue::Box(Operand::Path(p)) => {
            tp.type_of(func, p).map(|t| (LangType::Boxed(Box::new(t)), p.clone()))
        }
        Rvalue::Box(Operand::Const(_)) => None,
    }
}

pub fn flows(tp: &TypedProgram, func: &str) -> BTreeSet<(String, String, Path, InstructionId)> {
    let f = tp.function(func);
    let mut flows = BTreeSet::new();

    for (index, instr) in f.body.instructions.iter().enumerate() {
        let at = InstructionId::new(func, index);
        match instr {
            Instruction::Assign { dest, rv } => {
                let Some(dest_ty) = tp.type_of(func, dest) else { continue };
                if let Some((src_ty, blame)) = rvalue_type_and_blame(tp, func, index, rv, dest) {
                    emit(&mut flows, &src_ty, &dest_ty, &blame, &at);
                }
            }
            Instruction::Return { operand } => {
                if let Some(src_ty) = tp.type_of(func, operand) {
                    emit(&mut flows, &src_ty, &f.ret_ty, operand, &at);
                }
            }
            Instruction::Call { dest, callee, args } => {
                let Some(g) = tp.program.function(callee) else { continue };
                // Instantiate the callee's abstract lifetimes with the
                // caller-side lifetimes found at matching positions.
                let mut inst: BTreeMap<String, Lifetime> = BTreeMap::new();
                let bind = |pty: &LangType, aty: &LangType, inst: &mut BTreeMap<String, Lifetime>| {
                    let mut pairs = Vec::new();
                    lifetime_pairs(pty, aty, &mut pairs);
                    for (p, a) in pairs {
                        if let Lifetime::Abstract(name) = p {
                            inst.entry(name.clone()).or_insert_with(|| a.clone());
                        }
                    }
                };
                for (a, p) in args.iter().zip(&g.params) {
                    if let Some(aty) = tp.type_of(func, a) {
                        bind(&p.ty, &aty, &mut inst);
                    }
                }
                if let Some(dty) = tp.type_of(func, dest) {
                    bind(&g.ret_ty, &dty, &mut inst);
                }
                for (p1, p2) in &g.outlives {
                    let (Some(Lifetime::Abstract(a)), Some(Lifetime::Abstract(b))) =
                        (inst.get(p1), inst.get(p2))
                    else {
                        continue;
                    };
                    if a == b {
                        continue;
                    }
                    // Blame the first argument mentioning the constrained
                    // lifetime, falling back to the destination.
                    let blame = args
                        .iter()
                        .find(|arg| {
                            tp.type_of(func, arg)
                                .map(|t| t.lifetimes().iter().any(|l| l.name() == a))
                                .unwrap_or(false)
                        })
                        .cloned()
                        .unwrap_or_else(|| dest.clone());
                    flows.insert((a.clone(), b.clone(), blame, at.clone()));
                }
            }
            _ => {}
        }
    }
    flows
}
