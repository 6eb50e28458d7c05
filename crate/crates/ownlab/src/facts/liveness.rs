//! Variable liveness, loan-lifetime propagation, and loan liveness.
//!
//! A loan's fresh concrete lifetime propagates flow-insensitively through
//! assignments between lifetime-carrying types; the loan is live at an
//! instruction when some variable carrying its lifetime is live there in
//! the classic backward-dataflow sense.

use super::{FactBase, LoanId};
use crate::lang::{
    FunctionDef, Instruction, InstructionId, LangType, Lifetime, Operand, Path, Rvalue,
    TypedProgram,
};
use std::collections::{BTreeMap, BTreeSet};

/// Per-instruction liveness sets for one function.
pub struct Liveness {
    /// Classic liveness: variable used at the instruction or on some path
    /// from it before being overwritten. Entries are `(var, index)`.
    pub live_in: BTreeSet<(String, usize)>,
    /// Access liveness: any access (including writes and borrows) at the
    /// instruction or reachable from it. Defs do not kill.
    pub access_live: BTreeSet<(String, usize)>,
}

/// Variables used (read-like) and defined by one instruction. A bare
/// assignment or call destination defines; a projected or dereferenced
/// destination uses its base instead. Borrow targets use their base even
/// when the borrow is classified as a write access.
fn uses_defs(instr: &Instruction) -> (BTreeSet<String>, Option<String>) {
    let mut uses = BTreeSet::new();
    let mut def = None;
    let use_path = |p: &Path, uses: &mut BTreeSet<String>| {
        uses.insert(p.base.clone());
    };
    match instr {
        Instruction::Assign { dest, rv } => {
            if dest.is_var() {
                def = Some(dest.base.clone());
            } else {
                use_path(dest, &mut uses);
            }
            match rv {
                Rvalue::Const(_) => {}
                Rvalue::Use(p) => use_path(p, &mut uses),
                Rvalue::Loan(l) => use_path(&l.target, &mut uses),
                Rvalue::Tuple(ops) => {
                    for op in ops {
                        if let Operand::Path(p) = op {
                            use_path(p, &mut uses);
                        }
                    }
                }
                Rvalue::Box(Operand::Path(p)) => use_path(p, &mut uses),
                Rvalue::Box(Operand::Const(_)) => {}
            }
        }
        Instruction::If { cond, .. } => use_path(cond, &mut uses),
        Instruction::Call { dest, args, .. } => {
            if dest.is_var() {
                def = Some(dest.base.clone());
            } else {
                use_path(dest, &mut uses);
            }
            for a in args {
                use_path(a, &mut uses);
            }
        }
        Instruction::Return { operand } | Instruction::Drop { operand } => {
            use_path(operand, &mut uses)
        }
    }
    (uses, def)
}

impl Liveness {
    pub fn compute(f: &FunctionDef) -> Liveness {
        let n = f.body.len();
        let per_instr: Vec<(BTreeSet<String>, Option<String>)> =
            f.body.instructions.iter().map(uses_defs).collect();

        // live_in(i) = use(i) ∪ (∪ live_in(succ) − def(i))
        let mut live: Vec<BTreeSet<String>> = vec![BTreeSet::new(); n];
        let mut changed = true;
        while changed {
            changed = false;
            for i in (0..n).rev() {
                let (uses, def) = &per_instr[i];
                let mut out: BTreeSet<String> = BTreeSet::new();
                for s in f.body.successors(i) {
                    out.extend(live[s].iter().cloned());
                }
                if let Some(d) = def {
                    out.remove(d);
                }
                out.extend(uses.iter().cloned());
                if out != live[i] {
                    live[i] = out;
                    changed = true;
                }
            }
        }

        // access_live(i) = accessed(i) ∪ ∪ access_live(succ); writes count.
        let mut acc: Vec<BTreeSet<String>> = vec![BTreeSet::new(); n];
        let accessed: Vec<BTreeSet<String>> = per_instr
            .iter()
            .map(|(uses, def)| {
                let mut s = uses.clone();
                s.extend(def.clone());
                s
            })
            .collect();
        let mut changed = true;
        while changed {
            changed = false;
            for i in (0..n).rev() {
                let mut out = accessed[i].clone();
                for s in f.body.successors(i) {
                    out.extend(acc[s].iter().cloned());
                }
                if out != acc[i] {
                    acc[i] = out;
                    changed = true;
                }
            }
        }

        let collect = |v: &[BTreeSet<String>]| {
            v.iter()
                .enumerate()
                .flat_map(|(i, s)| s.iter().map(move |x| (x.clone(), i)))
                .collect()
        };
        Liveness { live_in: collect(&live), access_live: collect(&acc) }
    }
}

/// Whether a type can hold a reference anywhere inside it.
fn mentions_ref(ty: &LangType) -> bool {
    match ty {
        LangType::U32 | LangType::Bool => false,
        LangType::Tuple(ts) => ts.iter().any(mentions_ref),
        LangType::Ref { .. } => true,
        LangType::Boxed(inner) => mentions_ref(inner),
    }
}

/// Flow-insensitive lifetime carrying: `carries[v]` holds every loan
/// lifetime that may inhabit `v`'s value. Loans seed their destination;
/// assignments between ref-mentioning types propagate; a call result
/// inherits from every ref-mentioning argument.
pub fn carries(tp: &TypedProgram, func: &str) -> BTreeMap<String, BTreeSet<Lifetime>> {
    let f = tp.function(func);
    let typed = tp.typed(func);
    let mut carries: BTreeMap<String, BTreeSet<Lifetime>> = BTreeMap::new();
    // (src var, dest var) propagation edges
    let mut edges: BTreeSet<(String, String)> = BTreeSet::new();

    for (index, instr) in f.body.instructions.iter().enumerate() {
        match instr {
            Instruction::Assign { dest, rv } => {
                let edge_from = |p: &Path, edges: &mut BTreeSet<(String, String)>| {
                    if tp.type_of(func, p).as_ref().map(mentions_ref).unwrap_or(false) {
                        edges.insert((p.base.clone(), dest.base.clone()));
                    }
                };
                match rv {
                    Rvalue::Loan(_) => {
                        let lt = typed.loan_lifetimes[&index].clone();
                        carries.entry(dest.base.clone()).or_default().insert(lt);
                        // A loan of a path that itself holds references (for
                        // example `&shared x` where `x` contains a ref) also
                        // makes the destination reach those loans.
                        if let Rvalue::Loan(l) = rv {
                            edge_from(&l.target, &mut edges);
                        }
                    }
                    Rvalue::Use(p) => edge_from(p, &mut edges),
                    Rvalue::Tuple(ops) => {
                        for op in ops {
                            if let Operand::Path(p) = op {
                                edge_from(p, &mut edges);
                            }
                        }
                    }
                    Rvalue::Box(Operand::Path(p)) => edge_from(p, &mut edges),
                    Rvalue::Box(Operand::Const(_)) | Rvalue::Const(_) => {}
                }
            }
            Instruction::Call { dest, callee, args } => {
                let ret_has_ref = tp
                    .program
                    .function(callee)
                    .map(|g| mentions_ref(&g.ret_ty))
                    .unwrap_or(false);
                if ret_has_ref {
                    for a in args {
                        if tp.type_of(func, a).as_ref().map(mentions_ref).unwrap_or(false) {
                            edges.insert((a.base.clone(), dest.base.clone()));
                        }
                    }
                }
            }
            _ => {}
        }
    }

    // Propagate to fixpoint.
    let mut changed = true;
    while changed {
        changed = false;
        for (src, dst) in &edges {
            let from = carries.get(src).cloned().unwrap_or_default();
            if from.is_empty() {
                continue;
            }
            let entry = carries.entry(dst.clone()).or_default();
            let before = entry.len();
            entry.extend(from);
            if entry.len() != before {
                changed = true;
            }
        }
    }
    carries
}

/// A loan is live at an instruction iff some variable carrying its lifetime
/// is live (classic backward liveness) entering that instruction.
pub fn loan_liveness(fb: &FactBase, live: &Liveness) -> BTreeSet<(LoanId, InstructionId)> {
    let mut out = BTreeSet::new();
    let loans: Vec<&LoanId> = fb.loans().collect();
    for loan in loans {
        let carriers: Vec<&String> = fb
            .carries
            .iter()
            .filter(|(_, lts)| lts.contains(&loan.lifetime))
            .map(|(v, _)| v)
            .collect();
        for (var, index) in &live.live_in {
            if carriers.iter().any(|c| *c == var) {
                out.insert((loan.clone(), InstructionId::new(&fb.func, *index)));
            }
        }
    }
    out
}
