//! Brute-force re-derivation of the access-error judgment, sharing no code
//! with the fact extraction or checker modules. Liveness is an explicit
//! graph walk per query, lifetime carrying is a transitive closure over an
//! assignment graph, footprints are resolved by recursive substitution with
//! a visiting guard, and moved-before enumerates kill-free walks from each
//! move. Intended for the exhaustive regime (small bodies).

use crate::lang::{
    FunctionDef, Instruction, InstructionId, LangType, Lifetime, Operand, OwnershipQualifier,
    Path, PathOp, Rvalue, TypedProgram,
};
use crate::polonius::{AccessError, Invalidation};
use std::collections::{BTreeMap, BTreeSet};

pub struct TooLarge;

/// One function's accesses, re-extracted from scratch.
struct RawAccess {
    reads: Vec<(usize, Path)>,
    writes: Vec<(usize, Path)>,
    moves: Vec<(usize, Path)>,
    loans: Vec<(usize, Path, OwnershipQualifier)>,
}

fn movable(tp: &TypedProgram, func: &str, p: &Path) -> bool {
    tp.type_of(func, p).map(|t| !t.is_copy()).unwrap_or(false)
}

fn raw_accesses(tp: &TypedProgram, f: &FunctionDef) -> RawAccess {
    let mut acc =
        RawAccess { reads: Vec::new(), writes: Vec::new(), moves: Vec::new(), loans: Vec::new() };
    for (i, instr) in f.body.instructions.iter().enumerate() {
        let read_like = |p: &Path, acc: &mut RawAccess| {
            acc.reads.push((i, p.clone()));
            if movable(tp, &f.name, p) {
                acc.moves.push((i, p.clone()));
            }
        };
        match instr {
            Instruction::Assign { dest, rv } => {
                acc.writes.push((i, dest.clone()));
                match rv {
                    Rvalue::Use(p) => read_like(p, &mut acc),
                    Rvalue::Loan(l) => {
                        match l.qualifier {
                            OwnershipQualifier::Shared => acc.reads.push((i, l.target.clone())),
                            OwnershipQualifier::Unique => acc.writes.push((i, l.target.clone())),
                        }
                        acc.loans.push((i, l.target.clone(), l.qualifier));
                    }
                    Rvalue::Tuple(ops) => {
                        for op in ops {
                            if let Operand::Path(p) = op {
                                read_like(p, &mut acc);
                            }
                        }
                    }
                    Rvalue::Box(Operand::Path(p)) => read_like(p, &mut acc),
                    Rvalue::Box(Operand::Const(_)) | Rvalue::Const(_) => {}
                }
            }
            Instruction::If { cond, .. } => acc.reads.push((i, cond.clone())),
            Instruction::Call { dest, args, .. } => {
                acc.writes.push((i, dest.clone()));
                for a in args {
                    read_like(a, &mut acc);
                }
            }
            Instruction::Return { operand } | Instruction::Drop { operand } => {
                read_like(operand, &mut acc)
            }
        }
    }
    acc
}

fn successors(f: &FunctionDef, i: usize) -> Vec<usize> {
    match &f.body.instructions[i] {
        Instruction::Return { .. } => vec![],
        Instruction::If { then_target, else_target, .. } => {
            if then_target == else_target {
                vec![*then_target]
            } else {
                vec![*then_target, *else_target]
            }
        }
        _ => vec![i + 1],
    }
}

/// Variables read-like-used and the variable defined at one instruction,
/// phrased for the liveness walk.
fn var_use_def(instr: &Instruction) -> (BTreeSet<String>, Option<String>) {
    let mut uses = BTreeSet::new();
    let mut def = None;
    let touch = |p: &Path, uses: &mut BTreeSet<String>| {
        uses.insert(p.base.clone());
    };
    match instr {
        Instruction::Assign { dest, rv } => {
            if dest.is_var() {
                def = Some(dest.base.clone());
            } else {
                touch(dest, &mut uses);
            }
            match rv {
                Rvalue::Use(p) => touch(p, &mut uses),
                Rvalue::Loan(l) => touch(&l.target, &mut uses),
                Rvalue::Tuple(ops) => {
                    for op in ops {
                        if let Operand::Path(p) = op {
                            touch(p, &mut uses);
                        }
                    }
                }
                Rvalue::Box(Operand::Path(p)) => touch(p, &mut uses),
                _ => {}
            }
        }
        Instruction::If { cond, .. } => touch(cond, &mut uses),
        Instruction::Call { dest, args, .. } => {
            if dest.is_var() {
                def = Some(dest.base.clone());
            } else {
                touch(dest, &mut uses);
            }
            for a in args {
                touch(a, &mut uses);
            }
        }
        Instruction::Return { operand } | Instruction::Drop { operand } => touch(operand, &mut uses),
    }
    (uses, def)
}

fn holds_ref(ty: &LangType) -> bool {
    match ty {
        LangType::U32 | LangType::Bool => false,
        LangType::Tuple(ts) => ts.iter().any(holds_ref),
        LangType::Ref { .. } => true,
        LangType::Boxed(t) => holds_ref(t),
    }
}

/// The oracle's per-function working set: raw accesses plus the
/// loan-carrying relation, computed once up front.
struct Oracle<'a> {
    f: &'a FunctionDef,
    acc: RawAccess,
    /// Loan site -> variables that may carry its reference.
    carriers: Vec<(usize, BTreeSet<String>)>,
    /// Variable -> loan sites it may carry (the inverse of `carriers`).
    carried_by_var: BTreeMap<String, BTreeSet<usize>>,
}

impl<'a> Oracle<'a> {
    fn new(tp: &'a TypedProgram, f: &'a FunctionDef) -> Oracle<'a> {
        let acc = raw_accesses(tp, f);

        // Assignment edges along which a reference value can travel.
        let mut edges: Vec<(String, String)> = Vec::new();
        let mut seeds: Vec<(usize, String)> = Vec::new();
        for (i, instr) in f.body.instructions.iter().enumerate() {
            match instr {
                Instruction::Assign { dest, rv } => {
                    let src_edge = |p: &Path, edges: &mut Vec<(String, String)>| {
                        if tp.type_of(&f.name, p).as_ref().map(holds_ref).unwrap_or(false) {
                            edges.push((p.base.clone(), dest.base.clone()));
                        }
                    };
                    match rv {
                        Rvalue::Loan(l) => {
                            seeds.push((i, dest.base.clone()));
                            src_edge(&l.target, &mut edges);
                        }
                        Rvalue::Use(p) => src_edge(p, &mut edges),
                        Rvalue::Tuple(ops) => {
                            for op in ops {
                                if let Operand::Path(p) = op {
                                    src_edge(p, &mut edges);
                                }
                            }
                        }
                        Rvalue::Box(Operand::Path(p)) => src_edge(p, &mut edges),
                        _ => {}
                    }
                }
                Instruction::Call { dest, callee, args } => {
                    let ret_ref = tp
                        .program
                        .function(callee)
                        .map(|g| holds_ref(&g.ret_ty))
                        .unwrap_or(false);
                    if ret_ref {
                        for a in args {
                            if tp.type_of(&f.name, a).as_ref().map(holds_ref).unwrap_or(false) {
                                edges.push((a.base.clone(), dest.base.clone()));
                            }
                        }
                    }
                }
                _ => {}
            }
        }

        // Transitive closure per loan seed.
        let mut carriers = Vec::new();
        let mut carried_by_var: BTreeMap<String, BTreeSet<usize>> = BTreeMap::new();
        for (site, dest) in seeds {
            let mut set: BTreeSet<String> = [dest].into();
            loop {
                let mut grew = false;
                for (src, dst) in &edges {
                    if set.contains(src) && set.insert(dst.clone()) {
                        grew = true;
                    }
                }
                if !grew {
                    break;
                }
            }
            for var in &set {
                carried_by_var.entry(var.clone()).or_default().insert(site);
            }
            carriers.push((site, set));
        }
        Oracle { f, acc, carriers, carried_by_var }
    }

    /// Classic liveness by explicit path search: the variable is used at
    /// `at`, or some walk from `at` reaches a use without passing a
    /// redefinition.
    fn var_live_at(&self, var: &str, at: usize) -> bool {
        let (uses, def) = var_use_def(&self.f.body.instructions[at]);
        if uses.contains(var) {
            return true;
        }
        let mut seen = BTreeSet::new();
        let mut stack: Vec<usize> = Vec::new();
        if def.as_deref() != Some(var) {
            stack.extend(successors(self.f, at));
        }
        while let Some(i) = stack.pop() {
            if !seen.insert(i) {
                continue;
            }
            let (uses, def) = var_use_def(&self.f.body.instructions[i]);
            if uses.contains(var) {
                return true;
            }
            if def.as_deref() == Some(var) {
                continue;
            }
            stack.extend(successors(self.f, i));
        }
        false
    }

    /// Kill-free reachability from the exit of the move at `from` to the
    /// entry of `to`.
    fn move_reaches(&self, moved: &Path, from: usize, to: usize) -> bool {
        let kills = |i: usize| -> bool {
            match &self.f.body.instructions[i] {
                Instruction::Assign { dest, .. } | Instruction::Call { dest, .. } => {
                    moved == dest || moved.extends(dest)
                }
                _ => false,
            }
        };
        let mut seen = BTreeSet::new();
        let mut stack: Vec<usize> = if kills(from) { vec![] } else { successors(self.f, from) };
        while let Some(i) = stack.pop() {
            if i == to {
                return true;
            }
            if !seen.insert(i) || kills(i) {
                continue;
            }
            stack.extend(successors(self.f, i));
        }
        false
    }

    /// Footprints by recursive substitution. `visiting` guards loan cycles:
    /// a loan currently being resolved contributes nothing to its own
    /// resolution.
    fn resolve(&self, path: &Path, visiting: &mut BTreeSet<usize>) -> Vec<(String, Vec<PathOp>)> {
        let mut fps: Vec<(String, Vec<PathOp>)> = vec![(format!("var:{}", path.base), Vec::new())];
        let Some(mut ty) = self.f.var_type(&path.base).cloned() else {
            return fps;
        };
        for (k, op) in path.ops.iter().enumerate() {
            match (op, ty.clone()) {
                (PathOp::Field(n), LangType::Tuple(parts)) => {
                    for (_, steps) in &mut fps {
                        steps.push(PathOp::Field(*n));
                    }
                    ty = parts.get(*n as usize).cloned().unwrap_or(LangType::U32);
                }
                (PathOp::Deref, LangType::Boxed(inner)) => {
                    for (_, steps) in &mut fps {
                        steps.push(PathOp::Deref);
                    }
                    ty = *inner;
                }
                (PathOp::Deref, LangType::Ref { lifetime, inner, .. }) => {
                    let carried =
                        self.carried_by_var.get(&path.base).cloned().unwrap_or_default();
                    let mut next: Vec<(String, Vec<PathOp>)> = Vec::new();
                    let loan_targets: Vec<(usize, Path)> =
                        self.acc.loans.iter().map(|(s, t, _)| (*s, t.clone())).collect();
                    for (site, target) in loan_targets {
                        if carried.contains(&site) && !visiting.contains(&site) {
                            visiting.insert(site);
                            next.extend(self.resolve(&target, visiting));
                            visiting.remove(&site);
                        }
                    }
                    if let Lifetime::Abstract(name) = &lifetime {
                        next.push((format!("abstract:'{name}"), Vec::new()));
                    }
                    if next.is_empty() {
                        let prefix = Path { base: path.base.clone(), ops: path.ops[..=k].to_vec() };
                        next.push((format!("opaque:{prefix}"), Vec::new()));
                    }
                    next.sort();
                    next.dedup();
                    fps = next;
                    ty = *inner;
                }
                _ => {
                    let prefix = Path { base: path.base.clone(), ops: path.ops[..=k].to_vec() };
                    return vec![(format!("opaque:{prefix}"), Vec::new())];
                }
            }
        }
        fps
    }

    fn paths_conflict(&self, a: &Path, b: &Path) -> bool {
        let fa = self.resolve(a, &mut BTreeSet::new());
        let fb = self.resolve(b, &mut BTreeSet::new());
        fa.iter().any(|(ra, sa)| {
            fb.iter().any(|(rb, sb)| {
                let k = sa.len().min(sb.len());
                ra == rb && sa[..k] == sb[..k]
            })
        })
    }
}

/// Re-derives the access errors of one function by explicit enumeration.
/// Fails on bodies above the exhaustive-regime size.
pub fn oracle_access_errors_fn(
    tp: &TypedProgram,
    f: &FunctionDef,
) -> Result<Vec<AccessError>, TooLarge> {
    if f.body.len() > 12 {
        return Err(TooLarge);
    }
    let oracle = Oracle::new(tp, f);
    let typed = tp.typed(&f.name);
    let mut errors: Vec<AccessError> = Vec::new();

    // Borrow conflicts: for every loan and instruction, test liveness by
    // carrier walk and invalidation by conflicting access, read > write >
    // move. The issuing instruction never invalidates its own loan.
    for (site, target, qualifier) in &oracle.acc.loans {
        let carriers = oracle
            .carriers
            .iter()
            .find(|(s, _)| s == site)
            .map(|(_, c)| c.clone())
            .unwrap_or_default();
        let loan = crate::facts::LoanId {
            issued_at: InstructionId::new(&f.name, *site),
            path: target.clone(),
            qualifier: *qualifier,
            lifetime: typed.loan_lifetimes[site].clone(),
        };
        for i in 0..f.body.len() {
            if i == *site {
                continue;
            }
            if !carriers.iter().any(|v| oracle.var_live_at(v, i)) {
                continue;
            }
            let mut hit: Option<(Invalidation, Path)> = None;
            let consider = |kind: Invalidation,
                                list: &[(usize, Path)],
                                hit: &mut Option<(Invalidation, Path)>| {
                if hit.is_some() {
                    return;
                }
                let mut conflicting: Vec<&Path> = list
                    .iter()
                    .filter(|(j, p)| *j == i && oracle.paths_conflict(target, p))
                    .map(|(_, p)| p)
                    .collect();
                conflicting.sort();
                if let Some(p) = conflicting.first() {
                    *hit = Some((kind, (*p).clone()));
                }
            };
            if *qualifier == OwnershipQualifier::Unique {
                consider(Invalidation::ReadInvalid, &oracle.acc.reads, &mut hit);
            }
            consider(Invalidation::WriteInvalid, &oracle.acc.writes, &mut hit);
            consider(Invalidation::MoveInvalid, &oracle.acc.moves, &mut hit);
            if let Some((invalidation, path)) = hit {
                errors.push(AccessError::BorrowConflict {
                    at: InstructionId::new(&f.name, i),
                    loan: loan.clone(),
                    path,
                    invalidation,
                });
            }
        }
    }

    // Move conflicts: a read of a path overlapping some kill-free-reachable
    // move. Overlap here is syntactic prefix overlap, matching the
    // moved-before definition.
    let mut seen: BTreeSet<(usize, Path)> = BTreeSet::new();
    for (i, read) in &oracle.acc.reads {
        if seen.contains(&(*i, read.clone())) {
            continue;
        }
        let reached = oracle
            .acc
            .moves
            .iter()
            .any(|(j, moved)| moved.overlaps(read) && oracle.move_reaches(moved, *j, *i));
        if reached {
            seen.insert((*i, read.clone()));
            errors.push(AccessError::MoveConflict {
                at: InstructionId::new(&f.name, *i),
                path: read.clone(),
            });
        }
    }

    errors.sort_by(|a, b| (a.at().index, format!("{a}")).cmp(&(b.at().index, format!("{b}"))));
    errors.dedup();
    Ok(errors)
}

/// Whole-program oracle (spec surface): union over functions.
pub fn oracle_access_errors(tp: &TypedProgram) -> Result<Vec<AccessError>, TooLarge> {
    let mut out = Vec::new();
    for f in &tp.program.functions {
        out.extend(oracle_access_errors_fn(tp, f)?);
    }
    Ok(out)
}
