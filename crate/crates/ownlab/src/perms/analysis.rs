//! The needs-at and missing-at judgments and their intersection.

use super::{MissingCause, Permission, PermissionError, PermissionState};
use crate::facts::{ConflictCtx, FactBase};
use crate::lang::{InstructionId, LangType, OwnershipQualifier, Path, PathOp, TypedProgram};
use std::collections::{BTreeMap, BTreeSet};

/// What a path's declaration structurally allows: whether writes reach a
/// mutable root, and whether the value can be owned (moved or dropped)
/// through the path. Dereferencing a shared reference forbids writes;
/// dereferencing any reference forbids taking ownership; boxes are
/// transparent, deferring to their owner.
fn structural(tp: &TypedProgram, func: &str, path: &Path) -> (bool, bool) {
    let f = tp.function(func);
    let mut writable = f.var_is_mut(&path.base);
    let mut ownable = true;
    let Some(mut ty) = f.var_type(&path.base).cloned() else {
        return (writable, ownable);
    };
    for op in &path.ops {
        ty = match (op, ty) {
            (PathOp::Field(n), LangType::Tuple(parts)) => {
                parts.get(*n as usize).cloned().unwrap_or(LangType::U32)
            }
            (PathOp::Deref, LangType::Boxed(inner)) => *inner,
            (PathOp::Deref, LangType::Ref { qualifier, inner, .. }) => {
                writable = qualifier == OwnershipQualifier::Unique;
                ownable = false;
                *inner
            }
            (_, other) => other,
        };
    }
    (writable, ownable)
}

/// The four needs rules applied over the fact base: reads need R, writes
/// need W, moves need O, lifetime flows need F.
///
/// One refinement keeps initialization writable: a write to a bare,
/// possibly-uninitialized variable is the variable's initialization and
/// needs no W — unless a live loan conflicts with it, in which case the
/// write is still a mutation of borrowed state and keeps its W requirement.
/// A unique borrow's write classification always needs W.
pub fn needs_at(tp: &TypedProgram, fb: &FactBase) -> BTreeSet<(Path, Permission, InstructionId)> {
    let ctx = ConflictCtx::new(tp, fb);
    let mut needs = BTreeSet::new();
    for (p, at) in &fb.read_at {
        needs.insert((p.clone(), Permission::R, at.clone()));
    }
    for (p, at) in &fb.written_at {
        let is_loan_target = fb.loans().any(|l| {
            l.issued_at == *at && l.path == *p && l.qualifier == OwnershipQualifier::Unique
        });
        if !is_loan_target && p.is_var() && !fb.var_maybe_init.contains(&(p.base.clone(), at.index))
        {
            let conflicting_live_loan = fb
                .loans()
                .any(|l| fb.loan_is_live_at(l, at.index) && ctx.conflicts(&l.path, p));
            if !conflicting_live_loan {
                continue;
            }
        }
        needs.insert((p.clone(), Permission::W, at.clone()));
    }
    for (p, at) in &fb.moved_at {
        needs.insert((p.clone(), Permission::O, at.clone()));
    }
    for (_, _, p, at) in &fb.flows {
        needs.insert((p.clone(), Permission::F, at.clone()));
    }
    needs
}

/// The per-instruction permission states of one function.
///
/// Missing rules, in cause priority order:
/// * moved-before: R, W, O missing (`Moved`);
/// * a live loan on a conflicting path: W and O missing for either
///   qualifier, R additionally for unique loans (`Borrowed`);
/// * the declaration forbids it: W without a mutable root, O behind a
///   reference (`NotDeclaredMut`);
/// * outside the initialized, still-accessed window (`Uninitialized`).
///
/// F missing entries record unsatisfied lifetime flows (`MissingOutlives`).
pub fn missing_at(tp: &TypedProgram, fb: &FactBase) -> Vec<PermissionState> {
    let f = tp.function(&fb.func);
    let ctx = ConflictCtx::new(tp, fb);
    let n = f.body.len();

    let outlives = {
        let mut closure: BTreeSet<(String, String)> = fb.declared_outlives.clone();
        for lt in &f.lifetime_params {
            closure.insert((lt.clone(), lt.clone()));
        }
        let mut changed = true;
        while changed {
            changed = false;
            let pairs: Vec<_> = closure.iter().cloned().collect();
            for (a, b) in &pairs {
                for (c, d) in &pairs {
                    if b == c && closure.insert((a.clone(), d.clone())) {
                        changed = true;
                    }
                }
            }
        }
        closure
    };

    // Structural and loan-conflict data are instruction-independent;
    // compute them once over the universe.
    let loans: Vec<&crate::facts::LoanId> = fb.loans().collect();
    let loan_conflicts: Vec<std::collections::BTreeSet<crate::lang::Path>> =
        loans.iter().map(|l| ctx.conflicting_paths(&fb.universe, &l.path)).collect();
    let structurals: BTreeMap<&crate::lang::Path, (bool, bool)> =
        fb.universe.iter().map(|p| (p, structural(tp, &fb.func, p))).collect();

    let mut states = Vec::with_capacity(n);
    for index in 0..n {
        let at = InstructionId::new(&fb.func, index);
        let mut state = PermissionState { at: at.clone(), ..PermissionState::default() };
        let live_loans: Vec<usize> =
            (0..loans.len()).filter(|i| fb.loan_is_live_at(loans[*i], index)).collect();

        for path in &fb.universe {
            let mut missing: BTreeMap<Permission, MissingCause> = BTreeMap::new();
            let mut record = |perm: Permission, cause: MissingCause| match missing.get(&perm) {
                Some(prev) if prev.priority() <= cause.priority() => {}
                _ => {
                    missing.insert(perm, cause);
                }
            };

            // Outside the initialized-and-still-accessed window. Both ends
            // read as "not usable here": before the first initialization and
            // after the last access of the base variable.
            let born = fb.var_must_init.contains(&(path.base.clone(), index));
            let accessed_later = fb.var_access_live.contains(&(path.base.clone(), index));
            if !born || !accessed_later {
                for perm in Permission::DATA {
                    record(perm, MissingCause::Uninitialized);
                }
            }

            let (writable, ownable) = structurals[path];
            if !writable {
                record(Permission::W, MissingCause::NotDeclaredMut);
            }
            if !ownable {
                record(Permission::O, MissingCause::NotDeclaredMut);
            }

            for &li in &live_loans {
                if loan_conflicts[li].contains(path) {
                    let loan = loans[li];
                    record(Permission::W, MissingCause::Borrowed(loan.clone()));
                    record(Permission::O, MissingCause::Borrowed(loan.clone()));
                    if loan.qualifier == OwnershipQualifier::Unique {
                        record(Permission::R, MissingCause::Borrowed(loan.clone()));
                    }
                }
            }

            if fb.moved_before.contains(&(path.clone(), at.clone())) {
                for perm in Permission::DATA {
                    record(perm, MissingCause::Moved);
                }
            }

            let has: BTreeSet<Permission> =
                Permission::DATA.into_iter().filter(|p| !missing.contains_key(p)).collect();
            if !has.is_empty() {
                state.has.insert(path.clone(), has);
            } else {
                state.has.insert(path.clone(), BTreeSet::new());
            }
            if !missing.is_empty() {
                state.missing.insert(path.clone(), missing);
            }
        }

        // Unsatisfied lifetime flows surface as missing F on the blamed path.
        for (longer, shorter, path, flow_at) in &fb.flows {
            if flow_at.index == index && !outlives.contains(&(longer.clone(), shorter.clone())) {
                state
                    .missing
                    .entry(path.clone())
                    .or_default()
                    .insert(Permission::F, MissingCause::MissingOutlives(longer.clone(), shorter.clone()));
            }
        }

        states.push(state);
    }
    states
}

/// A function's full permission analysis.
pub struct PermAnalysis {
    pub func: String,
    pub needs: BTreeSet<(Path, Permission, InstructionId)>,
    pub states: Vec<PermissionState>,
}

impl PermAnalysis {
    pub fn compute(tp: &TypedProgram, fb: &FactBase) -> PermAnalysis {
        PermAnalysis {
            func: fb.func.clone(),
            needs: needs_at(tp, fb),
            states: missing_at(tp, fb),
        }
    }
}

/// Permission errors: one per needed-but-missing `(path, permission,
/// instruction)`, in deterministic order (instruction, then path text, then
/// permission).
pub fn permission_errors(analysis: &PermAnalysis) -> Vec<PermissionError> {
    let mut errors = Vec::new();
    for (path, perm, at) in &analysis.needs {
        if let Some(cause) = analysis.states[at.index].missing_cause(path, *perm) {
            errors.push(PermissionError {
                at: at.clone(),
                path: path.clone(),
                perm: *perm,
                cause: cause.clone(),
            });
        }
    }
    errors.sort_by(|a, b| {
        (a.at.index, a.path.to_string(), a.perm).cmp(&(b.at.index, b.path.to_string(), b.perm))
    });
    errors
}
