//! The access-error and subset-error judgments over a fact base.
//!
//! A borrow conflict is a loan that is simultaneously live and invalidated
//! at an instruction; a move conflict is a read of a path moved before the
//! instruction. Subset errors are required lifetime flows not covered by
//! the declared outlives constraints.

use crate::facts::{ConflictCtx, FactBase, LoanId, ProgramFacts};
use crate::lang::{FunctionDef, InstructionId, OwnershipQualifier, Path, TypedProgram};
use std::collections::BTreeSet;
use std::fmt;

/// How an instruction invalidates a loan. Report priority: a read beats a
/// write beats a move when several fire at once.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Invalidation {
    ReadInvalid,
    WriteInvalid,
    MoveInvalid,
}

impl fmt::Display for Invalidation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Invalidation::ReadInvalid => f.write_str("read"),
            Invalidation::WriteInvalid => f.write_str("write"),
            Invalidation::MoveInvalid => f.write_str("move"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum AccessError {
    /// A live loan invalidated by a conflicting access.
    BorrowConflict {
        at: InstructionId,
        loan: LoanId,
        /// The conflicting path accessed at `at`.
        path: Path,
        invalidation: Invalidation,
    },
    /// A read of a path that was moved on some path to this instruction.
    MoveConflict { at: InstructionId, path: Path },
}

impl AccessError {
    pub fn at(&self) -> &InstructionId {
        match self {
            AccessError::BorrowConflict { at, .. } | AccessError::MoveConflict { at, .. } => at,
        }
    }
}

impl fmt::Display for AccessError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AccessError::BorrowConflict { at, loan, path, invalidation } => write!(
                f,
                "{at}: borrow conflict: {invalidation} of `{path}` invalidates live loan {loan}"
            ),
            AccessError::MoveConflict { at, path } => {
                write!(f, "{at}: move conflict: `{path}` is used after being moved")
            }
        }
    }
}

/// A required outlives relation the signature does not declare.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct SubsetError {
    pub longer: String,
    pub shorter: String,
    pub at: InstructionId,
    pub path: Option<Path>,
}

impl fmt::Display for SubsetError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}: lifetime error: '{} must outlive '{} but the function does not declare '{} :> '{}",
            self.at, self.longer, self.shorter, self.longer, self.shorter
        )?;
        if let Some(p) = &self.path {
            write!(f, " (via `{p}`)")?;
        }
        Ok(())
    }
}

/// All `(loan, instruction, invalidation)` triples of one function. A read
/// of a conflicting path invalidates unique loans; a write or move of a
/// conflicting path invalidates loans of either qualifier. A loan is never
/// invalidated by the instruction that creates it.
pub fn invalidations(
    tp: &TypedProgram,
    fb: &FactBase,
) -> BTreeSet<(LoanId, InstructionId, Invalidation)> {
    let ctx = ConflictCtx::new(tp, fb);
    let mut out = BTreeSet::new();
    for loan in fb.loans() {
        let add =
            |accesses: &BTreeSet<(Path, InstructionId)>,
             kind: Invalidation,
             out: &mut BTreeSet<(LoanId, InstructionId, Invalidation)>| {
                for (path, at) in accesses {
                    if *at == loan.issued_at {
                        continue;
                    }
                    if ctx.conflicts(&loan.path, path) {
                        out.insert((loan.clone(), at.clone(), kind));
                    }
                }
            };
        if loan.qualifier == OwnershipQualifier::Unique {
            add(&fb.read_at, Invalidation::ReadInvalid, &mut out);
        }
        add(&fb.written_at, Invalidation::WriteInvalid, &mut out);
        add(&fb.moved_at, Invalidation::MoveInvalid, &mut out);
    }
    out
}

/// Access errors of one function, in deterministic order (instruction
/// index, then loan, then path). One diagnostic per `(loan, instruction)`
/// even when several invalidation rules fire; the reported sub-rule follows
/// the read > write > move priority.
pub fn access_errors(tp: &TypedProgram, fb: &FactBase) -> Vec<AccessError> {
    let ctx = ConflictCtx::new(tp, fb);
    let mut errors: Vec<AccessError> = Vec::new();

    let invalid = invalidations(tp, fb);
    let mut seen: BTreeSet<(LoanId, InstructionId)> = BTreeSet::new();
    for (loan, at, invalidation) in invalid {
        // BTreeSet order visits ReadInvalid before WriteInvalid before
        // MoveInvalid for the same (loan, at), so the first wins.
        if !fb.loan_live_at.contains(&(loan.clone(), at.clone())) {
            continue;
        }
        if !seen.insert((loan.clone(), at.clone())) {
            continue;
        }
        let path = match invalidation {
            Invalidation::ReadInvalid => &fb.read_at,
            Invalidation::WriteInvalid => &fb.written_at,
            Invalidation::MoveInvalid => &fb.moved_at,
        }
        .iter()
        .filter(|(p, i)| *i == at && ctx.conflicts(&loan.path, p))
        .map(|(p, _)| p.clone())
        .next()
        .unwrap_or_else(|| loan.path.clone());
        errors.push(AccessError::BorrowConflict { at, loan, path, invalidation });
    }

    for (path, at) in &fb.read_at {
        if fb.moved_before.contains(&(path.clone(), at.clone())) {
            errors.push(AccessError::MoveConflict { at: at.clone(), path: path.clone() });
        }
    }

    errors.sort_by(|a, b| {
        (a.at().index, format!("{a}")).cmp(&(b.at().index, format!("{b}")))
    });
    errors
}

/// Subset errors for one function: each required flow whose lifetime pair
/// is not in the reflexive-transitive closure of the declared outlives
/// constraints.
pub fn subset_errors(fb: &FactBase, sig: &FunctionDef) -> Vec<SubsetError> {
    let closure = outlives_closure(sig);
    let mut out = Vec::new();
    for (longer, shorter, path, at) in &fb.flows {
        if !closure.contains(&(longer.clone(), shorter.clone())) {
            out.push(SubsetError {
                longer: longer.clone(),
                shorter: shorter.clone(),
                at: at.clone(),
                path: Some(path.clone()),
            });
        }
    }
    out.sort();
    out
}

/// Reflexive-transitive closure of the declared outlives pairs.
fn outlives_closure(sig: &FunctionDef) -> BTreeSet<(String, String)> {
    let mut closure: BTreeSet<(String, String)> = sig.outlives.iter().cloned().collect();
    for lt in &sig.lifetime_params {
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
}

/// Every access and subset error of a program, per function.
pub fn check_program(tp: &TypedProgram, facts: &ProgramFacts) -> (Vec<AccessError>, Vec<SubsetError>) {
    let mut access = Vec::new();
    let mut subset = Vec::new();
    for f in &tp.program.functions {
        let fb = facts.get(&f.name);
        access.extend(access_errors(tp, fb));
        subset.extend(subset_errors(fb, f));
    }
    (access, subset)
}
