//! Permission steps: the per-path difference in permission state between
//! two analysis boundaries, annotated with a cause icon. Default boundaries
//! are the CFG edges, so a step caused by a branch is attached to the edge
//! rather than to an instruction.

use super::{MissingCause, Permission, PermissionState};
use crate::lang::{Diagnostic, FunctionDef, InstructionId, Path};
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

/// Why a path's permissions changed across a step.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum StepCause {
    /// First initialization brought the path to life.
    Birth,
    /// A loan took the permissions away.
    BorrowStart,
    /// The variable's live range ended.
    Death,
    /// A loan ended and the permissions came back.
    Regain,
    /// The value was moved out.
    MovedOut,
}

impl fmt::Display for StepCause {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StepCause::Birth => f.write_str("birth"),
            StepCause::BorrowStart => f.write_str("borrow"),
            StepCause::Death => f.write_str("death"),
            StepCause::Regain => f.write_str("regain"),
            StepCause::MovedOut => f.write_str("moved out"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StepChange {
    pub gains: BTreeSet<Permission>,
    pub losses: BTreeSet<Permission>,
    pub cause: StepCause,
}

/// The permission-state difference across one boundary.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PermStep {
    pub from: InstructionId,
    pub to: InstructionId,
    /// True when the boundary is a branch edge rather than fall-through.
    pub branch_edge: bool,
    pub changes: BTreeMap<Path, StepChange>,
}

impl PermStep {
    pub fn is_empty(&self) -> bool {
        self.changes.is_empty()
    }
}

fn classify(
    gains: &BTreeSet<Permission>,
    losses: &BTreeSet<Permission>,
    path: &Path,
    pre: &PermissionState,
    post: &PermissionState,
) -> StepCause {
    // Loss causes dominate gain causes when a path both gains and loses.
    if !losses.is_empty() {
        let causes: Vec<&MissingCause> =
            losses.iter().filter_map(|p| post.missing_cause(path, *p)).collect();
        if causes.iter().any(|c| matches!(c, MissingCause::Moved)) {
            return StepCause::MovedOut;
        }
        if causes.iter().any(|c| matches!(c, MissingCause::Borrowed(_))) {
            return StepCause::BorrowStart;
        }
        return StepCause::Death;
    }
    let regained = gains.iter().any(|p| {
        matches!(pre.missing_cause(path, *p), Some(MissingCause::Borrowed(_) | MissingCause::Moved))
    });
    if regained {
        StepCause::Regain
    } else {
        StepCause::Birth
    }
}

fn diff(pre: &PermissionState, post: &PermissionState, branch_edge: bool) -> PermStep {
    let mut changes = BTreeMap::new();
    let paths: BTreeSet<&Path> = pre.has.keys().chain(post.has.keys()).collect();
    for path in paths {
        let before = pre.has.get(path).cloned().unwrap_or_default();
        let after = post.has.get(path).cloned().unwrap_or_default();
        let gains: BTreeSet<Permission> = after.difference(&before).copied().collect();
        let losses: BTreeSet<Permission> = before.difference(&after).copied().collect();
        if gains.is_empty() && losses.is_empty() {
            continue;
        }
        let cause = classify(&gains, &losses, path, pre, post);
        changes.insert(path.clone(), StepChange { gains, losses, cause });
    }
    PermStep { from: pre.at.clone(), to: post.at.clone(), branch_edge, changes }
}

/// Computes permission steps.
///
/// With no boundary list, one step per CFG edge in instruction order; edges
/// that are not simple fall-throughs are flagged as branch edges. A custom
/// boundary list must be ordered and non-overlapping; its steps compare the
/// states at the two named instructions.
pub fn steps(
    f: &FunctionDef,
    states: &[PermissionState],
    boundaries: Option<&[(usize, usize)]>,
) -> Result<Vec<PermStep>, Diagnostic> {
    let n = states.len();
    match boundaries {
        None => {
            let mut out = Vec::new();
            for i in 0..n {
                for s in f.body.successors(i) {
                    if s >= n {
                        continue;
                    }
                    let branch = s != i + 1
                        || matches!(f.body.instructions[i], crate::lang::Instruction::If { .. });
                    out.push(diff(&states[i], &states[s], branch));
                }
            }
            Ok(out)
        }
        Some(list) => {
            let mut prev_end = 0usize;
            let mut out = Vec::new();
            for (i, &(from, to)) in list.iter().enumerate() {
                if from >= to || to >= n || (i > 0 && from < prev_end) {
                    return Err(Diagnostic::in_func(
                        format!("invalid boundary list entry ({from}, {to})"),
                        &f.name,
                    ));
                }
                prev_end = to;
                out.push(diff(&states[from], &states[to], false));
            }
            Ok(out)
        }
    }
}

/// Applies a step to a has-state, yielding the post-boundary has-state.
/// Folding all steps along any CFG path from the entry reconstructs the
/// state at every boundary exactly.
pub fn apply_step(
    mut has: BTreeMap<Path, BTreeSet<Permission>>,
    step: &PermStep,
) -> BTreeMap<Path, BTreeSet<Permission>> {
    for (path, change) in &step.changes {
        let entry = has.entry(path.clone()).or_default();
        for p in &change.losses {
            entry.remove(p);
        }
        for p in &change.gains {
            entry.insert(*p);
        }
    }
    has
}
