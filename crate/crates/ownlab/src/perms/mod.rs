//! The permissions model: per-instruction permission states on paths, the
//! needs/missing judgments, step diffs between analysis boundaries, and
//! expectation marks.
//!
//! A path needs R when read, W when written, O when moved, and F when an
//! instruction requires a lifetime flow. A path is missing permissions when
//! it is outside its initialized window, conflicts with a live loan, was
//! moved, or its declaration forbids the permission. A permission error is
//! a needed permission that is missing.

mod analysis;
mod steps;

pub use analysis::{missing_at, needs_at, permission_errors, PermAnalysis};
pub use steps::{apply_step, steps, PermStep, StepCause, StepChange};

use crate::facts::LoanId;
use crate::lang::{InstructionId, Path};
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Permission {
    R,
    W,
    O,
    F,
}

impl Permission {
    pub const DATA: [Permission; 3] = [Permission::R, Permission::W, Permission::O];

    pub fn letter(&self) -> char {
        match self {
            Permission::R => 'R',
            Permission::W => 'W',
            Permission::O => 'O',
            Permission::F => 'F',
        }
    }
}

impl fmt::Display for Permission {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.letter())
    }
}

/// Why a permission is missing. When several rules fire the recorded cause
/// follows the priority `Moved > Borrowed > NotDeclaredMut > Uninitialized`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum MissingCause {
    Uninitialized,
    Borrowed(LoanId),
    Moved,
    NotDeclaredMut,
    MissingOutlives(String, String),
}

impl MissingCause {
    pub(crate) fn priority(&self) -> u8 {
        match self {
            MissingCause::Moved => 0,
            MissingCause::Borrowed(_) => 1,
            MissingCause::NotDeclaredMut => 2,
            MissingCause::Uninitialized => 3,
            MissingCause::MissingOutlives(..) => 4,
        }
    }
}

impl fmt::Display for MissingCause {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MissingCause::Uninitialized => f.write_str("uninitialized"),
            MissingCause::Borrowed(l) => write!(f, "borrowed by {l}"),
            MissingCause::Moved => f.write_str("moved"),
            MissingCause::NotDeclaredMut => f.write_str("not declared mut"),
            MissingCause::MissingOutlives(a, b) => write!(f, "missing '{a} :> '{b}"),
        }
    }
}

/// The permission state at one instruction: for every tracked path and every
/// data permission (R, W, O), the permission is either in `has` or in
/// `missing` with a cause. F entries appear in `missing` only for paths with
/// unsatisfied flows; F never enters the complement.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct PermissionState {
    pub at: InstructionId,
    pub has: BTreeMap<Path, BTreeSet<Permission>>,
    pub missing: BTreeMap<Path, BTreeMap<Permission, MissingCause>>,
}

impl PermissionState {
    pub fn has_perm(&self, path: &Path, perm: Permission) -> bool {
        self.has.get(path).map(|s| s.contains(&perm)).unwrap_or(false)
    }

    pub fn missing_cause(&self, path: &Path, perm: Permission) -> Option<&MissingCause> {
        self.missing.get(path).and_then(|m| m.get(&perm))
    }
}

/// A needed permission that is missing at an instruction.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct PermissionError {
    pub at: InstructionId,
    pub path: Path,
    pub perm: Permission,
    pub cause: MissingCause,
}

impl fmt::Display for PermissionError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}: permission error: `{}` needs {} but the permission is missing ({})",
            self.at, self.path, self.perm, self.cause
        )
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum MarkStyle {
    #[default]
    Letter,
    Circle,
}

/// An inline annotation: the permissions an operation expects from one of
/// its path operands, and whether each is present.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ExpectationMark {
    pub at: InstructionId,
    pub path: Path,
    pub expected: BTreeSet<Permission>,
    pub satisfied: BTreeMap<Permission, bool>,
    pub style: MarkStyle,
}

impl ExpectationMark {
    pub fn all_satisfied(&self) -> bool {
        self.satisfied.values().all(|s| *s)
    }
}

/// One expectation mark per `(instruction, path)` with a needed permission.
/// `satisfied` mirrors the missing relation at that instruction. Styles
/// default to letters and can be overridden per mark.
pub fn expectations(
    needs: &BTreeSet<(Path, Permission, InstructionId)>,
    states: &[PermissionState],
    style_overrides: &BTreeMap<(InstructionId, Path), MarkStyle>,
) -> Vec<ExpectationMark> {
    let mut grouped: BTreeMap<(InstructionId, Path), BTreeSet<Permission>> = BTreeMap::new();
    for (path, perm, at) in needs {
        grouped.entry((at.clone(), path.clone())).or_default().insert(*perm);
    }
    grouped
        .into_iter()
        .map(|((at, path), expected)| {
            let state = &states[at.index];
            let satisfied = expected
                .iter()
                .map(|p| (*p, state.missing_cause(&path, *p).is_none()))
                .collect();
            let style =
                style_overrides.get(&(at.clone(), path.clone())).copied().unwrap_or_default();
            ExpectationMark { at, path, expected, satisfied, style }
        })
        .collect()
}

#[cfg(test)]
mod tests;
