//! Relational facts shared by both checker models: reads, writes, moves,
//! loan issuance and liveness, moved-before, path conflicts, and lifetime
//! flows. All relations are intra-function; a call contributes facts at the
//! call site from the callee's signature only, never from its body.

mod conflicts;
mod extract;
mod flows;
mod init;
mod liveness;
mod moved;

pub use conflicts::{conflicts, ConflictCtx};

use crate::lang::{
    InstructionId, LangType, Lifetime, OwnershipQualifier, Path, TypedProgram,
};
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::fmt::Write as _;

/// One loan expression occurrence, identified by its issuing instruction.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct LoanId {
    pub issued_at: InstructionId,
    pub path: Path,
    pub qualifier: OwnershipQualifier,
    /// The fresh concrete lifetime assigned at type check.
    pub lifetime: Lifetime,
}

impl fmt::Display for LoanId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "&{} {} @ {}", self.qualifier, self.path, self.issued_at)
    }
}

/// Per-function fact base.
#[derive(Clone, Debug, Default)]
pub struct FactBase {
    pub func: String,
    pub read_at: BTreeSet<(Path, InstructionId)>,
    pub written_at: BTreeSet<(Path, InstructionId)>,
    pub moved_at: BTreeSet<(Path, InstructionId)>,
    pub moved_before: BTreeSet<(Path, InstructionId)>,
    pub loan_issued_at: BTreeSet<(LoanId, InstructionId)>,
    pub loan_live_at: BTreeSet<(LoanId, InstructionId)>,
    /// `(lt1, lt2, path, instr)`: the instruction requires abstract lifetime
    /// `lt1` to outlive `lt2`, blamed on `path`.
    pub flows: BTreeSet<(String, String, Path, InstructionId)>,
    pub declared_outlives: BTreeSet<(String, String)>,

    // Shared auxiliary judgments used by the permission state computation.
    /// Variable may be initialized entering the instruction.
    pub var_maybe_init: BTreeSet<(String, usize)>,
    /// Variable is initialized entering the instruction on every path.
    pub var_must_init: BTreeSet<(String, usize)>,
    /// Variable is accessed (read, written, moved, borrowed) at the
    /// instruction or somewhere reachable from it.
    pub var_access_live: BTreeSet<(String, usize)>,
    /// Loan lifetimes each variable may carry, flow-insensitively.
    pub carries: BTreeMap<String, BTreeSet<Lifetime>>,

    /// Every path the analyses track: declared variables, their tuple
    /// sub-paths, and all textual paths with their prefixes.
    pub universe: BTreeSet<Path>,
}

impl FactBase {
    pub fn loans(&self) -> impl Iterator<Item = &LoanId> {
        self.loan_issued_at.iter().map(|(l, _)| l)
    }

    pub fn loan_is_live_at(&self, loan: &LoanId, index: usize) -> bool {
        self.loan_live_at.contains(&(loan.clone(), InstructionId::new(&self.func, index)))
    }

    /// Serializes the fact base as sorted, line-delimited tuples, one
    /// relation per section, in the shape of Datalog input facts.
    pub fn export(&self) -> String {
        let mut out = String::new();
        writeln!(out, "## function {}", self.func).unwrap();

        let path_rel = |out: &mut String, name: &str, rel: &BTreeSet<(Path, InstructionId)>| {
            writeln!(out, "# {name}").unwrap();
            for (p, i) in rel {
                writeln!(out, "{name}(\"{p}\", {i})").unwrap();
            }
        };
        path_rel(&mut out, "read_at", &self.read_at);
        path_rel(&mut out, "written_at", &self.written_at);
        path_rel(&mut out, "moved_at", &self.moved_at);
        path_rel(&mut out, "moved_before", &self.moved_before);

        writeln!(out, "# loan_issued_at").unwrap();
        for (l, i) in &self.loan_issued_at {
            writeln!(out, "loan_issued_at(\"{l}\", {i})").unwrap();
        }
        writeln!(out, "# loan_live_at").unwrap();
        for (l, i) in &self.loan_live_at {
            writeln!(out, "loan_live_at(\"{l}\", {i})").unwrap();
        }
        writeln!(out, "# flows").unwrap();
        for (a, b, p, i) in &self.flows {
            writeln!(out, "flows('{a}, '{b}, \"{p}\", {i})").unwrap();
        }
        writeln!(out, "# declared_outlives").unwrap();
        for (a, b) in &self.declared_outlives {
            writeln!(out, "declared_outlives('{a}, '{b})").unwrap();
        }
        out
    }
}

/// Fact bases for every function in a program.
#[derive(Clone, Debug, Default)]
pub struct ProgramFacts {
    pub per_fn: BTreeMap<String, FactBase>,
}

impl ProgramFacts {
    pub fn get(&self, func: &str) -> &FactBase {
        &self.per_fn[func]
    }

    pub fn export(&self) -> String {
        let mut out = String::new();
        for fb in self.per_fn.values() {
            out.push_str(&fb.export());
        }
        out
    }
}

/// The tracked-path universe of a function: declared names, their recursive
/// tuple sub-paths, and every textual path plus its prefixes. Deref paths
/// enter only by occurring in the program text.
pub fn tracked_universe(tp: &TypedProgram, func: &str) -> BTreeSet<Path> {
    let f = tp.function(func);
    let mut universe: BTreeSet<Path> = BTreeSet::new();
    for p in f.params.iter().map(|p| p.name.clone()).chain(f.locals.iter().map(|l| l.name.clone())) {
        universe.insert(Path::var(p));
    }
    for instr in &f.body.instructions {
        for p in crate::lang::instruction_paths(instr) {
            for prefix in p.prefixes() {
                universe.insert(prefix);
            }
        }
    }
    // Close under tuple-field expansion.
    let mut frontier: Vec<Path> = universe.iter().cloned().collect();
    while let Some(p) = frontier.pop() {
        if let Some(LangType::Tuple(parts)) = tp.type_of(func, &p) {
            for i in 0..parts.len() {
                let child = p.clone().field(i as u32);
                if universe.insert(child.clone()) {
                    frontier.push(child);
                }
            }
        }
    }
    universe
}

/// The reads, writes, and moves of a program (spec surface; also computed
/// as part of [`build_facts`]).
pub type AccessSets = (
    BTreeSet<(Path, InstructionId)>,
    BTreeSet<(Path, InstructionId)>,
    BTreeSet<(Path, InstructionId)>,
);

/// Extracts `(read_at, written_at, moved_at)` for every function.
pub fn extract_accesses(tp: &TypedProgram) -> AccessSets {
    let mut reads = BTreeSet::new();
    let mut writes = BTreeSet::new();
    let mut moves = BTreeSet::new();
    for f in &tp.program.functions {
        let acc = extract::extract_function(tp, &f.name);
        reads.extend(acc.read_at);
        writes.extend(acc.written_at);
        moves.extend(acc.moved_at);
    }
    (reads, writes, moves)
}

/// Computes `loan_live_at` for every function.
pub fn compute_loan_liveness(tp: &TypedProgram) -> BTreeSet<(LoanId, InstructionId)> {
    build_facts(tp).per_fn.into_values().flat_map(|fb| fb.loan_live_at).collect()
}

/// Computes `moved_before` for every function.
pub fn compute_moved_before(tp: &TypedProgram) -> BTreeSet<(Path, InstructionId)> {
    build_facts(tp).per_fn.into_values().flat_map(|fb| fb.moved_before).collect()
}

/// Computes lifetime flows for every function.
pub fn compute_flows(tp: &TypedProgram) -> BTreeSet<(String, String, Path, InstructionId)> {
    build_facts(tp).per_fn.into_values().flat_map(|fb| fb.flows).collect()
}

/// Builds the complete fact base for one function.
pub fn build_function_facts(tp: &TypedProgram, func: &str) -> FactBase {
    let f = tp.function(func);
    let mut fb = FactBase { func: func.to_string(), ..FactBase::default() };

    let acc = extract::extract_function(tp, func);
    fb.read_at = acc.read_at;
    fb.written_at = acc.written_at;
    fb.moved_at = acc.moved_at;
    fb.loan_issued_at = acc.loans;

    fb.universe = tracked_universe(tp, func);
    fb.declared_outlives = f.outlives.iter().cloned().collect();

    let (maybe, must) = init::initialization(f);
    fb.var_maybe_init = maybe;
    fb.var_must_init = must;

    let live = liveness::Liveness::compute(f);
    fb.var_access_live = live.access_live.clone();
    fb.carries = liveness::carries(tp, func);
    fb.loan_live_at = liveness::loan_liveness(&fb, &live);

    fb.moved_before = moved::moved_before(f, &fb.moved_at, &fb.universe);
    fb.flows = flows::flows(tp, func);

    debug_assert!(fb.loan_live_at.iter().all(|(_, i)| i.func == func));
    fb
}

/// Builds fact bases for every function of a type-checked program, with the
/// component relations cross-validated in debug builds.
pub fn build_facts(tp: &TypedProgram) -> ProgramFacts {
    let mut per_fn = BTreeMap::new();
    for f in &tp.program.functions {
        per_fn.insert(f.name.clone(), build_function_facts(tp, &f.name));
    }
    ProgramFacts { per_fn }
}

#[cfg(test)]
mod tests;
