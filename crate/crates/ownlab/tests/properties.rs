//! Property tests over generated programs: structural invariants of the
//! analyses, the per-rule correspondence between the two checker models,
//! and runtime invariants of the interpreter.

use ownlab::diffcheck::{generate_program, FuzzConfig, Verdicts};
use ownlab::facts::{build_facts, conflicts, FactBase};
use ownlab::interp::{step, MachineState, StepOutcome};
use ownlab::lang::{
    parse_program, pretty_print, type_check, Instruction, InstructionId, LocalDecl, Path, Rvalue,
    TypedProgram,
};
use ownlab::perms::{
    expectations, missing_at, needs_at, steps, MissingCause, PermAnalysis, Permission,
};
use ownlab::polonius::{access_errors, AccessError, Invalidation};
use proptest::prelude::*;
use std::collections::BTreeMap;

fn typed_from_seed(seed: u64, cfg: fn(u64) -> FuzzConfig) -> TypedProgram {
    let program = generate_program(&cfg(seed));
    type_check(&program).expect("generated programs type-check")
}

/// Test-only liveness oracle: a loan is live at an instruction iff some
/// variable carrying its lifetime is used there or at an instruction
/// reachable from there without an intervening redefinition, enumerated by
/// explicit walks. Checks the dataflow fixpoint in `facts`.
mod liveness_oracle {
    use ownlab::facts::FactBase;
    use ownlab::lang::{FunctionDef, Instruction, InstructionId, Path, Rvalue};
    use std::collections::BTreeSet;

    fn uses_and_def(instr: &Instruction) -> (BTreeSet<String>, Option<String>) {
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
                            if let ownlab::lang::Operand::Path(p) = op {
                                touch(p, &mut uses);
                            }
                        }
                    }
                    Rvalue::Box(ownlab::lang::Operand::Path(p)) => touch(p, &mut uses),
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
            Instruction::Return { operand } | Instruction::Drop { operand } => {
                touch(operand, &mut uses)
            }
        }
        (uses, def)
    }

    fn live_by_walk(f: &FunctionDef, var: &str, at: usize) -> bool {
        let (uses, def) = uses_and_def(&f.body.instructions[at]);
        if uses.contains(var) {
            return true;
        }
        if def.as_deref() == Some(var) {
            return false;
        }
        let mut seen = BTreeSet::new();
        let mut stack = f.body.successors(at);
        while let Some(i) = stack.pop() {
            if !seen.insert(i) {
                continue;
            }
            let (uses, def) = uses_and_def(&f.body.instructions[i]);
            if uses.contains(var) {
                return true;
            }
            if def.as_deref() == Some(var) {
                continue;
            }
            stack.extend(f.body.successors(i));
        }
        false
    }

    /// Recomputes loan liveness from the carrying relation plus walks, and
    /// compares against the fact base.
    pub fn check(f: &FunctionDef, fb: &FactBase) {
        for loan in fb.loans() {
            let carriers: Vec<&String> = fb
                .carries
                .iter()
                .filter(|(_, lts)| lts.contains(&loan.lifetime))
                .map(|(v, _)| v)
                .collect();
            for i in 0..f.body.len() {
                let expected = carriers.iter().any(|v| live_by_walk(f, v, i));
                let got =
                    fb.loan_live_at.contains(&(loan.clone(), InstructionId::new(&f.name, i)));
                assert_eq!(
                    got, expected,
                    "loan {loan} liveness mismatch at {}:{i}",
                    f.name
                );
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 48, .. ProptestConfig::default() })]

    #[test]
    fn round_trip_is_identity(seed in 0u64..1_000_000) {
        let program = generate_program(&FuzzConfig::with_lifetimes(seed));
        let printed = pretty_print(&program);
        let reparsed = parse_program(&printed).expect("printed programs reparse");
        prop_assert_eq!(program, reparsed);
    }

    #[test]
    fn loan_liveness_matches_walk_oracle(seed in 0u64..1_000_000) {
        let tp = typed_from_seed(seed, FuzzConfig::oracle_sized);
        let facts = build_facts(&tp);
        for f in &tp.program.functions {
            liveness_oracle::check(f, facts.get(&f.name));
        }
    }

    #[test]
    fn conflicts_symmetric_and_reflexive(seed in 0u64..1_000_000) {
        let tp = typed_from_seed(seed, FuzzConfig::oracle_sized);
        for f in &tp.program.functions {
            let fb = build_facts(&tp);
            let fb = fb.get(&f.name);
            let paths: Vec<&Path> = fb.universe.iter().take(12).collect();
            for a in &paths {
                prop_assert!(conflicts(&tp, &f.name, a, a), "`{}` must conflict with itself", a);
                for b in &paths {
                    prop_assert_eq!(
                        conflicts(&tp, &f.name, a, b),
                        conflicts(&tp, &f.name, b, a),
                        "conflicts must be symmetric for `{}` and `{}`", a, b
                    );
                }
            }
        }
    }

    #[test]
    fn moved_before_is_monotone_until_killed(seed in 0u64..1_000_000) {
        let tp = typed_from_seed(seed, FuzzConfig::with_seed);
        let facts = build_facts(&tp);
        for f in &tp.program.functions {
            let fb = facts.get(&f.name);
            for (path, at) in &fb.moved_before {
                let reinit = match &f.body.instructions[at.index] {
                    Instruction::Assign { dest, .. } | Instruction::Call { dest, .. } => {
                        path == dest || path.extends(dest)
                    }
                    _ => false,
                };
                if reinit {
                    continue;
                }
                for succ in f.body.successors(at.index) {
                    prop_assert!(
                        fb.moved_before.contains(&(path.clone(), InstructionId::new(&f.name, succ))),
                        "moved-before `{}` not propagated from {} to {}", path, at, succ
                    );
                }
            }
        }
    }

    #[test]
    fn flows_mention_only_declared_lifetimes(seed in 0u64..1_000_000) {
        let tp = typed_from_seed(seed, FuzzConfig::with_lifetimes);
        let facts = build_facts(&tp);
        for f in &tp.program.functions {
            let fb = facts.get(&f.name);
            for (a, b, _, _) in &fb.flows {
                prop_assert!(f.lifetime_params.contains(a));
                prop_assert!(f.lifetime_params.contains(b));
            }
        }
    }

    #[test]
    fn permission_partition_is_total(seed in 0u64..1_000_000) {
        let tp = typed_from_seed(seed, FuzzConfig::with_seed);
        let facts = build_facts(&tp);
        for f in &tp.program.functions {
            let fb = facts.get(&f.name);
            let states = missing_at(&tp, fb);
            for state in &states {
                for path in &fb.universe {
                    for perm in Permission::DATA {
                        let has = state.has_perm(path, perm);
                        let missing = state.missing_cause(path, perm).is_some();
                        prop_assert!(has ^ missing, "partition broken for `{}` at {}", path, state.at);
                    }
                }
            }
        }
    }

    #[test]
    fn steps_telescope_along_every_edge(seed in 0u64..1_000_000) {
        let tp = typed_from_seed(seed, FuzzConfig::with_seed);
        let facts = build_facts(&tp);
        for f in &tp.program.functions {
            let analysis = PermAnalysis::compute(&tp, facts.get(&f.name));
            let all = steps(f, &analysis.states, None).unwrap();
            for step in &all {
                let folded =
                    ownlab::perms::apply_step(analysis.states[step.from.index].has.clone(), step);
                prop_assert_eq!(
                    &folded,
                    &analysis.states[step.to.index].has,
                    "edge {} -> {} does not telescope", &step.from, &step.to
                );
            }
        }
    }

    #[test]
    fn expectation_marks_mirror_missing(seed in 0u64..1_000_000) {
        let tp = typed_from_seed(seed, FuzzConfig::with_seed);
        let facts = build_facts(&tp);
        for f in &tp.program.functions {
            let fb = facts.get(&f.name);
            let analysis = PermAnalysis::compute(&tp, fb);
            let marks = expectations(&analysis.needs, &analysis.states, &BTreeMap::new());
            for mark in &marks {
                for (perm, satisfied) in &mark.satisfied {
                    let missing =
                        analysis.states[mark.at.index].missing_cause(&mark.path, *perm).is_some();
                    prop_assert_eq!(*satisfied, !missing);
                }
            }
        }
    }

    /// The per-rule correspondence behind the access-implies-permission
    /// theorem: a read invalidation implies a missing-R error at the same
    /// instruction, a write invalidation a missing-W error, a move
    /// invalidation a missing-O error, and a move conflict a missing-R
    /// error with the moved cause.
    #[test]
    fn per_rule_theorem_correspondence(seed in 0u64..1_000_000) {
        let tp = typed_from_seed(seed, FuzzConfig::with_lifetimes);
        let facts = build_facts(&tp);
        for f in &tp.program.functions {
            let fb = facts.get(&f.name);
            let access = access_errors(&tp, fb);
            if access.is_empty() {
                continue;
            }
            let analysis = PermAnalysis::compute(&tp, fb);
            let perm_errors = ownlab::perms::permission_errors(&analysis);
            for err in &access {
                match err {
                    AccessError::BorrowConflict { at, invalidation, .. } => {
                        let wanted = match invalidation {
                            Invalidation::ReadInvalid => Permission::R,
                            Invalidation::WriteInvalid => Permission::W,
                            Invalidation::MoveInvalid => Permission::O,
                        };
                        prop_assert!(
                            perm_errors.iter().any(|e| e.at == *at && e.perm == wanted),
                            "{} lacks a matching {} permission error\n{}",
                            err, wanted, pretty_print(&tp.program)
                        );
                    }
                    AccessError::MoveConflict { at, path } => {
                        prop_assert!(
                            perm_errors.iter().any(|e| e.at == *at
                                && e.path == *path
                                && e.perm == Permission::R
                                && e.cause == MissingCause::Moved),
                            "{} lacks a matching moved-R permission error\n{}",
                            err, pretty_print(&tp.program)
                        );
                    }
                }
            }
        }
    }

    /// Heap discipline along full executions: location ids are never
    /// reallocated, the live heap and freed set stay disjoint, and heap
    /// size changes only through boxes and drops.
    #[test]
    fn heap_discipline_holds_per_step(seed in 0u64..1_000_000) {
        let tp = typed_from_seed(seed, FuzzConfig::monomorphic);
        let mut state = MachineState::initial(&tp).unwrap();
        let mut retired: std::collections::BTreeSet<u64> = Default::default();
        for _ in 0..2_000 {
            let before: std::collections::BTreeSet<u64> =
                state.heap.keys().map(|l| l.0).collect();
            let pending_box = matches!(
                state.pending(&tp),
                Some((_, Instruction::Assign { rv: Rvalue::Box(_), .. }))
            );
            let pending_drop = matches!(state.pending(&tp), Some((_, Instruction::Drop { .. })));
            match step(state, &tp) {
                StepOutcome::Next(next) => {
                    prop_assert!(next.heap.keys().all(|k| !next.freed.contains(k)));
                    for loc in next.heap.keys().map(|l| l.0) {
                        prop_assert!(!retired.contains(&loc), "heap id k{} was reused", loc);
                    }
                    for gone in before.iter().filter(|l| !next.heap.contains_key(&ownlab::interp::HeapLoc(**l))) {
                        retired.insert(*gone);
                    }
                    if pending_box {
                        prop_assert_eq!(next.heap.len(), before.len() + 1);
                    } else if !pending_drop {
                        prop_assert!(next.heap.len() == before.len());
                    }
                    state = next;
                }
                _ => break,
            }
        }
    }

    /// A new use of a loan-carrying variable extends liveness; it can add
    /// borrow conflicts but never removes one.
    #[test]
    fn borrow_conflicts_are_monotone_under_new_uses(seed in 0u64..1_000_000) {
        let tp = typed_from_seed(seed, FuzzConfig::oracle_sized);
        let facts = build_facts(&tp);
        let f = tp.function("main");
        let fb = facts.get("main");
        let before: Vec<AccessError> = access_errors(&tp, fb)
            .into_iter()
            .filter(|e| matches!(e, AccessError::BorrowConflict { .. }))
            .collect();
        if before.is_empty() {
            return Ok(());
        }
        // Pick a loan-carrying variable and append a read of it right
        // before the final return.
        let Some(carrier) = fb
            .carries
            .iter()
            .find(|(_, lts)| !lts.is_empty())
            .map(|(v, _)| v.clone())
        else {
            return Ok(());
        };
        let carrier_ty = f.var_type(&carrier).unwrap().clone();
        let mut extended = tp.program.clone();
        {
            let f = &mut extended.functions.iter_mut().find(|g| g.name == "main").unwrap();
            f.locals.push(LocalDecl {
                name: "extra_use".into(),
                mutable: false,
                ty: carrier_ty,
            });
            let return_index = f.body.len() - 1;
            f.body.instructions.insert(
                return_index,
                Instruction::Assign {
                    dest: Path::var("extra_use"),
                    rv: Rvalue::Use(Path::var(carrier)),
                },
            );
            // Branch targets pointing at the old return now point at the
            // inserted read, which falls through to the return.
        }
        let Ok(tp2) = type_check(&extended) else {
            return Ok(());
        };
        let facts2 = build_facts(&tp2);
        let after = access_errors(&tp2, facts2.get("main"));
        for old in &before {
            prop_assert!(
                after.contains(old),
                "adding a use removed {}\n{}",
                old,
                pretty_print(&extended)
            );
        }
    }

    #[test]
    fn analyses_are_deterministic(seed in 0u64..1_000_000) {
        let tp = typed_from_seed(seed, FuzzConfig::with_lifetimes);
        let a = Verdicts::compute(&tp);
        let b = Verdicts::compute(&tp);
        prop_assert_eq!(a.access, b.access);
        prop_assert_eq!(a.subset, b.subset);
        prop_assert_eq!(a.perm, b.perm);
    }
}

/// The spec-level brute-force check that a structurally valid fall-through
/// never runs off the end: enumerate every CFG walk of bounded length on
/// small bodies and confirm each reaches a return (or loops).
#[test]
fn wf_off_end_brute_force() {
    for seed in 0..200u64 {
        let program = generate_program(&FuzzConfig::oracle_sized(seed));
        assert!(ownlab::lang::well_formed(&program).is_empty());
        for f in &program.functions {
            if f.body.len() > 16 {
                continue;
            }
            // Walk every path with a visited set; a walk must end at a
            // return instruction, never by falling past the end.
            let mut stack = vec![(0usize, Vec::<usize>::new())];
            while let Some((i, mut seen)) = stack.pop() {
                assert!(i < f.body.len(), "walk fell off the end in {}", f.name);
                if seen.contains(&i) {
                    continue;
                }
                seen.push(i);
                match &f.body.instructions[i] {
                    Instruction::Return { .. } => {}
                    _ => {
                        for s in f.body.successors(i) {
                            stack.push((s, seen.clone()));
                        }
                    }
                }
            }
        }
    }
}

/// Needs-at never demands W from a plain initializing write, while a
/// borrow-target write always needs W (checked over generated programs).
#[test]
fn needs_w_discipline() {
    for seed in 0..100u64 {
        let tp = type_check(&generate_program(&FuzzConfig::with_seed(seed))).unwrap();
        let facts = build_facts(&tp);
        for f in &tp.program.functions {
            let fb: &FactBase = facts.get(&f.name);
            let needs = needs_at(&tp, fb);
            for loan in fb.loans() {
                if loan.qualifier == ownlab::lang::OwnershipQualifier::Unique {
                    assert!(
                        needs.contains(&(loan.path.clone(), Permission::W, loan.issued_at.clone())),
                        "unique borrow target must need W: {loan}"
                    );
                }
            }
            for (path, perm, at) in &needs {
                if *perm != Permission::W || !path.is_var() {
                    continue;
                }
                let maybe_init = fb.var_maybe_init.contains(&(path.base.clone(), at.index));
                let is_loan_target = fb.loans().any(|l| l.issued_at == *at && l.path == *path);
                let states = missing_at(&tp, fb);
                let borrowed = matches!(
                    states[at.index].missing_cause(path, Permission::W),
                    Some(MissingCause::Borrowed(_))
                );
                assert!(
                    maybe_init || is_loan_target || borrowed,
                    "spurious W need for `{path}` at {at}"
                );
            }
        }
    }
}

/// Loan lifetimes are globally distinct across all loan sites.
#[test]
fn loan_lifetimes_are_fresh() {
    for seed in 0..100u64 {
        let tp = type_check(&generate_program(&FuzzConfig::with_lifetimes(seed))).unwrap();
        let mut seen = std::collections::BTreeSet::new();
        for f in &tp.program.functions {
            for lt in tp.typed(&f.name).loan_lifetimes.values() {
                assert!(seen.insert(lt.clone()), "duplicated loan lifetime {lt}");
                assert!(matches!(lt, ownlab::lang::Lifetime::Concrete(_)));
            }
        }
    }
}
