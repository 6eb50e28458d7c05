use super::*;
use crate::facts::build_facts;
use crate::lang::{parse_program, type_check, InstructionId, Path, TypedProgram};
use std::collections::BTreeMap;

fn typed(src: &str) -> TypedProgram {
    type_check(&parse_program(src).unwrap()).unwrap()
}

fn analyze(src: &str, func: &str) -> (TypedProgram, PermAnalysis) {
    let tp = typed(src);
    let facts = build_facts(&tp);
    let analysis = PermAnalysis::compute(&tp, facts.get(func));
    (tp, analysis)
}

const LOAN_CONFLICT: &str = "fn main() -> (u32, u32) { \
    let mut x: (u32, u32); let y: &'r shared (u32, u32); let z: (u32, u32); \
    0: x = (0, 0); 1: y = &shared x; 2: x.0 = 1; 3: z = *y; 4: return z; }";

const MOVE_CONFLICT: &str = "fn main() -> u32 { \
    let x: box u32; let y: box u32; let z: u32; \
    0: x = box 0; 1: y = x; 2: z = *x; 3: return z; }";

const BOX_BORROW: &str = "fn main() -> (u32, u32) { \
    let mut x: box u32; let y: &'r shared u32; let z: u32; let w: u32; let r: (u32, u32); \
    0: x = box 0; 1: y = &shared *x; 2: z = *y; 3: w = *x; 4: r = (z, w); 5: return r; }";

fn at(i: usize) -> InstructionId {
    InstructionId::new("main", i)
}

#[test]
fn needs_of_loan_conflict() {
    let (_, a) = analyze(LOAN_CONFLICT, "main");
    assert!(a.needs.contains(&(Path::var("x").field(0), Permission::W, at(2))));
    assert!(a.needs.contains(&(Path::var("y").deref(), Permission::R, at(3))));
    // initializing writes need no W
    assert!(!a.needs.contains(&(Path::var("x"), Permission::W, at(0))));
    assert!(!a.needs.contains(&(Path::var("y"), Permission::W, at(1))));
}

#[test]
fn drop_needs_ownership() {
    let (_, a) = analyze(
        "fn main() -> u32 { let x: box u32; let r: u32; 0: x = box 1; 1: drop x; 2: r = 0; 3: return r; }",
        "main",
    );
    assert!(a.needs.contains(&(Path::var("x"), Permission::O, at(1))));
}

#[test]
fn id_body_needs_flow_permission() {
    let (_, a) = analyze(
        "fn id<'a, 'b>(x: &'a unique u32) -> &'b unique u32 { let y: &'a unique u32; 0: y = x; 1: return y; }\n\
         fn main() -> u32 { let r: u32; 0: r = 0; 1: return r; }",
        "id",
    );
    assert!(a.needs.contains(&(Path::var("y"), Permission::F, InstructionId::new("id", 1))));
}

#[test]
fn borrow_removes_write_own_from_conflicting_paths() {
    let (_, a) = analyze(LOAN_CONFLICT, "main");
    let state = &a.states[2];
    for path in [Path::var("x"), Path::var("x").field(0)] {
        for perm in [Permission::W, Permission::O] {
            match state.missing_cause(&path, perm) {
                Some(MissingCause::Borrowed(_)) => {}
                other => panic!("expected `{path}` missing {perm} as borrowed, got {other:?}"),
            }
        }
        assert!(state.has_perm(&path, Permission::R), "`{path}` keeps R under a shared loan");
    }
}

#[test]
fn moved_box_loses_everything() {
    let (_, a) = analyze(MOVE_CONFLICT, "main");
    let state = &a.states[2];
    for perm in Permission::DATA {
        match state.missing_cause(&Path::var("x"), perm) {
            Some(MissingCause::Moved) => {}
            other => panic!("expected x missing {perm} as moved, got {other:?}"),
        }
    }
}

#[test]
fn unmutable_local_misses_w_everywhere() {
    let (_, a) = analyze(
        "fn main() -> u32 { let x: u32; let r: u32; 0: x = 1; 1: r = x; 2: return r; }",
        "main",
    );
    for state in &a.states {
        match state.missing_cause(&Path::var("x"), Permission::W) {
            Some(MissingCause::NotDeclaredMut) | Some(MissingCause::Uninitialized) => {}
            other => panic!("expected x missing W, got {other:?} at {}", state.at),
        }
    }
    assert!(matches!(
        a.states[1].missing_cause(&Path::var("x"), Permission::W),
        Some(MissingCause::NotDeclaredMut)
    ));
}

#[test]
fn loan_conflict_has_exactly_one_permission_error() {
    let (_, a) = analyze(LOAN_CONFLICT, "main");
    let errors = permission_errors(&a);
    assert_eq!(errors.len(), 1, "{errors:?}");
    assert_eq!(errors[0].path, Path::var("x").field(0));
    assert_eq!(errors[0].perm, Permission::W);
    assert!(matches!(errors[0].cause, MissingCause::Borrowed(_)));
    assert_eq!(errors[0].at.index, 2);
}

#[test]
fn move_conflict_has_exactly_one_permission_error() {
    let (_, a) = analyze(MOVE_CONFLICT, "main");
    let errors = permission_errors(&a);
    assert_eq!(errors.len(), 1, "{errors:?}");
    assert_eq!(errors[0].path, Path::var("x").deref());
    assert_eq!(errors[0].perm, Permission::R);
    assert_eq!(errors[0].cause, MissingCause::Moved);
}

#[test]
fn well_behaved_program_is_clean() {
    let (_, a) = analyze(
        "fn main() -> u32 { let mut a: u32; let b: u32; 0: a = 1; 1: a = 2; 2: b = a; 3: return b; }",
        "main",
    );
    assert!(permission_errors(&a).is_empty());
}

#[test]
fn has_missing_partition_is_total() {
    for src in [LOAN_CONFLICT, MOVE_CONFLICT, BOX_BORROW] {
        let (tp, a) = analyze(src, "main");
        let facts = build_facts(&tp);
        for state in &a.states {
            for path in &facts.get("main").universe {
                for perm in Permission::DATA {
                    let has = state.has_perm(path, perm);
                    let missing = state.missing_cause(path, perm).is_some();
                    assert!(
                        has ^ missing,
                        "partition violated for `{path}` {perm} at {}",
                        state.at
                    );
                }
            }
        }
    }
}

#[test]
fn box_borrow_step_narrative() {
    let (tp, a) = analyze(BOX_BORROW, "main");
    let f = tp.function("main");
    let steps = steps(f, &a.states, None).unwrap();

    let x = Path::var("x");
    let y = Path::var("y");
    let star_y = Path::var("y").deref();

    // after `x = box 0`: x comes to life with R, W, O
    let s0 = &steps[0];
    let cx = &s0.changes[&x];
    assert_eq!(cx.cause, StepCause::Birth);
    assert_eq!(cx.gains.len(), 3);

    // after `y = &shared *x`: x loses W and O to the borrow, y gains R and O,
    // *y gains R
    let s1 = &steps[1];
    let cx = &s1.changes[&x];
    assert_eq!(cx.cause, StepCause::BorrowStart);
    assert_eq!(cx.losses.iter().collect::<Vec<_>>(), vec![&Permission::W, &Permission::O]);
    let cy = &s1.changes[&y];
    assert_eq!(cy.gains.iter().collect::<Vec<_>>(), vec![&Permission::R, &Permission::O]);
    let csy = &s1.changes[&star_y];
    assert_eq!(csy.gains.iter().collect::<Vec<_>>(), vec![&Permission::R]);

    // after y's last use: y dies, x regains W and O
    let s2 = &steps[2];
    let cy = &s2.changes[&y];
    assert_eq!(cy.cause, StepCause::Death);
    assert_eq!(cy.losses.iter().collect::<Vec<_>>(), vec![&Permission::R, &Permission::O]);
    let cx = &s2.changes[&x];
    assert_eq!(cx.cause, StepCause::Regain);
    assert_eq!(cx.gains.iter().collect::<Vec<_>>(), vec![&Permission::W, &Permission::O]);
}

#[test]
fn step_telescoping_reconstructs_states() {
    for src in [LOAN_CONFLICT, MOVE_CONFLICT, BOX_BORROW] {
        let (tp, a) = analyze(src, "main");
        let f = tp.function("main");
        let all = steps(f, &a.states, None).unwrap();
        // Walk the fall-through chain of this straight-line code, folding
        // each step onto the entry state.
        let mut has = a.states[0].has.clone();
        for step in &all {
            assert_eq!(has, a.states[step.from.index].has, "pre-state mismatch at {}", step.from);
            has = apply_step(has, step);
            assert_eq!(has, a.states[step.to.index].has, "post-state mismatch at {}", step.to);
        }
    }
}

#[test]
fn moved_out_step_cause() {
    let (tp, a) = analyze(MOVE_CONFLICT, "main");
    let f = tp.function("main");
    let steps = steps(f, &a.states, None).unwrap();
    let cx = &steps[1].changes[&Path::var("x")];
    assert_eq!(cx.cause, StepCause::MovedOut);
    assert!(cx.losses.contains(&Permission::R));
}

#[test]
fn custom_boundaries_validate() {
    let (tp, a) = analyze(BOX_BORROW, "main");
    let f = tp.function("main");
    assert!(steps(f, &a.states, Some(&[(0, 2), (2, 4)])).is_ok());
    assert!(steps(f, &a.states, Some(&[(2, 2)])).is_err());
    assert!(steps(f, &a.states, Some(&[(0, 3), (2, 4)])).is_err());
    assert!(steps(f, &a.states, Some(&[(0, 99)])).is_err());
}

#[test]
fn expectation_marks_mirror_missing() {
    let (_, a) = analyze(LOAN_CONFLICT, "main");
    let marks = expectations(&a.needs, &a.states, &BTreeMap::new());
    let borrow_mark = marks.iter().find(|m| m.at.index == 1 && m.path == Path::var("x")).unwrap();
    assert!(borrow_mark.all_satisfied(), "x has R at the borrow");
    let write_mark =
        marks.iter().find(|m| m.at.index == 2 && m.path == Path::var("x").field(0)).unwrap();
    assert!(!write_mark.satisfied[&Permission::W]);
    let read_mark =
        marks.iter().find(|m| m.at.index == 3 && m.path == Path::var("y").deref()).unwrap();
    assert!(read_mark.all_satisfied());
}

#[test]
fn no_marks_without_path_operands() {
    let (_, a) = analyze(
        "fn main() -> u32 { let r: u32; 0: r = 0; 1: return r; }",
        "main",
    );
    let marks = expectations(&a.needs, &a.states, &BTreeMap::new());
    assert!(marks.iter().all(|m| m.at.index != 0), "constant init expects nothing");
}
