use super::*;
use crate::lang::{parse_program, type_check};

fn typed(src: &str) -> TypedProgram {
    let p = parse_program(src).unwrap();
    assert!(crate::lang::well_formed(&p).is_empty());
    type_check(&p).unwrap()
}

const LOAN_CONFLICT: &str = "fn main() -> (u32, u32) { \
    let mut x: (u32, u32); let y: &'r shared (u32, u32); let z: (u32, u32); \
    0: x = (0, 0); 1: y = &shared x; 2: x.0 = 1; 3: z = *y; 4: return z; }";

const MOVE_CONFLICT: &str = "fn main() -> u32 { \
    let x: box u32; let y: box u32; let z: u32; \
    0: x = box 0; 1: y = x; 2: z = *x; 3: return z; }";

fn at(i: usize) -> InstructionId {
    InstructionId::new("main", i)
}

#[test]
fn loan_conflict_accesses() {
    let tp = typed(LOAN_CONFLICT);
    let fb = build_facts(&tp);
    let fb = fb.get("main");
    assert!(fb.read_at.contains(&(Path::var("y").deref(), at(3))));
    assert!(fb.written_at.contains(&(Path::var("x").field(0), at(2))));
    assert!(fb.written_at.contains(&(Path::var("y"), at(1))));
    // the shared borrow reads its target
    assert!(fb.read_at.contains(&(Path::var("x"), at(1))));
}

#[test]
fn move_of_box_is_recorded() {
    let tp = typed(MOVE_CONFLICT);
    let fb = build_facts(&tp);
    let fb = fb.get("main");
    assert!(fb.moved_at.contains(&(Path::var("x"), at(1))));
    // moves are read-like accesses
    assert!(fb.read_at.contains(&(Path::var("x"), at(1))));
}

#[test]
fn copy_types_do_not_move() {
    let tp = typed("fn main() -> u32 { let r: u32; 0: r = 0; 1: return r; }");
    let fb = build_facts(&tp);
    let fb = fb.get("main");
    assert!(fb.read_at.contains(&(Path::var("r"), at(1))));
    assert!(fb.moved_at.is_empty());
}

#[test]
fn unique_borrow_writes_its_target() {
    let tp = typed(
        "fn main() -> u32 { let mut x: u32; let y: &'r unique u32; let z: u32; \
         0: x = 1; 1: y = &unique x; 2: z = *y; 3: return z; }",
    );
    let fb = build_facts(&tp);
    let fb = fb.get("main");
    assert!(fb.written_at.contains(&(Path::var("x"), at(1))));
    assert!(!fb.read_at.contains(&(Path::var("x"), at(1))));
}

#[test]
fn loan_live_while_borrower_used_later() {
    let tp = typed(LOAN_CONFLICT);
    let fb = build_facts(&tp);
    let fb = fb.get("main");
    let loan = fb.loans().next().unwrap().clone();
    assert!(fb.loan_is_live_at(&loan, 2), "loan on x must be live at `x.0 = 1`");
    assert!(fb.loan_is_live_at(&loan, 3));
    assert!(!fb.loan_is_live_at(&loan, 1), "loan is not yet live at its own issue");
    assert!(!fb.loan_is_live_at(&loan, 4), "borrower y is dead after its last use");
}

#[test]
fn dead_loan_is_never_live() {
    let tp = typed(
        "fn main() -> u32 { let mut x: u32; let y: &'r shared u32; let z: u32; \
         0: x = 1; 1: y = &shared x; 2: z = 5; 3: return z; }",
    );
    let fb = build_facts(&tp);
    let fb = fb.get("main");
    let loan = fb.loans().next().unwrap().clone();
    for i in 0..4 {
        assert!(!fb.loan_is_live_at(&loan, i), "dead loan live at {i}");
    }
}

#[test]
fn loan_liveness_propagates_through_ref_copy() {
    let tp = typed(
        "fn main() -> u32 { let mut x: u32; let y: &'r shared u32; let z: &'r shared u32; let w: u32; \
         0: x = 1; 1: y = &shared x; 2: z = y; 3: w = *z; 4: return w; }",
    );
    let fb = build_facts(&tp);
    let fb = fb.get("main");
    let loan = fb.loans().next().unwrap().clone();
    assert!(fb.loan_is_live_at(&loan, 2), "loan must stay live across the ref copy");
    assert!(fb.loan_is_live_at(&loan, 3));
}

#[test]
fn moved_before_basics() {
    let tp = typed(MOVE_CONFLICT);
    let fb = build_facts(&tp);
    let fb = fb.get("main");
    assert!(fb.moved_before.contains(&(Path::var("x"), at(2))));
    assert!(fb.moved_before.contains(&(Path::var("x").deref(), at(2))));
    assert!(!fb.moved_before.contains(&(Path::var("x"), at(1))));
}

#[test]
fn reinitialization_kills_moved_before() {
    let tp = typed(
        "fn main() -> u32 { let mut x: box u32; let y: box u32; let z: u32; \
         0: x = box 0; 1: y = x; 2: x = box 1; 3: z = *x; 4: return z; }",
    );
    let fb = build_facts(&tp);
    let fb = fb.get("main");
    assert!(fb.moved_before.contains(&(Path::var("x"), at(2))));
    assert!(!fb.moved_before.contains(&(Path::var("x"), at(3))));
    assert!(!fb.moved_before.contains(&(Path::var("x").deref(), at(3))));
}

#[test]
fn branch_move_is_a_may_analysis() {
    // move on the then-branch only; the join sees the move
    let tp = typed(
        "fn main() -> u32 { let x: box u32; let y: box u32; let c: bool; let z: u32; \
         0: x = box 0; 1: c = true; 2: if c then 3 else 4; 3: y = x; 4: z = 7; 5: return z; }",
    );
    let fb = build_facts(&tp);
    let fb = fb.get("main");
    assert!(fb.moved_before.contains(&(Path::var("x"), at(4))));
    assert!(fb.moved_before.contains(&(Path::var("x"), at(5))));
    assert!(!fb.moved_before.contains(&(Path::var("x"), at(3))));
}

#[test]
fn conflict_prefix_and_siblings() {
    let tp = typed(LOAN_CONFLICT);
    let x = Path::var("x");
    let x0 = Path::var("x").field(0);
    let x1 = Path::var("x").field(1);
    assert!(conflicts(&tp, "main", &x0, &x));
    assert!(conflicts(&tp, "main", &x, &x0));
    assert!(!conflicts(&tp, "main", &x0, &x1));
    assert!(conflicts(&tp, "main", &x, &x));
}

#[test]
fn deref_resolves_through_loans() {
    let tp = typed(LOAN_CONFLICT);
    let star_y = Path::var("y").deref();
    let x = Path::var("x");
    assert!(conflicts(&tp, "main", &star_y, &x));
    assert!(conflicts(&tp, "main", &x, &star_y));
    // the pointer variable itself is disjoint from its target
    assert!(!conflicts(&tp, "main", &Path::var("y"), &x));
}

#[test]
fn box_deref_extends_owner_footprint() {
    let tp = typed(
        "fn main() -> u32 { let b: box u32; let z: u32; 0: b = box 3; 1: z = *b; 2: return z; }",
    );
    let b = Path::var("b");
    let star_b = Path::var("b").deref();
    assert!(conflicts(&tp, "main", &b, &star_b));
    assert!(conflicts(&tp, "main", &star_b, &star_b));
}

const ID_UNANNOTATED: &str = "fn id<'a, 'b>(x: &'a unique u32) -> &'b unique u32 { \
    let y: &'a unique u32; 0: y = x; 1: return y; }\n\
    fn main() -> u32 { let r: u32; 0: r = 0; 1: return r; }";

#[test]
fn id_return_produces_a_flow() {
    let tp = typed(ID_UNANNOTATED);
    let fb = build_facts(&tp);
    let fb = fb.get("id");
    let expected =
        ("a".to_string(), "b".to_string(), Path::var("y"), InstructionId::new("id", 1));
    assert_eq!(fb.flows.iter().cloned().collect::<Vec<_>>(), vec![expected]);
}

#[test]
fn monomorphic_functions_have_no_flows() {
    let tp = typed(LOAN_CONFLICT);
    assert!(build_facts(&tp).get("main").flows.is_empty());
}

#[test]
fn facts_are_intra_function() {
    let tp = typed(
        "fn helper(v: u32) -> u32 { let w: u32; 0: w = v; 1: return w; }\n\
         fn main() -> u32 { let a: u32; let b: u32; 0: a = 3; 1: b = call helper(a); 2: return b; }",
    );
    let pf = build_facts(&tp);
    for (name, fb) in &pf.per_fn {
        for (_, i) in fb.read_at.iter().chain(&fb.written_at).chain(&fb.moved_at) {
            assert_eq!(&i.func, name);
        }
        for (l, i) in &fb.loan_live_at {
            assert_eq!(&i.func, name);
            assert_eq!(&l.issued_at.func, name);
        }
    }
}

#[test]
fn export_is_sorted_and_sectioned() {
    let tp = typed(LOAN_CONFLICT);
    let text = build_facts(&tp).export();
    assert!(text.starts_with("## function main"));
    let read_section = text.find("# read_at").unwrap();
    let written_section = text.find("# written_at").unwrap();
    assert!(read_section < written_section);
    assert!(text.contains("read_at(\"*y\", main:3)"));
}
