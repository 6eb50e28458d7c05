//! The curated program corpus: the worked examples exercised by the tests,
//! the examples, and the golden files, embedded from `corpus/*.own`.

/// `(name, source)` pairs for every corpus program.
pub const ALL: &[(&str, &str)] = &[
    ("use_after_free", include_str!("../corpus/use_after_free.own")),
    ("loan_conflict", include_str!("../corpus/loan_conflict.own")),
    ("move_conflict", include_str!("../corpus/move_conflict.own")),
    ("id_unannotated", include_str!("../corpus/id_unannotated.own")),
    ("id_annotated", include_str!("../corpus/id_annotated.own")),
    ("box_borrow_steps", include_str!("../corpus/box_borrow_steps.own")),
    ("double_free_move", include_str!("../corpus/double_free_move.own")),
    ("disjoint_fields", include_str!("../corpus/disjoint_fields.own")),
    ("branch_disjoint", include_str!("../corpus/branch_disjoint.own")),
    ("call_shared_read", include_str!("../corpus/call_shared_read.own")),
    ("trivial_return", include_str!("../corpus/trivial_return.own")),
    ("infinite_loop", include_str!("../corpus/infinite_loop.own")),
];

pub fn source(name: &str) -> &'static str {
    ALL.iter().find(|(n, _)| *n == name).map(|(_, s)| *s).unwrap_or_else(|| {
        panic!("no corpus program named `{name}`");
    })
}

/// Programs rejected by both checkers whose execution terminates cleanly.
pub const INCOMPLETENESS_WITNESSES: &[&str] =
    &["loan_conflict", "disjoint_fields", "branch_disjoint"];

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lang::{parse_program, type_check, well_formed};

    #[test]
    fn corpus_parses_and_checks() {
        for (name, src) in ALL {
            let p = parse_program(src).unwrap_or_else(|e| panic!("{name}: {e:?}"));
            let wf = well_formed(&p);
            assert!(wf.is_empty(), "{name}: {wf:?}");
            type_check(&p).unwrap_or_else(|e| panic!("{name}: {e:?}"));
        }
    }

    #[test]
    fn use_after_free_program_has_four_instructions() {
        let p = parse_program(source("use_after_free")).unwrap();
        assert_eq!(p.functions[0].body.len(), 4, "three memory ops plus the final return");
    }

    /// Corpus programs accepted by both checkers never reach undefined
    /// behaviour when run.
    #[test]
    fn accepted_corpus_programs_run_clean() {
        use crate::diffcheck::Verdicts;
        use crate::interp::{run, Outcome, RunLimits};
        for (name, src) in ALL {
            let tp = type_check(&parse_program(src).unwrap()).unwrap();
            let v = Verdicts::compute(&tp);
            if !(v.polonius_accepts() && v.perms_accepts()) {
                continue;
            }
            match run(&tp, RunLimits { max_steps: 1000 }) {
                Ok(Outcome::Terminated { .. } | Outcome::LimitExceeded) => {}
                Ok(Outcome::Ub { report, .. }) => {
                    panic!("{name}: accepted program reached UB: {report}")
                }
                Err(_) => {}
            }
        }
    }
}
