//! Acceptance suite: one test per shipping criterion, each printing a
//! PASS/FAIL line. Run with `cargo test --test acceptance -- --nocapture`.

use ownlab::corpus;
use ownlab::diffcheck::{campaign, generate_program, FuzzConfig, Property, Verdicts};
use ownlab::facts::build_facts;
use ownlab::interp::{run, trace, Outcome, RunLimits, UbKind};
use ownlab::lang::{parse_program, pretty_print, type_check, Path, TypedProgram};
use ownlab::perms::{apply_step, steps, PermAnalysis, Permission, StepCause};
use ownlab::polonius::{AccessError, Invalidation};
use ownlab::render::{render_memory_trace, render_perm_table, DocFormat, RenderOptions};
use std::time::{Duration, Instant};

fn criterion<T>(name: &str, budget: Duration, body: impl FnOnce() -> T) -> T {
    let start = Instant::now();
    let result = std::panic::catch_unwind(std::panic::AssertUnwindSafe(body));
    let elapsed = start.elapsed();
    match result {
        Ok(value) => {
            println!("acceptance {name}: PASS ({elapsed:.2?})");
            assert!(
                elapsed <= budget,
                "acceptance {name}: exceeded budget {budget:.2?} (took {elapsed:.2?})"
            );
            value
        }
        Err(panic) => {
            println!("acceptance {name}: FAIL ({elapsed:.2?})");
            std::panic::resume_unwind(panic);
        }
    }
}

fn typed(name: &str) -> TypedProgram {
    type_check(&parse_program(corpus::source(name)).unwrap()).unwrap()
}

/// The box/drop/deref program reproduces the three-state trace — empty
/// start, `x ↦ k` with `k ↦ 0`, then an empty heap with the pointer still
/// in the frame — and dies with a use-after-free report.
#[test]
fn use_after_free_trace_regression() {
    criterion("use-after-free trace regression", Duration::from_secs(1), || {
        let tp = typed("use_after_free");
        let snaps = trace(&tp, &[], RunLimits::default()).unwrap();
        assert_eq!(snaps.len(), 4, "three machine states plus the UB snapshot");

        // state 1: empty environment, empty heap
        assert!(snaps[0].frames[0].vars.is_empty());
        assert!(snaps[0].heap.is_empty());

        // state 2: x ↦ k0 and heap { k0 ↦ 0 }
        let vars: Vec<(&str, String)> = snaps[1].frames[0]
            .vars
            .iter()
            .map(|v| (v.name.as_str(), v.value.label()))
            .collect();
        assert_eq!(vars, vec![("x", "->k0".to_string())]);
        let live: Vec<(u64, String)> = snaps[1]
            .heap
            .iter()
            .filter(|c| !c.freed)
            .map(|c| (c.loc, c.value.as_ref().unwrap().label()))
            .collect();
        assert_eq!(live, vec![(0, "0".to_string())]);

        // state 3: x still holds the address but the heap has no live cells
        let vars: Vec<&str> = snaps[2].frames[0].vars.iter().map(|v| v.name.as_str()).collect();
        assert_eq!(vars, vec!["x"]);
        assert!(snaps[2].heap.iter().all(|c| c.freed), "heap must be empty of live cells");

        // terminal: use-after-free at the dereferencing read
        let report = snaps[3].ub.as_ref().expect("UB snapshot");
        assert_eq!(report.kind, UbKind::UseAfterFree);
        assert_eq!(report.at.to_string(), "main:2");
        assert_eq!(report.path, Path::var("x").deref());

        match run(&tp, RunLimits::default()).unwrap() {
            Outcome::Ub { report, .. } => assert_eq!(report.kind, UbKind::UseAfterFree),
            other => panic!("expected UB outcome, got {other:?}"),
        }
    });
}

/// The worked borrow-check examples: the loan conflict yields exactly one
/// write-invalidation borrow conflict and one W permission error on `x.0`;
/// the move conflict yields exactly one move conflict and one R permission
/// error on `*x`; the unannotated lifetime pipe yields exactly one subset
/// error and one F permission error, and none once annotated.
#[test]
fn worked_example_regressions() {
    criterion("worked example regressions", Duration::from_secs(1), || {
        let v = Verdicts::compute(&typed("loan_conflict"));
        assert_eq!(v.access.len(), 1, "{:?}", v.access);
        match &v.access[0] {
            AccessError::BorrowConflict { at, path, invalidation, .. } => {
                assert_eq!(at.to_string(), "main:2");
                assert_eq!(path, &Path::var("x").field(0));
                assert_eq!(*invalidation, Invalidation::WriteInvalid);
            }
            other => panic!("expected borrow conflict, got {other}"),
        }
        assert!(v.subset.is_empty());
        assert_eq!(v.perm.len(), 1, "{:?}", v.perm);
        assert_eq!(v.perm[0].path, Path::var("x").field(0));
        assert_eq!(v.perm[0].perm, Permission::W);
        assert!(matches!(v.perm[0].cause, ownlab::perms::MissingCause::Borrowed(_)));

        let v = Verdicts::compute(&typed("move_conflict"));
        assert_eq!(v.access.len(), 1, "{:?}", v.access);
        match &v.access[0] {
            AccessError::MoveConflict { at, path } => {
                assert_eq!(at.to_string(), "main:2");
                assert_eq!(path, &Path::var("x").deref());
            }
            other => panic!("expected move conflict, got {other}"),
        }
        assert_eq!(v.perm.len(), 1, "{:?}", v.perm);
        assert_eq!(v.perm[0].path, Path::var("x").deref());
        assert_eq!(v.perm[0].perm, Permission::R);
        assert_eq!(v.perm[0].cause, ownlab::perms::MissingCause::Moved);

        let v = Verdicts::compute(&typed("id_unannotated"));
        assert!(v.access.is_empty(), "{:?}", v.access);
        assert_eq!(v.subset.len(), 1, "{:?}", v.subset);
        assert_eq!((v.subset[0].longer.as_str(), v.subset[0].shorter.as_str()), ("a", "b"));
        assert_eq!(v.perm.len(), 1, "{:?}", v.perm);
        assert_eq!(v.perm[0].perm, Permission::F);

        let v = Verdicts::compute(&typed("id_annotated"));
        assert!(v.access.is_empty() && v.subset.is_empty() && v.perm.is_empty());
    });
}

/// 10,000 generated programs with lifetime features on: every program with
/// an access error also has a permission error. Tolerance zero.
#[test]
fn theorem_campaign_10k() {
    criterion("theorem campaign (10,000 programs)", Duration::from_secs(300), || {
        let report = campaign(&FuzzConfig::with_lifetimes(0), &[Property::Theorem], 10_000);
        assert_eq!(report.summary.programs, 10_000);
        assert!(report.violations.is_empty(), "{}", report.human_summary());
        assert_eq!(
            report.summary.rejected_by_polonius_only, 0,
            "a program rejected by the access model alone is a theorem violation"
        );
    });
}

/// 10,000 monomorphic programs: everything accepted by both checkers runs
/// to completion without undefined behaviour. Tolerance zero; the
/// inconclusive (step-limit) rate must stay under 5%.
#[test]
fn soundness_campaign_10k() {
    criterion("soundness campaign (10,000 programs)", Duration::from_secs(300), || {
        let report = campaign(&FuzzConfig::monomorphic(0), &[Property::Soundness], 10_000);
        assert_eq!(report.summary.programs, 10_000);
        assert!(report.violations.is_empty(), "{}", report.human_summary());
        let inconclusive_rate = report.summary.limit_exceeded as f64 / 10_000.0;
        println!("  inconclusive rate: {:.2}%", inconclusive_rate * 100.0);
        assert!(inconclusive_rate < 0.05, "inconclusive rate {inconclusive_rate} above 5%");
    });
}

/// 1,000 small programs: the access-error pipeline agrees setwise with the
/// independent brute-force oracle. Tolerance zero.
#[test]
fn oracle_equivalence_1k() {
    criterion("oracle equivalence (1,000 programs)", Duration::from_secs(120), || {
        let report =
            campaign(&FuzzConfig::oracle_sized(0), &[Property::OracleEquivalence], 1_000);
        assert_eq!(report.summary.programs, 1_000);
        assert!(report.violations.is_empty(), "{}", report.human_summary());
    });
}

/// The curated corpus carries at least two programs rejected by both
/// checkers whose execution terminates cleanly, covering the whole-tuple
/// borrow with disjoint field use and the branch-disjoint borrow/mutation.
#[test]
fn incompleteness_catalog() {
    criterion("incompleteness catalog", Duration::from_secs(10), || {
        assert!(corpus::INCOMPLETENESS_WITNESSES.len() >= 2);
        assert!(corpus::INCOMPLETENESS_WITNESSES.contains(&"disjoint_fields"));
        assert!(corpus::INCOMPLETENESS_WITNESSES.contains(&"branch_disjoint"));
        for name in corpus::INCOMPLETENESS_WITNESSES {
            let tp = typed(name);
            let v = Verdicts::compute(&tp);
            assert!(
                !v.access.is_empty() && !v.perm.is_empty(),
                "{name} must be rejected by both checkers"
            );
            match run(&tp, RunLimits::default()).unwrap() {
                Outcome::Terminated { .. } => {}
                other => panic!("{name} must terminate cleanly, got {other:?}"),
            }
        }
    });
}

/// The box-borrow program's step tables match the frozen golden file, the
/// narrative pattern is present (birth with full permissions, borrow that
/// removes W and O while the borrower and its dereference come alive, then
/// a death/regain pair), and folding the steps from the entry reconstructs
/// every boundary state exactly.
#[test]
fn permission_step_golden() {
    criterion("permission step golden", Duration::from_secs(10), || {
        let tp = typed("box_borrow_steps");
        let facts = build_facts(&tp);
        let analysis = PermAnalysis::compute(&tp, facts.get("main"));
        let all = steps(tp.function("main"), &analysis.states, None).unwrap();

        let doc = render_perm_table(&all, &RenderOptions::default(), DocFormat::Text);
        let golden = include_str!("golden/box_borrow_steps.txt");
        assert_eq!(doc.content, golden, "step table diverged from the golden file");

        let x = Path::var("x");
        let y = Path::var("y");
        let birth = &all[0].changes[&x];
        assert_eq!(birth.cause, StepCause::Birth);
        assert_eq!(
            birth.gains.iter().copied().collect::<Vec<_>>(),
            vec![Permission::R, Permission::W, Permission::O]
        );
        let borrow = &all[1].changes[&x];
        assert_eq!(borrow.cause, StepCause::BorrowStart);
        assert_eq!(
            borrow.losses.iter().copied().collect::<Vec<_>>(),
            vec![Permission::W, Permission::O]
        );
        assert_eq!(
            all[1].changes[&y].gains.iter().copied().collect::<Vec<_>>(),
            vec![Permission::R, Permission::O]
        );
        assert_eq!(
            all[1].changes[&Path::var("y").deref()].gains.iter().copied().collect::<Vec<_>>(),
            vec![Permission::R]
        );
        assert_eq!(all[2].changes[&y].cause, StepCause::Death);
        assert_eq!(all[2].changes[&x].cause, StepCause::Regain);

        // Telescoping: fold the fall-through steps from the entry state.
        let mut has = analysis.states[0].has.clone();
        for step in &all {
            assert_eq!(has, analysis.states[step.from.index].has);
            has = apply_step(has, step);
            assert_eq!(has, analysis.states[step.to.index].has, "telescoping broke at {}", step.to);
        }
    });
}

/// Every diagram in the corpus renders byte-identically across two runs,
/// the use-after-free trace matches its frozen text and SVG golden files,
/// and the text and SVG renderings carry the same logical facts.
#[test]
fn renderer_determinism() {
    criterion("renderer determinism", Duration::from_secs(60), || {
        let opts = RenderOptions::default();
        for (name, _) in corpus::ALL {
            let tp = typed(name);
            let Ok(snaps) = trace(&tp, &[], RunLimits { max_steps: 500 }) else { continue };
            if snaps.is_empty() {
                continue;
            }
            for format in [DocFormat::Text, DocFormat::Svg, DocFormat::Html] {
                let a = render_memory_trace(&snaps, &opts, format);
                let b = render_memory_trace(&snaps, &opts, format);
                assert_eq!(a, b, "{name}: nondeterministic memory trace");
            }
            let text = render_memory_trace(&snaps, &opts, DocFormat::Text);
            let svg = render_memory_trace(&snaps, &opts, DocFormat::Svg);
            for snap in &snaps {
                for fact in snap.facts() {
                    assert!(text.content.contains(&fact), "{name}: text missing `{fact}`");
                    let escaped =
                        fact.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;");
                    assert!(svg.content.contains(&escaped), "{name}: svg missing `{fact}`");
                }
            }
        }

        let snaps = trace(&typed("use_after_free"), &[], RunLimits::default()).unwrap();
        let text = render_memory_trace(&snaps, &opts, DocFormat::Text);
        assert_eq!(text.content, include_str!("golden/use_after_free_trace.txt"));
        let svg = render_memory_trace(&snaps, &opts, DocFormat::Svg);
        assert_eq!(svg.content, include_str!("golden/use_after_free_trace.svg"));
    });
}

/// Parsing the pretty-printed form of a program reproduces it structurally:
/// on the whole corpus and on 1,000 generated programs.
#[test]
fn round_trip_identity() {
    criterion("round-trip identity", Duration::from_secs(60), || {
        for (name, src) in corpus::ALL {
            let p = parse_program(src).unwrap();
            let reparsed = parse_program(&pretty_print(&p))
                .unwrap_or_else(|e| panic!("{name}: reparse failed: {e:?}"));
            assert_eq!(p, reparsed, "{name}: round trip changed the program");
        }
        for seed in 0..1_000u64 {
            for cfg in [FuzzConfig::with_seed(seed), FuzzConfig::with_lifetimes(seed)] {
                let p = generate_program(&cfg);
                let printed = pretty_print(&p);
                let reparsed = parse_program(&printed)
                    .unwrap_or_else(|e| panic!("seed {seed}: reparse failed: {e:?}\n{printed}"));
                assert_eq!(p, reparsed, "seed {seed}: round trip changed the program");
            }
        }
    });
}
