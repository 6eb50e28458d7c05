use super::*;
use crate::diffcheck::Verdicts;
use crate::facts::build_facts;
use crate::interp::{trace, RunLimits};
use crate::lang::{parse_program, type_check, TypedProgram};
use crate::perms::{expectations, steps, PermAnalysis};
use std::collections::BTreeMap;

fn typed(name: &str) -> TypedProgram {
    type_check(&parse_program(crate::corpus::source(name)).unwrap()).unwrap()
}

fn trace_of(name: &str) -> Vec<crate::interp::Snapshot> {
    trace(&typed(name), &[], RunLimits::default()).unwrap()
}

#[test]
fn use_after_free_diagram_content() {
    let snaps = trace_of("use_after_free");
    let opts = RenderOptions::default();
    let text = render_memory_trace(&snaps, &opts, DocFormat::Text);
    assert!(text.content.contains("== state main:0 =="));
    assert!(text.content.contains("== state main:2 =="));
    assert!(text.content.contains("== state UB =="));
    assert!(text.content.contains("k0 = ⟂ freed"), "tombstone rendered:\n{}", text.content);
    assert!(text.content.contains("undefined behavior: use-after-free"));

    let svg = render_memory_trace(&snaps, &opts, DocFormat::Svg);
    assert!(svg.content.contains("tomb"));
    assert!(svg.content.contains("undefined behavior"));
}

#[test]
fn text_and_svg_carry_the_same_facts() {
    for name in ["use_after_free", "double_free_move", "call_shared_read", "trivial_return"] {
        let snaps = trace_of(name);
        let opts = RenderOptions::default();
        let text = render_memory_trace(&snaps, &opts, DocFormat::Text);
        let svg = render_memory_trace(&snaps, &opts, DocFormat::Svg);
        for snap in &snaps {
            for fact in snap.facts() {
                assert!(text.content.contains(&fact), "{name}: text missing fact `{fact}`");
                assert!(
                    svg.content.contains(&escape(&fact)),
                    "{name}: svg missing fact `{fact}`"
                );
            }
        }
    }
}

#[test]
fn arrows_only_target_present_cells() {
    for name in ["use_after_free", "double_free_move", "call_shared_read"] {
        for snap in trace_of(name) {
            let locs: Vec<u64> = snap.heap.iter().map(|c| c.loc).collect();
            for frame in &snap.frames {
                for var in &frame.vars {
                    let mut ptrs = Vec::new();
                    collect_pointers(&var.value, &mut ptrs);
                    for p in ptrs {
                        if let crate::interp::PointerTarget::Heap { loc, .. } = p {
                            assert!(
                                locs.contains(&loc),
                                "{name}: arrow to k{loc} has no cell or tombstone in state {}",
                                snap.label
                            );
                        }
                    }
                }
            }
        }
    }
}

fn collect_pointers(v: &crate::interp::ValueView, out: &mut Vec<crate::interp::PointerTarget>) {
    match v {
        crate::interp::ValueView::Pointer { target, .. } => out.push(target.clone()),
        crate::interp::ValueView::Tuple(vs) => vs.iter().for_each(|v| collect_pointers(v, out)),
        _ => {}
    }
}

#[test]
fn rendering_is_deterministic() {
    for (name, _) in crate::corpus::ALL {
        let tp = typed(name);
        let opts = RenderOptions::default();
        let snaps = trace(&tp, &[], RunLimits { max_steps: 500 }).unwrap();
        if !snaps.is_empty() {
            for format in [DocFormat::Text, DocFormat::Svg, DocFormat::Html] {
                let a = render_memory_trace(&snaps, &opts, format);
                let b = render_memory_trace(&snaps, &opts, format);
                assert_eq!(a, b, "{name} memory trace not deterministic");
            }
        }
        let facts = build_facts(&tp);
        let analysis = PermAnalysis::compute(&tp, facts.get("main"));
        let all = steps(tp.function("main"), &analysis.states, None).unwrap();
        let a = render_perm_table(&all, &opts, DocFormat::Text);
        let b = render_perm_table(&all, &opts, DocFormat::Text);
        assert_eq!(a, b);
        let marks = expectations(&analysis.needs, &analysis.states, &BTreeMap::new());
        let a = render_annotated_listing(&tp.program, &marks, &opts, DocFormat::Svg);
        let b = render_annotated_listing(&tp.program, &marks, &opts, DocFormat::Svg);
        assert_eq!(a, b);
    }
}

#[test]
fn expanded_mode_spells_out_boxed_payloads() {
    let snaps = trace_of("call_shared_read");
    let abstracted =
        render_memory_trace(&snaps, &RenderOptions::default(), DocFormat::Text);
    let expanded = render_memory_trace(
        &snaps,
        &RenderOptions { abstraction: Abstraction::Expanded, ..RenderOptions::default() },
        DocFormat::Text,
    );
    assert_ne!(abstracted.content, expanded.content);
    assert!(expanded.content.contains("→ k0 {7}"), "{}", expanded.content);
    assert!(!abstracted.content.contains("{7}"));
}

#[test]
fn single_snapshot_without_heap() {
    let snaps = trace_of("trivial_return");
    let doc = render_memory_trace(&snaps[..1], &RenderOptions::default(), DocFormat::Text);
    assert!(doc.content.contains("frame 0 main"));
    assert!(doc.content.contains("(empty)"));
    let svg = render_memory_trace(&snaps[..1], &RenderOptions::default(), DocFormat::Svg);
    assert!(!svg.content.contains("<line"), "no arrows without addresses");
}

#[test]
fn changed_rows_are_highlighted() {
    let snaps = trace_of("trivial_return");
    let doc = render_memory_trace(&snaps, &RenderOptions::default(), DocFormat::Text);
    // r appears initialized (changed) in the second state only.
    assert!(doc.content.contains("*r = 0"), "{}", doc.content);
}

#[test]
fn box_borrow_tables_match_the_narrative() {
    let tp = typed("box_borrow_steps");
    let facts = build_facts(&tp);
    let analysis = PermAnalysis::compute(&tp, facts.get("main"));
    let all = steps(tp.function("main"), &analysis.states, None).unwrap();
    let doc = render_perm_table(&all, &RenderOptions::default(), DocFormat::Text);
    assert!(doc.content.contains("after main:0"));
    assert!(doc.content.contains("x    | +R +W +O ↑"), "{}", doc.content);
    assert!(doc.content.contains("x    | -W -O →"), "{}", doc.content);
    assert!(doc.content.contains("y    | +R +O ↑"), "{}", doc.content);
    assert!(doc.content.contains("*y   | +R ↑"), "{}", doc.content);
    assert!(doc.content.contains("x    | +W +O ⟲"), "{}", doc.content);
    assert!(doc.content.contains("y    | -R -O ↓"), "{}", doc.content);
}

#[test]
fn branch_spanning_step_is_edge_labeled() {
    let tp = typed("branch_disjoint");
    let facts = build_facts(&tp);
    let analysis = PermAnalysis::compute(&tp, facts.get("main"));
    let all = steps(tp.function("main"), &analysis.states, None).unwrap();
    let doc = render_perm_table(&all, &RenderOptions::default(), DocFormat::Text);
    assert!(doc.content.contains("edge main:4 -> main:7"), "{}", doc.content);
}

#[test]
fn empty_steps_render_a_header_only() {
    let doc = render_perm_table(&[], &RenderOptions::default(), DocFormat::Text);
    assert!(doc.content.starts_with("# permission steps"));
    assert_eq!(doc.content.lines().count(), 1);
}

#[test]
fn listing_marks_satisfied_and_hollow() {
    let tp = typed("loan_conflict");
    let facts = build_facts(&tp);
    let analysis = PermAnalysis::compute(&tp, facts.get("main"));
    let marks = expectations(&analysis.needs, &analysis.states, &BTreeMap::new());
    let doc =
        render_annotated_listing(&tp.program, &marks, &RenderOptions::default(), DocFormat::Text);
    // the satisfied R on the borrow target, filled
    assert!(doc.content.contains("&shared ⟨R⟩ x"), "{}", doc.content);
    // the unsatisfied W on the write to borrowed x.0, hollow
    assert!(doc.content.contains("⟨𝕎⟩ x.0 = 1"), "{}", doc.content);
}

#[test]
fn circle_style_marks() {
    let tp = typed("loan_conflict");
    let facts = build_facts(&tp);
    let analysis = PermAnalysis::compute(&tp, facts.get("main"));
    let mut overrides = BTreeMap::new();
    for (path, _, at) in &analysis.needs {
        overrides.insert((at.clone(), path.clone()), crate::perms::MarkStyle::Circle);
    }
    let marks = expectations(&analysis.needs, &analysis.states, &overrides);
    let doc =
        render_annotated_listing(&tp.program, &marks, &RenderOptions::default(), DocFormat::Text);
    assert!(doc.content.contains("⟨●⟩"), "{}", doc.content);
    assert!(doc.content.contains("⟨○⟩"), "{}", doc.content);
}

#[test]
fn plain_listing_without_marks() {
    let tp = typed("trivial_return");
    let doc =
        render_annotated_listing(&tp.program, &[], &RenderOptions::default(), DocFormat::Text);
    assert!(!doc.content.contains('⟨'));
    assert!(doc.content.contains("0: r = 0;"));
}

#[test]
fn incompleteness_witnesses_execute_cleanly_but_are_rejected() {
    for name in crate::corpus::INCOMPLETENESS_WITNESSES {
        let tp = typed(name);
        let v = Verdicts::compute(&tp);
        assert!(!v.access.is_empty(), "{name} must be rejected by the access model");
        assert!(!v.perm.is_empty(), "{name} must be rejected by the permissions model");
        match crate::interp::run(&tp, RunLimits::default()).unwrap() {
            crate::interp::Outcome::Terminated { .. } => {}
            other => panic!("{name} should terminate cleanly, got {other:?}"),
        }
    }
}
