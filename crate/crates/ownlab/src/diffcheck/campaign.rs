//! Differential properties and fuzz campaigns: the soundness theorem
//! (access errors imply permission errors), empirical checker/interpreter
//! soundness, oracle equivalence, and incompleteness cataloging.

use super::gen::{generate_program, FuzzConfig};
use super::oracle::oracle_access_errors_fn;
use super::shrink::shrink;
use crate::facts::build_facts;
use crate::interp::{run, Outcome, RunLimits};
use crate::lang::{pretty_print, type_check, Program, TypedProgram};
use crate::perms::{permission_errors, PermAnalysis, PermissionError};
use crate::polonius::{check_program, AccessError, SubsetError};
use serde::Serialize;
use std::fmt;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Property {
    Theorem,
    Soundness,
    OracleEquivalence,
}

impl fmt::Display for Property {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Property::Theorem => f.write_str("theorem"),
            Property::Soundness => f.write_str("soundness"),
            Property::OracleEquivalence => f.write_str("oracle-equivalence"),
        }
    }
}

/// A shrunken property violation. Re-running the property on the stored
/// source reproduces the violation.
#[derive(Clone, Debug, Serialize)]
pub struct CounterexampleReport {
    pub property: Property,
    pub seed: u64,
    pub program: String,
    pub access_errors: usize,
    pub permission_errors: usize,
    pub note: String,
}

/// The static verdicts of both checker models on one program.
pub struct Verdicts {
    pub access: Vec<AccessError>,
    pub subset: Vec<SubsetError>,
    pub perm: Vec<PermissionError>,
}

impl Verdicts {
    pub fn compute(tp: &TypedProgram) -> Verdicts {
        let facts = build_facts(tp);
        let (access, subset) = check_program(tp, &facts);
        let mut perm = Vec::new();
        for f in &tp.program.functions {
            let analysis = PermAnalysis::compute(tp, facts.get(&f.name));
            perm.extend(permission_errors(&analysis));
        }
        Verdicts { access, subset, perm }
    }

    pub fn polonius_accepts(&self) -> bool {
        self.access.is_empty() && self.subset.is_empty()
    }

    pub fn perms_accepts(&self) -> bool {
        self.perm.is_empty()
    }
}

pub enum TheoremOutcome {
    Holds,
    Violation(CounterexampleReport),
}

/// Checks `access-error ⇒ permission-error` on one program: a violation is
/// a program with access errors but no permission errors.
pub fn check_theorem(tp: &TypedProgram) -> TheoremOutcome {
    check_theorem_with(tp, &Verdicts::compute(tp))
}

fn check_theorem_with(tp: &TypedProgram, v: &Verdicts) -> TheoremOutcome {
    if !v.access.is_empty() && v.perm.is_empty() {
        let violated = |p: &Program| {
            let Ok(tp) = type_check(p) else { return false };
            let v = Verdicts::compute(&tp);
            !v.access.is_empty() && v.perm.is_empty()
        };
        let small = shrink(&tp.program, &violated);
        let sv = Verdicts::compute(&type_check(&small).unwrap());
        TheoremOutcome::Violation(CounterexampleReport {
            property: Property::Theorem,
            seed: 0,
            program: pretty_print(&small),
            access_errors: sv.access.len(),
            permission_errors: sv.perm.len(),
            note: "access errors without a permission error".into(),
        })
    } else {
        TheoremOutcome::Holds
    }
}

pub enum SoundnessOutcome {
    Holds,
    Violation(CounterexampleReport),
    Inconclusive,
}

/// Checks empirical soundness on one monomorphic program: if both checkers
/// accept, execution must not reach undefined behaviour within the limits.
pub fn check_soundness(tp: &TypedProgram, limits: RunLimits) -> SoundnessOutcome {
    let v = Verdicts::compute(tp);
    let outcome = run(tp, limits).ok();
    check_soundness_with(tp, &v, outcome.as_ref(), limits)
}

fn check_soundness_with(
    tp: &TypedProgram,
    v: &Verdicts,
    outcome: Option<&Outcome>,
    limits: RunLimits,
) -> SoundnessOutcome {
    debug_assert!(
        tp.program.functions.iter().all(|f| f.lifetime_params.is_empty()),
        "soundness checking assumes monomorphic programs"
    );
    if !(v.polonius_accepts() && v.perms_accepts()) {
        return SoundnessOutcome::Holds;
    }
    match outcome {
        None => SoundnessOutcome::Holds,
        Some(Outcome::Terminated { .. }) => SoundnessOutcome::Holds,
        Some(Outcome::LimitExceeded) => SoundnessOutcome::Inconclusive,
        Some(Outcome::Ub { report, .. }) => {
            let violated = |p: &Program| {
                let Ok(tp) = type_check(p) else { return false };
                let v = Verdicts::compute(&tp);
                v.polonius_accepts()
                    && v.perms_accepts()
                    && matches!(run(&tp, limits), Ok(Outcome::Ub { .. }))
            };
            let small = shrink(&tp.program, &violated);
            SoundnessOutcome::Violation(CounterexampleReport {
                property: Property::Soundness,
                seed: 0,
                program: pretty_print(&small),
                access_errors: 0,
                permission_errors: 0,
                note: report.to_string(),
            })
        }
    }
}

/// Setwise comparison of the main access-error pipeline against the
/// brute-force oracle. `None` when the program is too large for the oracle.
pub fn check_oracle_equivalence(tp: &TypedProgram) -> Option<Result<(), CounterexampleReport>> {
    let facts = build_facts(tp);
    for f in &tp.program.functions {
        let oracle = match oracle_access_errors_fn(tp, f) {
            Ok(o) => o,
            Err(_) => return None,
        };
        let mut main: Vec<AccessError> = crate::polonius::access_errors(tp, facts.get(&f.name));
        let mut oracle = oracle;
        main.sort();
        oracle.sort();
        if main != oracle {
            return Some(Err(CounterexampleReport {
                property: Property::OracleEquivalence,
                seed: 0,
                program: pretty_print(&tp.program),
                access_errors: main.len(),
                permission_errors: 0,
                note: format!(
                    "pipeline reported {:?} but oracle reported {:?}",
                    main.iter().map(|e| e.to_string()).collect::<Vec<_>>(),
                    oracle.iter().map(|e| e.to_string()).collect::<Vec<_>>()
                ),
            }));
        }
    }
    Some(Ok(()))
}

/// How the two checkers relate on one program.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum VerdictClass {
    AcceptedByBoth,
    RejectedByBoth,
    RejectedByPermsOnly,
    /// Impossible when the theorem holds; counted so a violation is loud.
    RejectedByPoloniusOnly,
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct CampaignSummary {
    pub programs: u64,
    pub accepted_by_both: u64,
    pub rejected_by_both: u64,
    pub rejected_by_perms_only: u64,
    pub rejected_by_polonius_only: u64,
    pub terminated: u64,
    pub ub_runs: u64,
    pub limit_exceeded: u64,
    /// Programs rejected statically whose execution terminates cleanly.
    pub incompleteness_witnesses: u64,
}

/// A statically rejected program whose execution terminated without
/// undefined behaviour.
#[derive(Clone, Debug, Serialize)]
pub struct IncompletenessEntry {
    pub seed: u64,
    pub program: String,
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct CampaignReport {
    pub schema: String,
    pub base_seed: u64,
    pub count: u64,
    pub properties: Vec<String>,
    pub summary: CampaignSummary,
    pub violations: Vec<CounterexampleReport>,
    /// A bounded sample of incompleteness witnesses.
    pub incompleteness_catalog: Vec<IncompletenessEntry>,
}

impl CampaignReport {
    pub fn human_summary(&self) -> String {
        let s = &self.summary;
        let mut out = String::new();
        out.push_str(&format!(
            "campaign: {} programs from seed {} ({})\n",
            s.programs,
            self.base_seed,
            self.properties.join("+")
        ));
        out.push_str(&format!(
            "verdicts: {} accepted by both, {} rejected by both, {} rejected by permissions only, {} rejected by access model only\n",
            s.accepted_by_both, s.rejected_by_both, s.rejected_by_perms_only, s.rejected_by_polonius_only
        ));
        out.push_str(&format!(
            "runs: {} terminated, {} undefined behavior, {} hit the step limit\n",
            s.terminated, s.ub_runs, s.limit_exceeded
        ));
        out.push_str(&format!(
            "incompleteness witnesses (rejected yet terminating): {}\n",
            s.incompleteness_witnesses
        ));
        out.push_str(&format!("violations: {}\n", self.violations.len()));
        for v in &self.violations {
            out.push_str(&format!("  [{}] seed {}: {}\n", v.property, v.seed, v.note));
        }
        out
    }
}

const MAX_CATALOGED: usize = 25;

/// Runs `count` seeds derived from the config seed, checking the requested
/// properties on each generated program, and aggregates verdicts,
/// violations (shrunken), and incompleteness witnesses. With a fixed seed
/// set the report is byte-identical across runs.
pub fn campaign(cfg: &FuzzConfig, properties: &[Property], count: u64) -> CampaignReport {
    let mut report = CampaignReport {
        schema: "ownlab.campaign/1".into(),
        base_seed: cfg.seed,
        count,
        properties: properties.iter().map(|p| p.to_string()).collect(),
        ..CampaignReport::default()
    };
    let limits = RunLimits::default();

    for i in 0..count {
        let seed = cfg.seed.wrapping_add(i);
        let cfg = FuzzConfig { seed, ..cfg.clone() };
        let program = generate_program(&cfg);
        let tp = type_check(&program).expect("generated programs type-check");
        report.summary.programs += 1;

        let v = Verdicts::compute(&tp);
        let class = match (v.polonius_accepts(), v.perms_accepts()) {
            (true, true) => VerdictClass::AcceptedByBoth,
            (false, false) => VerdictClass::RejectedByBoth,
            (true, false) => VerdictClass::RejectedByPermsOnly,
            (false, true) => VerdictClass::RejectedByPoloniusOnly,
        };
        match class {
            VerdictClass::AcceptedByBoth => report.summary.accepted_by_both += 1,
            VerdictClass::RejectedByBoth => report.summary.rejected_by_both += 1,
            VerdictClass::RejectedByPermsOnly => report.summary.rejected_by_perms_only += 1,
            VerdictClass::RejectedByPoloniusOnly => report.summary.rejected_by_polonius_only += 1,
        }

        let outcome = run(&tp, limits).ok();
        match &outcome {
            Some(Outcome::Terminated { .. }) => report.summary.terminated += 1,
            Some(Outcome::Ub { .. }) => report.summary.ub_runs += 1,
            Some(Outcome::LimitExceeded) => report.summary.limit_exceeded += 1,
            None => {}
        }
        let rejected = class != VerdictClass::AcceptedByBoth;
        if rejected && matches!(outcome, Some(Outcome::Terminated { .. })) {
            report.summary.incompleteness_witnesses += 1;
            if report.incompleteness_catalog.len() < MAX_CATALOGED {
                report
                    .incompleteness_catalog
                    .push(IncompletenessEntry { seed, program: pretty_print(&program) });
            }
        }

        for property in properties {
            match property {
                Property::Theorem => {
                    if let TheoremOutcome::Violation(mut cex) = check_theorem_with(&tp, &v) {
                        cex.seed = seed;
                        report.violations.push(cex);
                    }
                }
                Property::Soundness => {
                    if let SoundnessOutcome::Violation(mut cex) =
                        check_soundness_with(&tp, &v, outcome.as_ref(), limits)
                    {
                        cex.seed = seed;
                        report.violations.push(cex);
                    }
                }
                Property::OracleEquivalence => {
                    if let Some(Err(mut cex)) = check_oracle_equivalence(&tp) {
                        cex.seed = seed;
                        report.violations.push(cex);
                    }
                }
            }
        }
    }
    report
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_theorem_campaign_is_clean() {
        let report = campaign(&FuzzConfig::with_lifetimes(7), &[Property::Theorem], 150);
        assert_eq!(report.summary.programs, 150);
        assert!(report.violations.is_empty(), "{}", report.human_summary());
        assert_eq!(report.summary.rejected_by_polonius_only, 0);
    }

    #[test]
    fn small_soundness_campaign_is_clean() {
        let report = campaign(&FuzzConfig::monomorphic(11), &[Property::Soundness], 150);
        assert!(report.violations.is_empty(), "{}", report.human_summary());
    }

    #[test]
    fn small_oracle_campaign_is_clean() {
        let report =
            campaign(&FuzzConfig::oracle_sized(13), &[Property::OracleEquivalence], 100);
        assert!(report.violations.is_empty(), "{}", report.human_summary());
    }

    #[test]
    fn empty_campaign_is_empty() {
        let report = campaign(&FuzzConfig::with_seed(0), &[Property::Theorem], 0);
        assert_eq!(report.summary.programs, 0);
        assert!(report.violations.is_empty());
    }

    #[test]
    fn fixed_seeds_give_identical_reports() {
        let a = campaign(&FuzzConfig::with_seed(5), &[Property::Theorem], 25);
        let b = campaign(&FuzzConfig::with_seed(5), &[Property::Theorem], 25);
        assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
    }

    #[test]
    fn seeded_rule_deletion_is_caught_and_shrunk() {
        // Delete the moved-cause permission rule by filtering its errors
        // out, then confirm a move-conflict program becomes a theorem
        // violation and shrinks to a small core.
        let src = "fn main() -> u32 { \
            let x: box u32; let y: box u32; let a: u32; let z: u32; \
            0: x = box 0; 1: a = 3; 2: y = x; 3: z = *x; 4: return z; }";
        let program = crate::lang::parse_program(src).unwrap();
        let broken_theorem_violated = |p: &Program| {
            let Ok(tp) = type_check(p) else { return false };
            let v = Verdicts::compute(&tp);
            let perm_without_moved: Vec<_> = v
                .perm
                .iter()
                .filter(|e| !matches!(e.cause, crate::perms::MissingCause::Moved))
                .collect();
            !v.access.is_empty() && perm_without_moved.is_empty()
        };
        assert!(broken_theorem_violated(&program), "the doctored checker must misjudge this");
        let small = shrink(&program, &broken_theorem_violated);
        assert!(small.functions[0].body.len() <= 6);
    }
}
