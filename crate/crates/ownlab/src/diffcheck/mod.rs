//! Differential validation: random program generation, independent
//! brute-force oracles, the access-implies-permission theorem, empirical
//! soundness against the interpreter, and counterexample shrinking.

mod campaign;
mod gen;
mod oracle;
mod shrink;

pub use campaign::{
    campaign, check_oracle_equivalence, check_soundness, check_theorem, CampaignReport,
    CampaignSummary, CounterexampleReport, IncompletenessEntry, Property, SoundnessOutcome,
    TheoremOutcome, VerdictClass, Verdicts,
};
pub use gen::{generate_program, FuzzConfig, KindWeights};
pub use oracle::{oracle_access_errors, oracle_access_errors_fn, TooLarge};
pub use shrink::shrink;
