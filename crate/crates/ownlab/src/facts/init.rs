//! Initialization dataflow: which variables may / must be initialized
//! entering each instruction. Parameters are initialized at entry; a bare
//! assignment or call destination initializes its variable. Moves do not
//! de-initialize here — the moved-before relation tracks that separately.

use crate::lang::{FunctionDef, Instruction};
use std::collections::BTreeSet;

fn defined_var(instr: &Instruction) -> Option<&str> {
    match instr {
        Instruction::Assign { dest, .. } | Instruction::Call { dest, .. } if dest.is_var() => {
            Some(&dest.base)
        }
        _ => None,
    }
}

/// Returns `(maybe_init, must_init)` as sets of `(var, instruction index)`
/// meaning the variable is possibly (resp. definitely) initialized entering
/// the instruction.
pub fn initialization(
    f: &FunctionDef,
) -> (BTreeSet<(String, usize)>, BTreeSet<(String, usize)>) {
    let n = f.body.len();
    let vars: Vec<String> = f
        .params
        .iter()
        .map(|p| p.name.clone())
        .chain(f.locals.iter().map(|l| l.name.clone()))
        .collect();
    let entry: BTreeSet<String> = f.params.iter().map(|p| p.name.clone()).collect();

    // Forward may/must analysis to fixpoint. `None` marks instructions not
    // yet reached; unreachable code keeps the empty/full defaults.
    let mut may_in: Vec<Option<BTreeSet<String>>> = vec![None; n];
    let mut must_in: Vec<Option<BTreeSet<String>>> = vec![None; n];
    if n > 0 {
        may_in[0] = Some(entry.clone());
        must_in[0] = Some(entry);
    }

    let mut changed = true;
    while changed {
        changed = false;
        for i in 0..n {
            let (Some(may), Some(must)) = (may_in[i].clone(), must_in[i].clone()) else {
                continue;
            };
            let mut may_out = may;
            let mut must_out = must;
            if let Some(v) = defined_var(&f.body.instructions[i]) {
                may_out.insert(v.to_string());
                must_out.insert(v.to_string());
            }
            for s in f.body.successors(i) {
                let new_may = match &may_in[s] {
                    None => may_out.clone(),
                    Some(old) => old.union(&may_out).cloned().collect(),
                };
                if may_in[s].as_ref() != Some(&new_may) {
                    may_in[s] = Some(new_may);
                    changed = true;
                }
                let new_must = match &must_in[s] {
                    None => must_out.clone(),
                    Some(old) => old.intersection(&must_out).cloned().collect(),
                };
                if must_in[s].as_ref() != Some(&new_must) {
                    must_in[s] = Some(new_must);
                    changed = true;
                }
            }
        }
    }

    let mut maybe = BTreeSet::new();
    let mut must = BTreeSet::new();
    for i in 0..n {
        for v in &vars {
            if may_in[i].as_ref().is_some_and(|s| s.contains(v)) {
                maybe.insert((v.clone(), i));
            }
            if must_in[i].as_ref().is_some_and(|s| s.contains(v)) {
                must.insert((v.clone(), i));
            }
        }
    }
    (maybe, must)
}
