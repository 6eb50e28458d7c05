//! The moved-before relation: a forward may-analysis over moved paths.
//!
//! A path is moved-before an instruction when some CFG path from a move of
//! an overlapping path reaches it without an intervening reinitializing
//! write to the moved path or one of its prefixes. Overlap covers both
//! prefixes (moving `x` poisons `x.0` and `*x`) and extensions (moving
//! `x.0` poisons a whole-`x` use such as `drop x`).

use crate::lang::{FunctionDef, Instruction, InstructionId, Path};
use std::collections::BTreeSet;

/// Destination of a reinitializing write at this instruction, if any.
/// Borrow-target writes are access classifications, not reinitializations.
fn reinit_dest(instr: &Instruction) -> Option<&Path> {
    match instr {
        Instruction::Assign { dest, .. } | Instruction::Call { dest, .. } => Some(dest),
        _ => None,
    }
}

pub fn moved_before(
    f: &FunctionDef,
    moved_at: &BTreeSet<(Path, InstructionId)>,
    universe: &BTreeSet<Path>,
) -> BTreeSet<(Path, InstructionId)> {
    let n = f.body.len();
    let mut state_in: Vec<BTreeSet<Path>> = vec![BTreeSet::new(); n];

    let gens: Vec<BTreeSet<Path>> = (0..n)
        .map(|i| {
            moved_at
                .iter()
                .filter(|(_, at)| at.index == i)
                .map(|(p, _)| p.clone())
                .collect()
        })
        .collect();

    let mut changed = true;
    while changed {
        changed = false;
        for i in 0..n {
            let mut out = state_in[i].clone();
            out.extend(gens[i].iter().cloned());
            if let Some(dest) = reinit_dest(&f.body.instructions[i]) {
                // A write to `m` or a prefix of `m` reinitializes `m`.
                out.retain(|m| !(m == dest || m.extends(dest)));
            }
            for s in f.body.successors(i) {
                let before = state_in[s].len();
                state_in[s].extend(out.iter().cloned());
                if state_in[s].len() != before {
                    changed = true;
                }
            }
        }
    }

    let mut rel = BTreeSet::new();
    for (i, moved) in state_in.iter().enumerate() {
        if moved.is_empty() {
            continue;
        }
        for p in universe {
            if moved.iter().any(|m| m.overlaps(p)) {
                rel.insert((p.clone(), InstructionId::new(&f.name, i)));
            }
        }
    }
    rel
}
