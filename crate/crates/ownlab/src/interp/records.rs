//! Line-delimited trace export: one structured record per executed step
//! with the instruction id, stack depth, and environment/heap deltas.

use super::{MachineState, Outcome, RtValue, RunLimits, StepOutcome};
use crate::lang::TypedProgram;
use serde::Serialize;
use std::collections::BTreeMap;

pub const TRACE_SCHEMA: &str = "ownlab.trace/1";

#[derive(Clone, Debug, Serialize)]
pub struct EnvDelta {
    pub depth: usize,
    pub var: String,
    pub value: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct StepRecord {
    pub schema: &'static str,
    pub step: u64,
    pub instr: String,
    pub stack_depth: usize,
    pub env_set: Vec<EnvDelta>,
    pub env_removed: Vec<EnvDelta>,
    pub heap_set: Vec<(u64, String)>,
    pub heap_freed: Vec<u64>,
}

fn env_map(state: &MachineState) -> BTreeMap<(usize, String), RtValue> {
    let mut out = BTreeMap::new();
    for (depth, frame) in state.stack.iter().enumerate() {
        for (var, value) in &frame.env {
            out.insert((depth, var.clone()), value.clone());
        }
    }
    out
}

fn delta(before: &MachineState, after: &MachineState, step: u64, instr: String) -> StepRecord {
    let (eb, ea) = (env_map(before), env_map(after));
    let mut env_set = Vec::new();
    for ((depth, var), value) in &ea {
        if eb.get(&(*depth, var.clone())) != Some(value) {
            env_set.push(EnvDelta { depth: *depth, var: var.clone(), value: value.to_string() });
        }
    }
    let mut env_removed = Vec::new();
    for ((depth, var), value) in &eb {
        if !ea.contains_key(&(*depth, var.clone())) {
            env_removed.push(EnvDelta {
                depth: *depth,
                var: var.clone(),
                value: value.to_string(),
            });
        }
    }
    let mut heap_set = Vec::new();
    for (loc, value) in &after.heap {
        if before.heap.get(loc) != Some(value) {
            heap_set.push((loc.0, value.to_string()));
        }
    }
    let heap_freed: Vec<u64> =
        after.freed.difference(&before.freed).map(|l| l.0).collect();
    StepRecord {
        schema: TRACE_SCHEMA,
        step,
        instr,
        stack_depth: after.stack.len().max(1),
        env_set,
        env_removed,
        heap_set,
        heap_freed,
    }
}

/// Executes the program collecting one record per step, plus the outcome.
pub fn step_records(
    tp: &TypedProgram,
    limits: RunLimits,
) -> Result<(Vec<StepRecord>, Outcome), String> {
    let mut state = MachineState::initial(tp)?;
    let mut records = Vec::new();
    let mut count = 0u64;
    loop {
        if count >= limits.max_steps {
            return Ok((records, Outcome::LimitExceeded));
        }
        let Some((at, _)) = state.pending(tp) else {
            return Ok((records, Outcome::LimitExceeded));
        };
        let before = state.clone();
        count += 1;
        match super::step(state, tp) {
            StepOutcome::Next(next) => {
                records.push(delta(&before, &next, count, at.to_string()));
                state = next;
            }
            StepOutcome::Terminated { value, steps } => {
                return Ok((records, Outcome::Terminated { value, steps }));
            }
            StepOutcome::Ub(report, dead) => {
                records.push(delta(&before, &dead, count, at.to_string()));
                let trace = super::trace(tp, &[], limits)?;
                return Ok((records, Outcome::Ub { report, trace }));
            }
        }
    }
}
