//! Small-step interpreter with undefined-behaviour detection.
//!
//! Memory is a stack of frames plus a heap of boxed values. Pointers are
//! paths-as-values: an address names a frame variable or heap location plus
//! a field projection. The interpreter deliberately ignores checker
//! verdicts, so statically rejected programs can be executed to exhibit (or
//! fail to exhibit) the undefined behaviour the checkers guard against.
//! Execution stops at the first violation: reading or writing through a
//! freed location (use-after-free), deallocating twice (double-free), or
//! following a stale or malformed address (invalid address).

mod records;
mod snapshot;

pub use records::{step_records, EnvDelta, StepRecord, TRACE_SCHEMA};
pub use snapshot::{FrameView, HeapCellView, PointerTarget, Snapshot, ValueView, VarView};

use crate::lang::{
    Constant, Instruction, InstructionId, LangType, Operand, Path, Projection, Rvalue,
    TypedProgram,
};
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

/// A heap location. The allocator never reuses ids within one execution.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct HeapLoc(pub u64);

impl fmt::Display for HeapLoc {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "k{}", self.0)
    }
}

/// Where an address points: a stack frame variable or a heap location.
/// Frame segments carry the frame's generation so addresses into popped
/// frames are detected as invalid.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Segment {
    Frame { depth: usize, generation: u64, var: String },
    Heap(HeapLoc),
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct Address {
    pub segment: Segment,
    pub projection: Projection,
}

impl fmt::Display for Address {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.segment {
            Segment::Frame { depth, var, .. } => {
                write!(f, "frame({depth}, {var}){}", self.projection)
            }
            Segment::Heap(loc) => write!(f, "{loc}{}", self.projection),
        }
    }
}

/// A runtime value: a constant, an address, or a tuple of values.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum RtValue {
    Const(Constant),
    Addr(Address),
    Tuple(Vec<RtValue>),
}

impl fmt::Display for RtValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RtValue::Const(c) => c.fmt(f),
            RtValue::Addr(a) => a.fmt(f),
            RtValue::Tuple(vs) => {
                f.write_str("(")?;
                for (i, v) in vs.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    v.fmt(f)?;
                }
                f.write_str(")")
            }
        }
    }
}

#[derive(Clone, Debug)]
pub struct ReturnSite {
    pub resume_at: usize,
    pub dest: Path,
}

#[derive(Clone, Debug)]
pub struct Frame {
    pub func: String,
    pub pc: usize,
    pub generation: u64,
    pub env: BTreeMap<String, RtValue>,
    /// Paths moved out of this frame. Purely cosmetic: a move is a copy at
    /// runtime, but snapshots strike through invalidated entries.
    pub moved: BTreeSet<Path>,
    /// Where to resume in the caller; `None` for the root frame.
    pub ret: Option<ReturnSite>,
}

#[derive(Clone, Debug)]
pub struct MachineState {
    pub stack: Vec<Frame>,
    pub heap: BTreeMap<HeapLoc, RtValue>,
    pub freed: BTreeSet<HeapLoc>,
    next_loc: u64,
    next_generation: u64,
    pub steps_taken: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum UbKind {
    UseAfterFree,
    DoubleFree,
    InvalidAddress,
}

impl fmt::Display for UbKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            UbKind::UseAfterFree => f.write_str("use-after-free"),
            UbKind::DoubleFree => f.write_str("double-free"),
            UbKind::InvalidAddress => f.write_str("invalid address"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct UbReport {
    pub kind: UbKind,
    pub at: InstructionId,
    pub path: Path,
    pub loc: Option<HeapLoc>,
}

impl fmt::Display for UbReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "undefined behavior: {} at {} via `{}`", self.kind, self.at, self.path)?;
        if let Some(loc) = self.loc {
            write!(f, " (location {loc})")?;
        }
        Ok(())
    }
}

pub enum StepOutcome {
    Next(MachineState),
    Terminated { value: RtValue, steps: u64 },
    /// The violation and the state at the moment of detection.
    Ub(UbReport, MachineState),
}

#[derive(Clone, Copy, Debug)]
pub struct RunLimits {
    pub max_steps: u64,
}

impl Default for RunLimits {
    fn default() -> Self {
        RunLimits { max_steps: 100_000 }
    }
}

#[derive(Clone, Debug)]
pub enum Outcome {
    Terminated { value: RtValue, steps: u64 },
    Ub { report: UbReport, trace: Vec<Snapshot> },
    LimitExceeded,
}

impl Outcome {
    pub fn is_ub(&self) -> bool {
        matches!(self, Outcome::Ub { .. })
    }
}

type Access<T> = Result<T, UbReport>;

impl MachineState {
    /// The machine about to execute `main`, which must exist and take no
    /// value parameters.
    pub fn initial(tp: &TypedProgram) -> Result<MachineState, String> {
        let main = tp.program.main().ok_or("program has no `main` function")?;
        if !main.params.is_empty() {
            return Err("`main` must not take parameters".into());
        }
        Ok(MachineState {
            stack: vec![Frame {
                func: "main".into(),
                pc: 0,
                generation: 0,
                env: BTreeMap::new(),
                moved: BTreeSet::new(),
                ret: None,
            }],
            heap: BTreeMap::new(),
            freed: BTreeSet::new(),
            next_loc: 0,
            next_generation: 1,
            steps_taken: 0,
        })
    }

    pub fn current_frame(&self) -> &Frame {
        self.stack.last().expect("non-empty stack")
    }

    /// The instruction the machine is about to execute.
    pub fn pending<'p>(&self, tp: &'p TypedProgram) -> Option<(InstructionId, &'p Instruction)> {
        let frame = self.stack.last()?;
        let f = tp.program.function(&frame.func)?;
        let instr = f.body.instructions.get(frame.pc)?;
        Some((InstructionId::new(&frame.func, frame.pc), instr))
    }

    fn alloc(&mut self, v: RtValue) -> HeapLoc {
        let loc = HeapLoc(self.next_loc);
        self.next_loc += 1;
        self.heap.insert(loc, v);
        loc
    }

    fn ub(&self, kind: UbKind, at: &InstructionId, path: &Path, loc: Option<HeapLoc>) -> UbReport {
        UbReport { kind, at: at.clone(), path: path.clone(), loc }
    }

    /// Loads the value at `(segment, projection)`.
    fn load(
        &self,
        segment: &Segment,
        proj: &Projection,
        at: &InstructionId,
        path: &Path,
    ) -> Access<RtValue> {
        let base = match segment {
            Segment::Frame { depth, generation, var } => {
                let frame = self
                    .stack
                    .get(*depth)
                    .filter(|f| f.generation == *generation)
                    .ok_or_else(|| self.ub(UbKind::InvalidAddress, at, path, None))?;
                frame
                    .env
                    .get(var)
                    .ok_or_else(|| self.ub(UbKind::InvalidAddress, at, path, None))?
                    .clone()
            }
            Segment::Heap(loc) => {
                if self.freed.contains(loc) {
                    return Err(self.ub(UbKind::UseAfterFree, at, path, Some(*loc)));
                }
                self.heap
                    .get(loc)
                    .ok_or_else(|| self.ub(UbKind::InvalidAddress, at, path, Some(*loc)))?
                    .clone()
            }
        };
        let mut v = base;
        for n in &proj.0 {
            v = match v {
                RtValue::Tuple(mut vs) if (*n as usize) < vs.len() => vs.swap_remove(*n as usize),
                _ => return Err(self.ub(UbKind::InvalidAddress, at, path, None)),
            };
        }
        Ok(v)
    }

    /// Resolves a path to the address of its final place, following
    /// dereferences through stored addresses.
    fn address_of(&self, path: &Path, at: &InstructionId) -> Access<Address> {
        let frame = self.current_frame();
        let mut segment = Segment::Frame {
            depth: self.stack.len() - 1,
            generation: frame.generation,
            var: path.base.clone(),
        };
        let mut proj: Vec<u32> = Vec::new();
        for op in &path.ops {
            match op {
                crate::lang::PathOp::Field(n) => proj.push(*n),
                crate::lang::PathOp::Deref => {
                    let v = self.load(&segment, &Projection(proj.clone()), at, path)?;
                    match v {
                        RtValue::Addr(a) => {
                            segment = a.segment;
                            proj = a.projection.0;
                        }
                        _ => return Err(self.ub(UbKind::InvalidAddress, at, path, None)),
                    }
                }
            }
        }
        Ok(Address { segment, projection: Projection(proj) })
    }

    fn read_path(&self, path: &Path, at: &InstructionId) -> Access<RtValue> {
        let addr = self.address_of(path, at)?;
        self.load(&addr.segment, &addr.projection, at, path)
    }

    fn write_path(&mut self, path: &Path, value: RtValue, at: &InstructionId) -> Access<()> {
        let addr = self.address_of(path, at)?;
        match &addr.segment {
            Segment::Frame { depth, generation, var } => {
                let (depth, generation, var) = (*depth, *generation, var.clone());
                let stale =
                    self.stack.get(depth).map(|f| f.generation != generation).unwrap_or(true);
                if stale {
                    return Err(self.ub(UbKind::InvalidAddress, at, path, None));
                }
                if addr.projection.is_empty() {
                    self.stack[depth].env.insert(var, value);
                    return Ok(());
                }
                let ub = self.ub(UbKind::InvalidAddress, at, path, None);
                let slot = self.stack[depth].env.get_mut(&var).ok_or(ub.clone())?;
                Self::store_projected(slot, &addr.projection, value).map_err(|()| ub)
            }
            Segment::Heap(loc) => {
                let loc = *loc;
                if self.freed.contains(&loc) {
                    return Err(self.ub(UbKind::UseAfterFree, at, path, Some(loc)));
                }
                let ub = self.ub(UbKind::InvalidAddress, at, path, Some(loc));
                let slot = self.heap.get_mut(&loc).ok_or(ub.clone())?;
                Self::store_projected(slot, &addr.projection, value).map_err(|()| ub)
            }
        }
    }

    fn store_projected(slot: &mut RtValue, proj: &Projection, value: RtValue) -> Result<(), ()> {
        let mut slot = slot;
        for n in &proj.0 {
            slot = match slot {
                RtValue::Tuple(vs) if (*n as usize) < vs.len() => &mut vs[*n as usize],
                _ => return Err(()),
            };
        }
        *slot = value;
        Ok(())
    }

    /// Marks a path moved-out for snapshot display; semantics are unaffected.
    fn mark_moved(&mut self, path: &Path) {
        self.stack.last_mut().expect("frame").moved.insert(path.clone());
    }

    fn clear_moved_under(&mut self, dest: &Path) {
        self.stack.last_mut().expect("frame").moved.retain(|m| !m.overlaps(dest));
    }

    /// Deallocates every heap location transitively owned by `value` at the
    /// given type: box payloads and boxes inside tuples, never data behind
    /// references.
    fn drop_value(
        &mut self,
        value: RtValue,
        ty: &LangType,
        at: &InstructionId,
        path: &Path,
    ) -> Access<()> {
        match (ty, value) {
            (LangType::Boxed(inner), RtValue::Addr(a)) => {
                let Segment::Heap(loc) = a.segment else {
                    return Err(self.ub(UbKind::InvalidAddress, at, path, None));
                };
                if self.freed.contains(&loc) {
                    return Err(self.ub(UbKind::DoubleFree, at, path, Some(loc)));
                }
                let payload = self
                    .heap
                    .remove(&loc)
                    .ok_or_else(|| self.ub(UbKind::InvalidAddress, at, path, Some(loc)))?;
                self.freed.insert(loc);
                self.drop_value(payload, inner, at, path)
            }
            (LangType::Tuple(parts), RtValue::Tuple(values)) => {
                for (ty, v) in parts.iter().zip(values) {
                    self.drop_value(v, ty, at, path)?;
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }
}

fn eval_operand(
    state: &mut MachineState,
    tp: &TypedProgram,
    func: &str,
    op: &Operand,
    at: &InstructionId,
) -> Access<RtValue> {
    match op {
        Operand::Const(c) => Ok(RtValue::Const(*c)),
        Operand::Path(p) => {
            let v = state.read_path(p, at)?;
            if tp.is_movable(func, p) {
                state.mark_moved(p);
            }
            Ok(v)
        }
    }
}

/// Executes the pending instruction.
pub fn step(mut state: MachineState, tp: &TypedProgram) -> StepOutcome {
    debug_assert!(state.heap.keys().all(|k| !state.freed.contains(k)));

    let Some((at, instr)) = state.pending(tp) else {
        // A well-formed body cannot run off the end; report it as an
        // invalid-address stuck state rather than panicking.
        let frame = state.current_frame();
        let report = UbReport {
            kind: UbKind::InvalidAddress,
            at: InstructionId::new(&frame.func, frame.pc),
            path: Path::var("pc"),
            loc: None,
        };
        return StepOutcome::Ub(report, state);
    };
    let instr = instr.clone();
    let func = state.current_frame().func.clone();

    macro_rules! try_ub {
        ($e:expr) => {
            match $e {
                Ok(v) => v,
                Err(report) => return StepOutcome::Ub(report, state),
            }
        };
    }

    state.steps_taken += 1;
    match instr {
        Instruction::Assign { dest, rv } => {
            let value = match &rv {
                Rvalue::Const(c) => RtValue::Const(*c),
                Rvalue::Use(p) => {
                    let v = try_ub!(state.read_path(p, &at));
                    if tp.is_movable(&func, p) {
                        state.mark_moved(p);
                    }
                    v
                }
                Rvalue::Loan(l) => {
                    let addr = try_ub!(state.address_of(&l.target, &at));
                    RtValue::Addr(addr)
                }
                Rvalue::Tuple(ops) => {
                    let mut vs = Vec::with_capacity(ops.len());
                    for op in ops {
                        let v = try_ub!(eval_operand(&mut state, tp, &func, op, &at));
                        vs.push(v);
                    }
                    RtValue::Tuple(vs)
                }
                Rvalue::Box(op) => {
                    let v = try_ub!(eval_operand(&mut state, tp, &func, op, &at));
                    let loc = state.alloc(v);
                    RtValue::Addr(Address {
                        segment: Segment::Heap(loc),
                        projection: Projection::default(),
                    })
                }
            };
            try_ub!(state.write_path(&dest, value, &at));
            state.clear_moved_under(&dest);
            state.stack.last_mut().unwrap().pc += 1;
            StepOutcome::Next(state)
        }
        Instruction::If { cond, then_target, else_target } => {
            let v = try_ub!(state.read_path(&cond, &at));
            let taken = match v {
                RtValue::Const(Constant::Bool(b)) => b,
                _ => {
                    let report = state.ub(UbKind::InvalidAddress, &at, &cond, None);
                    return StepOutcome::Ub(report, state);
                }
            };
            state.stack.last_mut().unwrap().pc = if taken { then_target } else { else_target };
            StepOutcome::Next(state)
        }
        Instruction::Call { dest, callee, args } => {
            let g = tp.program.function(&callee).expect("well-formed call");
            let mut env = BTreeMap::new();
            for (param, arg) in g.params.iter().zip(&args) {
                let v = try_ub!(state.read_path(arg, &at));
                if tp.is_movable(&func, arg) {
                    state.mark_moved(arg);
                }
                env.insert(param.name.clone(), v);
            }
            let resume_at = state.current_frame().pc + 1;
            let generation = state.next_generation;
            state.next_generation += 1;
            state.stack.push(Frame {
                func: callee,
                pc: 0,
                generation,
                env,
                moved: BTreeSet::new(),
                ret: Some(ReturnSite { resume_at, dest }),
            });
            StepOutcome::Next(state)
        }
        Instruction::Return { operand } => {
            let v = try_ub!(state.read_path(&operand, &at));
            let steps = state.steps_taken;
            let frame = state.stack.pop().expect("frame");
            match frame.ret {
                None => StepOutcome::Terminated { value: v, steps },
                Some(site) => {
                    try_ub!(state.write_path(&site.dest, v, &at));
                    state.clear_moved_under(&site.dest);
                    state.stack.last_mut().unwrap().pc = site.resume_at;
                    StepOutcome::Next(state)
                }
            }
        }
        Instruction::Drop { operand } => {
            let ty = tp.type_of(&func, &operand).expect("typed operand");
            let v = try_ub!(state.read_path(&operand, &at));
            try_ub!(state.drop_value(v, &ty, &at, &operand));
            state.mark_moved(&operand);
            debug_assert!(state.heap.keys().all(|k| !state.freed.contains(k)));
            state.stack.last_mut().unwrap().pc += 1;
            StepOutcome::Next(state)
        }
    }
}

/// Runs a program to completion, undefined behaviour, or the step limit.
/// Checker verdicts never gate execution here. On undefined behaviour the
/// outcome carries the full per-step trace, rebuilt deterministically.
pub fn run(tp: &TypedProgram, limits: RunLimits) -> Result<Outcome, String> {
    let mut state = MachineState::initial(tp)?;
    loop {
        if state.steps_taken >= limits.max_steps {
            return Ok(Outcome::LimitExceeded);
        }
        match step(state, tp) {
            StepOutcome::Next(next) => state = next,
            StepOutcome::Terminated { value, steps } => {
                return Ok(Outcome::Terminated { value, steps });
            }
            StepOutcome::Ub(report, _) => {
                let trace = trace(tp, &[], limits)?;
                return Ok(Outcome::Ub { report, trace });
            }
        }
    }
}

/// Captures machine snapshots along an execution.
///
/// Each snapshot shows the state together with its pending instruction, so
/// the first snapshot is the initial state. An empty mark list snapshots
/// before every step; otherwise snapshots are taken whenever the pending
/// instruction is marked. A final snapshot labeled `UB` is appended when
/// execution dies.
pub fn trace(
    tp: &TypedProgram,
    marks: &[InstructionId],
    limits: RunLimits,
) -> Result<Vec<Snapshot>, String> {
    let mut state = MachineState::initial(tp)?;
    let mut snaps = Vec::new();
    loop {
        if let Some((at, _)) = state.pending(tp) {
            if marks.is_empty() || marks.contains(&at) {
                snaps.push(snapshot::capture(&state, tp, at.to_string(), None));
            }
        }
        if state.steps_taken >= limits.max_steps {
            return Ok(snaps);
        }
        match step(state, tp) {
            StepOutcome::Next(next) => state = next,
            StepOutcome::Terminated { .. } => return Ok(snaps),
            StepOutcome::Ub(report, dead) => {
                snaps.push(snapshot::capture(&dead, tp, "UB".into(), Some(report)));
                return Ok(snaps);
            }
        }
    }
}
