//! Snapshot document model: an immutable view of a machine state built for
//! rendering. Frames carry variable tables, the heap carries cells plus
//! tombstones for freed cells that are still pointed at, and address values
//! become arrows.

use super::{MachineState, RtValue, Segment, UbReport};
use crate::lang::{Constant, Path, TypedProgram};
use std::collections::BTreeSet;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum PointerTarget {
    Heap { loc: u64, projection: String },
    Frame { depth: usize, var: String, projection: String, stale: bool },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ValueView {
    Num(u32),
    Bool(bool),
    Pointer { target: PointerTarget, dangling: bool },
    Tuple(Vec<ValueView>),
}

impl ValueView {
    /// A canonical label for logical-content comparison across renderers.
    pub fn label(&self) -> String {
        match self {
            ValueView::Num(n) => n.to_string(),
            ValueView::Bool(b) => b.to_string(),
            ValueView::Pointer { target, dangling } => {
                let mut s = match target {
                    PointerTarget::Heap { loc, projection } => format!("->k{loc}{projection}"),
                    PointerTarget::Frame { depth, var, projection, stale } => {
                        let marker = if *stale { "!" } else { "" };
                        format!("->frame({depth},{var}){projection}{marker}")
                    }
                };
                if *dangling {
                    s.push('!');
                }
                s
            }
            ValueView::Tuple(vs) => {
                let inner: Vec<String> = vs.iter().map(|v| v.label()).collect();
                format!("({})", inner.join(","))
            }
        }
    }

    fn pointers(&self, out: &mut Vec<PointerTarget>) {
        match self {
            ValueView::Pointer { target, .. } => out.push(target.clone()),
            ValueView::Tuple(vs) => vs.iter().for_each(|v| v.pointers(out)),
            _ => {}
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct VarView {
    pub name: String,
    pub value: ValueView,
    /// Struck through in diagrams: the value was moved out.
    pub moved: bool,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FrameView {
    pub func: String,
    pub depth: usize,
    pub pc: usize,
    pub vars: Vec<VarView>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HeapCellView {
    pub loc: u64,
    /// `None` for a tombstone: the cell was freed but something still
    /// points at it.
    pub value: Option<ValueView>,
    pub freed: bool,
}

/// One rendered machine state.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Snapshot {
    /// The pending instruction id, a user mark, or `UB`.
    pub label: String,
    pub frames: Vec<FrameView>,
    pub heap: Vec<HeapCellView>,
    pub ub: Option<UbReport>,
}

impl Snapshot {
    /// Every logical fact in the snapshot as canonical strings; text and
    /// SVG renderings must both contain all of them.
    pub fn facts(&self) -> Vec<String> {
        let mut out = vec![format!("state {}", self.label)];
        for frame in &self.frames {
            out.push(format!("frame {} {}", frame.depth, frame.func));
            for var in &frame.vars {
                let moved = if var.moved { " moved" } else { "" };
                out.push(format!("var {} = {}{}", var.name, var.value.label(), moved));
            }
        }
        for cell in &self.heap {
            match &cell.value {
                Some(v) => out.push(format!("heap k{} = {}", cell.loc, v.label())),
                None => out.push(format!("heap k{} freed", cell.loc)),
            }
        }
        if let Some(ub) = &self.ub {
            out.push(format!("ub {}", ub.kind));
        }
        out
    }
}

fn view_value(state: &MachineState, v: &RtValue) -> ValueView {
    match v {
        RtValue::Const(Constant::Num(n)) => ValueView::Num(*n),
        RtValue::Const(Constant::Bool(b)) => ValueView::Bool(*b),
        RtValue::Tuple(vs) => ValueView::Tuple(vs.iter().map(|v| view_value(state, v)).collect()),
        RtValue::Addr(a) => match &a.segment {
            Segment::Heap(loc) => ValueView::Pointer {
                target: PointerTarget::Heap { loc: loc.0, projection: a.projection.to_string() },
                dangling: state.freed.contains(loc),
            },
            Segment::Frame { depth, generation, var } => {
                let stale = state
                    .stack
                    .get(*depth)
                    .map(|f| f.generation != *generation)
                    .unwrap_or(true);
                ValueView::Pointer {
                    target: PointerTarget::Frame {
                        depth: *depth,
                        var: var.clone(),
                        projection: a.projection.to_string(),
                        stale,
                    },
                    dangling: stale,
                }
            }
        },
    }
}

/// Renders a machine state into the snapshot document model.
pub fn capture(
    state: &MachineState,
    tp: &TypedProgram,
    label: String,
    ub: Option<UbReport>,
) -> Snapshot {
    let mut frames = Vec::new();
    for (depth, frame) in state.stack.iter().enumerate() {
        let mut vars = Vec::new();
        // Declaration order: parameters then locals; uninitialized
        // variables are absent from the environment and from the table.
        if let Some(f) = tp.program.function(&frame.func) {
            let names = f.params.iter().map(|p| &p.name).chain(f.locals.iter().map(|l| &l.name));
            for name in names {
                if let Some(v) = frame.env.get(name) {
                    let bare = Path::var(name.clone());
                    let moved = frame.moved.iter().any(|m| m == &bare || m.extends(&bare));
                    vars.push(VarView { name: name.clone(), value: view_value(state, v), moved });
                }
            }
        }
        frames.push(FrameView { func: frame.func.clone(), depth, pc: frame.pc, vars });
    }

    // Live cells, plus tombstones for freed cells that something still
    // points at (including the UB report's location).
    let mut heap: Vec<HeapCellView> = state
        .heap
        .iter()
        .map(|(loc, v)| HeapCellView { loc: loc.0, value: Some(view_value(state, v)), freed: false })
        .collect();
    let mut pointed: BTreeSet<u64> = BTreeSet::new();
    let mut collect = |v: &ValueView| {
        let mut ptrs = Vec::new();
        v.pointers(&mut ptrs);
        for p in ptrs {
            if let PointerTarget::Heap { loc, .. } = p {
                pointed.insert(loc);
            }
        }
    };
    for frame in &frames {
        for var in &frame.vars {
            collect(&var.value);
        }
    }
    for cell in &heap {
        if let Some(v) = &cell.value {
            collect(v);
        }
    }
    if let Some(report) = &ub {
        if let Some(loc) = report.loc {
            pointed.insert(loc.0);
        }
    }
    for loc in pointed {
        if state.freed.contains(&super::HeapLoc(loc)) {
            heap.push(HeapCellView { loc, value: None, freed: true });
        }
    }
    heap.sort_by_key(|c| c.loc);

    Snapshot { label, frames, heap, ub }
}
