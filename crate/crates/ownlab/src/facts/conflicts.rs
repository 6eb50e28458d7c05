//! Path conflicts (`p ≈ p'`): overlap of resolved memory footprints.
//!
//! A dereference through a box extends the owner's footprint; a dereference
//! through a reference resolves to the union of footprints of every loan
//! whose lifetime may inhabit the pointer (a may-alias over-approximation).
//! Unresolvable pointers get an uninterpreted root of their own so the
//! relation stays reflexive.
//!
//! Loan footprints are computed once per context as a joint fixpoint (loans
//! can be chained through reborrows), and per-path resolutions are memoized,
//! keeping repeated conflict queries cheap.

use super::{FactBase, LoanId};
use crate::lang::{LangType, Lifetime, Path, PathOp, TypedProgram};
use std::cell::RefCell;
use std::collections::{BTreeMap, BTreeSet};
use std::rc::Rc;

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
enum Root {
    Var(String),
    Opaque(String),
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
struct Footprint {
    root: Root,
    steps: Vec<PathOp>,
}

impl Footprint {
    fn overlaps(&self, other: &Footprint) -> bool {
        if self.root != other.root {
            return false;
        }
        let k = self.steps.len().min(other.steps.len());
        self.steps[..k] == other.steps[..k]
    }

    fn extended(&self, step: PathOp) -> Footprint {
        let mut out = self.clone();
        out.steps.push(step);
        out
    }
}

type FpSet = BTreeSet<Footprint>;

/// Conflict queries for one function.
pub struct ConflictCtx<'a> {
    tp: &'a TypedProgram,
    func: String,
    loans: Vec<LoanId>,
    carries: BTreeMap<String, BTreeSet<Lifetime>>,
    /// Loan index -> resolved footprints of its target, fixpoint result.
    loan_fps: Vec<FpSet>,
    memo: RefCell<BTreeMap<Path, Rc<FpSet>>>,
}

impl<'a> ConflictCtx<'a> {
    pub fn new(tp: &'a TypedProgram, fb: &FactBase) -> Self {
        let mut ctx = ConflictCtx {
            tp,
            func: fb.func.clone(),
            loans: fb.loans().cloned().collect(),
            carries: fb.carries.clone(),
            loan_fps: Vec::new(),
            memo: RefCell::new(BTreeMap::new()),
        };
        // Joint fixpoint over loan target footprints, without the opaque
        // fallback (which is applied per query once the sets are stable):
        // each round re-resolves every target against the current sets,
        // which only grow, so the iteration terminates on set equality.
        ctx.loan_fps = vec![FpSet::new(); ctx.loans.len()];
        loop {
            let mut changed = false;
            for i in 0..ctx.loans.len() {
                let path = ctx.loans[i].path.clone();
                let fresh = ctx.resolve(&path, false);
                if fresh != ctx.loan_fps[i] {
                    ctx.loan_fps[i] = fresh;
                    changed = true;
                }
            }
            if !changed {
                break;
            }
        }
        ctx
    }

    /// Resolves a path to footprints against the current loan sets. With
    /// `fallback` set, a reference dereference that resolves to nothing
    /// becomes an uninterpreted root so the conflict relation stays
    /// reflexive; the loan fixpoint runs without it.
    fn resolve(&self, path: &Path, fallback: bool) -> FpSet {
        let mut fps: FpSet =
            [Footprint { root: Root::Var(path.base.clone()), steps: Vec::new() }].into();
        let Some(mut ty) = self.tp.type_of(&self.func, &Path::var(path.base.clone())) else {
            return fps;
        };
        for (k, op) in path.ops.iter().enumerate() {
            match (op, ty.clone()) {
                (PathOp::Field(n), LangType::Tuple(parts)) => {
                    fps = fps.iter().map(|fp| fp.extended(PathOp::Field(*n))).collect();
                    ty = parts.get(*n as usize).cloned().unwrap_or(LangType::U32);
                }
                (PathOp::Deref, LangType::Boxed(inner)) => {
                    fps = fps.iter().map(|fp| fp.extended(PathOp::Deref)).collect();
                    ty = *inner;
                }
                (PathOp::Deref, LangType::Ref { lifetime, inner, .. }) => {
                    let mut resolved = FpSet::new();
                    let carried = self.carries.get(&path.base);
                    for (i, loan) in self.loans.iter().enumerate() {
                        if carried.map(|c| c.contains(&loan.lifetime)).unwrap_or(false) {
                            resolved.extend(self.loan_fps[i].iter().cloned());
                        }
                    }
                    if lifetime.is_abstract() {
                        resolved.insert(Footprint {
                            root: Root::Opaque(lifetime.to_string()),
                            steps: Vec::new(),
                        });
                    }
                    if resolved.is_empty() && fallback {
                        let prefix = Path { base: path.base.clone(), ops: path.ops[..=k].to_vec() };
                        resolved.insert(Footprint {
                            root: Root::Opaque(prefix.to_string()),
                            steps: Vec::new(),
                        });
                    }
                    fps = resolved;
                    ty = *inner;
                }
                // Type errors upstream; treat the remainder as opaque.
                _ => {
                    let prefix = Path { base: path.base.clone(), ops: path.ops[..=k].to_vec() };
                    return [Footprint { root: Root::Opaque(prefix.to_string()), steps: Vec::new() }]
                        .into();
                }
            }
        }
        fps
    }

    fn footprints(&self, path: &Path) -> Rc<FpSet> {
        if let Some(cached) = self.memo.borrow().get(path) {
            return cached.clone();
        }
        let fps = Rc::new(self.resolve(path, true));
        self.memo.borrow_mut().insert(path.clone(), fps.clone());
        fps
    }

    /// True iff the resolved footprints of the two paths overlap.
    pub fn conflicts(&self, a: &Path, b: &Path) -> bool {
        let fa = self.footprints(a);
        let fb = self.footprints(b);
        fa.iter().any(|x| fb.iter().any(|y| x.overlaps(y)))
    }

    /// All universe paths conflicting with `with`, computed in one sweep.
    pub fn conflicting_paths<'u>(
        &self,
        universe: impl IntoIterator<Item = &'u Path>,
        with: &Path,
    ) -> BTreeSet<Path> {
        universe.into_iter().filter(|p| self.conflicts(p, with)).cloned().collect()
    }
}

/// Standalone conflict query (spec surface). Builds the fact context for
/// the function containing the paths.
pub fn conflicts(tp: &TypedProgram, func: &str, a: &Path, b: &Path) -> bool {
    let fb = super::build_function_facts(tp, func);
    ConflictCtx::new(tp, &fb).conflicts(a, b)
}
