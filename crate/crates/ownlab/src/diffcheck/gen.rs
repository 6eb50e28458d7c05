//! Type-directed random program generation. Types are chosen first, then
//! instructions that satisfy them, so every generated program passes
//! well-formedness and type checking by construction. Generation is a
//! deterministic function of the seed.

use crate::lang::{
    Cfg, Constant, FunctionDef, Instruction, LangType, Lifetime, LoanExpr, LocalDecl, Operand,
    OwnershipQualifier, Param, Path, PathOp, Program, Rvalue,
};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

/// Relative weights for instruction kinds.
#[derive(Clone, Debug)]
pub struct KindWeights {
    pub assign_const: u32,
    pub assign_use: u32,
    pub assign_loan: u32,
    pub assign_tuple: u32,
    pub assign_box: u32,
    pub branch: u32,
    pub call: u32,
    pub drop: u32,
}

impl Default for KindWeights {
    fn default() -> Self {
        KindWeights {
            assign_const: 4,
            assign_use: 6,
            assign_loan: 5,
            assign_tuple: 3,
            assign_box: 4,
            branch: 2,
            call: 3,
            drop: 4,
        }
    }
}

#[derive(Clone, Debug)]
pub struct FuzzConfig {
    pub seed: u64,
    pub max_functions: usize,
    pub max_instructions: usize,
    pub max_locals: usize,
    pub type_depth: usize,
    pub weights: KindWeights,
    /// Generate functions with abstract lifetime parameters and reference
    /// signatures (lifetime-flow territory).
    pub abstract_lifetimes: bool,
    /// Generate helper functions and call instructions.
    pub calls: bool,
}

impl Default for FuzzConfig {
    fn default() -> Self {
        FuzzConfig {
            seed: 0,
            max_functions: 3,
            max_instructions: 14,
            max_locals: 6,
            type_depth: 2,
            weights: KindWeights::default(),
            abstract_lifetimes: false,
            calls: true,
        }
    }
}

impl FuzzConfig {
    pub fn with_seed(seed: u64) -> Self {
        FuzzConfig { seed, ..FuzzConfig::default() }
    }

    /// Monomorphic configuration for the soundness campaign: no abstract
    /// lifetimes anywhere, and no reference types across call boundaries.
    pub fn monomorphic(seed: u64) -> Self {
        FuzzConfig { seed, abstract_lifetimes: false, ..FuzzConfig::default() }
    }

    /// Richer configuration for the theorem campaign.
    pub fn with_lifetimes(seed: u64) -> Self {
        FuzzConfig { seed, abstract_lifetimes: true, ..FuzzConfig::default() }
    }

    /// Small bodies for the exhaustive oracle regime.
    pub fn oracle_sized(seed: u64) -> Self {
        FuzzConfig {
            seed,
            max_functions: 1,
            max_instructions: 12,
            max_locals: 5,
            calls: false,
            ..FuzzConfig::default()
        }
    }
}

struct Gen<'c> {
    cfg: &'c FuzzConfig,
    rng: ChaCha8Rng,
}

/// Candidate paths with their types, derived from the declarations of
/// variables initialized at the current point.
fn typed_paths(f: &FunctionHalf, inits: &[String], depth: usize) -> Vec<(Path, LangType)> {
    let mut out = Vec::new();
    for name in inits {
        let ty = f.var_type(name).cloned().expect("initialized var is declared");
        expand(Path::var(name.clone()), ty, depth, &mut out);
    }
    out
}

fn expand(path: Path, ty: LangType, depth: usize, out: &mut Vec<(Path, LangType)>) {
    out.push((path.clone(), ty.clone()));
    if depth == 0 {
        return;
    }
    match ty {
        LangType::Tuple(parts) => {
            for (i, t) in parts.into_iter().enumerate() {
                expand(path.clone().field(i as u32), t, depth - 1, out);
            }
        }
        LangType::Boxed(inner) => expand(path.clone().deref(), *inner, depth - 1, out),
        LangType::Ref { inner, .. } => expand(path.clone().deref(), *inner, depth - 1, out),
        _ => {}
    }
}

/// A function under construction: declarations are fixed before the body.
struct FunctionHalf {
    name: String,
    lifetime_params: Vec<String>,
    outlives: Vec<(String, String)>,
    params: Vec<Param>,
    locals: Vec<LocalDecl>,
    ret_ty: LangType,
}

impl FunctionHalf {
    fn var_type(&self, name: &str) -> Option<&LangType> {
        self.params
            .iter()
            .find(|p| p.name == name)
            .map(|p| &p.ty)
            .or_else(|| self.locals.iter().find(|l| l.name == name).map(|l| &l.ty))
    }

}

impl<'c> Gen<'c> {
    fn value_type(&mut self, depth: usize) -> LangType {
        match self.rng.gen_range(0..if depth == 0 { 2 } else { 4 }) {
            0 => LangType::U32,
            1 => LangType::Bool,
            2 => LangType::Boxed(Box::new(self.value_type(depth - 1))),
            _ => {
                let n = self.rng.gen_range(2..=3);
                LangType::Tuple((0..n).map(|_| self.value_type(depth - 1)).collect())
            }
        }
    }

    fn constant_for(&mut self, ty: &LangType) -> Option<Constant> {
        match ty {
            LangType::U32 => Some(Constant::Num(self.rng.gen_range(0..100))),
            LangType::Bool => Some(Constant::Bool(self.rng.gen_bool(0.5))),
            _ => None,
        }
    }

    /// A constant-only rvalue of the given type, when one exists.
    fn const_rvalue(&mut self, ty: &LangType) -> Option<Rvalue> {
        match ty {
            LangType::U32 | LangType::Bool => self.constant_for(ty).map(Rvalue::Const),
            LangType::Tuple(parts) => {
                let mut ops = Vec::new();
                for t in parts {
                    ops.push(Operand::Const(self.constant_for(t)?));
                }
                Some(Rvalue::Tuple(ops))
            }
            LangType::Boxed(inner) => {
                self.constant_for(inner).map(|c| Rvalue::Box(Operand::Const(c)))
            }
            LangType::Ref { .. } => None,
        }
    }

    fn declare_locals(&mut self, half: &mut FunctionHalf) {
        let n = self.rng.gen_range(2..=self.cfg.max_locals.max(2));
        for i in 0..n {
            let ty = self.value_type(self.cfg.type_depth);
            let mutable = self.rng.gen_bool(0.6);
            half.locals.push(LocalDecl { name: format!("v{i}"), mutable, ty });
        }
        // Reference locals alias the value locals declared above.
        let refs = self.rng.gen_range(0..=2usize);
        for i in 0..refs {
            let target = half.locals[self.rng.gen_range(0..n)].ty.clone();
            if matches!(target, LangType::Ref { .. }) {
                continue;
            }
            let qualifier = if self.rng.gen_bool(0.5) {
                OwnershipQualifier::Shared
            } else {
                OwnershipQualifier::Unique
            };
            half.locals.push(LocalDecl {
                name: format!("p{i}"),
                mutable: self.rng.gen_bool(0.5),
                ty: LangType::Ref {
                    lifetime: Lifetime::Concrete(format!("r{i}")),
                    qualifier,
                    inner: Box::new(target),
                },
            });
        }
        // The dedicated return slot, always writable.
        half.locals.push(LocalDecl { name: "r".into(), mutable: true, ty: half.ret_ty.clone() });
    }

    /// Generates one function body of exactly `n` instructions: positions
    /// `0..n-2` are free, `n-2` initializes the return slot, `n-1` returns
    /// it. Branch targets stay within `i+1..=n-2`, so every path reaches
    /// the return.
    fn body(&mut self, half: &FunctionHalf, callees: &[&FunctionDef], n: usize) -> Vec<Instruction> {
        let mut instructions: Vec<Instruction> = Vec::with_capacity(n);
        // Definitely-initialized variables entering each position; the meet
        // over all incoming edges, built incrementally since branches only
        // jump forward.
        let mut incoming: Vec<Vec<Vec<String>>> = vec![Vec::new(); n + 1];
        incoming[0].push(half.params.iter().map(|p| p.name.clone()).collect());

        for i in 0..n.saturating_sub(2) {
            let inits: Vec<String> = meet(&incoming[i]);
            let instr = self.instruction(half, callees, &inits, i, n);
            // Record the out-edges with the post-instruction init set.
            let mut out = inits.clone();
            match &instr {
                Instruction::Assign { dest, .. } | Instruction::Call { dest, .. } => {
                    if dest.is_var() && !out.contains(&dest.base) {
                        out.push(dest.base.clone());
                    }
                }
                _ => {}
            }
            match &instr {
                Instruction::If { then_target, else_target, .. } => {
                    incoming[*then_target].push(out.clone());
                    incoming[*else_target].push(out);
                }
                _ => incoming[i + 1].push(out),
            }
            instructions.push(instr);
        }

        // Initialize and return the result slot.
        let inits: Vec<String> = meet(&incoming[n - 2]);
        let paths = typed_paths(half, &inits, self.cfg.type_depth);
        let ret_rv = self
            .copyable_source(&paths, &half.ret_ty)
            .filter(|_| self.rng.gen_bool(0.5))
            .map(Rvalue::Use)
            .or_else(|| self.const_rvalue(&half.ret_ty))
            .expect("return type is constructible");
        instructions.push(Instruction::Assign { dest: Path::var("r"), rv: ret_rv });
        instructions.push(Instruction::Return { operand: Path::var("r") });
        instructions
    }

    /// A path of the wanted type whose use will not move a non-reborrowable
    /// value (used for the return slot to keep generation simple).
    fn copyable_source(&mut self, paths: &[(Path, LangType)], ty: &LangType) -> Option<Path> {
        let mut candidates: Vec<&(Path, LangType)> =
            paths.iter().filter(|(_, t)| t.compatible(ty)).collect();
        if candidates.is_empty() {
            return None;
        }
        let i = self.rng.gen_range(0..candidates.len());
        Some(candidates.swap_remove(i).0.clone())
    }

    fn pick<'a>(&mut self, items: &[&'a (Path, LangType)]) -> Option<&'a (Path, LangType)> {
        if items.is_empty() {
            None
        } else {
            Some(items[self.rng.gen_range(0..items.len())])
        }
    }

    fn instruction(
        &mut self,
        half: &FunctionHalf,
        callees: &[&FunctionDef],
        inits: &[String],
        i: usize,
        n: usize,
    ) -> Instruction {
        let paths = typed_paths(half, inits, self.cfg.type_depth);
        let w = &self.cfg.weights;
        let menu = [
            (w.assign_const, 0u8),
            (w.assign_use, 1),
            (w.assign_loan, 2),
            (w.assign_tuple, 3),
            (w.assign_box, 4),
            (w.branch, 5),
            (if self.cfg.calls && !callees.is_empty() { w.call } else { 0 }, 6),
            (w.drop, 7),
        ];
        let total: u32 = menu.iter().map(|(w, _)| w).sum();
        // Try a handful of weighted draws, then fall back to a constant
        // store into the return slot, which is always possible.
        for _ in 0..8 {
            let mut roll = self.rng.gen_range(0..total.max(1));
            let mut kind = 0u8;
            for (weight, k) in menu {
                if roll < weight {
                    kind = k;
                    break;
                }
                roll -= weight;
            }
            let instr = match kind {
                0 => self.assign_const(half, inits),
                1 => self.assign_use(half, inits, &paths),
                2 => self.assign_loan(half, inits, &paths),
                3 => self.assign_tuple(half, inits, &paths),
                4 => self.assign_box(half, inits, &paths),
                5 => self.branch(&paths, i, n),
                6 => self.call(half, callees, inits, &paths),
                7 => self.drop(inits, half),
                _ => None,
            };
            if let Some(instr) = instr {
                return instr;
            }
        }
        let rv = self.const_rvalue(&half.ret_ty).expect("return type is constructible");
        Instruction::Assign { dest: Path::var("r"), rv }
    }

    /// A destination for a fresh write: usually an uninitialized or mutable
    /// bare variable, occasionally a projected place.
    fn write_dest(&mut self, half: &FunctionHalf, inits: &[String], ty_filter: impl Fn(&LangType) -> bool) -> Option<Path> {
        let mut bare: Vec<Path> = half
            .locals
            .iter()
            .filter(|l| ty_filter(&l.ty))
            .filter(|l| l.mutable || !inits.contains(&l.name) || self.rng.gen_bool(0.1))
            .map(|l| Path::var(l.name.clone()))
            .collect();
        if self.rng.gen_bool(0.15) {
            // Projected destinations: a tuple field or unique-ref target of
            // an initialized variable.
            let paths = typed_paths(half, inits, self.cfg.type_depth);
            let projected: Vec<Path> = paths
                .iter()
                .filter(|(p, t)| !p.is_var() && ty_filter(t))
                .map(|(p, _)| p.clone())
                .collect();
            bare.extend(projected);
        }
        if bare.is_empty() {
            None
        } else {
            Some(bare.swap_remove(self.rng.gen_range(0..bare.len())))
        }
    }

    fn assign_const(&mut self, half: &FunctionHalf, inits: &[String]) -> Option<Instruction> {
        let dest = self.write_dest(half, inits, |t| {
            matches!(t, LangType::U32 | LangType::Bool | LangType::Tuple(_) | LangType::Boxed(_))
        })?;
        let ty = path_decl_type(half, &dest)?;
        let rv = self.const_rvalue(&ty)?;
        Some(Instruction::Assign { dest, rv })
    }

    fn assign_use(
        &mut self,
        half: &FunctionHalf,
        inits: &[String],
        paths: &[(Path, LangType)],
    ) -> Option<Instruction> {
        let dest = self.write_dest(half, inits, |_| true)?;
        let ty = path_decl_type(half, &dest)?;
        let sources: Vec<&(Path, LangType)> =
            paths.iter().filter(|(p, t)| t.compatible(&ty) && *p != dest).collect();
        let (src, _) = self.pick(&sources)?;
        Some(Instruction::Assign { dest, rv: Rvalue::Use(src.clone()) })
    }

    fn assign_loan(
        &mut self,
        half: &FunctionHalf,
        inits: &[String],
        paths: &[(Path, LangType)],
    ) -> Option<Instruction> {
        let dest = self.write_dest(half, inits, |t| matches!(t, LangType::Ref { .. }))?;
        let LangType::Ref { qualifier, inner, .. } = path_decl_type(half, &dest)? else {
            return None;
        };
        let targets: Vec<&(Path, LangType)> =
            paths.iter().filter(|(p, t)| t.compatible(&inner) && *p != dest).collect();
        let (target, _) = self.pick(&targets)?;
        Some(Instruction::Assign {
            dest,
            rv: Rvalue::Loan(LoanExpr { qualifier, target: target.clone() }),
        })
    }

    fn assign_tuple(
        &mut self,
        half: &FunctionHalf,
        inits: &[String],
        paths: &[(Path, LangType)],
    ) -> Option<Instruction> {
        let dest = self.write_dest(half, inits, |t| matches!(t, LangType::Tuple(p) if !p.is_empty()))?;
        let LangType::Tuple(parts) = path_decl_type(half, &dest)? else { return None };
        let mut ops = Vec::new();
        for part in &parts {
            let use_path = self.rng.gen_bool(0.4);
            let sources: Vec<&(Path, LangType)> =
                paths.iter().filter(|(p, t)| t.compatible(part) && !dest.overlaps(p)).collect();
            let op = if use_path && !sources.is_empty() {
                Operand::Path(self.pick(&sources)?.0.clone())
            } else {
                Operand::Const(self.constant_for(part).or_else(|| {
                    // non-scalar component with no source: give up
                    None
                })?)
            };
            ops.push(op);
        }
        Some(Instruction::Assign { dest, rv: Rvalue::Tuple(ops) })
    }

    fn assign_box(
        &mut self,
        half: &FunctionHalf,
        inits: &[String],
        paths: &[(Path, LangType)],
    ) -> Option<Instruction> {
        let dest = self.write_dest(half, inits, |t| matches!(t, LangType::Boxed(_)))?;
        let LangType::Boxed(inner) = path_decl_type(half, &dest)? else { return None };
        let sources: Vec<&(Path, LangType)> =
            paths.iter().filter(|(p, t)| t.compatible(&inner) && !dest.overlaps(p)).collect();
        let op = if self.rng.gen_bool(0.4) && !sources.is_empty() {
            Operand::Path(self.pick(&sources)?.0.clone())
        } else {
            Operand::Const(self.constant_for(&inner)?)
        };
        Some(Instruction::Assign { dest, rv: Rvalue::Box(op) })
    }

    fn branch(&mut self, paths: &[(Path, LangType)], i: usize, n: usize) -> Option<Instruction> {
        if i + 2 >= n.saturating_sub(1) {
            return None;
        }
        let conds: Vec<&(Path, LangType)> =
            paths.iter().filter(|(_, t)| *t == LangType::Bool).collect();
        let (cond, _) = self.pick(&conds)?;
        // One arm falls through, the other jumps forward; both stay before
        // the return-slot initialization.
        let target = self.rng.gen_range(i + 2..=n - 2);
        let (then_target, else_target) =
            if self.rng.gen_bool(0.5) { (i + 1, target) } else { (target, i + 1) };
        Some(Instruction::If { cond: cond.clone(), then_target, else_target })
    }

    fn call(
        &mut self,
        half: &FunctionHalf,
        callees: &[&FunctionDef],
        inits: &[String],
        paths: &[(Path, LangType)],
    ) -> Option<Instruction> {
        let callee = callees[self.rng.gen_range(0..callees.len())];
        let dest = self.write_dest(half, inits, |t| t.compatible(&callee.ret_ty))?;
        let mut args = Vec::new();
        for param in &callee.params {
            let sources: Vec<&(Path, LangType)> =
                paths.iter().filter(|(_, t)| t.compatible(&param.ty)).collect();
            args.push(self.pick(&sources)?.0.clone());
        }
        Some(Instruction::Call { dest, callee: callee.name.clone(), args })
    }

    fn drop(&mut self, inits: &[String], half: &FunctionHalf) -> Option<Instruction> {
        let candidates: Vec<&String> = inits
            .iter()
            .filter(|v| !matches!(half.var_type(v), Some(LangType::Ref { .. })))
            .collect();
        if candidates.is_empty() {
            return None;
        }
        let var = candidates[self.rng.gen_range(0..candidates.len())];
        Some(Instruction::Drop { operand: Path::var(var.clone()) })
    }

    /// A pipe-shaped function with abstract lifetime parameters, sometimes
    /// annotated with the outlives constraint its body requires.
    fn ref_pipe(&mut self, index: usize) -> FunctionDef {
        let qualifier = if self.rng.gen_bool(0.5) {
            OwnershipQualifier::Shared
        } else {
            OwnershipQualifier::Unique
        };
        let inner = LangType::U32;
        let annotated = self.rng.gen_bool(0.5);
        let outlives =
            if annotated { vec![("a".to_string(), "b".to_string())] } else { Vec::new() };
        let mk_ref = |name: &str| LangType::Ref {
            lifetime: Lifetime::Abstract(name.into()),
            qualifier,
            inner: Box::new(inner.clone()),
        };
        FunctionDef {
            name: format!("pipe{index}"),
            lifetime_params: vec!["a".into(), "b".into()],
            outlives,
            params: vec![Param { name: "x".into(), ty: mk_ref("a") }],
            locals: vec![LocalDecl { name: "y".into(), mutable: false, ty: mk_ref("a") }],
            ret_ty: mk_ref("b"),
            body: Cfg {
                instructions: vec![
                    Instruction::Assign { dest: Path::var("y"), rv: Rvalue::Use(Path::var("x")) },
                    Instruction::Return { operand: Path::var("y") },
                ],
            },
        }
    }

    fn function(&mut self, name: String, callees: &[&FunctionDef], is_main: bool) -> FunctionDef {
        let ret_ty = if !is_main && self.rng.gen_bool(0.3) {
            LangType::Boxed(Box::new(LangType::U32))
        } else {
            LangType::U32
        };
        let params = if is_main {
            Vec::new()
        } else {
            let n = self.rng.gen_range(0..=2usize);
            (0..n)
                .map(|i| Param {
                    name: format!("a{i}"),
                    ty: match self.rng.gen_range(0..3) {
                        0 => LangType::U32,
                        1 => LangType::Boxed(Box::new(LangType::U32)),
                        _ => LangType::Tuple(vec![LangType::U32, LangType::U32]),
                    },
                })
                .collect()
        };
        let mut half = FunctionHalf {
            name,
            lifetime_params: Vec::new(),
            outlives: Vec::new(),
            params,
            locals: Vec::new(),
            ret_ty,
        };
        self.declare_locals(&mut half);
        let n = self.rng.gen_range(3..=self.cfg.max_instructions.max(3));
        let instructions = self.body(&half, callees, n);
        FunctionDef {
            name: half.name,
            lifetime_params: half.lifetime_params,
            outlives: half.outlives,
            params: half.params,
            locals: half.locals,
            ret_ty: half.ret_ty,
            body: Cfg { instructions },
        }
    }
}

fn meet(sets: &[Vec<String>]) -> Vec<String> {
    match sets.first() {
        None => Vec::new(),
        Some(first) => first
            .iter()
            .filter(|v| sets.iter().all(|s| s.contains(v)))
            .cloned()
            .collect(),
    }
}

fn path_decl_type(half: &FunctionHalf, path: &Path) -> Option<LangType> {
    let mut ty = half.var_type(&path.base)?.clone();
    for op in &path.ops {
        ty = match (op, ty) {
            (PathOp::Field(n), LangType::Tuple(parts)) => parts.get(*n as usize)?.clone(),
            (PathOp::Deref, LangType::Boxed(inner)) => *inner,
            (PathOp::Deref, LangType::Ref { inner, .. }) => *inner,
            _ => return None,
        };
    }
    Some(ty)
}

/// Generates a program that passes `well_formed` and `type_check` by
/// construction; the same seed always yields the same program.
pub fn generate_program(cfg: &FuzzConfig) -> Program {
    let mut gen = Gen { cfg, rng: ChaCha8Rng::seed_from_u64(cfg.seed) };
    let mut functions: Vec<FunctionDef> = Vec::new();

    let helper_count = if cfg.calls && cfg.max_functions > 1 {
        gen.rng.gen_range(0..cfg.max_functions)
    } else {
        0
    };
    for i in 0..helper_count {
        if cfg.abstract_lifetimes && gen.rng.gen_bool(0.4) {
            let pipe = gen.ref_pipe(i);
            functions.push(pipe);
        } else {
            let callees: Vec<&FunctionDef> =
                functions.iter().filter(|f| f.lifetime_params.is_empty()).collect();
            let f = gen.function(format!("f{i}"), &callees, false);
            functions.push(f);
        }
    }
    let callees: Vec<&FunctionDef> =
        functions.iter().filter(|f| f.lifetime_params.is_empty()).collect();
    let main = gen.function("main".into(), &callees, true);
    functions.push(main);

    Program { functions }
}
