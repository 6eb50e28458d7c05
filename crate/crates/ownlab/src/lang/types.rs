//! Type checking. Produces a [`TypedProgram`]: the program plus a resolved
//! type for every textual path occurrence and a fresh concrete lifetime for
//! every loan site.

use super::ast::*;
use super::Diagnostic;
use std::collections::BTreeMap;

/// All path occurrences of one instruction, destination first.
pub fn instruction_paths(instr: &Instruction) -> Vec<&Path> {
    let mut out = Vec::new();
    match instr {
        Instruction::Assign { dest, rv } => {
            out.push(dest);
            match rv {
                Rvalue::Use(p) => out.push(p),
                Rvalue::Loan(l) => out.push(&l.target),
                Rvalue::Tuple(ops) => {
                    for op in ops {
                        if let Operand::Path(p) = op {
                            out.push(p);
                        }
                    }
                }
                Rvalue::Box(Operand::Path(p)) => out.push(p),
                Rvalue::Box(Operand::Const(_)) | Rvalue::Const(_) => {}
            }
        }
        Instruction::If { cond, .. } => out.push(cond),
        Instruction::Call { dest, args, .. } => {
            out.push(dest);
            out.extend(args.iter());
        }
        Instruction::Return { operand } | Instruction::Drop { operand } => out.push(operand),
    }
    out
}

/// Per-function typing results.
#[derive(Clone, Debug, Default)]
pub struct TypedFunction {
    /// Resolved type for every textual path and each of its prefixes.
    pub path_types: BTreeMap<Path, LangType>,
    /// The fresh concrete lifetime minted for the loan expression at an
    /// instruction index. At most one loan per instruction.
    pub loan_lifetimes: BTreeMap<usize, Lifetime>,
}

#[derive(Clone, Debug)]
pub struct TypedProgram {
    pub program: Program,
    pub functions: BTreeMap<String, TypedFunction>,
}

impl TypedProgram {
    pub fn function(&self, name: &str) -> &FunctionDef {
        self.program.function(name).expect("typed program function")
    }

    pub fn typed(&self, name: &str) -> &TypedFunction {
        self.functions.get(name).expect("typed function table")
    }

    /// Type of a path in a function, resolving through declarations. Paths
    /// outside the textual table (for example analysis-generated sub-paths)
    /// are computed on demand.
    pub fn type_of(&self, func: &str, path: &Path) -> Option<LangType> {
        if let Some(t) = self.functions.get(func).and_then(|tf| tf.path_types.get(path)) {
            return Some(t.clone());
        }
        let f = self.program.function(func)?;
        path_type(f, path).ok()
    }

    /// Whether a path's type moves on use.
    pub fn is_movable(&self, func: &str, path: &Path) -> bool {
        self.type_of(func, path).map(|t| !t.is_copy()).unwrap_or(false)
    }
}

/// Resolves the type of a path against a function's declarations.
pub fn path_type(f: &FunctionDef, path: &Path) -> Result<LangType, String> {
    let mut ty = f
        .var_type(&path.base)
        .cloned()
        .ok_or_else(|| format!("unknown identifier `{}`", path.base))?;
    for op in &path.ops {
        ty = match (op, ty) {
            (PathOp::Field(n), LangType::Tuple(ts)) => {
                if (*n as usize) < ts.len() {
                    ts[*n as usize].clone()
                } else {
                    return Err(format!(
                        "field projection `.{n}` out of tuple arity {} on `{path}`",
                        ts.len()
                    ));
                }
            }
            (PathOp::Field(n), other) => {
                return Err(format!("field projection `.{n}` on non-tuple type `{other}`"));
            }
            (PathOp::Deref, LangType::Ref { inner, .. }) => *inner,
            (PathOp::Deref, LangType::Boxed(inner)) => *inner,
            (PathOp::Deref, other) => {
                return Err(format!("dereference of non-reference, non-box type `{other}`"));
            }
        };
    }
    Ok(ty)
}

struct Checker<'a> {
    program: &'a Program,
    diags: Vec<Diagnostic>,
}

impl<'a> Checker<'a> {
    fn err(&mut self, msg: impl Into<String>, func: &str, index: usize) {
        self.diags.push(Diagnostic::at_instr(msg, func, index));
    }

    fn path_ty(&mut self, f: &FunctionDef, p: &Path, index: usize) -> Option<LangType> {
        match path_type(f, p) {
            Ok(t) => Some(t),
            Err(msg) => {
                self.err(msg, &f.name, index);
                None
            }
        }
    }

    fn operand_ty(&mut self, f: &FunctionDef, op: &Operand, index: usize) -> Option<LangType> {
        match op {
            Operand::Const(Constant::Num(_)) => Some(LangType::U32),
            Operand::Const(Constant::Bool(_)) => Some(LangType::Bool),
            Operand::Path(p) => self.path_ty(f, p, index),
        }
    }

    fn check_function(&mut self, f: &FunctionDef) -> TypedFunction {
        let mut typed = TypedFunction::default();

        for (index, instr) in f.body.instructions.iter().enumerate() {
            // Record types for all textual paths and their prefixes.
            for p in instruction_paths(instr) {
                for prefix in p.prefixes() {
                    if let Ok(t) = path_type(f, &prefix) {
                        typed.path_types.insert(prefix, t);
                    }
                }
            }

            match instr {
                Instruction::Assign { dest, rv } => {
                    let dest_ty = self.path_ty(f, dest, index);
                    let rv_ty = match rv {
                        Rvalue::Const(Constant::Num(_)) => Some(LangType::U32),
                        Rvalue::Const(Constant::Bool(_)) => Some(LangType::Bool),
                        Rvalue::Use(p) => self.path_ty(f, p, index),
                        Rvalue::Loan(l) => {
                            let target_ty = self.path_ty(f, &l.target, index);
                            let lifetime = Lifetime::Concrete(format!("#{}:{}", f.name, index));
                            typed.loan_lifetimes.insert(index, lifetime.clone());
                            target_ty.map(|t| LangType::Ref {
                                lifetime,
                                qualifier: l.qualifier,
                                inner: Box::new(t),
                            })
                        }
                        Rvalue::Tuple(ops) => {
                            let mut parts = Vec::new();
                            let mut ok = true;
                            for op in ops {
                                match self.operand_ty(f, op, index) {
                                    Some(t) => parts.push(t),
                                    None => ok = false,
                                }
                            }
                            ok.then_some(LangType::Tuple(parts))
                        }
                        Rvalue::Box(op) => {
                            self.operand_ty(f, op, index).map(|t| LangType::Boxed(Box::new(t)))
                        }
                    };
                    if let (Some(d), Some(r)) = (dest_ty, rv_ty) {
                        if !d.compatible(&r) {
                            self.err(
                                format!("type mismatch: cannot assign `{r}` to `{dest}` of type `{d}`"),
                                &f.name,
                                index,
                            );
                        }
                    }
                }
                Instruction::If { cond, .. } => {
                    if let Some(t) = self.path_ty(f, cond, index) {
                        if t != LangType::Bool {
                            self.err(
                                format!("`if` condition `{cond}` has type `{t}`, expected `bool`"),
                                &f.name,
                                index,
                            );
                        }
                    }
                }
                Instruction::Call { dest, callee, args } => {
                    let Some(g) = self.program.function(callee) else {
                        self.err(format!("call to unknown function `{callee}`"), &f.name, index);
                        continue;
                    };
                    if g.params.len() != args.len() {
                        self.err(
                            format!(
                                "call to `{callee}` passes {} arguments, expected {}",
                                args.len(),
                                g.params.len()
                            ),
                            &f.name,
                            index,
                        );
                    }
                    for (a, p) in args.iter().zip(&g.params) {
                        if let Some(at) = self.path_ty(f, a, index) {
                            if !at.compatible(&p.ty) {
                                self.err(
                                    format!(
                                        "argument `{a}` has type `{at}`, parameter `{}` expects `{}`",
                                        p.name, p.ty
                                    ),
                                    &f.name,
                                    index,
                                );
                            }
                        }
                    }
                    if let Some(dt) = self.path_ty(f, dest, index) {
                        if !dt.compatible(&g.ret_ty) {
                            self.err(
                                format!(
                                    "call destination `{dest}` has type `{dt}`, `{callee}` returns `{}`",
                                    g.ret_ty
                                ),
                                &f.name,
                                index,
                            );
                        }
                    }
                }
                Instruction::Return { operand } => {
                    if let Some(t) = self.path_ty(f, operand, index) {
                        if !t.compatible(&f.ret_ty) {
                            self.err(
                                format!(
                                    "return value `{operand}` has type `{t}`, function returns `{}`",
                                    f.ret_ty
                                ),
                                &f.name,
                                index,
                            );
                        }
                    }
                }
                Instruction::Drop { operand } => {
                    self.path_ty(f, operand, index);
                }
            }
        }

        typed
    }
}

/// Type-checks a well-formed program.
///
/// Every path occurrence resolves to a type, assignments and calls are
/// checked up to lifetimes, and each loan expression is given a fresh
/// concrete lifetime distinct from every other loan site's.
pub fn type_check(program: &Program) -> Result<TypedProgram, Vec<Diagnostic>> {
    let mut checker = Checker { program, diags: Vec::new() };
    let mut functions = BTreeMap::new();
    for f in &program.functions {
        functions.insert(f.name.clone(), checker.check_function(f));
    }
    if checker.diags.is_empty() {
        Ok(TypedProgram { program: program.clone(), functions })
    } else {
        Err(checker.diags)
    }
}

#[cfg(test)]
mod tests {
    use super::super::parse::parse_program;
    use super::*;

    fn check(src: &str) -> Result<TypedProgram, Vec<Diagnostic>> {
        type_check(&parse_program(src).unwrap())
    }

    #[test]
    fn tuple_projection_types() {
        let tp = check(
            "fn main() -> bool { let x: (u32, bool); let b: bool; 0: x = (1, true); 1: b = x.1; 2: return b; }",
        )
        .unwrap();
        let t = tp.type_of("main", &Path::var("x").field(1)).unwrap();
        assert_eq!(t, LangType::Bool);
    }

    #[test]
    fn box_deref_type() {
        let tp = check(
            "fn main() -> u32 { let x: box u32; let y: u32; 0: x = box 0; 1: y = *x; 2: return y; }",
        )
        .unwrap();
        let t = tp.type_of("main", &Path::var("x").deref()).unwrap();
        assert_eq!(t, LangType::U32);
    }

    #[test]
    fn loan_sites_get_distinct_lifetimes() {
        let tp = check(
            "fn main() -> u32 { let mut x: u32; let y: &'r shared u32; let z: &'r shared u32; let w: u32; \
             0: x = 1; 1: y = &shared x; 2: z = &shared x; 3: w = *y; 4: return w; }",
        )
        .unwrap();
        let tf = tp.typed("main");
        assert_ne!(tf.loan_lifetimes[&1], tf.loan_lifetimes[&2]);
    }

    #[test]
    fn mismatched_assignment_is_reported() {
        let err = check("fn main() -> u32 { let x: u32; 0: x = true; 1: return x; }").unwrap_err();
        assert!(err[0].message.contains("type mismatch"));
    }

    #[test]
    fn deref_of_scalar_is_reported() {
        let err =
            check("fn main() -> u32 { let x: u32; let y: u32; 0: x = 1; 1: y = *x; 2: return y; }")
                .unwrap_err();
        assert!(err[0].message.contains("dereference of non-reference"));
    }

    #[test]
    fn if_condition_must_be_bool() {
        let err = check(
            "fn main() -> u32 { let x: u32; 0: x = 1; 1: if x then 2 else 2; 2: return x; }",
        )
        .unwrap_err();
        assert!(err[0].message.contains("expected `bool`"));
    }

    #[test]
    fn id_function_types_as_written() {
        let tp = check(
            "fn id<'a :> 'b>(x: &'a unique u32) -> &'b unique u32 { let y: &'a unique u32; 0: y = x; 1: return y; }\n\
             fn main() -> u32 { let r: u32; 0: r = 0; 1: return r; }",
        )
        .unwrap();
        let t = tp.type_of("id", &Path::var("y")).unwrap();
        match t {
            LangType::Ref { lifetime, qualifier, .. } => {
                assert_eq!(lifetime, Lifetime::Abstract("a".into()));
                assert_eq!(qualifier, OwnershipQualifier::Unique);
            }
            other => panic!("unexpected type {other}"),
        }
    }

    #[test]
    fn typing_is_deterministic() {
        let src = "fn main() -> u32 { let mut x: (u32, u32); let y: &'r shared (u32, u32); let z: u32; \
                   0: x = (0, 0); 1: y = &shared x; 2: x.0 = 1; 3: z = (*y).0; 4: return z; }";
        let a = check(src).unwrap();
        let b = check(src).unwrap();
        assert_eq!(a.typed("main").path_types, b.typed("main").path_types);
        assert_eq!(a.typed("main").loan_lifetimes, b.typed("main").loan_lifetimes);
    }
}
