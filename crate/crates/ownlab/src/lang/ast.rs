//! Abstract syntax for the object language.
//!
//! Programs are lists of functions. A function body is a flat control-flow
//! graph: an indexed sequence of instructions where control falls through to
//! the next index except at `if` and `return`. Data is accessed through
//! *paths* (a variable plus field projections and dereferences), and
//! references are created by *loan* expressions qualified as `shared` or
//! `unique`.

use std::fmt;

/// A sequence of field indices. The empty projection is the identity.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Projection(pub Vec<u32>);

impl Projection {
    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl fmt::Display for Projection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for n in &self.0 {
            write!(f, ".{n}")?;
        }
        Ok(())
    }
}

/// One step of a path: a tuple-field selection or a pointer dereference.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PathOp {
    Field(u32),
    Deref,
}

/// A route into memory: a base variable plus ordered field/deref steps.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Path {
    pub base: String,
    pub ops: Vec<PathOp>,
}

impl Path {
    pub fn var(name: impl Into<String>) -> Self {
        Path { base: name.into(), ops: Vec::new() }
    }

    pub fn is_var(&self) -> bool {
        self.ops.is_empty()
    }

    pub fn field(mut self, n: u32) -> Self {
        self.ops.push(PathOp::Field(n));
        self
    }

    pub fn deref(mut self) -> Self {
        self.ops.push(PathOp::Deref);
        self
    }

    pub fn has_deref(&self) -> bool {
        self.ops.iter().any(|op| matches!(op, PathOp::Deref))
    }

    /// True if `self` is `other` or a syntactic extension of it
    /// (`x.0` extends `x`, `*y.1` extends `*y`).
    pub fn extends(&self, other: &Path) -> bool {
        self.base == other.base
            && self.ops.len() >= other.ops.len()
            && self.ops[..other.ops.len()] == other.ops[..]
    }

    /// Syntactic footprint overlap: one of the two is a prefix of the other.
    pub fn overlaps(&self, other: &Path) -> bool {
        self.extends(other) || other.extends(self)
    }

    /// All prefixes of this path, shortest first, including the bare variable
    /// and the path itself.
    pub fn prefixes(&self) -> impl Iterator<Item = Path> + '_ {
        (0..=self.ops.len()).map(move |k| Path { base: self.base.clone(), ops: self.ops[..k].to_vec() })
    }
}

impl fmt::Display for Path {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        // Derefs prepend `*`; a field selection after a deref needs parens so
        // the text reparses to the same structure.
        let mut s = self.base.clone();
        let mut deref_outermost = false;
        for op in &self.ops {
            match op {
                PathOp::Field(n) => {
                    if deref_outermost {
                        s = format!("({s}).{n}");
                        deref_outermost = false;
                    } else {
                        s = format!("{s}.{n}");
                    }
                }
                PathOp::Deref => {
                    s = format!("*{s}");
                    deref_outermost = true;
                }
            }
        }
        f.write_str(&s)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Constant {
    Num(u32),
    Bool(bool),
}

impl fmt::Display for Constant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Constant::Num(n) => write!(f, "{n}"),
            Constant::Bool(b) => write!(f, "{b}"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum OwnershipQualifier {
    Shared,
    Unique,
}

impl fmt::Display for OwnershipQualifier {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            OwnershipQualifier::Shared => f.write_str("shared"),
            OwnershipQualifier::Unique => f.write_str("unique"),
        }
    }
}

/// A borrow expression `&shared p` / `&unique p`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct LoanExpr {
    pub qualifier: OwnershipQualifier,
    pub target: Path,
}

impl fmt::Display for LoanExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "&{} {}", self.qualifier, self.target)
    }
}

/// A constant or a path, usable where either is accepted (tuple and box
/// operands). The grammar names only paths there, but the canonical
/// two-field-tuple example `x = (0, 0)` needs constant operands.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Operand {
    Const(Constant),
    Path(Path),
}

impl fmt::Display for Operand {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Operand::Const(c) => c.fmt(f),
            Operand::Path(p) => p.fmt(f),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Rvalue {
    Const(Constant),
    Use(Path),
    Loan(LoanExpr),
    Tuple(Vec<Operand>),
    Box(Operand),
}

impl fmt::Display for Rvalue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Rvalue::Const(c) => c.fmt(f),
            Rvalue::Use(p) => p.fmt(f),
            Rvalue::Loan(l) => l.fmt(f),
            Rvalue::Tuple(ops) => {
                f.write_str("(")?;
                for (i, op) in ops.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    op.fmt(f)?;
                }
                if ops.len() == 1 {
                    f.write_str(",")?;
                }
                f.write_str(")")
            }
            Rvalue::Box(op) => write!(f, "box {op}"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Instruction {
    Assign { dest: Path, rv: Rvalue },
    If { cond: Path, then_target: usize, else_target: usize },
    Call { dest: Path, callee: String, args: Vec<Path> },
    Return { operand: Path },
    Drop { operand: Path },
}

impl fmt::Display for Instruction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Instruction::Assign { dest, rv } => write!(f, "{dest} = {rv}"),
            Instruction::If { cond, then_target, else_target } => {
                write!(f, "if {cond} then {then_target} else {else_target}")
            }
            Instruction::Call { dest, callee, args } => {
                write!(f, "{dest} = call {callee}(")?;
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    a.fmt(f)?;
                }
                f.write_str(")")
            }
            Instruction::Return { operand } => write!(f, "return {operand}"),
            Instruction::Drop { operand } => write!(f, "drop {operand}"),
        }
    }
}

/// A function body: indexed instructions, entry at index 0.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Cfg {
    pub instructions: Vec<Instruction>,
}

impl Cfg {
    pub fn len(&self) -> usize {
        self.instructions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.instructions.is_empty()
    }

    /// Successor indices of the instruction at `index`.
    pub fn successors(&self, index: usize) -> Vec<usize> {
        match &self.instructions[index] {
            Instruction::Return { .. } => vec![],
            Instruction::If { then_target, else_target, .. } => {
                if then_target == else_target {
                    vec![*then_target]
                } else {
                    vec![*then_target, *else_target]
                }
            }
            _ => vec![index + 1],
        }
    }
}

/// A region identifier on a reference type. Abstract lifetimes are declared
/// as parameters of the enclosing function; every other name is concrete.
/// The type checker mints fresh concrete lifetimes (prefixed `#`) for loan
/// expressions, which can never collide with source names.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Lifetime {
    Concrete(String),
    Abstract(String),
}

impl Lifetime {
    pub fn name(&self) -> &str {
        match self {
            Lifetime::Concrete(n) | Lifetime::Abstract(n) => n,
        }
    }

    pub fn is_abstract(&self) -> bool {
        matches!(self, Lifetime::Abstract(_))
    }
}

impl fmt::Display for Lifetime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "'{}", self.name())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum LangType {
    U32,
    Bool,
    Tuple(Vec<LangType>),
    Ref { lifetime: Lifetime, qualifier: OwnershipQualifier, inner: Box<LangType> },
    Boxed(Box<LangType>),
}

impl LangType {
    pub fn unit() -> Self {
        LangType::Tuple(Vec::new())
    }

    /// Structural equality ignoring lifetimes on references. Assignments and
    /// calls compare types with this; lifetimes feed the flow analysis
    /// instead of the type equality check.
    pub fn compatible(&self, other: &LangType) -> bool {
        match (self, other) {
            (LangType::U32, LangType::U32) | (LangType::Bool, LangType::Bool) => true,
            (LangType::Tuple(a), LangType::Tuple(b)) => {
                a.len() == b.len() && a.iter().zip(b).all(|(x, y)| x.compatible(y))
            }
            (
                LangType::Ref { qualifier: qa, inner: ia, .. },
                LangType::Ref { qualifier: qb, inner: ib, .. },
            ) => qa == qb && ia.compatible(ib),
            (LangType::Boxed(a), LangType::Boxed(b)) => a.compatible(b),
            _ => false,
        }
    }

    /// Move/copy classification: scalars and shared references copy, boxes
    /// and unique references move, tuples move iff any component moves.
    pub fn is_copy(&self) -> bool {
        match self {
            LangType::U32 | LangType::Bool => true,
            LangType::Tuple(ts) => ts.iter().all(LangType::is_copy),
            LangType::Ref { qualifier, .. } => *qualifier == OwnershipQualifier::Shared,
            LangType::Boxed(_) => false,
        }
    }

    /// Every lifetime mentioned anywhere in the type.
    pub fn lifetimes(&self) -> Vec<&Lifetime> {
        let mut out = Vec::new();
        self.collect_lifetimes(&mut out);
        out
    }

    fn collect_lifetimes<'a>(&'a self, out: &mut Vec<&'a Lifetime>) {
        match self {
            LangType::U32 | LangType::Bool => {}
            LangType::Tuple(ts) => ts.iter().for_each(|t| t.collect_lifetimes(out)),
            LangType::Ref { lifetime, inner, .. } => {
                out.push(lifetime);
                inner.collect_lifetimes(out);
            }
            LangType::Boxed(inner) => inner.collect_lifetimes(out),
        }
    }
}

impl fmt::Display for LangType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LangType::U32 => f.write_str("u32"),
            LangType::Bool => f.write_str("bool"),
            LangType::Tuple(ts) => {
                f.write_str("(")?;
                for (i, t) in ts.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    t.fmt(f)?;
                }
                if ts.len() == 1 {
                    f.write_str(",")?;
                }
                f.write_str(")")
            }
            LangType::Ref { lifetime, qualifier, inner } => {
                write!(f, "&{lifetime} {qualifier} {inner}")
            }
            LangType::Boxed(inner) => write!(f, "box {inner}"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Param {
    pub name: String,
    pub ty: LangType,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LocalDecl {
    pub name: String,
    pub mutable: bool,
    pub ty: LangType,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FunctionDef {
    pub name: String,
    /// Declared abstract lifetime parameters, in declaration order.
    pub lifetime_params: Vec<String>,
    /// Declared outlives pairs `('a, 'b)` meaning `'a :> 'b`.
    pub outlives: Vec<(String, String)>,
    pub params: Vec<Param>,
    pub locals: Vec<LocalDecl>,
    pub ret_ty: LangType,
    pub body: Cfg,
}

impl FunctionDef {
    pub fn local(&self, name: &str) -> Option<&LocalDecl> {
        self.locals.iter().find(|l| l.name == name)
    }

    pub fn param(&self, name: &str) -> Option<&Param> {
        self.params.iter().find(|p| p.name == name)
    }

    /// Declared type of a variable (parameter or local).
    pub fn var_type(&self, name: &str) -> Option<&LangType> {
        self.param(name).map(|p| &p.ty).or_else(|| self.local(name).map(|l| &l.ty))
    }

    /// Whether writes to the bare variable are permitted by its declaration.
    /// Parameters are immutable; locals follow their `mut` flag.
    pub fn var_is_mut(&self, name: &str) -> bool {
        self.local(name).map(|l| l.mutable).unwrap_or(false)
    }
}

/// A whole program: functions in declaration order with unique names.
/// `main`, when present, is the execution entry point.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Program {
    pub functions: Vec<FunctionDef>,
}

impl Program {
    pub fn function(&self, name: &str) -> Option<&FunctionDef> {
        self.functions.iter().find(|f| f.name == name)
    }

    pub fn main(&self) -> Option<&FunctionDef> {
        self.function("main")
    }
}

/// Identifies one instruction in a program.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct InstructionId {
    pub func: String,
    pub index: usize,
}

impl InstructionId {
    pub fn new(func: impl Into<String>, index: usize) -> Self {
        InstructionId { func: func.into(), index }
    }
}

impl fmt::Display for InstructionId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.func, self.index)
    }
}
