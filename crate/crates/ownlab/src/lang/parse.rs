//! Recursive-descent parser for `.own` source files.

use super::ast::*;
use super::lexer::{lex, Spanned, Token};
use super::Diagnostic;
use std::collections::BTreeSet;

struct Parser {
    tokens: Vec<Spanned>,
    pos: usize,
    /// Lifetime parameters of the function being parsed; names in this set
    /// resolve to abstract lifetimes, all others to concrete ones.
    lifetime_params: BTreeSet<String>,
}

type PResult<T> = Result<T, Diagnostic>;

impl Parser {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos).map(|s| &s.token)
    }

    fn here(&self) -> (usize, usize) {
        self.tokens
            .get(self.pos)
            .or_else(|| self.tokens.last())
            .map(|s| (s.line, s.col))
            .unwrap_or((1, 1))
    }

    fn error(&self, message: impl Into<String>) -> Diagnostic {
        let (line, col) = self.here();
        Diagnostic::at_source(message, line, col)
    }

    fn bump(&mut self) -> Option<Token> {
        let t = self.tokens.get(self.pos).map(|s| s.token.clone());
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    fn eat(&mut self, want: &Token) -> bool {
        if self.peek() == Some(want) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, want: Token) -> PResult<()> {
        if self.eat(&want) {
            Ok(())
        } else {
            let found = self.peek().map(|t| t.to_string()).unwrap_or_else(|| "end of input".into());
            Err(self.error(format!("expected {want}, found {found}")))
        }
    }

    fn expect_ident(&mut self) -> PResult<String> {
        match self.peek() {
            Some(Token::Ident(_)) => {
                if let Some(Token::Ident(s)) = self.bump() {
                    Ok(s)
                } else {
                    unreachable!()
                }
            }
            other => {
                let found = other.map(|t| t.to_string()).unwrap_or_else(|| "end of input".into());
                Err(self.error(format!("expected identifier, found {found}")))
            }
        }
    }

    fn expect_number(&mut self) -> PResult<u32> {
        match self.peek() {
            Some(Token::Number(_)) => {
                if let Some(Token::Number(n)) = self.bump() {
                    Ok(n)
                } else {
                    unreachable!()
                }
            }
            other => {
                let found = other.map(|t| t.to_string()).unwrap_or_else(|| "end of input".into());
                Err(self.error(format!("expected number, found {found}")))
            }
        }
    }

    fn expect_lifetime(&mut self) -> PResult<String> {
        match self.peek() {
            Some(Token::Lifetime(_)) => {
                if let Some(Token::Lifetime(s)) = self.bump() {
                    Ok(s)
                } else {
                    unreachable!()
                }
            }
            other => {
                let found = other.map(|t| t.to_string()).unwrap_or_else(|| "end of input".into());
                Err(self.error(format!("expected lifetime, found {found}")))
            }
        }
    }

    fn parse_program(&mut self) -> PResult<Program> {
        let mut functions: Vec<FunctionDef> = Vec::new();
        while self.peek().is_some() {
            let f = self.parse_function()?;
            if functions.iter().any(|g| g.name == f.name) {
                return Err(self.error(format!("duplicate function name `{}`", f.name)));
            }
            functions.push(f);
        }
        Ok(Program { functions })
    }

    fn parse_function(&mut self) -> PResult<FunctionDef> {
        self.expect(Token::Fn)?;
        let name = self.expect_ident()?;

        let mut lifetime_names: Vec<String> = Vec::new();
        let mut outlives: Vec<(String, String)> = Vec::new();
        self.lifetime_params.clear();
        if self.eat(&Token::Lt) {
            loop {
                let a = self.expect_lifetime()?;
                if self.lifetime_params.insert(a.clone()) {
                    lifetime_names.push(a.clone());
                } else if self.peek() != Some(&Token::Outlives) {
                    return Err(self.error(format!("duplicate lifetime parameter `'{a}`")));
                }
                if self.eat(&Token::Outlives) {
                    let b = self.expect_lifetime()?;
                    if self.lifetime_params.insert(b.clone()) {
                        lifetime_names.push(b.clone());
                    }
                    outlives.push((a, b));
                }
                if !self.eat(&Token::Comma) {
                    break;
                }
            }
            self.expect(Token::Gt)?;
        }

        self.expect(Token::LParen)?;
        let mut params: Vec<Param> = Vec::new();
        if !self.eat(&Token::RParen) {
            loop {
                let pname = self.expect_ident()?;
                self.expect(Token::Colon)?;
                let ty = self.parse_type()?;
                if params.iter().any(|p| p.name == pname) {
                    return Err(self.error(format!("duplicate parameter name `{pname}`")));
                }
                params.push(Param { name: pname, ty });
                if !self.eat(&Token::Comma) {
                    break;
                }
            }
            self.expect(Token::RParen)?;
        }

        let ret_ty = if self.eat(&Token::Arrow) { self.parse_type()? } else { LangType::unit() };

        self.expect(Token::LBrace)?;
        let mut locals: Vec<LocalDecl> = Vec::new();
        while self.peek() == Some(&Token::Let) {
            self.bump();
            let mutable = self.eat(&Token::Mut);
            let lname = self.expect_ident()?;
            self.expect(Token::Colon)?;
            let ty = self.parse_type()?;
            self.expect(Token::Semi)?;
            if locals.iter().any(|l| l.name == lname) || params.iter().any(|p| p.name == lname) {
                return Err(self.error(format!("duplicate local name `{lname}`")));
            }
            locals.push(LocalDecl { name: lname, mutable, ty });
        }

        let mut instructions: Vec<Instruction> = Vec::new();
        while self.peek() != Some(&Token::RBrace) {
            let label = self.expect_number()? as usize;
            if label != instructions.len() {
                return Err(self.error(format!(
                    "instruction label {label} out of order, expected {}",
                    instructions.len()
                )));
            }
            self.expect(Token::Colon)?;
            instructions.push(self.parse_instruction()?);
            self.expect(Token::Semi)?;
        }
        self.expect(Token::RBrace)?;

        Ok(FunctionDef {
            name,
            lifetime_params: lifetime_names,
            outlives,
            params,
            locals,
            ret_ty,
            body: Cfg { instructions },
        })
    }

    fn parse_type(&mut self) -> PResult<LangType> {
        match self.peek() {
            Some(Token::U32) => {
                self.bump();
                Ok(LangType::U32)
            }
            Some(Token::Bool) => {
                self.bump();
                Ok(LangType::Bool)
            }
            Some(Token::Box) => {
                self.bump();
                Ok(LangType::Boxed(Box::new(self.parse_type()?)))
            }
            Some(Token::Amp) => {
                self.bump();
                let name = self.expect_lifetime()?;
                let lifetime = if self.lifetime_params.contains(&name) {
                    Lifetime::Abstract(name)
                } else {
                    Lifetime::Concrete(name)
                };
                let qualifier = self.parse_qualifier()?;
                let inner = self.parse_type()?;
                Ok(LangType::Ref { lifetime, qualifier, inner: Box::new(inner) })
            }
            Some(Token::LParen) => {
                self.bump();
                let mut parts = Vec::new();
                if !self.eat(&Token::RParen) {
                    loop {
                        parts.push(self.parse_type()?);
                        if !self.eat(&Token::Comma) {
                            break;
                        }
                        if self.peek() == Some(&Token::RParen) {
                            break;
                        }
                    }
                    self.expect(Token::RParen)?;
                }
                Ok(LangType::Tuple(parts))
            }
            other => {
                let found = other.map(|t| t.to_string()).unwrap_or_else(|| "end of input".into());
                Err(self.error(format!("expected type, found {found}")))
            }
        }
    }

    fn parse_qualifier(&mut self) -> PResult<OwnershipQualifier> {
        if self.eat(&Token::Shared) {
            Ok(OwnershipQualifier::Shared)
        } else if self.eat(&Token::Unique) {
            Ok(OwnershipQualifier::Unique)
        } else {
            let found = self.peek().map(|t| t.to_string()).unwrap_or_else(|| "end of input".into());
            Err(self.error(format!("expected `shared` or `unique`, found {found}")))
        }
    }

    fn parse_instruction(&mut self) -> PResult<Instruction> {
        match self.peek() {
            Some(Token::If) => {
                self.bump();
                let cond = self.parse_path()?;
                self.expect(Token::Then)?;
                let then_target = self.expect_number()? as usize;
                self.expect(Token::Else)?;
                let else_target = self.expect_number()? as usize;
                Ok(Instruction::If { cond, then_target, else_target })
            }
            Some(Token::Return) => {
                self.bump();
                Ok(Instruction::Return { operand: self.parse_path()? })
            }
            Some(Token::Drop) => {
                self.bump();
                Ok(Instruction::Drop { operand: self.parse_path()? })
            }
            _ => {
                let dest = self.parse_path()?;
                self.expect(Token::Eq)?;
                if self.eat(&Token::Call) {
                    let callee = self.expect_ident()?;
                    self.expect(Token::LParen)?;
                    let mut args = Vec::new();
                    if !self.eat(&Token::RParen) {
                        loop {
                            args.push(self.parse_path()?);
                            if !self.eat(&Token::Comma) {
                                break;
                            }
                        }
                        self.expect(Token::RParen)?;
                    }
                    Ok(Instruction::Call { dest, callee, args })
                } else {
                    Ok(Instruction::Assign { dest, rv: self.parse_rvalue()? })
                }
            }
        }
    }

    fn parse_rvalue(&mut self) -> PResult<Rvalue> {
        match self.peek() {
            Some(Token::Amp) => {
                self.bump();
                let qualifier = self.parse_qualifier()?;
                let target = self.parse_path()?;
                Ok(Rvalue::Loan(LoanExpr { qualifier, target }))
            }
            Some(Token::Box) => {
                self.bump();
                Ok(Rvalue::Box(self.parse_operand()?))
            }
            Some(Token::Number(_) | Token::True | Token::False) => {
                Ok(Rvalue::Const(self.parse_constant()?))
            }
            Some(Token::LParen) => self.parse_tuple_or_grouped(),
            _ => Ok(Rvalue::Use(self.parse_path()?)),
        }
    }

    /// Disambiguates `(a, b)` tuples from parenthesized paths like `(*x).0`.
    fn parse_tuple_or_grouped(&mut self) -> PResult<Rvalue> {
        // Grouped paths start with `(` followed by `*`, an identifier, or
        // another `(`, and contain no top-level comma. A lone parenthesized
        // constant is a constant; a one-element tuple needs a trailing comma.
        self.expect(Token::LParen)?;
        if self.eat(&Token::RParen) {
            return Ok(Rvalue::Tuple(Vec::new()));
        }
        let first = self.parse_operand()?;
        match self.peek() {
            Some(Token::Comma) => {
                let mut parts = vec![first];
                while self.eat(&Token::Comma) {
                    if self.peek() == Some(&Token::RParen) {
                        break;
                    }
                    parts.push(self.parse_operand()?);
                }
                self.expect(Token::RParen)?;
                Ok(Rvalue::Tuple(parts))
            }
            Some(Token::RParen) => {
                self.bump();
                match first {
                    Operand::Const(c) => Ok(Rvalue::Const(c)),
                    Operand::Path(mut p) => {
                        while self.eat(&Token::Dot) {
                            p.ops.push(PathOp::Field(self.expect_number()?));
                        }
                        Ok(Rvalue::Use(p))
                    }
                }
            }
            other => {
                let found = other.map(|t| t.to_string()).unwrap_or_else(|| "end of input".into());
                Err(self.error(format!("expected `,` or `)`, found {found}")))
            }
        }
    }

    fn parse_constant(&mut self) -> PResult<Constant> {
        match self.peek() {
            Some(Token::Number(_)) => Ok(Constant::Num(self.expect_number()?)),
            Some(Token::True) => {
                self.bump();
                Ok(Constant::Bool(true))
            }
            Some(Token::False) => {
                self.bump();
                Ok(Constant::Bool(false))
            }
            other => {
                let found = other.map(|t| t.to_string()).unwrap_or_else(|| "end of input".into());
                Err(self.error(format!("expected constant, found {found}")))
            }
        }
    }

    fn parse_operand(&mut self) -> PResult<Operand> {
        match self.peek() {
            Some(Token::Number(_) | Token::True | Token::False) => {
                Ok(Operand::Const(self.parse_constant()?))
            }
            _ => Ok(Operand::Path(self.parse_path()?)),
        }
    }

    fn parse_path(&mut self) -> PResult<Path> {
        if self.eat(&Token::Star) {
            let mut p = self.parse_path()?;
            p.ops.push(PathOp::Deref);
            return Ok(p);
        }
        let mut p = match self.peek() {
            Some(Token::LParen) => {
                self.bump();
                let inner = self.parse_path()?;
                self.expect(Token::RParen)?;
                inner
            }
            _ => Path::var(self.expect_ident()?),
        };
        while self.peek() == Some(&Token::Dot) {
            self.bump();
            p.ops.push(PathOp::Field(self.expect_number()?));
        }
        Ok(p)
    }
}

/// Checks that every path base in every body names a declared parameter or
/// local, and that call argument lists reference declared names.
fn resolve_names(program: &Program) -> Vec<Diagnostic> {
    let mut diags = Vec::new();
    for f in &program.functions {
        let check = |p: &Path, index: usize, diags: &mut Vec<Diagnostic>| {
            if f.var_type(&p.base).is_none() {
                diags.push(Diagnostic::at_instr(
                    format!("unknown identifier `{}`", p.base),
                    &f.name,
                    index,
                ));
            }
        };
        for (index, instr) in f.body.instructions.iter().enumerate() {
            match instr {
                Instruction::Assign { dest, rv } => {
                    check(dest, index, &mut diags);
                    match rv {
                        Rvalue::Use(p) => check(p, index, &mut diags),
                        Rvalue::Loan(l) => check(&l.target, index, &mut diags),
                        Rvalue::Tuple(ops) => {
                            for op in ops {
                                if let Operand::Path(p) = op {
                                    check(p, index, &mut diags);
                                }
                            }
                        }
                        Rvalue::Box(Operand::Path(p)) => check(p, index, &mut diags),
                        Rvalue::Box(Operand::Const(_)) | Rvalue::Const(_) => {}
                    }
                }
                Instruction::If { cond, .. } => check(cond, index, &mut diags),
                Instruction::Call { dest, args, .. } => {
                    check(dest, index, &mut diags);
                    for a in args {
                        check(a, index, &mut diags);
                    }
                }
                Instruction::Return { operand } | Instruction::Drop { operand } => {
                    check(operand, index, &mut diags)
                }
            }
        }
    }
    diags
}

/// Parses a source document into a [`Program`].
///
/// On success the program's pretty-printing reparses to a structurally
/// identical program. Unknown identifiers and duplicate names are reported
/// as diagnostics alongside syntax errors.
pub fn parse_program(src: &str) -> Result<Program, Vec<Diagnostic>> {
    let tokens = match lex(src) {
        Ok(t) => t,
        Err(e) => return Err(vec![Diagnostic::at_source(e.message, e.line, e.col)]),
    };
    let mut parser = Parser { tokens, pos: 0, lifetime_params: BTreeSet::new() };
    let program = parser.parse_program().map_err(|d| vec![d])?;
    let diags = resolve_names(&program);
    if diags.is_empty() {
        Ok(program)
    } else {
        Err(diags)
    }
}
