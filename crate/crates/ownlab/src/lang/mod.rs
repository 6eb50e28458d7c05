//! The object language: syntax, parser, well-formedness, types, printer.

mod ast;
mod lexer;
mod parse;
mod print;
mod types;
mod wf;

pub use ast::*;
pub use parse::parse_program;
pub use print::{pretty_print, pretty_print_with, PrintOptions};
pub use types::{instruction_paths, path_type, type_check, TypedFunction, TypedProgram};
pub use wf::well_formed;

use std::fmt;

/// A problem with a program: a parse error, a structural violation, or a
/// type error. Parse errors carry source positions; later phases name the
/// function and instruction instead.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Diagnostic {
    pub message: String,
    pub func: Option<String>,
    pub instr: Option<usize>,
    pub line: Option<usize>,
    pub col: Option<usize>,
}

impl Diagnostic {
    pub fn at_source(message: impl Into<String>, line: usize, col: usize) -> Self {
        Diagnostic { message: message.into(), func: None, instr: None, line: Some(line), col: Some(col) }
    }

    pub fn in_func(message: impl Into<String>, func: impl Into<String>) -> Self {
        Diagnostic { message: message.into(), func: Some(func.into()), instr: None, line: None, col: None }
    }

    pub fn at_instr(message: impl Into<String>, func: impl Into<String>, instr: usize) -> Self {
        Diagnostic {
            message: message.into(),
            func: Some(func.into()),
            instr: Some(instr),
            line: None,
            col: None,
        }
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (&self.func, self.instr, self.line, self.col) {
            (Some(func), Some(i), _, _) => write!(f, "{func}:{i}: {}", self.message),
            (Some(func), None, _, _) => write!(f, "{func}: {}", self.message),
            (None, _, Some(line), Some(col)) => write!(f, "{line}:{col}: {}", self.message),
            _ => f.write_str(&self.message),
        }
    }
}
