//! Hand-rolled lexer with line/column tracking for parse diagnostics.

use std::fmt;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Token {
    Ident(String),
    Number(u32),
    Lifetime(String),
    // keywords
    Fn,
    Let,
    Mut,
    Box,
    Drop,
    Return,
    If,
    Then,
    Else,
    Call,
    Shared,
    Unique,
    True,
    False,
    U32,
    Bool,
    // punctuation
    LBrace,
    RBrace,
    LParen,
    RParen,
    Lt,
    Gt,
    Comma,
    Colon,
    Semi,
    Eq,
    Amp,
    Star,
    Dot,
    Arrow,     // ->
    Outlives,  // :>
}

impl fmt::Display for Token {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Token::Ident(s) => write!(f, "`{s}`"),
            Token::Number(n) => write!(f, "`{n}`"),
            Token::Lifetime(s) => write!(f, "`'{s}`"),
            Token::Fn => f.write_str("`fn`"),
            Token::Let => f.write_str("`let`"),
            Token::Mut => f.write_str("`mut`"),
            Token::Box => f.write_str("`box`"),
            Token::Drop => f.write_str("`drop`"),
            Token::Return => f.write_str("`return`"),
            Token::If => f.write_str("`if`"),
            Token::Then => f.write_str("`then`"),
            Token::Else => f.write_str("`else`"),
            Token::Call => f.write_str("`call`"),
            Token::Shared => f.write_str("`shared`"),
            Token::Unique => f.write_str("`unique`"),
            Token::True => f.write_str("`true`"),
            Token::False => f.write_str("`false`"),
            Token::U32 => f.write_str("`u32`"),
            Token::Bool => f.write_str("`bool`"),
            Token::LBrace => f.write_str("`{`"),
            Token::RBrace => f.write_str("`}`"),
            Token::LParen => f.write_str("`(`"),
            Token::RParen => f.write_str("`)`"),
            Token::Lt => f.write_str("`<`"),
            Token::Gt => f.write_str("`>`"),
            Token::Comma => f.write_str("`,`"),
            Token::Colon => f.write_str("`:`"),
            Token::Semi => f.write_str("`;`"),
            Token::Eq => f.write_str("`=`"),
            Token::Amp => f.write_str("`&`"),
            Token::Star => f.write_str("`*`"),
            Token::Dot => f.write_str("`.`"),
            Token::Arrow => f.write_str("`->`"),
            Token::Outlives => f.write_str("`:>`"),
        }
    }
}

#[derive(Clone, Debug)]
pub struct Spanned {
    pub token: Token,
    pub line: usize,
    pub col: usize,
}

#[derive(Clone, Debug)]
pub struct LexError {
    pub message: String,
    pub line: usize,
    pub col: usize,
}

pub fn lex(src: &str) -> Result<Vec<Spanned>, LexError> {
    let mut out = Vec::new();
    let mut chars = src.chars().peekable();
    let mut line = 1usize;
    let mut col = 1usize;

    macro_rules! bump {
        () => {{
            let c = chars.next();
            if c == Some('\n') {
                line += 1;
                col = 1;
            } else if c.is_some() {
                col += 1;
            }
            c
        }};
    }

    while let Some(&c) = chars.peek() {
        let (tl, tc) = (line, col);
        match c {
            ' ' | '\t' | '\r' | '\n' => {
                bump!();
            }
            '/' => {
                // line comments: `// ...`
                bump!();
                if chars.peek() == Some(&'/') {
                    while let Some(&c) = chars.peek() {
                        if c == '\n' {
                            break;
                        }
                        bump!();
                    }
                } else {
                    return Err(LexError { message: "unexpected character `/`".into(), line: tl, col: tc });
                }
            }
            '{' => { bump!(); out.push(Spanned { token: Token::LBrace, line: tl, col: tc }); }
            '}' => { bump!(); out.push(Spanned { token: Token::RBrace, line: tl, col: tc }); }
            '(' => { bump!(); out.push(Spanned { token: Token::LParen, line: tl, col: tc }); }
            ')' => { bump!(); out.push(Spanned { token: Token::RParen, line: tl, col: tc }); }
            '<' => { bump!(); out.push(Spanned { token: Token::Lt, line: tl, col: tc }); }
            '>' => { bump!(); out.push(Spanned { token: Token::Gt, line: tl, col: tc }); }
            ',' => { bump!(); out.push(Spanned { token: Token::Comma, line: tl, col: tc }); }
            ';' => { bump!(); out.push(Spanned { token: Token::Semi, line: tl, col: tc }); }
            '=' => { bump!(); out.push(Spanned { token: Token::Eq, line: tl, col: tc }); }
            '&' => { bump!(); out.push(Spanned { token: Token::Amp, line: tl, col: tc }); }
            '*' => { bump!(); out.push(Spanned { token: Token::Star, line: tl, col: tc }); }
            '.' => { bump!(); out.push(Spanned { token: Token::Dot, line: tl, col: tc }); }
            ':' => {
                bump!();
                if chars.peek() == Some(&'>') {
                    bump!();
                    out.push(Spanned { token: Token::Outlives, line: tl, col: tc });
                } else {
                    out.push(Spanned { token: Token::Colon, line: tl, col: tc });
                }
            }
            '-' => {
                bump!();
                if chars.peek() == Some(&'>') {
                    bump!();
                    out.push(Spanned { token: Token::Arrow, line: tl, col: tc });
                } else {
                    return Err(LexError { message: "unexpected character `-`".into(), line: tl, col: tc });
                }
            }
            '\'' => {
                bump!();
                let mut name = String::new();
                while let Some(&c) = chars.peek() {
                    if c.is_ascii_alphanumeric() || c == '_' {
                        name.push(c);
                        bump!();
                    } else {
                        break;
                    }
                }
                if name.is_empty() {
                    return Err(LexError { message: "expected lifetime name after `'`".into(), line: tl, col: tc });
                }
                out.push(Spanned { token: Token::Lifetime(name), line: tl, col: tc });
            }
            c if c.is_ascii_digit() => {
                let mut text = String::new();
                while let Some(&c) = chars.peek() {
                    if c.is_ascii_digit() {
                        text.push(c);
                        bump!();
                    } else {
                        break;
                    }
                }
                let n: u32 = text.parse().map_err(|_| LexError {
                    message: format!("number `{text}` does not fit in 32 bits"),
                    line: tl,
                    col: tc,
                })?;
                out.push(Spanned { token: Token::Number(n), line: tl, col: tc });
            }
            c if c.is_ascii_alphabetic() || c == '_' => {
                let mut name = String::new();
                while let Some(&c) = chars.peek() {
                    if c.is_ascii_alphanumeric() || c == '_' {
                        name.push(c);
                        bump!();
                    } else {
                        break;
                    }
                }
                let token = match name.as_str() {
                    "fn" => Token::Fn,
                    "let" => Token::Let,
                    "mut" => Token::Mut,
                    "box" => Token::Box,
                    "drop" => Token::Drop,
                    "return" => Token::Return,
                    "if" => Token::If,
                    "then" => Token::Then,
                    "else" => Token::Else,
                    "call" => Token::Call,
                    "shared" => Token::Shared,
                    "unique" => Token::Unique,
                    "true" => Token::True,
                    "false" => Token::False,
                    "u32" => Token::U32,
                    "bool" => Token::Bool,
                    _ => Token::Ident(name),
                };
                out.push(Spanned { token, line: tl, col: tc });
            }
            other => {
                return Err(LexError { message: format!("unexpected character `{other}`"), line: tl, col: tc });
            }
        }
    }
    Ok(out)
}
