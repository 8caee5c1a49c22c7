//! Recursive-descent parser for coefficient expressions.
//!
//! ```text
//! sum     := signed (('+' | '-') signed)*
//! signed  := '-' signed | product
//! product := power (('*' | '/') operand)*
//! operand := '-' operand | power
//! power   := atom ('^' operand)?
//! atom    := number | 't' | 's' | 'x' | 'y' | func '(' sum ')' | '(' sum ')'
//! func    := 'sin' | 'cos' | 'exp' | 'sqrt' | 'abs'
//! ```
//!
//! A leading minus negates the whole product that follows it, so `-a*b` is
//! `-(a*b)` and `-y^2` is `-(y^2)`; after `*`, `/` or `^` a minus negates
//! only the next operand. `^` is right-associative.

use thiserror::Error;

use super::expr::{BinOp, Expr, Func, Var};

#[derive(Clone, Debug, PartialEq, Error)]
#[error("syntax error at byte {offset}: {kind}")]
pub struct ParseError {
    pub offset: usize,
    pub kind: ParseErrorKind,
}

#[derive(Clone, Debug, PartialEq, Error)]
pub enum ParseErrorKind {
    #[error("unexpected character `{0}`")]
    UnexpectedChar(char),
    #[error("unknown identifier `{0}`")]
    UnknownIdentifier(String),
    #[error("invalid number literal `{0}`")]
    InvalidNumber(String),
    #[error("unexpected end of input, expected {0}")]
    UnexpectedEnd(&'static str),
    #[error("unexpected `{found}`, expected {expected}")]
    Unexpected { found: String, expected: &'static str },
    #[error("unmatched `)`")]
    UnmatchedParen,
}

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
    End,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Num(v) => v.to_string(),
            Tok::Ident(s) => s.clone(),
            Tok::Plus => "+".into(),
            Tok::Minus => "-".into(),
            Tok::Star => "*".into(),
            Tok::Slash => "/".into(),
            Tok::Caret => "^".into(),
            Tok::LParen => "(".into(),
            Tok::RParen => ")".into(),
            Tok::End => "end of input".into(),
        }
    }
}

fn tokenize(src: &str) -> Result<Vec<(usize, Tok)>, ParseError> {
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        let start = i;
        let tok = match c {
            b' ' | b'\t' | b'\n' | b'\r' => {
                i += 1;
                continue;
            }
            b'+' => Tok::Plus,
            b'-' => Tok::Minus,
            b'*' => Tok::Star,
            b'/' => Tok::Slash,
            b'^' => Tok::Caret,
            b'(' => Tok::LParen,
            b')' => Tok::RParen,
            b'0'..=b'9' | b'.' => {
                while i < bytes.len() && (bytes[i].is_ascii_digit() || bytes[i] == b'.') {
                    i += 1;
                }
                if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
                    let mut j = i + 1;
                    if j < bytes.len() && (bytes[j] == b'+' || bytes[j] == b'-') {
                        j += 1;
                    }
                    if j < bytes.len() && bytes[j].is_ascii_digit() {
                        while j < bytes.len() && bytes[j].is_ascii_digit() {
                            j += 1;
                        }
                        i = j;
                    }
                }
                let text = &src[start..i];
                match text.parse::<f64>() {
                    Ok(v) if v.is_finite() => out.push((start, Tok::Num(v))),
                    _ => {
                        return Err(ParseError {
                            offset: start,
                            kind: ParseErrorKind::InvalidNumber(text.to_string()),
                        })
                    }
                }
                continue;
            }
            c if c.is_ascii_alphabetic() || c == b'_' => {
                while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                    i += 1;
                }
                out.push((start, Tok::Ident(src[start..i].to_string())));
                continue;
            }
            _ => {
                let ch = src[start..].chars().next().unwrap_or('\u{fffd}');
                return Err(ParseError { offset: start, kind: ParseErrorKind::UnexpectedChar(ch) });
            }
        };
        out.push((start, tok));
        i += 1;
    }
    out.push((src.len(), Tok::End));
    Ok(out)
}

struct Parser {
    toks: Vec<(usize, Tok)>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].1
    }

    fn offset(&self) -> usize {
        self.toks[self.pos].0
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].1.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn unexpected(&self, expected: &'static str) -> ParseError {
        let kind = match self.peek() {
            Tok::End => ParseErrorKind::UnexpectedEnd(expected),
            Tok::RParen if expected == "end of input" => ParseErrorKind::UnmatchedParen,
            t => ParseErrorKind::Unexpected { found: t.describe(), expected },
        };
        ParseError { offset: self.offset(), kind }
    }

    fn sum(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.signed()?;
        loop {
            let op = match self.peek() {
                Tok::Plus => BinOp::Add,
                Tok::Minus => BinOp::Sub,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.signed()?;
            lhs = Expr::binary(op, lhs, rhs);
        }
    }

    fn signed(&mut self) -> Result<Expr, ParseError> {
        if *self.peek() == Tok::Minus {
            self.bump();
            return Ok(Expr::neg(self.signed()?));
        }
        self.product()
    }

    fn product(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.power()?;
        loop {
            let op = match self.peek() {
                Tok::Star => BinOp::Mul,
                Tok::Slash => BinOp::Div,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.operand()?;
            lhs = Expr::binary(op, lhs, rhs);
        }
    }

    fn operand(&mut self) -> Result<Expr, ParseError> {
        if *self.peek() == Tok::Minus {
            self.bump();
            return Ok(Expr::neg(self.operand()?));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr, ParseError> {
        let base = self.atom()?;
        if *self.peek() == Tok::Caret {
            self.bump();
            let exponent = self.operand()?;
            return Ok(Expr::pow(base, exponent));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Expr, ParseError> {
        let at = self.offset();
        match self.peek().clone() {
            Tok::Num(v) => {
                self.bump();
                Ok(Expr::num(v))
            }
            Tok::Ident(name) => {
                self.bump();
                match name.as_str() {
                    "t" | "s" => Ok(Expr::var(Var::T)),
                    "x" => Ok(Expr::var(Var::X)),
                    "y" => Ok(Expr::var(Var::Y)),
                    _ => {
                        let func = Func::from_name(&name).ok_or(ParseError {
                            offset: at,
                            kind: ParseErrorKind::UnknownIdentifier(name),
                        })?;
                        if *self.peek() != Tok::LParen {
                            return Err(self.unexpected("`(` after function name"));
                        }
                        self.bump();
                        let arg = self.sum()?;
                        self.close()?;
                        Ok(Expr::call(func, arg))
                    }
                }
            }
            Tok::LParen => {
                self.bump();
                let inner = self.sum()?;
                self.close()?;
                Ok(inner)
            }
            _ => Err(self.unexpected("a number, variable, function or `(`")),
        }
    }

    fn close(&mut self) -> Result<(), ParseError> {
        if *self.peek() == Tok::RParen {
            self.bump();
            Ok(())
        } else {
            Err(self.unexpected("`)`"))
        }
    }
}

/// Parses an expression in `t`, `x`, `y`.
pub fn parse_expr(src: &str) -> Result<Expr, ParseError> {
    let toks = tokenize(src)?;
    let mut p = Parser { toks, pos: 0 };
    let e = p.sum()?;
    if *p.peek() != Tok::End {
        return Err(p.unexpected("end of input"));
    }
    Ok(e)
}
