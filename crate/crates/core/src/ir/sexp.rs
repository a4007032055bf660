//! Textual S-expression serialization of [`FsExpr`]/[`FsPred`], used for
//! golden tests and debugging. Parse/print round-trips are identities.
//!
//! ```text
//! (seq (mkdir /a) (create /a/f "c"))
//! ```

use std::fmt::Write as _;

use thiserror::Error;

use super::expr::{ContentId, FsExpr, FsPred};
use super::path::Path;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SexpError {
    #[error("unexpected end of input")]
    UnexpectedEof,
    #[error("unexpected token {0:?} at offset {1}")]
    Unexpected(String, usize),
    #[error("invalid path {0:?}: {1}")]
    BadPath(String, String),
    #[error("trailing input at offset {0}")]
    TrailingInput(usize),
}

pub fn print_expr(e: &FsExpr) -> String {
    let mut out = String::new();
    write_expr(&mut out, e);
    out
}

pub fn print_pred(a: &FsPred) -> String {
    let mut out = String::new();
    write_pred(&mut out, a);
    out
}

fn write_expr(out: &mut String, e: &FsExpr) {
    match e {
        FsExpr::Skip => out.push_str("skip"),
        FsExpr::Error => out.push_str("error"),
        FsExpr::Mkdir(p) => {
            let _ = write!(out, "(mkdir {p})");
        }
        FsExpr::CreateFile(p, c) => {
            let _ = write!(out, "(create {p} {})", quote(c.as_str()));
        }
        FsExpr::Rm(p) => {
            let _ = write!(out, "(rm {p})");
        }
        FsExpr::Cp(src, dst) => {
            let _ = write!(out, "(cp {src} {dst})");
        }
        FsExpr::Seq(a, b) => {
            out.push_str("(seq ");
            write_expr(out, a);
            out.push(' ');
            write_expr(out, b);
            out.push(')');
        }
        FsExpr::If(c, a, b) => {
            out.push_str("(if ");
            write_pred(out, c);
            out.push(' ');
            write_expr(out, a);
            out.push(' ');
            write_expr(out, b);
            out.push(')');
        }
    }
}

fn write_pred(out: &mut String, a: &FsPred) {
    match a {
        FsPred::True => out.push_str("true"),
        FsPred::False => out.push_str("false"),
        FsPred::DoesNotExist(p) => {
            let _ = write!(out, "(dne {p})");
        }
        FsPred::IsFile(p) => {
            let _ = write!(out, "(is-file {p})");
        }
        FsPred::IsDir(p) => {
            let _ = write!(out, "(is-dir {p})");
        }
        FsPred::IsEmptyDir(p) => {
            let _ = write!(out, "(is-empty {p})");
        }
        FsPred::And(x, y) => {
            out.push_str("(and ");
            write_pred(out, x);
            out.push(' ');
            write_pred(out, y);
            out.push(')');
        }
        FsPred::Or(x, y) => {
            out.push_str("(or ");
            write_pred(out, x);
            out.push(' ');
            write_pred(out, y);
            out.push(')');
        }
        FsPred::Not(x) => {
            out.push_str("(not ");
            write_pred(out, x);
            out.push(')');
        }
    }
}

fn quote(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for ch in s.chars() {
        match ch {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            _ => out.push(ch),
        }
    }
    out.push('"');
    out
}

pub fn parse_expr(src: &str) -> Result<FsExpr, SexpError> {
    let mut p = Parser::new(src);
    let e = p.expr()?;
    p.finish()?;
    Ok(e)
}

pub fn parse_pred(src: &str) -> Result<FsPred, SexpError> {
    let mut p = Parser::new(src);
    let a = p.pred()?;
    p.finish()?;
    Ok(a)
}

#[derive(Debug, PartialEq)]
enum Token {
    Open,
    Close,
    Atom(String),
    Str(String),
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
}

impl<'a> Parser<'a> {
    fn new(src: &'a str) -> Parser<'a> {
        Parser {
            src: src.as_bytes(),
            pos: 0,
        }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn next(&mut self) -> Result<Token, SexpError> {
        self.skip_ws();
        let b = *self.src.get(self.pos).ok_or(SexpError::UnexpectedEof)?;
        match b {
            b'(' => {
                self.pos += 1;
                Ok(Token::Open)
            }
            b')' => {
                self.pos += 1;
                Ok(Token::Close)
            }
            b'"' => {
                self.pos += 1;
                let mut s = String::new();
                loop {
                    let b = *self.src.get(self.pos).ok_or(SexpError::UnexpectedEof)?;
                    self.pos += 1;
                    match b {
                        b'"' => break,
                        b'\\' => {
                            let e = *self.src.get(self.pos).ok_or(SexpError::UnexpectedEof)?;
                            self.pos += 1;
                            s.push(e as char);
                        }
                        _ => s.push(b as char),
                    }
                }
                Ok(Token::Str(s))
            }
            _ => {
                let start = self.pos;
                while self.pos < self.src.len()
                    && !self.src[self.pos].is_ascii_whitespace()
                    && self.src[self.pos] != b'('
                    && self.src[self.pos] != b')'
                {
                    self.pos += 1;
                }
                Ok(Token::Atom(
                    String::from_utf8_lossy(&self.src[start..self.pos]).into_owned(),
                ))
            }
        }
    }

    fn expect_close(&mut self) -> Result<(), SexpError> {
        match self.next()? {
            Token::Close => Ok(()),
            t => Err(self.unexpected(t)),
        }
    }

    fn unexpected(&self, t: Token) -> SexpError {
        SexpError::Unexpected(format!("{t:?}"), self.pos)
    }

    fn path(&mut self) -> Result<Path, SexpError> {
        let raw = match self.next()? {
            Token::Atom(s) => s,
            Token::Str(s) => s,
            t => return Err(self.unexpected(t)),
        };
        Path::parse(&raw).map_err(|e| SexpError::BadPath(raw, e.to_string()))
    }

    fn string(&mut self) -> Result<String, SexpError> {
        match self.next()? {
            Token::Str(s) => Ok(s),
            t => Err(self.unexpected(t)),
        }
    }

    fn expr(&mut self) -> Result<FsExpr, SexpError> {
        match self.next()? {
            Token::Atom(a) if a == "skip" => Ok(FsExpr::Skip),
            Token::Atom(a) if a == "error" => Ok(FsExpr::Error),
            Token::Open => {
                let head = match self.next()? {
                    Token::Atom(a) => a,
                    t => return Err(self.unexpected(t)),
                };
                let e = match head.as_str() {
                    "mkdir" => FsExpr::Mkdir(self.path()?),
                    "create" => {
                        let p = self.path()?;
                        let c = self.string()?;
                        FsExpr::CreateFile(p, ContentId::new(c))
                    }
                    "rm" => FsExpr::Rm(self.path()?),
                    "cp" => {
                        let src = self.path()?;
                        let dst = self.path()?;
                        FsExpr::Cp(src, dst)
                    }
                    "seq" => {
                        let a = self.expr()?;
                        let b = self.expr()?;
                        FsExpr::seq(a, b)
                    }
                    "if" => {
                        let c = self.pred()?;
                        let a = self.expr()?;
                        let b = self.expr()?;
                        FsExpr::ite(c, a, b)
                    }
                    _ => return Err(SexpError::Unexpected(head, self.pos)),
                };
                self.expect_close()?;
                Ok(e)
            }
            t => Err(self.unexpected(t)),
        }
    }

    fn pred(&mut self) -> Result<FsPred, SexpError> {
        match self.next()? {
            Token::Atom(a) if a == "true" => Ok(FsPred::True),
            Token::Atom(a) if a == "false" => Ok(FsPred::False),
            Token::Open => {
                let head = match self.next()? {
                    Token::Atom(a) => a,
                    t => return Err(self.unexpected(t)),
                };
                let a = match head.as_str() {
                    "dne" => FsPred::DoesNotExist(self.path()?),
                    "is-file" => FsPred::IsFile(self.path()?),
                    "is-dir" => FsPred::IsDir(self.path()?),
                    "is-empty" => FsPred::IsEmptyDir(self.path()?),
                    "and" => {
                        let x = self.pred()?;
                        let y = self.pred()?;
                        FsPred::and(x, y)
                    }
                    "or" => {
                        let x = self.pred()?;
                        let y = self.pred()?;
                        FsPred::or(x, y)
                    }
                    "not" => FsPred::not(self.pred()?),
                    _ => return Err(SexpError::Unexpected(head, self.pos)),
                };
                self.expect_close()?;
                Ok(a)
            }
            t => Err(self.unexpected(t)),
        }
    }

    fn finish(&mut self) -> Result<(), SexpError> {
        self.skip_ws();
        if self.pos != self.src.len() {
            return Err(SexpError::TrailingInput(self.pos));
        }
        Ok(())
    }
}
