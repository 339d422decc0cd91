//! Recursive-descent parser for metric component expressions.
//!
//! ```text
//! expr   := term (('+' | '-') term)*
//! term   := factor (('*' | '/') factor)*
//! factor := '-' factor | power
//! power  := atom ('^' exponent)?
//! atom   := number | number 'i' | 'i' | 'z' int | 'zbar' int
//!         | 'conj(' expr ')' | 'abs2(z)' | 'log(' expr ')' | 'exp(' expr ')'
//!         | '(' expr ')'
//! ```
//!
//! Power binds tighter than unary minus and is right-associative; exponents
//! are (optionally signed) integers.

use crate::error::{Error, Result};
use crate::tensor::C64;

use super::expr::Expr;

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Imag(f64),
    Ident(String),
    Op(char),
}

#[derive(Debug, Clone)]
struct Spanned {
    tok: Tok,
    col: usize,
}

fn lex(src: &str, line: usize, col0: usize) -> Result<Vec<Spanned>> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let col = col0 + i;
        if c.is_whitespace() {
            i += 1;
        } else if c.is_ascii_digit() || c == '.' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.') {
                i += 1;
            }
            if i < chars.len() && (chars[i] == 'e' || chars[i] == 'E') {
                let mut j = i + 1;
                if j < chars.len() && (chars[j] == '+' || chars[j] == '-') {
                    j += 1;
                }
                if j < chars.len() && chars[j].is_ascii_digit() {
                    i = j;
                    while i < chars.len() && chars[i].is_ascii_digit() {
                        i += 1;
                    }
                }
            }
            let text: String = chars[start..i].iter().collect();
            let v: f64 = text.parse().map_err(|_| Error::Syntax {
                line,
                column: col,
                message: format!("malformed number `{text}`"),
            })?;
            let imag = i < chars.len()
                && chars[i] == 'i'
                && !(i + 1 < chars.len() && chars[i + 1].is_ascii_alphanumeric());
            if imag {
                i += 1;
                out.push(Spanned {
                    tok: Tok::Imag(v),
                    col,
                });
            } else {
                out.push(Spanned {
                    tok: Tok::Num(v),
                    col,
                });
            }
        } else if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            out.push(Spanned {
                tok: Tok::Ident(chars[start..i].iter().collect()),
                col,
            });
        } else if "+-*/^()".contains(c) {
            out.push(Spanned {
                tok: Tok::Op(c),
                col,
            });
            i += 1;
        } else {
            return Err(Error::Syntax {
                line,
                column: col,
                message: format!("unexpected character `{c}`"),
            });
        }
    }
    Ok(out)
}

struct Parser {
    toks: Vec<Spanned>,
    pos: usize,
    line: usize,
    end_col: usize,
    dim: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|s| &s.tok)
    }

    fn col(&self) -> usize {
        self.toks.get(self.pos).map_or(self.end_col, |s| s.col)
    }

    fn err<T>(&self, message: impl Into<String>) -> Result<T> {
        Err(Error::Syntax {
            line: self.line,
            column: self.col(),
            message: message.into(),
        })
    }

    fn eat_op(&mut self, c: char) -> bool {
        if self.peek() == Some(&Tok::Op(c)) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect_op(&mut self, c: char) -> Result<()> {
        if self.eat_op(c) {
            Ok(())
        } else {
            self.err(format!("expected `{c}`"))
        }
    }

    fn expr(&mut self) -> Result<Expr> {
        let mut lhs = self.term()?;
        loop {
            let op = match self.peek() {
                Some(Tok::Op('+')) => '+',
                Some(Tok::Op('-')) => '-',
                _ => return Ok(lhs),
            };
            self.pos += 1;
            let rhs = self.term()?;
            lhs = match (&lhs, &rhs) {
                // `a+bi` literal
                (Expr::Lit(a), Expr::Lit(b)) if a.im == 0.0 && b.re == 0.0 => {
                    let im = if op == '+' { b.im } else { -b.im };
                    Expr::Lit(C64::new(a.re, im))
                }
                _ if op == '+' => Expr::Add(Box::new(lhs), Box::new(rhs)),
                _ => Expr::Sub(Box::new(lhs), Box::new(rhs)),
            };
        }
    }

    fn term(&mut self) -> Result<Expr> {
        let mut lhs = self.factor()?;
        loop {
            if self.eat_op('*') {
                lhs = Expr::Mul(Box::new(lhs), Box::new(self.factor()?));
            } else if self.eat_op('/') {
                lhs = Expr::Div(Box::new(lhs), Box::new(self.factor()?));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn factor(&mut self) -> Result<Expr> {
        if self.eat_op('-') {
            return Ok(match self.factor()? {
                Expr::Lit(c) => Expr::Lit(-c),
                other => Expr::Neg(Box::new(other)),
            });
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr> {
        let base = self.atom()?;
        if self.eat_op('^') {
            let p = self.exponent()?;
            return Ok(Expr::Pow(Box::new(base), p));
        }
        Ok(base)
    }

    fn exponent(&mut self) -> Result<i32> {
        let p = if self.eat_op('(') {
            let p = self.signed_int()?;
            self.expect_op(')')?;
            p
        } else {
            self.signed_int()?
        };
        if self.eat_op('^') {
            let q = self.exponent()?;
            if q < 0 {
                return self.err("negative exponent in a power tower");
            }
            return i32::try_from((p as i64).checked_pow(q as u32).unwrap_or(i64::MAX))
                .or_else(|_| self.err("exponent overflow"));
        }
        Ok(p)
    }

    fn signed_int(&mut self) -> Result<i32> {
        let neg = self.eat_op('-');
        match self.peek() {
            Some(Tok::Num(v)) if v.fract() == 0.0 && v.abs() <= i32::MAX as f64 => {
                let v = *v as i32;
                self.pos += 1;
                Ok(if neg { -v } else { v })
            }
            _ => self.err("expected integer exponent"),
        }
    }

    fn var_index(&self, name: &str, digits: &str, col: usize) -> Result<usize> {
        let k: usize = digits.parse().map_err(|_| Error::UnknownIdentifier {
            name: name.to_string(),
            line: self.line,
            column: col,
        })?;
        if k == 0 || k > self.dim {
            return Err(Error::IndexOutOfRange {
                index: k,
                dim: self.dim,
            });
        }
        Ok(k - 1)
    }

    fn call_arg(&mut self) -> Result<Expr> {
        self.expect_op('(')?;
        let e = self.expr()?;
        self.expect_op(')')?;
        Ok(e)
    }

    fn atom(&mut self) -> Result<Expr> {
        let col = self.col();
        let tok = match self.peek() {
            Some(t) => t.clone(),
            None => return self.err("unexpected end of expression"),
        };
        match tok {
            Tok::Num(v) => {
                self.pos += 1;
                Ok(Expr::real(v))
            }
            Tok::Imag(v) => {
                self.pos += 1;
                Ok(Expr::Lit(C64::new(0.0, v)))
            }
            Tok::Op('(') => {
                self.pos += 1;
                let e = self.expr()?;
                self.expect_op(')')?;
                Ok(e)
            }
            Tok::Op(c) => self.err(format!("unexpected `{c}`")),
            Tok::Ident(name) => {
                self.pos += 1;
                match name.as_str() {
                    "i" => Ok(Expr::Lit(C64::new(0.0, 1.0))),
                    "conj" => Ok(match self.call_arg()? {
                        Expr::Var { index, conj } => Expr::Var { index, conj: !conj },
                        Expr::Lit(c) => Expr::Lit(c.conj()),
                        other => Expr::Conj(Box::new(other)),
                    }),
                    "log" => Ok(Expr::Log(Box::new(self.call_arg()?))),
                    "exp" => Ok(Expr::Exp(Box::new(self.call_arg()?))),
                    "abs2" => {
                        self.expect_op('(')?;
                        match self.peek() {
                            Some(Tok::Ident(z)) if z == "z" => self.pos += 1,
                            _ => return self.err("abs2 takes the chart vector `z`"),
                        }
                        self.expect_op(')')?;
                        Ok(Expr::Abs2)
                    }
                    _ => {
                        if let Some(d) = name.strip_prefix("zbar") {
                            if !d.is_empty() && d.chars().all(|c| c.is_ascii_digit()) {
                                return Ok(Expr::zbar(self.var_index(&name, d, col)?));
                            }
                        }
                        if let Some(d) = name.strip_prefix('z') {
                            if !d.is_empty() && d.chars().all(|c| c.is_ascii_digit()) {
                                return Ok(Expr::z(self.var_index(&name, d, col)?));
                            }
                        }
                        Err(Error::UnknownIdentifier {
                            name,
                            line: self.line,
                            column: col,
                        })
                    }
                }
            }
        }
    }
}

/// Parses one expression over `dim` chart variables. `line` and `col0`
/// (both 1-based) locate the text for error messages.
pub fn parse_expr_at(src: &str, dim: usize, line: usize, col0: usize) -> Result<Expr> {
    let toks = lex(src, line, col0)?;
    let end_col = col0 + src.chars().count();
    let mut p = Parser {
        toks,
        pos: 0,
        line,
        end_col,
        dim,
    };
    let e = p.expr()?;
    if p.pos != p.toks.len() {
        return p.err("trailing input");
    }
    Ok(e)
}

pub fn parse_expr(src: &str, dim: usize) -> Result<Expr> {
    parse_expr_at(src, dim, 1, 1)
}
