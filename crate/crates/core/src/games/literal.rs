//! Element literals for scripted moves.
//!
//! ```text
//! expr  := term (("+" | "-") term)*
//! term  := (real "*")? atom | "-" term
//! atom  := "one" | "i" | "zero" | "diag(" real ("," real)* ")"
//!        | "E" digit digit | "E" block "_" digit digit | "(" expr ")"
//! ```
//!
//! `E12` is the matrix unit in the first block; `diag` lists the diagonal
//! of all blocks in order; `i` is `i·1`.

use std::sync::Arc;

use super::GameError;
use crate::algebra::{AlgebraElement, TracialAlgebra, C64};

struct Lit<'a> {
    s: &'a [u8],
    at: usize,
    alg: &'a Arc<TracialAlgebra>,
}

impl Lit<'_> {
    fn err<T>(&self, msg: &str) -> Result<T, GameError> {
        Err(GameError::BadLiteral(format!(
            "{msg} at position {} in `{}`",
            self.at,
            String::from_utf8_lossy(self.s)
        )))
    }

    fn skip_ws(&mut self) {
        while self.at < self.s.len() && self.s[self.at].is_ascii_whitespace() {
            self.at += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.s.get(self.at).copied()
    }

    fn eat(&mut self, c: u8) -> bool {
        if self.peek() == Some(c) {
            self.at += 1;
            true
        } else {
            false
        }
    }

    fn number(&mut self) -> Result<f64, GameError> {
        self.skip_ws();
        let start = self.at;
        if matches!(self.s.get(self.at), Some(b'-') | Some(b'+')) {
            self.at += 1;
        }
        while self.at < self.s.len() && (self.s[self.at].is_ascii_digit() || self.s[self.at] == b'.' || self.s[self.at] == b'e') {
            self.at += 1;
        }
        let text = std::str::from_utf8(&self.s[start..self.at]).unwrap_or("");
        let v: f64 = match text.parse() {
            Ok(v) => v,
            Err(_) => return self.err("number expected"),
        };
        if self.eat(b'/') {
            let d = self.number()?;
            return Ok(v / d);
        }
        Ok(v)
    }

    fn expr(&mut self) -> Result<AlgebraElement, GameError> {
        let mut acc = self.term()?;
        loop {
            if self.eat(b'+') {
                acc = &acc + &self.term()?;
            } else if self.eat(b'-') {
                acc = &acc - &self.term()?;
            } else {
                return Ok(acc);
            }
        }
    }

    fn term(&mut self) -> Result<AlgebraElement, GameError> {
        if self.eat(b'-') {
            return Ok(-&self.term()?);
        }
        if matches!(self.peek(), Some(c) if c.is_ascii_digit() || c == b'.') {
            let v = self.number()?;
            if !self.eat(b'*') {
                return self.err("`*` expected after scalar");
            }
            return Ok(self.atom()?.scale_real(v));
        }
        self.atom()
    }

    fn word(&mut self) -> String {
        self.skip_ws();
        let start = self.at;
        while self.at < self.s.len() && (self.s[self.at].is_ascii_alphanumeric() || self.s[self.at] == b'_') {
            self.at += 1;
        }
        String::from_utf8_lossy(&self.s[start..self.at]).into_owned()
    }

    fn atom(&mut self) -> Result<AlgebraElement, GameError> {
        if self.eat(b'(') {
            let e = self.expr()?;
            if !self.eat(b')') {
                return self.err("`)` expected");
            }
            return Ok(e);
        }
        let w = self.word();
        match w.as_str() {
            "one" => Ok(AlgebraElement::identity(self.alg)),
            "zero" => Ok(AlgebraElement::zero(self.alg)),
            "i" => Ok(AlgebraElement::scalar(self.alg, C64::new(0.0, 1.0))),
            "diag" => {
                if !self.eat(b'(') {
                    return self.err("`(` expected");
                }
                let mut d = vec![self.number()?];
                while self.eat(b',') {
                    d.push(self.number()?);
                }
                if !self.eat(b')') {
                    return self.err("`)` expected");
                }
                AlgebraElement::real_diag(self.alg, &d).map_err(|e| GameError::BadLiteral(e.to_string()))
            }
            _ if w.starts_with('E') => self.matrix_unit(&w[1..]),
            _ => self.err("element expected"),
        }
    }

    fn matrix_unit(&self, rest: &str) -> Result<AlgebraElement, GameError> {
        let (block, ij) = match rest.split_once('_') {
            Some((b, ij)) => (b.parse::<usize>().ok(), ij),
            None => (Some(0), rest),
        };
        let digits: Vec<usize> = ij.chars().filter_map(|c| c.to_digit(10).map(|d| d as usize)).collect();
        match (block, digits.as_slice()) {
            (Some(b), [i, j]) if ij.len() == 2 && b < self.alg.num_blocks() && *i >= 1 && *j >= 1 && *i <= self.alg.blocks()[b] && *j <= self.alg.blocks()[b] => {
                Ok(AlgebraElement::matrix_unit(self.alg, b, i - 1, j - 1))
            }
            _ => self.err(&format!("bad matrix unit `E{rest}`")),
        }
    }
}

/// Parses an element literal in `alg`.
pub fn parse_element(text: &str, alg: &Arc<TracialAlgebra>) -> Result<AlgebraElement, GameError> {
    let mut p = Lit {
        s: text.as_bytes(),
        at: 0,
        alg,
    };
    let e = p.expr()?;
    if p.peek().is_some() {
        return p.err("trailing input");
    }
    Ok(e)
}
