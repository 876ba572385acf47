use std::collections::HashMap;

use super::ast::{Formula, Quantifier, Sort, Term};
use super::FormulaError;
use crate::algebra::C64;

const KEYWORDS: &[&str] = &["sup", "inf", "max", "min", "abs", "n2", "reip", "imip", "one"];

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Ident(String),
    Num(f64),
    Sym(&'static str),
    Eof,
}

fn lex(text: &str) -> Result<Vec<(Tok, usize)>, FormulaError> {
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i] as char;
        if c.is_whitespace() {
            i += 1;
            continue;
        }
        let start = i;
        if c.is_ascii_alphabetic() || c == '_' {
            while i < bytes.len() && ((bytes[i] as char).is_ascii_alphanumeric() || bytes[i] == b'_') {
                i += 1;
            }
            out.push((Tok::Ident(text[start..i].to_string()), start));
            continue;
        }
        if c.is_ascii_digit() {
            while i < bytes.len() && bytes[i].is_ascii_digit() {
                i += 1;
            }
            if i + 1 < bytes.len() && bytes[i] == b'.' && bytes[i + 1].is_ascii_digit() {
                i += 1;
                while i < bytes.len() && bytes[i].is_ascii_digit() {
                    i += 1;
                }
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
            let v: f64 = text[start..i].parse().map_err(|_| FormulaError::Syntax {
                pos: start,
                msg: format!("bad number `{}`", &text[start..i]),
            })?;
            out.push((Tok::Num(v), start));
            continue;
        }
        let two = text.get(i..i + 2);
        let sym: &'static str = match (c, two) {
            (_, Some("-.")) => "-.",
            (_, Some("^*")) => "^*",
            ('(', _) => "(",
            (')', _) => ")",
            ('[', _) => "[",
            (']', _) => "]",
            (',', _) => ",",
            ('.', _) => ".",
            (':', _) => ":",
            ('+', _) => "+",
            ('-', _) => "-",
            ('*', _) => "*",
            ('/', _) => "/",
            _ => {
                return Err(FormulaError::Syntax {
                    pos: start,
                    msg: format!("unexpected character `{}`", text[start..].chars().next().unwrap_or(c)),
                })
            }
        };
        i += sym.len();
        out.push((Tok::Sym(sym), start));
    }
    out.push((Tok::Eof, text.len()));
    Ok(out)
}

struct Parser {
    toks: Vec<(Tok, usize)>,
    at: usize,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.at].0
    }

    fn peek2(&self) -> &Tok {
        &self.toks[(self.at + 1).min(self.toks.len() - 1)].0
    }

    fn pos(&self) -> usize {
        self.toks[self.at].1
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.at].0.clone();
        if self.at + 1 < self.toks.len() {
            self.at += 1;
        }
        t
    }

    fn err<T>(&self, msg: impl Into<String>) -> Result<T, FormulaError> {
        Err(FormulaError::Syntax {
            pos: self.pos(),
            msg: msg.into(),
        })
    }

    fn is_sym(&self, s: &str) -> bool {
        matches!(self.peek(), Tok::Sym(t) if *t == s)
    }

    fn eat(&mut self, s: &str) -> bool {
        if self.is_sym(s) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, s: &str) -> Result<(), FormulaError> {
        if self.eat(s) {
            Ok(())
        } else {
            self.err(format!("expected `{s}`, found {}", describe(self.peek())))
        }
    }

    fn is_ident(&self, name: &str) -> bool {
        matches!(self.peek(), Tok::Ident(t) if t == name)
    }

    /// `NUM ("/" NUM)?`
    fn number(&mut self) -> Result<f64, FormulaError> {
        let Tok::Num(v) = self.bump() else {
            return self.err("number expected");
        };
        if self.eat("/") {
            let pos = self.pos();
            let Tok::Num(d) = self.bump() else {
                return self.err("denominator expected");
            };
            if d == 0.0 {
                return Err(FormulaError::Syntax {
                    pos,
                    msg: "zero denominator".into(),
                });
            }
            return Ok(v / d);
        }
        Ok(v)
    }

    fn signed_number(&mut self) -> Result<f64, FormulaError> {
        if self.eat("-") {
            Ok(-self.number()?)
        } else {
            self.number()
        }
    }

    fn sentence(&mut self) -> Result<Formula, FormulaError> {
        let mut prefix = Vec::new();
        while self.is_ident("sup") || self.is_ident("inf") {
            let kind = if self.is_ident("sup") { Quantifier::Sup } else { Quantifier::Inf };
            self.bump();
            let var = self.variable_name()?;
            self.expect(":")?;
            let sort = self.sort()?;
            self.expect(".")?;
            prefix.push((kind, var, sort));
        }
        let body = self.qf_sum()?;
        if *self.peek() != Tok::Eof {
            return self.err(format!("unexpected {}", describe(self.peek())));
        }
        Ok(Formula::with_prefix(&prefix, body))
    }

    fn variable_name(&mut self) -> Result<String, FormulaError> {
        match self.peek().clone() {
            Tok::Ident(n) if !KEYWORDS.contains(&n.as_str()) => {
                self.bump();
                Ok(n)
            }
            t => self.err(format!("variable expected, found {}", describe(&t))),
        }
    }

    fn sort(&mut self) -> Result<Sort, FormulaError> {
        let pos = self.pos();
        let Tok::Ident(s) = self.bump() else {
            return Err(FormulaError::Syntax {
                pos,
                msg: "sort expected".into(),
            });
        };
        if s == "U" {
            return Ok(Sort::Unitary);
        }
        match s.strip_prefix('C').map(str::parse::<u32>) {
            Some(Ok(n)) if n >= 1 => Ok(Sort::Ball(n)),
            _ => Err(FormulaError::UnknownSort { pos, sort: s }),
        }
    }

    fn qf_sum(&mut self) -> Result<Formula, FormulaError> {
        let mut left = self.qf_unary()?;
        loop {
            if self.eat("+") {
                left = Formula::add(left, self.qf_unary()?);
            } else if self.eat("-.") {
                left = Formula::dot_minus(left, self.qf_unary()?);
            } else if self.eat("-") {
                left = Formula::add(left, Formula::Scale(-1.0, Box::new(self.qf_unary()?)));
            } else {
                return Ok(left);
            }
        }
    }

    fn qf_args(&mut self) -> Result<Vec<Formula>, FormulaError> {
        self.expect("(")?;
        let mut args = vec![self.qf_sum()?];
        while self.eat(",") {
            args.push(self.qf_sum()?);
        }
        self.expect(")")?;
        Ok(args)
    }

    fn qf_unary(&mut self) -> Result<Formula, FormulaError> {
        let pos = self.pos();
        match self.peek().clone() {
            Tok::Sym("-") => {
                if matches!(self.peek2(), Tok::Num(_)) {
                    let v = self.signed_number()?;
                    if self.eat("*") {
                        return Ok(Formula::Scale(v, Box::new(self.qf_unary()?)));
                    }
                    return Ok(Formula::Const(v));
                }
                self.bump();
                Ok(Formula::Scale(-1.0, Box::new(self.qf_unary()?)))
            }
            Tok::Num(_) => {
                let v = self.number()?;
                if self.eat("*") {
                    return Ok(Formula::Scale(v, Box::new(self.qf_unary()?)));
                }
                Ok(Formula::Const(v))
            }
            Tok::Sym("(") => {
                self.bump();
                let f = self.qf_sum()?;
                self.expect(")")?;
                Ok(f)
            }
            Tok::Ident(name) => match name.as_str() {
                "max" | "min" => {
                    self.bump();
                    let args = self.qf_args()?;
                    if args.len() < 2 {
                        return Err(FormulaError::Syntax {
                            pos,
                            msg: format!("{name} needs at least two arguments"),
                        });
                    }
                    Ok(if name == "max" { Formula::Max(args) } else { Formula::Min(args) })
                }
                "abs" => {
                    self.bump();
                    let mut args = self.qf_args()?;
                    if args.len() != 1 {
                        return Err(FormulaError::Syntax {
                            pos,
                            msg: "abs takes one argument".into(),
                        });
                    }
                    Ok(Formula::Abs(Box::new(args.remove(0))))
                }
                "n2" => {
                    self.bump();
                    self.expect("(")?;
                    let t = self.term_sum()?;
                    self.expect(")")?;
                    Ok(Formula::Norm2(t))
                }
                "reip" | "imip" => {
                    self.bump();
                    self.expect("(")?;
                    let a = self.term_sum()?;
                    self.expect(",")?;
                    let b = self.term_sum()?;
                    self.expect(")")?;
                    Ok(if name == "reip" { Formula::ReIp(a, b) } else { Formula::ImIp(a, b) })
                }
                "sup" | "inf" => self.err("quantifier in non-prenex position"),
                _ => self.err("formula expected, term found"),
            },
            Tok::Sym("[") => self.err("formula expected, term found"),
            t => self.err(format!("formula expected, found {}", describe(&t))),
        }
    }

    fn term_sum(&mut self) -> Result<Term, FormulaError> {
        let mut items = vec![self.term_prod()?];
        loop {
            if self.eat("+") {
                items.push(self.term_prod()?);
            } else if self.is_sym("-") {
                self.bump();
                items.push(Term::real_scale(-1.0, self.term_prod()?));
            } else {
                break;
            }
        }
        Ok(if items.len() == 1 { items.remove(0) } else { Term::Sum(items) })
    }

    fn term_prod(&mut self) -> Result<Term, FormulaError> {
        let mut left = self.term_unary()?;
        while self.eat("*") || self.eat(".") {
            left = Term::product(left, self.term_unary()?);
        }
        Ok(left)
    }

    fn term_unary(&mut self) -> Result<Term, FormulaError> {
        match self.peek().clone() {
            Tok::Sym("-") => {
                if matches!(self.peek2(), Tok::Num(_)) {
                    let v = self.signed_number()?;
                    self.expect("*")?;
                    return Ok(Term::real_scale(v, self.term_unary()?));
                }
                self.bump();
                Ok(Term::real_scale(-1.0, self.term_unary()?))
            }
            Tok::Num(_) => {
                let v = self.number()?;
                if !self.is_sym("*") {
                    return self.err("term expected, found a bare number");
                }
                self.bump();
                Ok(Term::real_scale(v, self.term_unary()?))
            }
            Tok::Sym("[") => {
                self.bump();
                let re = self.signed_number()?;
                self.expect(",")?;
                let im = self.signed_number()?;
                self.expect("]")?;
                self.expect("*")?;
                Ok(Term::scale(C64::new(re, im), self.term_unary()?))
            }
            _ => self.term_postfix(),
        }
    }

    fn term_postfix(&mut self) -> Result<Term, FormulaError> {
        let mut t = self.term_primary()?;
        while self.eat("^*") {
            t = Term::adjoint(t);
        }
        Ok(t)
    }

    fn term_primary(&mut self) -> Result<Term, FormulaError> {
        match self.peek().clone() {
            Tok::Ident(n) if n == "one" => {
                self.bump();
                Ok(Term::One)
            }
            Tok::Ident(n) if !KEYWORDS.contains(&n.as_str()) => {
                self.bump();
                Ok(Term::Var(n, None))
            }
            Tok::Sym("(") => {
                self.bump();
                let t = self.term_sum()?;
                self.expect(")")?;
                Ok(t)
            }
            t => self.err(format!("term expected, found {}", describe(&t))),
        }
    }
}

fn describe(t: &Tok) -> String {
    match t {
        Tok::Ident(s) => format!("`{s}`"),
        Tok::Num(v) => format!("number {v}"),
        Tok::Sym(s) => format!("`{s}`"),
        Tok::Eof => "end of input".into(),
    }
}

/// Fills in variable sorts from the binding quantifiers. Returns the
/// resolved formula and its free variables.
fn resolve(f: &Formula, scope: &mut HashMap<String, Vec<Sort>>) -> Formula {
    let res = |t: &Term, scope: &HashMap<String, Vec<Sort>>| {
        t.map(&|t| match t {
            Term::Var(n, _) => {
                let s = scope.get(&n).and_then(|v| v.last().copied());
                Term::Var(n, s)
            }
            t => t,
        })
    };
    match f {
        Formula::Quant { kind, var, sort, body } => {
            scope.entry(var.clone()).or_default().push(*sort);
            let b = resolve(body, scope);
            scope.get_mut(var).map(Vec::pop);
            Formula::quant(*kind, var, *sort, b)
        }
        Formula::Norm2(t) => Formula::Norm2(res(t, scope)),
        Formula::ReIp(a, b) => Formula::ReIp(res(a, scope), res(b, scope)),
        Formula::ImIp(a, b) => Formula::ImIp(res(a, scope), res(b, scope)),
        Formula::Const(c) => Formula::Const(*c),
        Formula::Max(fs) => Formula::Max(fs.iter().map(|g| resolve(g, scope)).collect()),
        Formula::Min(fs) => Formula::Min(fs.iter().map(|g| resolve(g, scope)).collect()),
        Formula::DotMinus(a, b) => Formula::dot_minus(resolve(a, scope), resolve(b, scope)),
        Formula::Add(a, b) => Formula::add(resolve(a, scope), resolve(b, scope)),
        Formula::Abs(a) => Formula::Abs(Box::new(resolve(a, scope))),
        Formula::Scale(c, a) => Formula::Scale(*c, Box::new(resolve(a, scope))),
    }
}

/// Re-derives every variable's sort from its binder (free variables get
/// `None`).
pub fn resolve_sorts(f: &Formula) -> Formula {
    resolve(f, &mut HashMap::new())
}

/// Parses a formula that may have free variables.
pub fn parse_formula(text: &str) -> Result<Formula, FormulaError> {
    let mut p = Parser { toks: lex(text)?, at: 0 };
    Ok(resolve_sorts(&p.sentence()?))
}

/// Parses a closed sentence.
pub fn parse(text: &str) -> Result<Formula, FormulaError> {
    let f = parse_formula(text)?;
    if let Some(name) = f.free_vars().into_iter().next() {
        return Err(FormulaError::Unbound { name });
    }
    Ok(f)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn commutator_sentence() {
        let f = parse("sup x1:C1. inf x2:C1. n2(x1*x2 - x2*x1)").unwrap();
        assert!(f.is_prenex());
        assert_eq!(f.quantifier_count(), 2);
        let (prefix, m) = f.prefix();
        assert_eq!(prefix[0], (Quantifier::Sup, "x1".to_string(), Sort::Ball(1)));
        let x1 = Term::var("x1", Some(Sort::Ball(1)));
        let x2 = Term::var("x2", Some(Sort::Ball(1)));
        let expected = Formula::Norm2(Term::minus(
            Term::product(x1.clone(), x2.clone()),
            Term::product(x2, x1),
        ));
        assert_eq!(m, &expected);
    }

    #[test]
    fn dotminus_atom() {
        let f = parse_formula("n2(u) -. 1").unwrap();
        assert_eq!(
            f,
            Formula::dot_minus(Formula::Norm2(Term::var("u", None)), Formula::Const(1.0))
        );
    }

    #[test]
    fn term_in_formula_position() {
        let e = parse("sup x1:C1. x1").unwrap_err();
        assert!(e.to_string().contains("formula expected, term found"), "{e}");
    }

    #[test]
    fn errors() {
        assert!(matches!(parse("sup x:D1. n2(x)"), Err(FormulaError::UnknownSort { .. })));
        assert!(matches!(parse("sup x:C1. n2(y)"), Err(FormulaError::Unbound { .. })));
        assert!(matches!(parse("n2(x) +"), Err(FormulaError::Syntax { pos: 7, .. })));
        assert!(matches!(parse("max(n2(one)) "), Err(FormulaError::Syntax { .. })));
        assert!(matches!(parse("n2(one) + sup x:C1. n2(x)"), Err(FormulaError::Syntax { .. })));
    }

    #[test]
    fn extensions_and_sugar() {
        let f = parse("inf p:C1. max(n2(p.p - p), n2(p^* - p), abs(reip(p, one) - 1/3))").unwrap();
        let text = f.to_string();
        assert_eq!(parse(&text).unwrap(), f);
        let g = parse("sup x:U. n2([0,1]*x - 2*x^*) + -0.5*imip(x, one)").unwrap();
        assert_eq!(parse(&g.to_string()).unwrap(), g);
    }

    #[test]
    fn printing_is_normalized() {
        let f = parse("sup  x1 : C1 .  n2( x1 . x1 )-.1").unwrap();
        assert_eq!(f.to_string(), "sup x1:C1. n2(x1*x1) -. 1");
    }
}
