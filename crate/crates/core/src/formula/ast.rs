use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::algebra::C64;

/// Quantifier domain: the ball `n·(M)₁` or the unitary group.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Sort {
    Ball(u32),
    Unitary,
}

impl Sort {
    /// Operator-norm radius of the domain.
    pub fn radius(self) -> f64 {
        match self {
            Sort::Ball(n) => n as f64,
            Sort::Unitary => 1.0,
        }
    }
}

impl fmt::Display for Sort {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Sort::Ball(n) => write!(f, "C{n}"),
            Sort::Unitary => f.write_str("U"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Term {
    /// Variable with the sort of its binding quantifier (`None` when free).
    Var(String, Option<Sort>),
    One,
    Scale(C64, Box<Term>),
    Sum(Vec<Term>),
    Product(Box<Term>, Box<Term>),
    Adjoint(Box<Term>),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Quantifier {
    Sup,
    Inf,
}

impl fmt::Display for Quantifier {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Quantifier::Sup => "sup",
            Quantifier::Inf => "inf",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Formula {
    Const(f64),
    /// `‖t‖₂`.
    Norm2(Term),
    /// `Re⟨t₁, t₂⟩`, a derived atom (definable by polarization).
    ReIp(Term, Term),
    /// `Im⟨t₁, t₂⟩`, a derived atom.
    ImIp(Term, Term),
    Max(Vec<Formula>),
    Min(Vec<Formula>),
    /// `x ∸ y = max(x − y, 0)`.
    DotMinus(Box<Formula>, Box<Formula>),
    Add(Box<Formula>, Box<Formula>),
    Abs(Box<Formula>),
    Scale(f64, Box<Formula>),
    Quant {
        kind: Quantifier,
        var: String,
        sort: Sort,
        body: Box<Formula>,
    },
}

impl Term {
    pub fn var(name: &str, sort: Option<Sort>) -> Self {
        Term::Var(name.to_string(), sort)
    }

    pub fn scale(c: C64, t: Term) -> Self {
        Term::Scale(c, Box::new(t))
    }

    pub fn real_scale(c: f64, t: Term) -> Self {
        Term::Scale(C64::new(c, 0.0), Box::new(t))
    }

    pub fn product(a: Term, b: Term) -> Self {
        Term::Product(Box::new(a), Box::new(b))
    }

    pub fn adjoint(t: Term) -> Self {
        Term::Adjoint(Box::new(t))
    }

    /// `a − b` as `a + (−1)·b`.
    pub fn minus(a: Term, b: Term) -> Self {
        Term::Sum(vec![a, Term::real_scale(-1.0, b)])
    }

    pub fn has_product(&self) -> bool {
        match self {
            Term::Var(..) | Term::One => false,
            Term::Product(..) => true,
            Term::Scale(_, t) | Term::Adjoint(t) => t.has_product(),
            Term::Sum(ts) => ts.iter().any(Term::has_product),
        }
    }

    pub(crate) fn collect_vars(&self, out: &mut BTreeSet<String>) {
        match self {
            Term::Var(n, _) => {
                out.insert(n.clone());
            }
            Term::One => {}
            Term::Scale(_, t) | Term::Adjoint(t) => t.collect_vars(out),
            Term::Sum(ts) => ts.iter().for_each(|t| t.collect_vars(out)),
            Term::Product(a, b) => {
                a.collect_vars(out);
                b.collect_vars(out);
            }
        }
    }

    /// Applies `f` bottom-up.
    pub fn map(&self, f: &impl Fn(Term) -> Term) -> Term {
        let t = match self {
            Term::Var(..) | Term::One => self.clone(),
            Term::Scale(c, t) => Term::Scale(*c, Box::new(t.map(f))),
            Term::Adjoint(t) => Term::Adjoint(Box::new(t.map(f))),
            Term::Sum(ts) => Term::Sum(ts.iter().map(|t| t.map(f)).collect()),
            Term::Product(a, b) => Term::Product(Box::new(a.map(f)), Box::new(b.map(f))),
        };
        f(t)
    }

    /// Number of nodes.
    pub fn size(&self) -> usize {
        1 + match self {
            Term::Var(..) | Term::One => 0,
            Term::Scale(_, t) | Term::Adjoint(t) => t.size(),
            Term::Sum(ts) => ts.iter().map(Term::size).sum(),
            Term::Product(a, b) => a.size() + b.size(),
        }
    }
}

impl Formula {
    pub fn max2(a: Formula, b: Formula) -> Self {
        Formula::Max(vec![a, b])
    }

    pub fn dot_minus(a: Formula, b: Formula) -> Self {
        Formula::DotMinus(Box::new(a), Box::new(b))
    }

    pub fn add(a: Formula, b: Formula) -> Self {
        Formula::Add(Box::new(a), Box::new(b))
    }

    pub fn quant(kind: Quantifier, var: &str, sort: Sort, body: Formula) -> Self {
        Formula::Quant {
            kind,
            var: var.to_string(),
            sort,
            body: Box::new(body),
        }
    }

    /// Immediate subformulas.
    pub fn children(&self) -> Vec<&Formula> {
        match self {
            Formula::Const(_) | Formula::Norm2(_) | Formula::ReIp(..) | Formula::ImIp(..) => vec![],
            Formula::Max(fs) | Formula::Min(fs) => fs.iter().collect(),
            Formula::DotMinus(a, b) | Formula::Add(a, b) => vec![a, b],
            Formula::Abs(a) | Formula::Scale(_, a) => vec![a],
            Formula::Quant { body, .. } => vec![body],
        }
    }

    /// Lipschitz modulus of the top connective in each argument (sup norm
    /// on the arguments): 1 for `max`, `min`, `∸`, `+`, `|·|`, `|λ|` for
    /// `λ·`, 0 for constants. Atoms and quantifiers report 1.
    pub fn connective_modulus(&self) -> f64 {
        match self {
            Formula::Const(_) => 0.0,
            Formula::Scale(c, _) => c.abs(),
            _ => 1.0,
        }
    }

    pub fn is_quantifier_free(&self) -> bool {
        match self {
            Formula::Quant { .. } => false,
            f => f.children().into_iter().all(Formula::is_quantifier_free),
        }
    }

    /// All quantifiers form a prefix over a quantifier-free matrix.
    pub fn is_prenex(&self) -> bool {
        match self {
            Formula::Quant { body, .. } => body.is_prenex(),
            f => f.is_quantifier_free(),
        }
    }

    /// Quantifier prefix `(kind, var, sort)` and the matrix beneath it.
    pub fn prefix(&self) -> (Vec<(Quantifier, String, Sort)>, &Formula) {
        let mut out = Vec::new();
        let mut f = self;
        while let Formula::Quant { kind, var, sort, body } = f {
            out.push((*kind, var.clone(), *sort));
            f = body;
        }
        (out, f)
    }

    /// Wraps `matrix` in the given quantifier prefix.
    pub fn with_prefix(prefix: &[(Quantifier, String, Sort)], matrix: Formula) -> Formula {
        prefix
            .iter()
            .rev()
            .fold(matrix, |body, (k, v, s)| Formula::quant(*k, v, *s, body))
    }

    pub fn quantifier_count(&self) -> usize {
        match self {
            Formula::Quant { body, .. } => 1 + body.quantifier_count(),
            f => f.children().into_iter().map(Formula::quantifier_count).sum(),
        }
    }

    /// Variables occurring in terms, bound or free.
    pub fn term_vars(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.visit_terms(&mut |t| t.collect_vars(&mut out));
        out
    }

    /// All variable names, including quantified ones that do not occur.
    pub fn all_vars(&self) -> BTreeSet<String> {
        let mut out = self.term_vars();
        self.visit(&mut |f| {
            if let Formula::Quant { var, .. } = f {
                out.insert(var.clone());
            }
        });
        out
    }

    pub fn free_vars(&self) -> BTreeSet<String> {
        match self {
            Formula::Quant { var, body, .. } => {
                let mut s = body.free_vars();
                s.remove(var);
                s
            }
            Formula::Norm2(t) => {
                let mut s = BTreeSet::new();
                t.collect_vars(&mut s);
                s
            }
            Formula::ReIp(a, b) | Formula::ImIp(a, b) => {
                let mut s = BTreeSet::new();
                a.collect_vars(&mut s);
                b.collect_vars(&mut s);
                s
            }
            f => f.children().into_iter().flat_map(Formula::free_vars).collect(),
        }
    }

    pub fn is_closed(&self) -> bool {
        self.free_vars().is_empty()
    }

    pub fn visit(&self, f: &mut impl FnMut(&Formula)) {
        f(self);
        for c in self.children() {
            c.visit(f);
        }
    }

    pub fn visit_terms(&self, f: &mut impl FnMut(&Term)) {
        self.visit(&mut |g| match g {
            Formula::Norm2(t) => f(t),
            Formula::ReIp(a, b) | Formula::ImIp(a, b) => {
                f(a);
                f(b);
            }
            _ => {}
        });
    }

    /// Rebuilds the formula with `f` applied to every atom's terms.
    pub fn map_terms(&self, f: &impl Fn(&Term) -> Term) -> Formula {
        match self {
            Formula::Const(c) => Formula::Const(*c),
            Formula::Norm2(t) => Formula::Norm2(f(t)),
            Formula::ReIp(a, b) => Formula::ReIp(f(a), f(b)),
            Formula::ImIp(a, b) => Formula::ImIp(f(a), f(b)),
            Formula::Max(fs) => Formula::Max(fs.iter().map(|g| g.map_terms(f)).collect()),
            Formula::Min(fs) => Formula::Min(fs.iter().map(|g| g.map_terms(f)).collect()),
            Formula::DotMinus(a, b) => Formula::dot_minus(a.map_terms(f), b.map_terms(f)),
            Formula::Add(a, b) => Formula::add(a.map_terms(f), b.map_terms(f)),
            Formula::Abs(a) => Formula::Abs(Box::new(a.map_terms(f))),
            Formula::Scale(c, a) => Formula::Scale(*c, Box::new(a.map_terms(f))),
            Formula::Quant { kind, var, sort, body } => Formula::quant(*kind, var, *sort, body.map_terms(f)),
        }
    }

    pub fn has_product(&self) -> bool {
        let mut found = false;
        self.visit_terms(&mut |t| found |= t.has_product());
        found
    }

    /// Number of nodes, terms included.
    pub fn size(&self) -> usize {
        let mut n = 0;
        self.visit(&mut |_| n += 1);
        self.visit_terms(&mut |t| n += t.size());
        n
    }
}

// Printing. The output is the normalized text form: it re-parses to a
// structurally equal tree.

fn fmt_real(x: f64) -> String {
    format!("{x}")
}

fn fmt_scalar(c: C64) -> String {
    if c.im == 0.0 {
        fmt_real(c.re)
    } else {
        format!("[{},{}]", fmt_real(c.re), fmt_real(c.im))
    }
}

impl Term {
    fn fmt_sum(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Sum(ts) => {
                for (i, t) in ts.iter().enumerate() {
                    if i > 0 {
                        f.write_str(" + ")?;
                    }
                    if matches!(t, Term::Sum(_)) {
                        write!(f, "(")?;
                        t.fmt_sum(f)?;
                        write!(f, ")")?;
                    } else {
                        t.fmt_prod(f)?;
                    }
                }
                Ok(())
            }
            t => t.fmt_prod(f),
        }
    }

    fn fmt_prod(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Product(a, b) => {
                if matches!(**a, Term::Sum(_)) {
                    a.fmt_unary(f)?;
                } else {
                    a.fmt_prod(f)?;
                }
                f.write_str("*")?;
                b.fmt_unary(f)
            }
            t => t.fmt_unary(f),
        }
    }

    fn fmt_unary(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Scale(c, t) => {
                write!(f, "{}*", fmt_scalar(*c))?;
                t.fmt_unary(f)
            }
            t => t.fmt_postfix(f),
        }
    }

    fn fmt_postfix(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Adjoint(t) => {
                t.fmt_postfix(f)?;
                f.write_str("^*")
            }
            Term::Var(n, _) => f.write_str(n),
            Term::One => f.write_str("one"),
            t => {
                f.write_str("(")?;
                t.fmt_sum(f)?;
                f.write_str(")")
            }
        }
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.fmt_sum(f)
    }
}

impl Formula {
    fn fmt_sum(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Formula::Add(a, b) | Formula::DotMinus(a, b) => {
                if matches!(**a, Formula::Quant { .. }) {
                    a.fmt_unary(f)?;
                } else {
                    a.fmt_sum(f)?;
                }
                f.write_str(if matches!(self, Formula::Add(..)) { " + " } else { " -. " })?;
                b.fmt_unary(f)
            }
            Formula::Quant { kind, var, sort, body } => {
                write!(f, "{kind} {var}:{sort}. ")?;
                body.fmt_sum(f)
            }
            g => g.fmt_unary(f),
        }
    }

    fn fmt_unary(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let list = |f: &mut fmt::Formatter<'_>, name: &str, xs: &[Formula]| {
            write!(f, "{name}(")?;
            for (i, x) in xs.iter().enumerate() {
                if i > 0 {
                    f.write_str(", ")?;
                }
                x.fmt_sum(f)?;
            }
            f.write_str(")")
        };
        match self {
            Formula::Const(c) => f.write_str(&fmt_real(*c)),
            Formula::Norm2(t) => write!(f, "n2({t})"),
            Formula::ReIp(a, b) => write!(f, "reip({a}, {b})"),
            Formula::ImIp(a, b) => write!(f, "imip({a}, {b})"),
            Formula::Max(xs) => list(f, "max", xs),
            Formula::Min(xs) => list(f, "min", xs),
            Formula::Abs(a) => {
                f.write_str("abs(")?;
                a.fmt_sum(f)?;
                f.write_str(")")
            }
            Formula::Scale(c, a) => {
                write!(f, "{}*", fmt_real(*c))?;
                a.fmt_unary(f)
            }
            g => {
                f.write_str("(")?;
                g.fmt_sum(f)?;
                f.write_str(")")
            }
        }
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.fmt_sum(f)
    }
}
