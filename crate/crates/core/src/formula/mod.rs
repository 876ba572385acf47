//! Continuous-logic formulas over the tracial-algebra language: AST, text
//! syntax and the `op`, unitary and quantifier-stripping transforms.
//!
//! Text syntax, one sentence per file:
//!
//! ```text
//! sentence := (quant)* qf
//! quant    := ("sup" | "inf") ident ":" sort "."
//! sort     := "C" int | "U"
//! qf       := "max(" qf ("," qf)+ ")" | "min(" ... ")" | qf "-." qf | qf "+" qf
//!           | qf "-" qf | "abs(" qf ")" | real "*" qf | real | atom | "(" qf ")"
//! atom     := "n2(" term ")" | "reip(" term "," term ")" | "imip(" term "," term ")"
//! term     := ident | "one" | real "*" term | "[" real "," real "]" "*" term
//!           | term "+" term | term "-" term | term ("." | "*") term | term "^*" | "(" term ")"
//! real     := decimal | decimal "/" decimal
//! ```
//!
//! `a - b` is sugar for `a + -1*b`. A scalar binds to the nearest factor, so
//! `2*x*y` is `(2x)·y`.

mod ast;
mod parse;
mod transform;

use sha2::{Digest, Sha256};
use thiserror::Error;

pub use ast::{Formula, Quantifier, Sort, Term};
pub use parse::{parse, parse_formula, resolve_sorts};
pub use transform::{op_term, op_transform, strip_quantifiers, unitary_transform, Stripped, UnitaryMode};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FormulaError {
    #[error("syntax error at position {pos}: {msg}")]
    Syntax { pos: usize, msg: String },
    #[error("unknown sort `{sort}` at position {pos}")]
    UnknownSort { pos: usize, sort: String },
    #[error("unbound variable `{name}`")]
    Unbound { name: String },
    #[error("sentence is not in prenex form")]
    NotPrenex,
    #[error("stripping level {level} out of range for {count} quantifiers")]
    LevelOutOfRange { level: usize, count: usize },
}

/// Hex SHA-256 of the normalized text of `f`.
pub fn sentence_hash(f: &Formula) -> String {
    let digest = Sha256::digest(f.to_string().as_bytes());
    digest.iter().map(|b| format!("{b:02x}")).collect()
}
