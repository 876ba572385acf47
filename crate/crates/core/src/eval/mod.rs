//! Numerical semantics: exact evaluation of quantifier-free formulas and
//! heuristic minimax evaluation of sentences.

mod search;

use std::collections::BTreeMap;
use std::sync::Arc;

use thiserror::Error;

use crate::algebra::{AlgebraElement, AlgebraError, TracialAlgebra};
use crate::formula::{Formula, FormulaError, Sort, Term};

pub use search::{eval_sentence, eval_with, EvalConfig, EvalReport, EvalResult, Witness, WitnessRecord};

/// Slack allowed on the operator norm of ball-sorted elements.
pub const SORT_TOL: f64 = 1e-9;
/// Largest unitary defect accepted for unitary-sorted elements.
pub const UNITARY_TOL: f64 = 1e-8;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EvalError {
    #[error(transparent)]
    Algebra(#[from] AlgebraError),
    #[error(transparent)]
    Formula(#[from] FormulaError),
    #[error("formula is not quantifier-free")]
    NotQuantifierFree,
    #[error("variable `{0}` is not assigned")]
    Unassigned(String),
    #[error("variable `{name}` violates sort {sort}: {detail}")]
    SortViolation { name: String, sort: String, detail: String },
    #[error("sentence has free variable `{0}`")]
    NotClosed(String),
    #[error("sentence is not in prenex form")]
    NotPrenex,
}

/// Values for free variables, each checked against its sort when bound.
#[derive(Clone, Debug, Default)]
pub struct Assignment {
    values: BTreeMap<String, AlgebraElement>,
}

impl Assignment {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn check_sort(name: &str, sort: Sort, x: &AlgebraElement) -> Result<(), EvalError> {
        match sort {
            Sort::Ball(n) => {
                let op = x.op_norm();
                if op > n as f64 * (1.0 + SORT_TOL) {
                    return Err(EvalError::SortViolation {
                        name: name.to_string(),
                        sort: sort.to_string(),
                        detail: format!("operator norm {op}"),
                    });
                }
            }
            Sort::Unitary => {
                let d = x.unitary_defect();
                if d > UNITARY_TOL {
                    return Err(EvalError::SortViolation {
                        name: name.to_string(),
                        sort: sort.to_string(),
                        detail: format!("unitary defect {d:e}"),
                    });
                }
            }
        }
        Ok(())
    }

    /// Binds `name` after checking `x` against `sort`.
    pub fn bind(&mut self, name: &str, sort: Sort, x: AlgebraElement) -> Result<(), EvalError> {
        Self::check_sort(name, sort, &x)?;
        self.values.insert(name.to_string(), x);
        Ok(())
    }

    pub fn bind_unchecked(&mut self, name: &str, x: AlgebraElement) {
        self.values.insert(name.to_string(), x);
    }

    pub fn get(&self, name: &str) -> Option<&AlgebraElement> {
        self.values.get(name)
    }

    pub fn remove(&mut self, name: &str) -> Option<AlgebraElement> {
        self.values.remove(name)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&String, &AlgebraElement)> {
        self.values.iter()
    }
}

/// Value of a term; products are reversed when `opposite` is set.
pub fn eval_term(t: &Term, a: &Assignment, alg: &Arc<TracialAlgebra>, opposite: bool) -> Result<AlgebraElement, EvalError> {
    Ok(match t {
        Term::Var(n, _) => {
            let x = a.get(n).ok_or_else(|| EvalError::Unassigned(n.clone()))?;
            if x.algebra().as_ref() != alg.as_ref() {
                return Err(AlgebraError::MismatchedParents {
                    left: x.algebra().label().to_string(),
                    right: alg.label().to_string(),
                }
                .into());
            }
            x.clone()
        }
        Term::One => AlgebraElement::identity(alg),
        Term::Scale(c, s) => eval_term(s, a, alg, opposite)?.scale(*c),
        Term::Adjoint(s) => eval_term(s, a, alg, opposite)?.adjoint(),
        Term::Sum(ts) => {
            let mut acc = eval_term(&ts[0], a, alg, opposite)?;
            for s in &ts[1..] {
                acc = acc.try_add(&eval_term(s, a, alg, opposite)?)?;
            }
            acc
        }
        Term::Product(l, r) => {
            let x = eval_term(l, a, alg, opposite)?;
            let y = eval_term(r, a, alg, opposite)?;
            x.mul(&y, opposite)?
        }
    })
}

/// Exact (to rounding) value of a quantifier-free formula, in `A` or, with
/// `opposite`, in `A^op`.
pub fn eval_qf(f: &Formula, a: &Assignment, alg: &Arc<TracialAlgebra>, opposite: bool) -> Result<f64, EvalError> {
    let ev = |g: &Formula| eval_qf(g, a, alg, opposite);
    Ok(match f {
        Formula::Const(c) => *c,
        Formula::Norm2(t) => eval_term(t, a, alg, opposite)?.two_norm(),
        Formula::ReIp(s, t) => {
            let x = eval_term(s, a, alg, opposite)?;
            let y = eval_term(t, a, alg, opposite)?;
            x.inner(&y)?.re
        }
        Formula::ImIp(s, t) => {
            let x = eval_term(s, a, alg, opposite)?;
            let y = eval_term(t, a, alg, opposite)?;
            x.inner(&y)?.im
        }
        Formula::Max(fs) => {
            let mut m = f64::NEG_INFINITY;
            for g in fs {
                m = m.max(ev(g)?);
            }
            m
        }
        Formula::Min(fs) => {
            let mut m = f64::INFINITY;
            for g in fs {
                m = m.min(ev(g)?);
            }
            m
        }
        Formula::DotMinus(x, y) => (ev(x)? - ev(y)?).max(0.0),
        Formula::Add(x, y) => ev(x)? + ev(y)?,
        Formula::Abs(x) => ev(x)?.abs(),
        Formula::Scale(c, x) => c * ev(x)?,
        Formula::Quant { .. } => return Err(EvalError::NotQuantifierFree),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::{make_algebra, random_ball_element, C64};
    use crate::formula::{op_transform, parse_formula};
    use crate::rng::rng_from;

    fn alg(s: &str) -> Arc<TracialAlgebra> {
        Arc::new(make_algebra(s).unwrap())
    }

    #[test]
    fn distance_between_one_and_i() {
        let a = alg("M2");
        let mut asg = Assignment::new();
        asg.bind("u", Sort::Unitary, AlgebraElement::identity(&a)).unwrap();
        asg.bind("v", Sort::Unitary, AlgebraElement::scalar(&a, C64::new(0.0, 1.0))).unwrap();
        let f = parse_formula("n2(u - v)").unwrap();
        let v = eval_qf(&f, &asg, &a, false).unwrap();
        assert!((v - 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn commutator_vanishes_on_abelian() {
        let a = alg("C+C:1/2,1/2");
        let f = parse_formula("n2(x*y - y*x)").unwrap();
        let mut rng = rng_from(1);
        for _ in 0..50 {
            let mut asg = Assignment::new();
            asg.bind("x", Sort::Ball(1), random_ball_element(&a, 1.0, &mut rng)).unwrap();
            asg.bind("y", Sort::Ball(1), random_ball_element(&a, 1.0, &mut rng)).unwrap();
            assert_eq!(eval_qf(&f, &asg, &a, false).unwrap(), 0.0);
        }
    }

    #[test]
    fn opposite_flag_matches_op_transform_exactly() {
        let a = alg("M2+M3:0.4,0.6");
        let f = parse_formula("max(n2(x*y*x^* - 0.5*y*x), reip(x*y, y*x) + imip(one, x*x*y))").unwrap();
        let g = op_transform(&f);
        let mut rng = rng_from(2);
        for _ in 0..20 {
            let mut asg = Assignment::new();
            asg.bind("x", Sort::Ball(1), random_ball_element(&a, 1.0, &mut rng)).unwrap();
            asg.bind("y", Sort::Ball(2), random_ball_element(&a, 2.0, &mut rng)).unwrap();
            let lhs = eval_qf(&g, &asg, &a, false).unwrap();
            let rhs = eval_qf(&f, &asg, &a, true).unwrap();
            assert_eq!(lhs.to_bits(), rhs.to_bits());
        }
    }

    #[test]
    fn sort_and_assignment_errors() {
        let a = alg("M2");
        let mut asg = Assignment::new();
        let big = AlgebraElement::real_diag(&a, &[2.0, 0.0]).unwrap();
        assert!(matches!(asg.bind("x", Sort::Ball(1), big.clone()), Err(EvalError::SortViolation { .. })));
        assert!(asg.bind("x", Sort::Ball(2), big.clone()).is_ok());
        assert!(matches!(asg.bind("u", Sort::Unitary, big), Err(EvalError::SortViolation { .. })));
        let f = parse_formula("n2(x + z)").unwrap();
        assert_eq!(eval_qf(&f, &asg, &a, false), Err(EvalError::Unassigned("z".into())));
    }
}
