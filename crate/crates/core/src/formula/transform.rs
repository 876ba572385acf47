use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::ast::{Formula, Quantifier, Sort, Term};
use super::FormulaError;

/// `t ↦ t^op`: every product `t₁·t₂` becomes `t₂^op·t₁^op`.
pub fn op_term(t: &Term) -> Term {
    match t {
        Term::Product(a, b) => Term::product(op_term(b), op_term(a)),
        Term::Var(..) | Term::One => t.clone(),
        Term::Scale(c, s) => Term::scale(*c, op_term(s)),
        Term::Adjoint(s) => Term::adjoint(op_term(s)),
        Term::Sum(ts) => Term::Sum(ts.iter().map(op_term).collect()),
    }
}

/// `φ ↦ φ^op`, replacing every term by its opposite.
pub fn op_transform(f: &Formula) -> Formula {
    f.map_terms(&op_term)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum UnitaryMode {
    /// Fresh variables range over `𝒞₁` and the norm penalty pins them to
    /// unitaries.
    U,
    /// Fresh variables range over the unitary group.
    Uu,
}

fn fresh(base: String, taken: &mut BTreeSet<String>) -> String {
    let mut name = base;
    while taken.contains(&name) {
        name.push('_');
    }
    taken.insert(name.clone());
    name
}

fn substitute(t: &Term, name: &str, by: &Term) -> Term {
    match t {
        Term::Var(n, _) if n == name => by.clone(),
        Term::Var(..) | Term::One => t.clone(),
        Term::Scale(c, s) => Term::scale(*c, substitute(s, name, by)),
        Term::Adjoint(s) => Term::adjoint(substitute(s, name, by)),
        Term::Sum(ts) => Term::Sum(ts.iter().map(|s| substitute(s, name, by)).collect()),
        Term::Product(a, b) => Term::product(substitute(a, name, by), substitute(b, name, by)),
    }
}

fn require_closed_prenex(sigma: &Formula) -> Result<(), FormulaError> {
    if !sigma.is_prenex() {
        return Err(FormulaError::NotPrenex);
    }
    if let Some(name) = sigma.free_vars().into_iter().next() {
        return Err(FormulaError::Unbound { name });
    }
    Ok(())
}

/// `σ ↦ σ^u` (or `σ^uu`).
///
/// Each `inf`-quantified variable `x_i` of sort `𝒞_{n_i}` is replaced by
/// `n_i·½(u_i + v_i)` with two fresh `inf` quantifiers, and the matrix `φ`
/// becomes `max(φ, P)` where `P` collects `max(1 ∸ ‖u_i‖₂, 1 ∸ ‖v_i‖₂)`
/// (a single clause, or a `max` of all clauses). `sup` variables and
/// unitary-sorted variables are left alone.
pub fn unitary_transform(sigma: &Formula, mode: UnitaryMode) -> Result<Formula, FormulaError> {
    require_closed_prenex(sigma)?;
    let (prefix, matrix) = sigma.prefix();
    let mut taken = sigma.all_vars();
    let fresh_sort = match mode {
        UnitaryMode::U => Sort::Ball(1),
        UnitaryMode::Uu => Sort::Unitary,
    };
    let mut new_prefix = Vec::new();
    let mut body = matrix.clone();
    let mut penalties = Vec::new();
    for (i, (kind, var, sort)) in prefix.iter().enumerate() {
        let n = match (kind, sort) {
            (Quantifier::Inf, Sort::Ball(n)) => *n,
            _ => {
                new_prefix.push((*kind, var.clone(), *sort));
                continue;
            }
        };
        let u = fresh(format!("u{}", i + 1), &mut taken);
        let v = fresh(format!("v{}", i + 1), &mut taken);
        // Only the innermost binder of a name reaches the matrix.
        let shadowed = prefix[i + 1..].iter().any(|(_, w, _)| w == var);
        if !shadowed {
            let replacement = Term::real_scale(
                n as f64 * 0.5,
                Term::Sum(vec![Term::var(&u, Some(fresh_sort)), Term::var(&v, Some(fresh_sort))]),
            );
            body = body.map_terms(&|t| substitute(t, var, &replacement));
        }
        let one_minus = |w: &str| {
            Formula::dot_minus(Formula::Const(1.0), Formula::Norm2(Term::var(w, Some(fresh_sort))))
        };
        penalties.push(Formula::max2(one_minus(&u), one_minus(&v)));
        new_prefix.push((Quantifier::Inf, u, fresh_sort));
        new_prefix.push((Quantifier::Inf, v, fresh_sort));
    }
    if penalties.is_empty() {
        return Ok(sigma.clone());
    }
    let penalty = if penalties.len() == 1 {
        penalties.remove(0)
    } else {
        Formula::Max(penalties)
    };
    Ok(Formula::with_prefix(&new_prefix, Formula::max2(body, penalty)))
}

/// `σ_l` together with the variables freed by stripping, in order.
#[derive(Clone, Debug, PartialEq)]
pub struct Stripped {
    pub formula: Formula,
    pub free: Vec<(String, Sort)>,
}

/// Removes the first `n − l` quantifiers of a prenex `σ` with `n`
/// quantifiers, leaving their variables free.
pub fn strip_quantifiers(sigma: &Formula, level: usize) -> Result<Stripped, FormulaError> {
    if !sigma.is_prenex() {
        return Err(FormulaError::NotPrenex);
    }
    let (prefix, matrix) = sigma.prefix();
    let n = prefix.len();
    if level > n {
        return Err(FormulaError::LevelOutOfRange { level, count: n });
    }
    let cut = n - level;
    let free = prefix[..cut].iter().map(|(_, v, s)| (v.clone(), *s)).collect();
    Ok(Stripped {
        formula: Formula::with_prefix(&prefix[cut..], matrix.clone()),
        free,
    })
}

#[cfg(test)]
mod tests {
    use super::super::parse::{parse, parse_formula};
    use super::*;

    #[test]
    fn op_swaps_products() {
        let f = parse_formula("n2(x*y - y*x)").unwrap();
        assert_eq!(op_transform(&f), parse_formula("n2(y*x - x*y)").unwrap());
        let g = parse_formula("max(n2(x + 2*y^*), reip(x, one))").unwrap();
        assert_eq!(op_transform(&g), g);
        let h = parse_formula("n2(x*(y*z)^* + [0,1]*z*x*y)").unwrap();
        assert_eq!(op_transform(&op_transform(&h)), h);
        assert_ne!(op_transform(&h), h);
    }

    #[test]
    fn unitary_transform_of_example() {
        let sigma = parse("sup x1:C1. inf x2:C1. n2(x1*x2 - x2*x1)").unwrap();
        let su = unitary_transform(&sigma, UnitaryMode::U).unwrap();
        let expected = parse(
            "sup x1:C1. inf u2:C1. inf v2:C1. max(n2(x1*0.5*(u2 + v2) + -1*(0.5*(u2 + v2)*x1)), \
             max(1 -. n2(u2), 1 -. n2(v2)))",
        )
        .unwrap();
        assert_eq!(su, expected);
        assert!(su.is_closed());
        assert_eq!(su.all_vars().len(), sigma.all_vars().len() + 2 - 1);

        let suu = unitary_transform(&sigma, UnitaryMode::Uu).unwrap();
        let expected_uu = parse(
            "sup x1:C1. inf u2:U. inf v2:U. max(n2(x1*0.5*(u2 + v2) + -1*(0.5*(u2 + v2)*x1)), \
             max(1 -. n2(u2), 1 -. n2(v2)))",
        )
        .unwrap();
        assert_eq!(suu, expected_uu);
    }

    #[test]
    fn unitary_transform_scales_ball_radius() {
        let sigma = parse("inf x:C3. inf y:C1. n2(x - y)").unwrap();
        let su = unitary_transform(&sigma, UnitaryMode::U).unwrap();
        let (prefix, m) = su.prefix();
        assert_eq!(prefix.len(), 4);
        let Formula::Max(parts) = m else { panic!() };
        assert!(matches!(&parts[1], Formula::Max(ps) if ps.len() == 2));
        assert!(su.to_string().contains("1.5*(u1 + v1)"));
    }

    #[test]
    fn sup_only_is_unchanged_and_names_avoid_clashes() {
        let sigma = parse("sup x:C1. n2(x)").unwrap();
        assert_eq!(unitary_transform(&sigma, UnitaryMode::U).unwrap(), sigma);
        let clash = parse("sup u1:C1. inf x:C1. n2(u1 - x)").unwrap();
        let su = unitary_transform(&clash, UnitaryMode::U).unwrap();
        assert!(su.all_vars().contains("u2") && su.all_vars().contains("v2"));
        let clash2 = parse("sup u2:C1. inf x:C1. n2(u2 - x)").unwrap();
        let su2 = unitary_transform(&clash2, UnitaryMode::U).unwrap();
        assert!(su2.all_vars().contains("u2_"));
    }

    #[test]
    fn stripping() {
        let sigma = parse("sup x1:C1. inf x2:C1. n2(x1 - x2)").unwrap();
        let s_full = strip_quantifiers(&sigma, 2).unwrap();
        assert_eq!(s_full.formula, sigma);
        assert!(s_full.free.is_empty());
        let s1 = strip_quantifiers(&sigma, 1).unwrap();
        assert_eq!(s1.free, vec![("x1".to_string(), Sort::Ball(1))]);
        assert_eq!(s1.formula.quantifier_count(), 1);
        let s0 = strip_quantifiers(&sigma, 0).unwrap();
        assert!(s0.formula.is_quantifier_free());
        assert_eq!(s0.free.len(), 2);
        assert!(matches!(
            strip_quantifiers(&sigma, 3),
            Err(FormulaError::LevelOutOfRange { level: 3, count: 2 })
        ));
    }
}
