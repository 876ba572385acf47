//! Gram-matrix machinery for the unitary and representability games.

use std::sync::Arc;

use nalgebra::{Cholesky, DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::algebra::{haar_unitary_with, nearest_unitary, AlgebraElement, TracialAlgebra, C64};
use crate::rng::child_rng;

/// Improvements smaller than this do not displace an earlier restart.
const TIE_TOL: f64 = 1e-12;
/// A restart stops once the squared Gram residual drops below this.
const CONVERGED: f64 = 1e-26;

/// Optimizer budget: restarts × iterations per restart.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GramBudget {
    pub restarts: usize,
    pub iterations: usize,
}

impl Default for GramBudget {
    fn default() -> Self {
        Self {
            restarts: 64,
            iterations: 400,
        }
    }
}

impl std::str::FromStr for GramBudget {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let (r, i) = s.split_once('x').ok_or_else(|| format!("budget `{s}` is not RxI"))?;
        let restarts = r.parse().map_err(|_| format!("bad restart count `{r}`"))?;
        let iterations = i.parse().map_err(|_| format!("bad iteration count `{i}`"))?;
        if restarts == 0 {
            return Err("at least one restart is needed".into());
        }
        Ok(Self { restarts, iterations })
    }
}

/// Gram matrix `G[i][j] = ⟨x_i, x_j⟩`.
pub fn gram_matrix(xs: &[AlgebraElement]) -> DMatrix<C64> {
    let n = xs.len();
    DMatrix::from_fn(n, n, |i, j| xs[i].inner_unchecked(&xs[j]))
}

pub fn gram_to_rows(g: &DMatrix<C64>) -> Vec<Vec<(f64, f64)>> {
    (0..g.nrows())
        .map(|i| (0..g.ncols()).map(|j| (g[(i, j)].re, g[(i, j)].im)).collect())
        .collect()
}

/// Largest entrywise deviation `max |G_u[i][j] − G_v[i][j]|`.
pub fn gram_deviation(gu: &DMatrix<C64>, gv: &DMatrix<C64>) -> f64 {
    gu.iter().zip(gv.iter()).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max)
}

fn hermitian_part(m: &DMatrix<C64>) -> DMatrix<C64> {
    (m + m.adjoint()).scale(0.5)
}

/// `(‖T‖, ‖T⁻¹‖)` in 2-norm for the map `u_i ↦ v_i`, read off the two Gram
/// matrices. `None` when `G_u` is not positive definite; `‖T⁻¹‖` is
/// infinite when `G_v` is singular.
pub fn gram_norms(gu: &DMatrix<C64>, gv: &DMatrix<C64>) -> Option<(f64, f64)> {
    let chol = Cholesky::new(hermitian_part(gu))?;
    let l_inv = chol.l().try_inverse()?;
    let m = &l_inv * hermitian_part(gv) * l_inv.adjoint();
    let eig = SymmetricEigen::new(hermitian_part(&m)).eigenvalues;
    let hi = eig.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let lo = eig.iter().cloned().fold(f64::INFINITY, f64::min);
    let norm_tinv = if lo > 0.0 { 1.0 / lo.sqrt() } else { f64::INFINITY };
    Some((hi.max(0.0).sqrt(), norm_tinv))
}

fn smallest_eigenvalue(g: &DMatrix<C64>) -> f64 {
    SymmetricEigen::new(hermitian_part(g))
        .eigenvalues
        .iter()
        .cloned()
        .fold(f64::INFINITY, f64::min)
}

/// Outcome of a single Gram-matching response.
#[derive(Clone, Debug)]
pub struct GramMatch {
    pub element: AlgebraElement,
    pub deviation: f64,
    pub restarts_used: usize,
}

fn residuals(v: &AlgebraElement, own: &[AlgebraElement], targets: &[C64]) -> Vec<C64> {
    own.iter().zip(targets).map(|(w, g)| v.inner_unchecked(w) - g).collect()
}

fn sq(d: &[C64]) -> f64 {
    d.iter().map(|z| z.norm_sqr()).sum()
}

/// Player II's Gram-matching response.
///
/// `own` are II's earlier elements in `target`, `other` the matching
/// elements on the incoming side. Returns a unitary `v` of `target` making
/// `⟨v, own_j⟩` as close as possible to `⟨incoming, other_j⟩`. Each restart
/// runs a damped Gauss-Newton descent on the squared residual, retracting
/// to the unitary group by polar decomposition; restart 0 starts at `1`,
/// the others at Haar samples. Restarts are compared by maximal deviation.
pub fn gram_match_respond(
    own: &[AlgebraElement],
    other: &[AlgebraElement],
    incoming: &AlgebraElement,
    target: &Arc<TracialAlgebra>,
    budget: GramBudget,
    seed: u64,
) -> GramMatch {
    let one = AlgebraElement::identity(target);
    let self_dev = |v: &AlgebraElement| (v.two_norm_sq() - incoming.two_norm_sq()).abs();
    if own.is_empty() {
        let deviation = self_dev(&one);
        return GramMatch {
            element: one,
            deviation,
            restarts_used: 0,
        };
    }
    let targets: Vec<C64> = other.iter().map(|w| incoming.inner_unchecked(w)).collect();
    let deviation_of = |v: &AlgebraElement| {
        residuals(v, own, &targets)
            .iter()
            .map(|z| z.norm())
            .fold(self_dev(v), f64::max)
    };
    let mut best: Option<(AlgebraElement, f64)> = None;
    let mut used = 0;
    for k in 0..budget.restarts {
        used = k + 1;
        let mut rng = child_rng(seed, &[k as u64]);
        let start = if k == 0 {
            one.clone()
        } else {
            haar_unitary_with(target, &mut rng).into_element()
        };
        let v = descend(start, own, &targets, budget.iterations);
        let dev = deviation_of(&v);
        let better = match &best {
            None => true,
            Some((_, b)) => dev < b - TIE_TOL,
        };
        if better {
            best = Some((v, dev));
        }
        if best.as_ref().map_or(false, |(_, b)| *b <= TIE_TOL) {
            break;
        }
    }
    let (element, deviation) = best.expect("at least one restart");
    GramMatch {
        element,
        deviation,
        restarts_used: used,
    }
}

/// Basis of the Hermitian elements: `E_ii`, `E_ij + E_ji`, `i(E_ij − E_ji)`
/// in each block.
fn hermitian_basis(alg: &Arc<TracialAlgebra>) -> Vec<AlgebraElement> {
    let mut out = Vec::new();
    let i_unit = C64::new(0.0, 1.0);
    for (b, &n) in alg.blocks().iter().enumerate() {
        for i in 0..n {
            out.push(AlgebraElement::matrix_unit(alg, b, i, i));
            for j in i + 1..n {
                let eij = AlgebraElement::matrix_unit(alg, b, i, j);
                let eji = AlgebraElement::matrix_unit(alg, b, j, i);
                out.push(&eij + &eji);
                out.push((&eij - &eji).scale(i_unit));
            }
        }
    }
    out
}

/// Levenberg-Marquardt on the residual `⟨v, own_j⟩ − g_j`, moving along
/// `v ↦ v·exp(iH)` and retracting by polar decomposition.
fn descend(mut v: AlgebraElement, own: &[AlgebraElement], targets: &[C64], iterations: usize) -> AlgebraElement {
    let basis = hermitian_basis(v.algebra());
    let i_unit = C64::new(0.0, 1.0);
    let k = own.len();
    let p = basis.len();
    let mut d = residuals(&v, own, targets);
    let mut loss = sq(&d);
    let mut mu = 1e-3;
    for _ in 0..iterations {
        if loss < CONVERGED || mu > 1e12 {
            break;
        }
        let tangents: Vec<AlgebraElement> = basis.iter().map(|h| v.mul(h, false).expect("same algebra").scale(i_unit)).collect();
        let mut jac = DMatrix::<f64>::zeros(2 * k, p);
        let mut r = nalgebra::DVector::<f64>::zeros(2 * k);
        for (j, w) in own.iter().enumerate() {
            r[2 * j] = d[j].re;
            r[2 * j + 1] = d[j].im;
            for (c, t) in tangents.iter().enumerate() {
                let z = t.inner_unchecked(w);
                jac[(2 * j, c)] = z.re;
                jac[(2 * j + 1, c)] = z.im;
            }
        }
        let jt = jac.transpose();
        let jtj = &jt * &jac;
        let rhs = -(&jt * &r);
        let scale = jtj.diagonal().iter().cloned().fold(1e-12, f64::max);
        let a = &jtj + DMatrix::<f64>::identity(p, p) * (mu * scale);
        let Some(step) = a.cholesky().map(|c| c.solve(&rhs)) else {
            mu *= 10.0;
            continue;
        };
        let mut moved = v.clone();
        for (t, &s) in tangents.iter().zip(step.iter()) {
            moved = &moved + &t.scale_real(s);
        }
        let trial = nearest_unitary(&moved).into_element();
        let dt = residuals(&trial, own, targets);
        let lt = sq(&dt);
        if lt < loss {
            v = trial;
            d = dt;
            loss = lt;
            mu = (mu * 0.3).max(1e-12);
        } else {
            mu *= 10.0;
        }
    }
    v
}

/// Player II's answer in the representability game.
#[derive(Clone, Debug, PartialEq)]
pub enum Representation {
    /// Unitaries of the target with the norms of the induced map.
    Found {
        vs: Vec<AlgebraElement>,
        norm_t: f64,
        norm_tinv: f64,
        method: RepresentationMethod,
    },
    /// More unitaries than the complex dimension of the target.
    DimensionCount { n: usize, dim: usize },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RepresentationMethod {
    Embedding,
    GramOptimization,
}

/// Block multiplicities `m[j][i]` of a unital trace-preserving embedding
/// `A → R`: block `i` of `A` sits `m[j][i]` times on the diagonal of block
/// `j` of `R`.
pub fn find_embedding(a: &TracialAlgebra, r: &TracialAlgebra) -> Option<Vec<Vec<usize>>> {
    const LIMIT: usize = 200_000;
    let per_block: Vec<Vec<Vec<usize>>> = r
        .blocks()
        .iter()
        .map(|&k| compositions(a.blocks(), k))
        .collect();
    if per_block.iter().any(|c| c.is_empty()) {
        return None;
    }
    let total: usize = per_block.iter().map(|c| c.len()).product();
    if total > LIMIT {
        return None;
    }
    let mut idx = vec![0usize; per_block.len()];
    for _ in 0..total {
        let m: Vec<Vec<usize>> = idx.iter().zip(&per_block).map(|(&k, c)| c[k].clone()).collect();
        if preserves_trace(a, r, &m) {
            return Some(m);
        }
        for (slot, c) in idx.iter_mut().zip(&per_block) {
            *slot += 1;
            if *slot < c.len() {
                break;
            }
            *slot = 0;
        }
    }
    None
}

fn compositions(sizes: &[usize], k: usize) -> Vec<Vec<usize>> {
    fn rec(sizes: &[usize], left: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == sizes.len() {
            if left == 0 {
                out.push(cur.clone());
            }
            return;
        }
        let n = sizes[cur.len()];
        for m in 0..=left / n {
            cur.push(m);
            rec(sizes, left - m * n, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(sizes, k, &mut Vec::new(), &mut out);
    out
}

fn preserves_trace(a: &TracialAlgebra, r: &TracialAlgebra, m: &[Vec<usize>]) -> bool {
    a.blocks().iter().enumerate().all(|(i, &ni)| {
        let induced: f64 = r
            .blocks()
            .iter()
            .zip(r.weights())
            .zip(m)
            .map(|((&kj, &mu), mj)| mu * (mj[i] * ni) as f64 / kj as f64)
            .sum();
        (induced - a.weights()[i]).abs() <= 1e-12
    })
}

/// Applies the embedding with multiplicities `m`.
pub fn embed(x: &AlgebraElement, r: &Arc<TracialAlgebra>, m: &[Vec<usize>]) -> AlgebraElement {
    let blocks = r
        .blocks()
        .iter()
        .zip(m)
        .map(|(&k, mj)| {
            let mut b = DMatrix::<C64>::zeros(k, k);
            let mut at = 0;
            for (i, &mult) in mj.iter().enumerate() {
                let xi = x.block(i);
                let n = xi.nrows();
                for _ in 0..mult {
                    b.view_mut((at, at), (n, n)).copy_from(xi);
                    at += n;
                }
            }
            b
        })
        .collect();
    AlgebraElement::from_blocks_unchecked(r, blocks)
}

/// Searches unitaries `v_i` of `target` minimizing `max(‖T‖, ‖T⁻¹‖)` for
/// `T: u_i ↦ v_i`. An exact trace-preserving embedding is used when one
/// exists; otherwise the Gram matrix of the `u_i` is matched by joint
/// projected gradient descent over the unitary group.
pub fn solve_representation(us: &[AlgebraElement], target: &Arc<TracialAlgebra>, budget: GramBudget, seed: u64) -> Representation {
    let n = us.len();
    if n > target.complex_dim() {
        return Representation::DimensionCount {
            n,
            dim: target.complex_dim(),
        };
    }
    let gu = gram_matrix(us);
    let finish = |vs: Vec<AlgebraElement>, method| {
        let (norm_t, norm_tinv) = gram_norms(&gu, &gram_matrix(&vs)).unwrap_or((f64::INFINITY, f64::INFINITY));
        Representation::Found {
            vs,
            norm_t,
            norm_tinv,
            method,
        }
    };
    if n == 0 {
        return finish(Vec::new(), RepresentationMethod::Embedding);
    }
    if let Some(m) = find_embedding(us[0].algebra(), target) {
        let vs = us.iter().map(|u| embed(u, target, &m)).collect();
        return finish(vs, RepresentationMethod::Embedding);
    }
    let score = |vs: &[AlgebraElement]| {
        gram_norms(&gu, &gram_matrix(vs)).map_or(f64::INFINITY, |(a, b)| a.max(b))
    };
    let mut best: Option<(Vec<AlgebraElement>, f64)> = None;
    for k in 0..budget.restarts {
        let mut rng = child_rng(seed, &[k as u64]);
        let start: Vec<AlgebraElement> = (0..n).map(|_| haar_unitary_with(target, &mut rng).into_element()).collect();
        let vs = joint_descend(start, &gu, budget.iterations);
        let s = score(&vs);
        if best.as_ref().map_or(true, |(_, b)| s < b - TIE_TOL) {
            best = Some((vs, s));
        }
        if best.as_ref().map_or(false, |(_, b)| *b <= 1.0 + TIE_TOL) {
            break;
        }
    }
    finish(best.expect("at least one restart").0, RepresentationMethod::GramOptimization)
}

fn joint_loss(vs: &[AlgebraElement], gu: &DMatrix<C64>) -> f64 {
    let gv = gram_matrix(vs);
    (&gv - gu).iter().map(|z| z.norm_sqr()).sum()
}

fn joint_descend(mut vs: Vec<AlgebraElement>, gu: &DMatrix<C64>, iterations: usize) -> Vec<AlgebraElement> {
    let n = vs.len();
    let mut loss = joint_loss(&vs, gu);
    let mut eta = 0.25;
    for _ in 0..iterations {
        if loss < CONVERGED || eta < 1e-12 {
            break;
        }
        let trial: Vec<AlgebraElement> = (0..n)
            .map(|i| {
                let mut grad = AlgebraElement::zero(vs[i].algebra());
                for j in (0..n).filter(|&j| j != i) {
                    let d = vs[i].inner_unchecked(&vs[j]) - gu[(i, j)];
                    grad = &grad + &vs[j].scale(d);
                }
                nearest_unitary(&(&vs[i] - &grad.scale_real(4.0 * eta))).into_element()
            })
            .collect();
        let lt = joint_loss(&trial, gu);
        if lt < loss {
            vs = trial;
            loss = lt;
            eta *= 1.2;
        } else {
            eta *= 0.5;
        }
    }
    vs
}

/// Comparison of the induced map's norms with the bound implied by a Gram
/// deviation `δ`: with `λ` the smallest eigenvalue of `G_u`,
/// `‖T‖² ≤ 1 + nδ/λ` and, when `λ > nδ`, `‖T⁻¹‖² ≤ λ/(λ − nδ)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BridgeCheck {
    pub delta: f64,
    pub lambda_min: f64,
    pub norm_t: f64,
    pub norm_tinv: f64,
    pub bound_t: f64,
    pub bound_tinv: f64,
    pub holds: bool,
}

/// Evaluates the Gram bridge for `u_i ↦ v_i`; `None` if the `u_i` are
/// numerically dependent.
pub fn gram_bridge(us: &[AlgebraElement], vs: &[AlgebraElement]) -> Option<BridgeCheck> {
    let gu = gram_matrix(us);
    let gv = gram_matrix(vs);
    let lambda = smallest_eigenvalue(&gu);
    if !(lambda > 1e-9) {
        return None;
    }
    let (norm_t, norm_tinv) = gram_norms(&gu, &gv)?;
    let delta = gram_deviation(&gu, &gv);
    let nd = us.len() as f64 * delta;
    let bound_t = (1.0 + nd / lambda).sqrt();
    let bound_tinv = if lambda > nd { (lambda / (lambda - nd)).sqrt() } else { f64::INFINITY };
    // Slack for rounding in the eigen-solves.
    let slack = 1e-9;
    Some(BridgeCheck {
        delta,
        lambda_min: lambda,
        norm_t,
        norm_tinv,
        bound_t,
        bound_tinv,
        holds: norm_t <= bound_t + slack && norm_tinv <= bound_tinv + slack,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::{haar_unitary, make_algebra};

    fn alg(s: &str) -> Arc<TracialAlgebra> {
        Arc::new(make_algebra(s).unwrap())
    }

    #[test]
    fn first_round_returns_identity() {
        let a = alg("M2");
        let r = gram_match_respond(&[], &[], &AlgebraElement::identity(&a), &a, GramBudget::default(), 1);
        assert_eq!(r.element, AlgebraElement::identity(&a));
        assert_eq!(r.deviation, 0.0);
    }

    #[test]
    fn matching_reaches_copy_quality() {
        let a = alg("M2");
        let b = alg("M2");
        for seed in 0..5u64 {
            let us: Vec<_> = (0..4).map(|k| haar_unitary(&a, 100 * seed + k).into_element()).collect();
            let mut vs = Vec::new();
            for (i, u) in us.iter().enumerate() {
                let r = gram_match_respond(&vs, &us[..i], u, &b, GramBudget::default(), seed);
                assert!(r.deviation <= 1e-6, "seed {seed} round {i}: {}", r.deviation);
                vs.push(r.element);
            }
        }
    }

    #[test]
    fn scalar_target_cannot_match_orthogonal_pair() {
        let c = alg("C");
        let m = alg("M2");
        let v1 = AlgebraElement::identity(&m);
        let v2 = AlgebraElement::real_diag(&m, &[1.0, -1.0]).unwrap();
        let r = gram_match_respond(&[AlgebraElement::identity(&c)], &[v1], &v2, &c, GramBudget::default(), 3);
        assert_eq!(r.deviation, 1.0);
    }

    #[test]
    fn embedding_of_diagonal_pair() {
        let a = alg("C+C:1/2,1/2");
        let r = alg("M2");
        let m = find_embedding(&a, &r).unwrap();
        assert_eq!(m, vec![vec![1, 1]]);
        let u2 = AlgebraElement::real_diag(&a, &[1.0, -1.0]).unwrap();
        assert_eq!(embed(&u2, &r, &m), AlgebraElement::real_diag(&r, &[1.0, -1.0]).unwrap());
        assert!(find_embedding(&alg("C+C:1/3,2/3"), &r).is_none());
        assert!(find_embedding(&alg("M2"), &alg("M3")).is_none());
        assert_eq!(find_embedding(&alg("M2"), &alg("M4")), Some(vec![vec![2]]));
    }

    #[test]
    fn gram_norms_of_scaled_map() {
        let a = alg("M2");
        let us = vec![AlgebraElement::identity(&a), AlgebraElement::real_diag(&a, &[1.0, -1.0]).unwrap()];
        let vs = vec![us[0].scale_real(2.0), us[1].clone()];
        let (t, tinv) = gram_norms(&gram_matrix(&us), &gram_matrix(&vs)).unwrap();
        assert!((t - 2.0).abs() < 1e-12);
        assert!((tinv - 1.0).abs() < 1e-12);
    }
}
