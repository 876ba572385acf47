//! Polar decomposition, nearest unitaries and the two-unitary decomposition of
//! contractions.

use nalgebra::DMatrix;

use super::linalg::{self, Block};
use super::{AlgebraElement, AlgebraError, UnitaryCertificate, C64, DEFAULT_TOL};

/// Grid (as a power of two) onto which the imaginary parts of
/// [`avg_two_unitaries`] are rounded. For contractions whose entries already
/// lie on this grid, `(w₁ + w₂)/2` reproduces `x` bit-for-bit.
pub const DYADIC_GRID_BITS: i32 = 40;

/// `x = u·p` with `u` unitary and `p = |x| ≥ 0`.
#[derive(Clone, Debug)]
pub struct Polar {
    pub unitary: UnitaryCertificate,
    pub positive: AlgebraElement,
}

struct BlockPolar {
    u: Block,
    p: Block,
    // right singular vectors and singular values of x, so that p = V·diag(s)·V*
    v: Block,
    s: Vec<f64>,
}

fn polar_block(x: &Block) -> BlockPolar {
    let n = x.nrows();
    let (u_svd, s, v) = linalg::svd_sorted(x);
    let p = linalg::compose(&v, &s, &v);
    let smax = s.first().copied().unwrap_or(0.0);
    let tol = 1e-13 * smax.max(1.0) * n as f64;
    let rank = s.iter().take_while(|&&x| x > tol).count();
    let u = if rank == n {
        linalg::matmul(&u_svd, &v.adjoint())
    } else {
        let ur = u_svd.columns(0, rank).into_owned();
        let vr = v.columns(0, rank).into_owned();
        let kernel = v.columns(rank, n - rank).into_owned();
        // Pair ker(x) with ran(x)^⊥ by the polar factor of the projection of
        // the kernel onto ran(x)^⊥. The result does not depend on the basis
        // chosen for the kernel, and is the identity on ker(x) when
        // ker(x) = ran(x)^⊥ (e.g. for positive x).
        let mut proj = DMatrix::<C64>::identity(n, n);
        proj -= linalg::matmul(&ur, &ur.adjoint());
        let w = linalg::matmul(&proj, &kernel);
        let left = linalg::thin_polar_factor(&w)
            .unwrap_or_else(|| u_svd.columns(rank, n - rank).into_owned());
        linalg::matmul(&ur, &vr.adjoint()) + linalg::matmul(&left, &kernel.adjoint())
    };
    BlockPolar { u, p, v, s }
}

/// Polar decomposition, blockwise. The unitary part of a singular element
/// is completed deterministically on the kernel.
pub fn polar(x: &AlgebraElement) -> Polar {
    let parts: Vec<BlockPolar> = x.blocks().iter().map(polar_block).collect();
    let alg = x.algebra();
    let u = AlgebraElement::from_blocks_unchecked(alg, parts.iter().map(|b| b.u.clone()).collect());
    let p = AlgebraElement::from_blocks_unchecked(alg, parts.into_iter().map(|b| b.p).collect());
    let defect = u.unitary_defect();
    Polar {
        unitary: UnitaryCertificate::from_parts(u, defect),
        positive: p,
    }
}

/// The unitary closest to `x` in 2-norm: the polar part of `x`.
pub fn nearest_unitary(x: &AlgebraElement) -> UnitaryCertificate {
    polar(x).unitary
}

/// Writes a contraction as `x = (w₁ + w₂)/2` with `w₁, w₂` unitary.
///
/// With `x = v|x|`, `w₁ = v(|x| + i√(1−|x|²))` and `w₂ = v(|x| − i√(1−|x|²))`.
/// The imaginary part `y = v√(1−|x|²)` is rounded to a dyadic grid and the
/// factors are formed as `x ± i·y`.
pub fn avg_two_unitaries(
    x: &AlgebraElement,
) -> Result<(UnitaryCertificate, UnitaryCertificate), AlgebraError> {
    let op = x.op_norm();
    if op > 1.0 + 1e-12 {
        return Err(AlgebraError::NotContraction(op));
    }
    let ys: Vec<Block> = x
        .blocks()
        .iter()
        .map(|b| {
            let bp = polar_block(b);
            let comp: Vec<f64> = bp
                .s
                .iter()
                .map(|&s| {
                    let s = if s >= 1.0 - 1e-12 { 1.0 } else { s.max(0.0) };
                    (1.0 - s * s).max(0.0).sqrt()
                })
                .collect();
            linalg::matmul(&bp.u, &linalg::compose(&bp.v, &comp, &bp.v))
        })
        .collect();
    let y = AlgebraElement::from_blocks_unchecked(x.algebra(), ys).snap_to_grid(DYADIC_GRID_BITS);
    let iy = y.scale(C64::new(0.0, 1.0));
    let w1 = x.try_add(&iy)?.certify_unitary(DEFAULT_TOL)?;
    let w2 = x.try_sub(&iy)?.certify_unitary(DEFAULT_TOL)?;
    Ok((w1, w2))
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::super::{haar_unitary, make_algebra, TracialAlgebra};
    use super::*;

    fn alg(spec: &str) -> Arc<TracialAlgebra> {
        Arc::new(make_algebra(spec).unwrap())
    }

    #[test]
    fn polar_of_unitary_is_trivial() {
        let a = alg("M3");
        let w = haar_unitary(&a, 5).into_element();
        let p = polar(&w);
        assert!(p.unitary.element().distance(&w).unwrap() < 1e-12);
        assert!(p.positive.distance(&AlgebraElement::identity(&a)).unwrap() < 1e-12);
    }

    #[test]
    fn polar_of_singular_positive_completes_with_identity() {
        let a = alg("M2");
        let x = AlgebraElement::real_diag(&a, &[0.5, 0.0]).unwrap();
        let p = polar(&x);
        assert!(p.unitary.element().max_abs_diff(&AlgebraElement::identity(&a)) < 1e-12);
        assert!(p.positive.max_abs_diff(&x) < 1e-12);
    }

    #[test]
    fn polar_of_nilpotent_is_unitary() {
        let a = alg("M2");
        let x = AlgebraElement::matrix_unit(&a, 0, 0, 1);
        let p = polar(&x);
        assert!(p.unitary.element().unitary_defect() < 1e-12);
        let back = p.unitary.element().mul(&p.positive, false).unwrap();
        assert!(back.max_abs_diff(&x) < 1e-12);
    }

    #[test]
    fn polar_of_zero_is_identity() {
        let a = alg("M2+C");
        let p = polar(&AlgebraElement::zero(&a));
        assert!(p.unitary.element().max_abs_diff(&AlgebraElement::identity(&a)) < 1e-12);
    }

    #[test]
    fn nearest_unitary_of_positive_diagonal() {
        let a = alg("M2");
        let x = AlgebraElement::real_diag(&a, &[2.0, 0.5]).unwrap();
        let u = nearest_unitary(&x);
        assert!(u.element().max_abs_diff(&AlgebraElement::identity(&a)) < 1e-12);
    }

    #[test]
    fn avg_two_unitaries_closed_form() {
        let a = alg("M2");
        let x = AlgebraElement::real_diag(&a, &[0.5, 0.0]).unwrap();
        let (w1, w2) = avg_two_unitaries(&x).unwrap();
        let expected = AlgebraElement::diag(&a, &[C64::new(0.5, 3f64.sqrt() / 2.0), C64::new(0.0, 1.0)]).unwrap();
        assert!(w1.element().max_abs_diff(&expected) < 1e-11);
        assert!(w2.element().max_abs_diff(&expected.adjoint()) < 1e-11);
        let avg = (w1.element() + w2.element()).scale_real(0.5);
        assert_eq!(avg, x);
    }

    #[test]
    fn avg_two_unitaries_of_unitary_repeats_it() {
        let a = alg("M2+M3:0.4,0.6");
        let u = haar_unitary(&a, 11).into_element();
        let (w1, w2) = avg_two_unitaries(&u).unwrap();
        assert_eq!(w1.element(), &u);
        assert_eq!(w2.element(), &u);
    }

    #[test]
    fn avg_two_unitaries_rejects_non_contractions() {
        let a = alg("M2");
        let x = AlgebraElement::real_diag(&a, &[1.5, 0.0]).unwrap();
        assert!(matches!(avg_two_unitaries(&x), Err(AlgebraError::NotContraction(_))));
    }
}
