//! Banach-pair geometry of `(M, (M)₁)`: the ambient 2-norm together with the
//! operator-norm unit ball as distinguished convex set.

mod grid;
mod isometry;
mod map;
mod net;
mod project;
mod sphere;
mod subspace;

use std::sync::Arc;

use thiserror::Error;

use crate::algebra::{AlgebraElement, AlgebraError, TracialAlgebra};

pub use isometry::{check_almost_isometry, IsometryConfig, IsometryReport, Variant, Verdict};
pub use map::{map_extremes, SubspaceMap};
pub use net::{build_net, cover_check, covering_bound, CoverReport, Net, NetConfig, NetRecord};
pub use project::{project_ball_cap, CapProjection, ProjectionConfig, MEMBERSHIP_TOL};
pub use subspace::{subspace_span, Subspace};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BanachError {
    #[error(transparent)]
    Algebra(#[from] AlgebraError),
    #[error("vector {index} is linearly dependent on the previous ones (residual {residual:e})")]
    Dependent { index: usize, residual: f64 },
    #[error("map is singular (smallest singular value {0:e})")]
    Singular(f64),
    #[error("dimension mismatch: {domain} domain vectors vs {codomain} codomain vectors")]
    DimensionMismatch { domain: usize, codomain: usize },
    #[error("alternating projections did not converge in {iterations} iterations (residual {residual:e})")]
    NonConvergence { iterations: usize, residual: f64 },
    #[error("subspace dimension {dim} exceeds the net cap {cap}")]
    DimensionCap { dim: usize, cap: usize },
    #[error("net would need more than {0} points; raise the cap or epsilon")]
    NetTooLarge(usize),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

/// The pair `(M, (M)₁)`: membership in the distinguished set is
/// `‖x‖_op ≤ 1 + tol`.
#[derive(Clone, Debug)]
pub struct BanachPairView {
    algebra: Arc<TracialAlgebra>,
    tol: f64,
}

impl BanachPairView {
    pub fn new(algebra: &Arc<TracialAlgebra>) -> Self {
        Self {
            algebra: Arc::clone(algebra),
            tol: 1e-12,
        }
    }

    pub fn algebra(&self) -> &Arc<TracialAlgebra> {
        &self.algebra
    }

    pub fn contains(&self, x: &AlgebraElement) -> bool {
        x.op_norm() <= 1.0 + self.tol
    }
}

/// Minkowski gauge `inf{t > 0 : x ∈ t·𝒞}` by bisection on the membership
/// oracle, to relative precision `1e-9`.
pub fn gauge_norm(x: &AlgebraElement, pair: &BanachPairView) -> f64 {
    if x.blocks().iter().all(|b| b.iter().all(|z| z.re == 0.0 && z.im == 0.0)) {
        return 0.0;
    }
    let inside = |t: f64| pair.contains(&x.scale_real(1.0 / t));
    let mut hi = 1.0;
    while !inside(hi) {
        hi *= 2.0;
    }
    let mut lo = hi / 2.0;
    while inside(lo) {
        hi = lo;
        lo /= 2.0;
        if lo == 0.0 {
            return 0.0;
        }
    }
    while hi - lo > 1e-9 * 0.25 * hi {
        let mid = 0.5 * (lo + hi);
        if inside(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::{haar_unitary, make_algebra, random_ball_element};
    use crate::rng::rng_from;

    #[test]
    fn gauge_of_simple_elements() {
        let a = Arc::new(make_algebra("M2").unwrap());
        let pair = BanachPairView::new(&a);
        let x = AlgebraElement::real_diag(&a, &[2.0, 0.0]).unwrap();
        assert!((gauge_norm(&x, &pair) - 2.0).abs() < 2e-9);
        let u = haar_unitary(&a, 9).into_element();
        assert!((gauge_norm(&u, &pair) - 1.0).abs() < 1e-9);
        assert_eq!(gauge_norm(&AlgebraElement::zero(&a), &pair), 0.0);
    }

    #[test]
    fn ball_is_roundly_convex_on_samples() {
        let a = Arc::new(make_algebra("M2+C:0.5,0.5").unwrap());
        let pair = BanachPairView::new(&a);
        let mut rng = rng_from(4);
        assert!(pair.contains(&AlgebraElement::zero(&a)));
        for _ in 0..200 {
            let x = random_ball_element(&a, 1.0, &mut rng);
            let y = random_ball_element(&a, 1.0, &mut rng);
            let lam = crate::C64::from_polar(0.4, 1.3);
            let mu = crate::C64::from_polar(0.6, -0.2);
            assert!(pair.contains(&(&x.scale(lam) + &y.scale(mu))));
        }
    }
}
