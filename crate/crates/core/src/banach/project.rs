use super::{BanachError, Subspace};
use crate::algebra::AlgebraElement;

/// Operator-norm slack under which a point counts as a member of the ball.
pub const MEMBERSHIP_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug)]
pub struct ProjectionConfig {
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for ProjectionConfig {
    fn default() -> Self {
        Self {
            tol: 1e-8,
            max_iter: 10_000,
        }
    }
}

#[derive(Clone, Debug)]
pub struct CapProjection {
    /// Nearest point of `F ∩ (M)₁`; a contraction up to `MEMBERSHIP_TOL`.
    pub point: AlgebraElement,
    /// `‖y − point‖₂`.
    pub distance: f64,
    pub iterations: usize,
}

/// Nearest point of `F ∩ (M)₁` to `y` in 2-norm, by Dykstra's alternating
/// projections between `F` (orthogonal projection) and the ball (singular
/// value clipping).
pub fn project_ball_cap(y: &AlgebraElement, f: &Subspace, cfg: &ProjectionConfig) -> Result<CapProjection, BanachError> {
    y.same_parent(&AlgebraElement::zero(f.parent()))?;
    // y = P_F y + r with r ⊥ F, so the problem reduces to projecting P_F y.
    let mut x = f.project(y);
    if (y - &x).two_norm() <= 1e-14 * y.two_norm().max(1.0) && y.op_norm() <= 1.0 + MEMBERSHIP_TOL {
        return Ok(CapProjection {
            point: y.clone(),
            distance: 0.0,
            iterations: 0,
        });
    }
    let finish = |x: AlgebraElement, iterations: usize| {
        let op = x.op_norm();
        let point = if op > 1.0 { x.scale_real(1.0 / op) } else { x };
        let distance = (y - &point).two_norm();
        CapProjection {
            point,
            distance,
            iterations,
        }
    };
    if x.op_norm() <= 1.0 {
        return Ok(finish(x, 0));
    }
    let zero = AlgebraElement::zero(f.parent());
    let mut p = zero.clone();
    let mut q = zero;
    let mut residual = f64::INFINITY;
    for it in 1..=cfg.max_iter {
        let z = (&x + &p).clip_to_ball(1.0);
        p = &(&x + &p) - &z;
        let x_new = f.project(&(&z + &q));
        q = &(&z + &q) - &x_new;
        let change = (&x_new - &x).two_norm();
        let gap = (&x_new - &z).two_norm();
        x = x_new;
        residual = change.max(gap);
        if residual <= cfg.tol {
            return Ok(finish(x, it));
        }
    }
    Err(BanachError::NonConvergence {
        iterations: cfg.max_iter,
        residual,
    })
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::algebra::{make_algebra, random_ball_element, TracialAlgebra};
    use crate::banach::subspace_span;
    use crate::rng::rng_from;

    fn m2() -> Arc<TracialAlgebra> {
        Arc::new(make_algebra("M2").unwrap())
    }

    #[test]
    fn one_dimensional_slice() {
        let a = m2();
        let e11 = AlgebraElement::matrix_unit(&a, 0, 0, 0);
        let f = subspace_span(&a, &[e11.clone()]).unwrap();
        let r = project_ball_cap(&e11.scale_real(2.0), &f, &ProjectionConfig::default()).unwrap();
        assert!(r.point.max_abs_diff(&e11) < 1e-12);
        assert!((r.distance - 0.5f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn feasible_points_are_fixed() {
        let a = m2();
        let f = subspace_span(&a, &[AlgebraElement::identity(&a), AlgebraElement::matrix_unit(&a, 0, 0, 1)]).unwrap();
        let y = AlgebraElement::matrix_unit(&a, 0, 0, 1).scale_real(0.9);
        let r = project_ball_cap(&y, &f, &ProjectionConfig::default()).unwrap();
        assert_eq!(r.distance, 0.0);
    }

    #[test]
    fn projection_beats_sampled_feasible_points() {
        let a = Arc::new(make_algebra("M2+C:0.5,0.5").unwrap());
        let mut rng = rng_from(8);
        let gens: Vec<_> = (0..2).map(|_| random_ball_element(&a, 1.0, &mut rng)).collect();
        let f = subspace_span(&a, &gens).unwrap();
        for _ in 0..5 {
            let y = random_ball_element(&a, 3.0, &mut rng);
            let r = project_ball_cap(&y, &f, &ProjectionConfig::default()).unwrap();
            assert!(r.point.op_norm() <= 1.0 + 1e-12);
            for _ in 0..2000 {
                let c: Vec<f64> = (0..f.real_dim()).map(|_| 2.0 * rand::Rng::random::<f64>(&mut rng) - 1.0).collect();
                let z = f.from_real_coords(&c);
                if z.op_norm() <= 1.0 {
                    assert!(r.distance <= (&y - &z).two_norm() + 1e-7);
                }
            }
        }
    }
}
