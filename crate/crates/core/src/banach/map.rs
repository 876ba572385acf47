use nalgebra::DMatrix;

use super::{BanachError, Subspace};
use crate::algebra::{AlgebraElement, C64};

/// Smallest singular value, relative to the largest, below which a map is
/// treated as singular.
const SINGULAR_TOL: f64 = 1e-12;

/// Linear bijection between two subspaces, stored as its coefficient matrix
/// in the orthonormal bases.
#[derive(Clone, Debug)]
pub struct SubspaceMap {
    domain: Subspace,
    codomain: Subspace,
    matrix: DMatrix<C64>,
}

impl SubspaceMap {
    pub fn from_matrix(domain: Subspace, codomain: Subspace, matrix: DMatrix<C64>) -> Result<Self, BanachError> {
        if matrix.nrows() != codomain.dim() || matrix.ncols() != domain.dim() || domain.dim() != codomain.dim() {
            return Err(BanachError::DimensionMismatch {
                domain: domain.dim(),
                codomain: codomain.dim(),
            });
        }
        let map = Self {
            domain,
            codomain,
            matrix,
        };
        map.singular_values()?;
        Ok(map)
    }

    /// The map sending `xs[i]` to `ys[i]`, extended linearly.
    pub fn from_pairs(xs: &[AlgebraElement], ys: &[AlgebraElement]) -> Result<Self, BanachError> {
        if xs.len() != ys.len() || xs.is_empty() {
            return Err(BanachError::DimensionMismatch {
                domain: xs.len(),
                codomain: ys.len(),
            });
        }
        let domain = super::subspace_span(xs[0].algebra(), xs)?;
        let codomain = super::subspace_span(ys[0].algebra(), ys)?;
        let n = xs.len();
        let mut x = DMatrix::<C64>::zeros(n, n);
        let mut y = DMatrix::<C64>::zeros(n, n);
        for j in 0..n {
            x.set_column(j, &domain.coords(&xs[j]));
            y.set_column(j, &codomain.coords(&ys[j]));
        }
        if x == y && domain.basis() == codomain.basis() {
            return Ok(Self::identity(&domain));
        }
        let x_inv = x.try_inverse().ok_or(BanachError::Singular(0.0))?;
        Self::from_matrix(domain, codomain, y * x_inv)
    }

    pub fn identity(space: &Subspace) -> Self {
        let n = space.dim();
        Self {
            domain: space.clone(),
            codomain: space.clone(),
            matrix: DMatrix::identity(n, n),
        }
    }

    pub fn domain(&self) -> &Subspace {
        &self.domain
    }

    pub fn codomain(&self) -> &Subspace {
        &self.codomain
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.domain.dim()
    }

    /// Singular values of the coefficient matrix, descending.
    pub fn singular_values(&self) -> Result<Vec<f64>, BanachError> {
        let m = &self.matrix;
        let diagonal = (0..m.nrows()).all(|i| (0..m.ncols()).all(|j| i == j || m[(i, j)] == C64::new(0.0, 0.0)));
        let mut s: Vec<f64> = if diagonal {
            m.diagonal().iter().map(|z| z.norm()).collect()
        } else {
            crate::algebra::linalg::singular_values(m)
        };
        s.sort_by(|a, b| b.total_cmp(a));
        let (max, min) = (s.first().copied().unwrap_or(0.0), s.last().copied().unwrap_or(0.0));
        if s.is_empty() || !(min > SINGULAR_TOL * max) {
            return Err(BanachError::Singular(min));
        }
        Ok(s)
    }

    pub fn apply(&self, x: &AlgebraElement) -> AlgebraElement {
        self.codomain.from_coords(&(&self.matrix * self.domain.coords(x)))
    }

    /// Apply to real coefficients of the domain; returns the image element.
    pub fn apply_real(&self, coords: &[f64]) -> AlgebraElement {
        let c = nalgebra::DVector::from_iterator(self.dim(), coords.chunks(2).map(|p| C64::new(p[0], p[1])));
        self.codomain.from_coords(&(&self.matrix * c))
    }

    pub fn inverse(&self) -> Result<Self, BanachError> {
        let inv = self.matrix.clone().try_inverse().ok_or(BanachError::Singular(0.0))?;
        Self::from_matrix(self.codomain.clone(), self.domain.clone(), inv)
    }

    /// `other ∘ self`. The codomain of `self` must be the domain of `other`
    /// (checked on bases).
    pub fn then(&self, other: &SubspaceMap) -> Result<Self, BanachError> {
        let same = self.codomain.dim() == other.domain.dim()
            && self
                .codomain
                .basis()
                .iter()
                .zip(other.domain.basis())
                .all(|(a, b)| a.same_parent(b).is_ok() && a.max_abs_diff(b) < 1e-12);
        if !same {
            // Change of basis between two orthonormal bases of one subspace.
            let n = self.codomain.dim();
            if n != other.domain.dim() {
                return Err(BanachError::DimensionMismatch {
                    domain: n,
                    codomain: other.domain.dim(),
                });
            }
            let mut change = DMatrix::<C64>::zeros(n, n);
            for (j, b) in self.codomain.basis().iter().enumerate() {
                if !other.domain.contains(b)? {
                    return Err(BanachError::InvalidParameter("maps are not composable".into()));
                }
                change.set_column(j, &other.domain.coords(b));
            }
            return Self::from_matrix(self.domain.clone(), other.codomain.clone(), &other.matrix * change * &self.matrix);
        }
        Self::from_matrix(self.domain.clone(), other.codomain.clone(), &other.matrix * &self.matrix)
    }

    pub fn scale(&self, c: f64) -> Result<Self, BanachError> {
        Self::from_matrix(self.domain.clone(), self.codomain.clone(), self.matrix.map(|z| z * c))
    }
}

/// `(‖T‖, ‖T⁻¹‖)` with respect to the 2-norms.
pub fn map_extremes(t: &SubspaceMap) -> Result<(f64, f64), BanachError> {
    let s = t.singular_values()?;
    Ok((s[0], 1.0 / s[s.len() - 1]))
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::algebra::{make_algebra, TracialAlgebra};
    use crate::banach::subspace_span;

    fn m2() -> Arc<TracialAlgebra> {
        Arc::new(make_algebra("M2").unwrap())
    }

    #[test]
    fn identity_extremes() {
        let a = m2();
        let e = subspace_span(&a, &[AlgebraElement::identity(&a)]).unwrap();
        assert_eq!(map_extremes(&SubspaceMap::identity(&e)).unwrap(), (1.0, 1.0));
    }

    #[test]
    fn scaling_extremes() {
        let a = m2();
        let one = AlgebraElement::identity(&a);
        let t = SubspaceMap::from_pairs(&[one.clone()], &[one.scale_real(1.25)]).unwrap();
        let (n, ni) = map_extremes(&t).unwrap();
        assert!((n - 1.25).abs() < 1e-15 && (ni - 0.8).abs() < 1e-15);
    }

    #[test]
    fn transpose_is_isometric() {
        let a = m2();
        let e11 = AlgebraElement::matrix_unit(&a, 0, 0, 0);
        let e12 = AlgebraElement::matrix_unit(&a, 0, 0, 1);
        let e21 = AlgebraElement::matrix_unit(&a, 0, 1, 0);
        let t = SubspaceMap::from_pairs(&[e11.clone(), e12.clone()], &[e11.clone(), e21.clone()]).unwrap();
        let (n, ni) = map_extremes(&t).unwrap();
        assert!((n - 1.0).abs() < 1e-14 && (ni - 1.0).abs() < 1e-14);
        let x = &e11.scale(C64::new(0.2, 0.1)) + &e12.scale_real(-0.4);
        assert!(t.apply(&x).max_abs_diff(&x.transpose()) < 1e-15);
        let back = t.inverse().unwrap().apply(&t.apply(&x));
        assert!(back.max_abs_diff(&x) < 1e-15);
    }

    #[test]
    fn singular_pairs_are_rejected() {
        let a = m2();
        let e11 = AlgebraElement::matrix_unit(&a, 0, 0, 0);
        let e12 = AlgebraElement::matrix_unit(&a, 0, 0, 1);
        let r = SubspaceMap::from_pairs(&[e11.clone(), e12.clone()], &[e11.clone(), e11.scale_real(2.0)]);
        assert!(matches!(r, Err(BanachError::Dependent { index: 1, .. })));
    }

    #[test]
    fn composition_across_bases() {
        let a = m2();
        let one = AlgebraElement::identity(&a);
        let z = AlgebraElement::real_diag(&a, &[1.0, -1.0]).unwrap();
        let t = SubspaceMap::from_pairs(&[one.clone(), z.clone()], &[z.clone(), one.clone()]).unwrap();
        let s = SubspaceMap::from_pairs(&[one.clone(), z.clone()], &[one.scale_real(2.0), z.clone()]).unwrap();
        let st = t.then(&s).unwrap();
        assert!(st.apply(&one).max_abs_diff(&z) < 1e-14);
        assert!(st.apply(&z).max_abs_diff(&one.scale_real(2.0)) < 1e-14);
    }
}
