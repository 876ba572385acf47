use std::sync::Arc;

use nalgebra::DVector;

use super::BanachError;
use crate::algebra::{AlgebraElement, TracialAlgebra, C64};

/// Linear independence threshold on the squared relative residual.
const DEPENDENCE_TOL: f64 = 1e-10;

/// A subspace of an algebra with a 2-norm orthonormal basis.
#[derive(Clone, Debug)]
pub struct Subspace {
    parent: Arc<TracialAlgebra>,
    basis: Vec<AlgebraElement>,
}

/// Gram–Schmidt in the trace inner product (two passes).
pub fn subspace_span(parent: &Arc<TracialAlgebra>, vectors: &[AlgebraElement]) -> Result<Subspace, BanachError> {
    let mut s = Subspace::zero(parent);
    for (index, v) in vectors.iter().enumerate() {
        s = s.extend(v).map_err(|e| match e {
            BanachError::Dependent { residual, .. } => BanachError::Dependent { index, residual },
            other => other,
        })?;
    }
    Ok(s)
}

impl Subspace {
    pub fn zero(parent: &Arc<TracialAlgebra>) -> Self {
        Self {
            parent: Arc::clone(parent),
            basis: Vec::new(),
        }
    }

    pub fn parent(&self) -> &Arc<TracialAlgebra> {
        &self.parent
    }

    pub fn basis(&self) -> &[AlgebraElement] {
        &self.basis
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    /// Real dimension of the coefficient space.
    pub fn real_dim(&self) -> usize {
        2 * self.basis.len()
    }

    /// Orthogonal complement component of `v` and its squared norm relative
    /// to `‖v‖₂²`.
    pub fn residual(&self, v: &AlgebraElement) -> Result<(AlgebraElement, f64), BanachError> {
        v.same_parent(&AlgebraElement::zero(&self.parent))?;
        let norm_sq = v.two_norm_sq();
        let mut r = v.clone();
        for _pass in 0..2 {
            for b in &self.basis {
                let c = r.inner_unchecked(b);
                r = &r - &b.scale(c);
            }
        }
        let rel = if norm_sq > 0.0 { r.two_norm_sq() / norm_sq } else { 0.0 };
        Ok((r, rel))
    }

    /// `span(self ∪ {v})`; fails if `v` is (numerically) in the span.
    pub fn extend(&self, v: &AlgebraElement) -> Result<Self, BanachError> {
        let (r, rel) = self.residual(v)?;
        if rel <= DEPENDENCE_TOL || r.two_norm_sq() == 0.0 {
            return Err(BanachError::Dependent {
                index: self.dim(),
                residual: rel,
            });
        }
        let mut basis = self.basis.clone();
        basis.push(r.scale_real(1.0 / r.two_norm()));
        Ok(Self {
            parent: Arc::clone(&self.parent),
            basis,
        })
    }

    pub fn contains(&self, v: &AlgebraElement) -> Result<bool, BanachError> {
        Ok(self.residual(v)?.1 <= DEPENDENCE_TOL)
    }

    /// Coordinates `⟨v, b_j⟩` in the orthonormal basis.
    pub fn coords(&self, v: &AlgebraElement) -> DVector<C64> {
        DVector::from_iterator(self.dim(), self.basis.iter().map(|b| v.inner_unchecked(b)))
    }

    pub fn from_coords(&self, c: &DVector<C64>) -> AlgebraElement {
        let mut x = AlgebraElement::zero(&self.parent);
        for (b, &cj) in self.basis.iter().zip(c.iter()) {
            x = &x + &b.scale(cj);
        }
        x
    }

    /// Real coefficient vector `(re c₁, im c₁, re c₂, …)`.
    pub fn real_coords(&self, v: &AlgebraElement) -> Vec<f64> {
        self.coords(v).iter().flat_map(|z| [z.re, z.im]).collect()
    }

    pub fn from_real_coords(&self, r: &[f64]) -> AlgebraElement {
        let c = DVector::from_iterator(self.dim(), r.chunks(2).map(|p| C64::new(p[0], p[1])));
        self.from_coords(&c)
    }

    /// Orthogonal projection onto the subspace.
    pub fn project(&self, v: &AlgebraElement) -> AlgebraElement {
        self.from_coords(&self.coords(v))
    }

    /// Largest deviation of the basis Gram matrix from the identity.
    pub fn gram_defect(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for (i, a) in self.basis.iter().enumerate() {
            for (j, b) in self.basis.iter().enumerate() {
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((a.inner_unchecked(b) - C64::new(target, 0.0)).norm());
            }
        }
        worst
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::make_algebra;

    fn m2() -> Arc<TracialAlgebra> {
        Arc::new(make_algebra("M2").unwrap())
    }

    #[test]
    fn span_of_identity() {
        let a = m2();
        let one = AlgebraElement::identity(&a);
        let s = subspace_span(&a, &[one.clone()]).unwrap();
        assert_eq!(s.dim(), 1);
        assert!(s.basis()[0].max_abs_diff(&one) < 1e-15);
    }

    #[test]
    fn span_of_trace_orthogonal_pair() {
        let a = m2();
        let one = AlgebraElement::identity(&a);
        let z = AlgebraElement::real_diag(&a, &[1.0, -1.0]).unwrap();
        let s = subspace_span(&a, &[one, z]).unwrap();
        assert_eq!(s.dim(), 2);
        assert!(s.gram_defect() < 1e-12);
    }

    #[test]
    fn nearly_dependent_vectors_are_rejected() {
        let a = m2();
        let one = AlgebraElement::identity(&a);
        let e12 = AlgebraElement::matrix_unit(&a, 0, 0, 1);
        let almost = &one + &e12.scale_real(1e-15);
        let err = subspace_span(&a, &[one, almost]).unwrap_err();
        assert!(matches!(err, BanachError::Dependent { index: 1, .. }));
    }

    #[test]
    fn coords_round_trip() {
        let a = m2();
        let e11 = AlgebraElement::matrix_unit(&a, 0, 0, 0);
        let e12 = AlgebraElement::matrix_unit(&a, 0, 0, 1);
        let s = subspace_span(&a, &[e11.clone(), e12.clone()]).unwrap();
        let v = &e11.scale(C64::new(0.3, -0.2)) + &e12.scale_real(0.7);
        assert!(s.from_coords(&s.coords(&v)).max_abs_diff(&v) < 1e-14);
        assert!(s.contains(&v).unwrap());
        assert!(!s.contains(&AlgebraElement::identity(&a)).unwrap());
    }
}
