use std::ops::{Add, Mul, Neg, Sub};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::linalg::{self, Block};
use super::{AlgebraError, TracialAlgebra, C64};

/// A block-diagonal complex matrix tied to one [`TracialAlgebra`].
///
/// The arithmetic operators panic when the operands live in different
/// algebras; the named methods ([`AlgebraElement::mul`],
/// [`AlgebraElement::inner`], ...) return an error instead.
#[derive(Clone, Debug)]
pub struct AlgebraElement {
    algebra: Arc<TracialAlgebra>,
    blocks: Vec<Block>,
}

impl PartialEq for AlgebraElement {
    fn eq(&self, other: &Self) -> bool {
        self.algebra == other.algebra && self.blocks == other.blocks
    }
}

/// Serialized element: a list of blocks, each a row-major list of `(re, im)`
/// pairs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ElementRecord {
    pub blocks: Vec<Vec<(f64, f64)>>,
}

/// An element that has been checked to satisfy `‖u*u − 1‖₂ ≤ tol`.
#[derive(Clone, Debug, PartialEq)]
pub struct UnitaryCertificate {
    element: AlgebraElement,
    defect: f64,
}

impl UnitaryCertificate {
    pub(crate) fn from_parts(element: AlgebraElement, defect: f64) -> Self {
        Self { element, defect }
    }

    pub fn element(&self) -> &AlgebraElement {
        &self.element
    }

    pub fn into_element(self) -> AlgebraElement {
        self.element
    }

    pub fn defect(&self) -> f64 {
        self.defect
    }
}

impl AlgebraElement {
    pub fn from_blocks(algebra: &Arc<TracialAlgebra>, blocks: Vec<Block>) -> Result<Self, AlgebraError> {
        if blocks.len() != algebra.num_blocks() {
            return Err(AlgebraError::BlockCount {
                expected: algebra.num_blocks(),
                got: blocks.len(),
            });
        }
        for (index, (b, &n)) in blocks.iter().zip(algebra.blocks()).enumerate() {
            if b.shape() != (n, n) {
                return Err(AlgebraError::BlockShape {
                    index,
                    rows: b.nrows(),
                    cols: b.ncols(),
                    expected: n,
                });
            }
        }
        Ok(Self {
            algebra: Arc::clone(algebra),
            blocks,
        })
    }

    pub(crate) fn from_blocks_unchecked(algebra: &Arc<TracialAlgebra>, blocks: Vec<Block>) -> Self {
        Self {
            algebra: Arc::clone(algebra),
            blocks,
        }
    }

    pub fn zero(algebra: &Arc<TracialAlgebra>) -> Self {
        let blocks = algebra.blocks().iter().map(|&n| Block::zeros(n, n)).collect();
        Self::from_blocks_unchecked(algebra, blocks)
    }

    pub fn identity(algebra: &Arc<TracialAlgebra>) -> Self {
        Self::scalar(algebra, C64::new(1.0, 0.0))
    }

    pub fn scalar(algebra: &Arc<TracialAlgebra>, c: C64) -> Self {
        let blocks = algebra
            .blocks()
            .iter()
            .map(|&n| Block::from_diagonal_element(n, n, c))
            .collect();
        Self::from_blocks_unchecked(algebra, blocks)
    }

    /// Matrix unit `E_{ij}` inside block `block`.
    pub fn matrix_unit(algebra: &Arc<TracialAlgebra>, block: usize, i: usize, j: usize) -> Self {
        let mut x = Self::zero(algebra);
        x.blocks[block][(i, j)] = C64::new(1.0, 0.0);
        x
    }

    /// Diagonal element; `entries` runs over the diagonals of all blocks in order.
    pub fn diag(algebra: &Arc<TracialAlgebra>, entries: &[C64]) -> Result<Self, AlgebraError> {
        let total: usize = algebra.blocks().iter().sum();
        if entries.len() != total {
            return Err(AlgebraError::BlockCount {
                expected: total,
                got: entries.len(),
            });
        }
        let mut x = Self::zero(algebra);
        let mut k = 0;
        for b in &mut x.blocks {
            for i in 0..b.nrows() {
                b[(i, i)] = entries[k];
                k += 1;
            }
        }
        Ok(x)
    }

    pub fn real_diag(algebra: &Arc<TracialAlgebra>, entries: &[f64]) -> Result<Self, AlgebraError> {
        let entries: Vec<C64> = entries.iter().map(|&r| C64::new(r, 0.0)).collect();
        Self::diag(algebra, &entries)
    }

    pub fn algebra(&self) -> &Arc<TracialAlgebra> {
        &self.algebra
    }

    pub fn blocks(&self) -> &[Block] {
        &self.blocks
    }

    pub fn block(&self, i: usize) -> &Block {
        &self.blocks[i]
    }

    pub fn same_parent(&self, other: &Self) -> Result<(), AlgebraError> {
        if Arc::ptr_eq(&self.algebra, &other.algebra) || *self.algebra == *other.algebra {
            Ok(())
        } else {
            Err(AlgebraError::MismatchedParents {
                left: self.algebra.label().to_string(),
                right: other.algebra.label().to_string(),
            })
        }
    }

    fn zip_with(&self, other: &Self, f: impl Fn(&Block, &Block) -> Block) -> Result<Self, AlgebraError> {
        self.same_parent(other)?;
        let blocks = self.blocks.iter().zip(&other.blocks).map(|(a, b)| f(a, b)).collect();
        Ok(Self::from_blocks_unchecked(&self.algebra, blocks))
    }

    fn map_blocks(&self, f: impl Fn(&Block) -> Block) -> Self {
        Self::from_blocks_unchecked(&self.algebra, self.blocks.iter().map(f).collect())
    }

    pub fn try_add(&self, other: &Self) -> Result<Self, AlgebraError> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn try_sub(&self, other: &Self) -> Result<Self, AlgebraError> {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn scale(&self, c: C64) -> Self {
        self.map_blocks(|b| b * c)
    }

    pub fn scale_real(&self, r: f64) -> Self {
        self.map_blocks(|b| b * C64::new(r, 0.0))
    }

    /// Blockwise product; with `opposite` set this is `b·a`, the product of
    /// the opposite algebra.
    pub fn mul(&self, other: &Self, opposite: bool) -> Result<Self, AlgebraError> {
        if opposite {
            other.zip_with(self, linalg::matmul)
        } else {
            self.zip_with(other, linalg::matmul)
        }
    }

    /// Jordan product `(ab + ba)/2`.
    pub fn jordan(&self, other: &Self) -> Result<Self, AlgebraError> {
        let half = C64::new(0.5, 0.0);
        self.zip_with(other, |a, b| (linalg::matmul(a, b) + linalg::matmul(b, a)) * half)
    }

    pub fn adjoint(&self) -> Self {
        self.map_blocks(linalg::adjoint)
    }

    /// Blockwise transpose, a *-antiautomorphism preserving the trace.
    pub fn transpose(&self) -> Self {
        self.map_blocks(|b| b.transpose())
    }

    /// Normalized trace.
    pub fn trace(&self) -> C64 {
        self.blocks
            .iter()
            .enumerate()
            .map(|(i, b)| b.trace() * self.algebra.trace_factor(i))
            .sum()
    }

    /// `⟨self, other⟩ = tr(other*·self)`; linear in `self`.
    pub fn inner(&self, other: &Self) -> Result<C64, AlgebraError> {
        self.same_parent(other)?;
        Ok(self.inner_unchecked(other))
    }

    pub(crate) fn inner_unchecked(&self, other: &Self) -> C64 {
        let mut total = C64::new(0.0, 0.0);
        for (i, (a, b)) in self.blocks.iter().zip(&other.blocks).enumerate() {
            let mut acc = C64::new(0.0, 0.0);
            for (x, y) in a.iter().zip(b.iter()) {
                acc += y.conj() * x;
            }
            total += acc * self.algebra.trace_factor(i);
        }
        total
    }

    pub fn two_norm_sq(&self) -> f64 {
        self.blocks
            .iter()
            .enumerate()
            .map(|(i, b)| linalg::frob_sq(b) * self.algebra.trace_factor(i))
            .sum()
    }

    pub fn two_norm(&self) -> f64 {
        self.two_norm_sq().sqrt()
    }

    /// Largest singular value over all blocks.
    pub fn op_norm(&self) -> f64 {
        self.blocks
            .iter()
            .map(linalg::largest_singular_value)
            .fold(0.0, f64::max)
    }

    /// `(‖x‖₂, ‖x‖_op)`.
    pub fn norms(&self) -> (f64, f64) {
        (self.two_norm(), self.op_norm())
    }

    /// 2-norm distance.
    pub fn distance(&self, other: &Self) -> Result<f64, AlgebraError> {
        Ok(self.try_sub(other)?.two_norm())
    }

    /// `‖x*x − 1‖₂`.
    pub fn unitary_defect(&self) -> f64 {
        let blocks = self
            .blocks
            .iter()
            .map(|b| {
                let mut p = linalg::matmul(&b.adjoint(), b);
                for i in 0..p.nrows() {
                    p[(i, i)] -= C64::new(1.0, 0.0);
                }
                p
            })
            .collect();
        Self::from_blocks_unchecked(&self.algebra, blocks).two_norm()
    }

    pub fn certify_unitary(self, tol: f64) -> Result<UnitaryCertificate, AlgebraError> {
        let defect = self.unitary_defect();
        if defect <= tol {
            Ok(UnitaryCertificate {
                element: self,
                defect,
            })
        } else {
            Err(AlgebraError::NotUnitary { defect, tol })
        }
    }

    /// Nearest point of the operator-norm ball of the given radius in 2-norm:
    /// singular values are clipped blockwise.
    pub fn clip_to_ball(&self, radius: f64) -> Self {
        self.map_blocks(|b| {
            if linalg::largest_singular_value(b) <= radius {
                return b.clone();
            }
            let (u, s, v) = linalg::svd_sorted(b);
            let clipped: Vec<f64> = s.iter().map(|&x| x.min(radius)).collect();
            linalg::compose(&u, &clipped, &v)
        })
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.blocks
            .iter()
            .zip(&other.blocks)
            .flat_map(|(a, b)| a.iter().zip(b.iter()).map(|(x, y)| (x - y).norm()))
            .fold(0.0, f64::max)
    }

    /// Flattens to `(re, im)` pairs, block by block, row-major.
    pub fn to_real_vec(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.algebra.real_dim());
        for b in &self.blocks {
            for i in 0..b.nrows() {
                for j in 0..b.ncols() {
                    out.push(b[(i, j)].re);
                    out.push(b[(i, j)].im);
                }
            }
        }
        out
    }

    pub fn from_real_vec(algebra: &Arc<TracialAlgebra>, v: &[f64]) -> Result<Self, AlgebraError> {
        if v.len() != algebra.real_dim() {
            return Err(AlgebraError::BlockCount {
                expected: algebra.real_dim(),
                got: v.len(),
            });
        }
        let mut k = 0;
        let blocks = algebra
            .blocks()
            .iter()
            .map(|&n| {
                let mut b = Block::zeros(n, n);
                for i in 0..n {
                    for j in 0..n {
                        b[(i, j)] = C64::new(v[k], v[k + 1]);
                        k += 2;
                    }
                }
                b
            })
            .collect();
        Ok(Self::from_blocks_unchecked(algebra, blocks))
    }

    /// Rounds every real and imaginary part to a multiple of `2^-bits`.
    pub fn snap_to_grid(&self, bits: i32) -> Self {
        let scale = 2f64.powi(bits);
        let snap = |x: f64| (x * scale).round() / scale;
        self.map_blocks(|b| b.map(|z| C64::new(snap(z.re), snap(z.im))))
    }

    pub fn to_record(&self) -> ElementRecord {
        ElementRecord {
            blocks: self
                .blocks
                .iter()
                .map(|b| {
                    let mut entries = Vec::with_capacity(b.len());
                    for i in 0..b.nrows() {
                        for j in 0..b.ncols() {
                            entries.push((b[(i, j)].re, b[(i, j)].im));
                        }
                    }
                    entries
                })
                .collect(),
        }
    }

    pub fn from_record(algebra: &Arc<TracialAlgebra>, record: &ElementRecord) -> Result<Self, AlgebraError> {
        if record.blocks.len() != algebra.num_blocks() {
            return Err(AlgebraError::BlockCount {
                expected: algebra.num_blocks(),
                got: record.blocks.len(),
            });
        }
        let mut blocks = Vec::with_capacity(record.blocks.len());
        for (index, (entries, &n)) in record.blocks.iter().zip(algebra.blocks()).enumerate() {
            if entries.len() != n * n {
                return Err(AlgebraError::BlockShape {
                    index,
                    rows: entries.len(),
                    cols: 1,
                    expected: n,
                });
            }
            blocks.push(Block::from_row_iterator(
                n,
                n,
                entries.iter().map(|&(re, im)| C64::new(re, im)),
            ));
        }
        Ok(Self::from_blocks_unchecked(algebra, blocks))
    }

    /// Reinterprets the same block data in another algebra of the same shape.
    pub fn transplant(&self, target: &Arc<TracialAlgebra>) -> Result<Self, AlgebraError> {
        if !self.algebra.same_shape(target) {
            return Err(AlgebraError::MismatchedParents {
                left: self.algebra.label().to_string(),
                right: target.label().to_string(),
            });
        }
        Ok(Self::from_blocks_unchecked(target, self.blocks.clone()))
    }
}

impl Add for &AlgebraElement {
    type Output = AlgebraElement;

    fn add(self, rhs: Self) -> AlgebraElement {
        self.try_add(rhs).expect("operands of + must share an algebra")
    }
}

impl Sub for &AlgebraElement {
    type Output = AlgebraElement;

    fn sub(self, rhs: Self) -> AlgebraElement {
        self.try_sub(rhs).expect("operands of - must share an algebra")
    }
}

impl Neg for &AlgebraElement {
    type Output = AlgebraElement;

    fn neg(self) -> AlgebraElement {
        self.scale_real(-1.0)
    }
}

impl Mul<C64> for &AlgebraElement {
    type Output = AlgebraElement;

    fn mul(self, rhs: C64) -> AlgebraElement {
        self.scale(rhs)
    }
}

impl Mul<f64> for &AlgebraElement {
    type Output = AlgebraElement;

    fn mul(self, rhs: f64) -> AlgebraElement {
        self.scale_real(rhs)
    }
}

#[cfg(test)]
mod tests {
    use super::super::make_algebra;
    use super::*;

    fn m2() -> Arc<TracialAlgebra> {
        Arc::new(make_algebra("M2").unwrap())
    }

    #[test]
    fn matrix_unit_products() {
        let a = m2();
        let e11 = AlgebraElement::matrix_unit(&a, 0, 0, 0);
        let e12 = AlgebraElement::matrix_unit(&a, 0, 0, 1);
        assert_eq!(e11.mul(&e12, false).unwrap(), e12);
        assert_eq!(e11.mul(&e12, true).unwrap(), AlgebraElement::zero(&a));
    }

    #[test]
    fn jordan_of_matrix_units() {
        let a = m2();
        let e11 = AlgebraElement::matrix_unit(&a, 0, 0, 0);
        let e12 = AlgebraElement::matrix_unit(&a, 0, 0, 1);
        assert_eq!(e11.jordan(&e12).unwrap(), e12.scale_real(0.5));
        let one = AlgebraElement::identity(&a);
        assert_eq!(e12.jordan(&one).unwrap(), e12);
    }

    #[test]
    fn inner_product_conventions() {
        let a = m2();
        let p = AlgebraElement::real_diag(&a, &[1.0, 0.0]).unwrap();
        let q = AlgebraElement::real_diag(&a, &[0.0, 1.0]).unwrap();
        assert_eq!(p.inner(&q).unwrap(), C64::new(0.0, 0.0));
        let one = AlgebraElement::identity(&a);
        let i_one = one.scale(C64::new(0.0, 1.0));
        assert_eq!(one.inner(&i_one).unwrap(), C64::new(0.0, -1.0));
    }

    #[test]
    fn norms_of_diagonals() {
        let a = m2();
        let (two, op) = AlgebraElement::real_diag(&a, &[1.0, 0.0]).unwrap().norms();
        assert!((two - 0.5f64.sqrt()).abs() < 1e-15);
        assert_eq!(op, 1.0);
        assert_eq!(AlgebraElement::identity(&a).norms(), (1.0, 1.0));
        let (two, op) = AlgebraElement::real_diag(&a, &[2.0, 0.0]).unwrap().norms();
        assert!((two - 2f64.sqrt()).abs() < 1e-15);
        assert!((op - 2.0).abs() < 1e-15);
    }

    #[test]
    fn identity_has_unit_trace_on_weighted_sums() {
        for spec in ["M2", "C+C:0.5,0.5", "M2+M3:0.4,0.6", "C+C:1/3,2/3", "M2+M3+C"] {
            let a = Arc::new(make_algebra(spec).unwrap());
            let t = AlgebraElement::identity(&a).trace();
            assert!((t.re - 1.0).abs() <= 1e-15 && t.im == 0.0, "{spec}: {t}");
        }
    }

    #[test]
    fn mismatched_parents_are_rejected() {
        let a = m2();
        let b = Arc::new(make_algebra("C+C").unwrap());
        let x = AlgebraElement::identity(&a);
        let y = AlgebraElement::identity(&b);
        assert!(matches!(x.mul(&y, false), Err(AlgebraError::MismatchedParents { .. })));
        assert!(x.inner(&y).is_err());
        assert!(x.jordan(&y).is_err());
    }

    #[test]
    fn clip_projects_to_ball() {
        let a = m2();
        let x = AlgebraElement::real_diag(&a, &[2.0, 0.5]).unwrap();
        let c = x.clip_to_ball(1.0);
        assert!((c.op_norm() - 1.0).abs() < 1e-12);
        assert!((c.distance(&AlgebraElement::real_diag(&a, &[1.0, 0.5]).unwrap()).unwrap()) < 1e-12);
    }

    #[test]
    fn record_round_trip() {
        let a = Arc::new(make_algebra("M2+C:0.25,0.75").unwrap());
        let x = AlgebraElement::from_real_vec(&a, &(0..10).map(|i| i as f64 * 0.1 - 0.3).collect::<Vec<_>>()).unwrap();
        let back = AlgebraElement::from_record(&a, &x.to_record()).unwrap();
        assert_eq!(x, back);
    }
}
