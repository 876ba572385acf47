//! Dense complex kernels on single blocks.
//!
//! Products use a fixed summation order so that identities such as
//! `(ab)ᵀ = bᵀaᵀ` hold bit-for-bit. The SVD is a one-sided Jacobi sweep;
//! nalgebra's complex SVD loses accuracy on repeated singular values.

use nalgebra::DMatrix;

use super::C64;

pub type Block = DMatrix<C64>;

/// `a·b` with the inner index summed in ascending order.
pub fn matmul(a: &Block, b: &Block) -> Block {
    let (n, k) = a.shape();
    let m = b.ncols();
    debug_assert_eq!(k, b.nrows());
    let mut out = Block::zeros(n, m);
    for j in 0..m {
        for i in 0..n {
            let mut acc = C64::new(0.0, 0.0);
            for l in 0..k {
                acc += a[(i, l)] * b[(l, j)];
            }
            out[(i, j)] = acc;
        }
    }
    out
}

pub fn adjoint(a: &Block) -> Block {
    a.adjoint()
}

/// Thin SVD of an `m×k` matrix with `m ≥ k`: `a·V = U·diag(s)`, `s`
/// descending, ties by column index. Columns of `U` for zero singular
/// values are left at zero.
fn jacobi_svd(a: &Block) -> (Block, Vec<f64>, Block) {
    let (m, k) = a.shape();
    debug_assert!(m >= k);
    let mut w = a.clone();
    let mut v = Block::identity(k, k);
    for _sweep in 0..80 {
        let mut rotated = false;
        for p in 0..k {
            for q in p + 1..k {
                let alpha = w.column(p).norm_squared();
                let beta = w.column(q).norm_squared();
                let gamma = w.column(p).dotc(&w.column(q));
                let g = gamma.norm();
                if g == 0.0 || g <= 1e-15 * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let phase = (gamma / g).conj();
                let zeta = (beta - alpha) / (2.0 * g);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let sn = c * t;
                for mat in [&mut w, &mut v] {
                    for i in 0..mat.nrows() {
                        let x = mat[(i, p)];
                        let y = mat[(i, q)] * phase;
                        mat[(i, p)] = x * c - y * sn;
                        mat[(i, q)] = x * sn + y * c;
                    }
                }
            }
        }
        if !rotated {
            break;
        }
    }
    let norms: Vec<f64> = (0..k).map(|j| w.column(j).norm()).collect();
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&i, &j| norms[j].total_cmp(&norms[i]).then(i.cmp(&j)));
    let mut u = Block::zeros(m, k);
    let mut vs = Block::zeros(k, k);
    let mut s = Vec::with_capacity(k);
    for (dst, &src) in order.iter().enumerate() {
        if norms[src] > 0.0 {
            u.set_column(dst, &w.column(src).unscale(norms[src]));
        }
        vs.set_column(dst, &v.column(src));
        s.push(norms[src]);
    }
    (u, s, vs)
}

/// Replaces the columns of `u` from `from` on by an orthonormal completion
/// of the earlier ones, drawn from the standard basis.
fn complete_columns(u: &mut Block, from: usize) {
    let n = u.nrows();
    let mut filled = from;
    for e in 0..n {
        if filled == u.ncols() {
            break;
        }
        let mut x = nalgebra::DVector::<C64>::zeros(n);
        x[e] = C64::new(1.0, 0.0);
        for _pass in 0..2 {
            for j in 0..filled {
                let c = u.column(j).dotc(&x);
                x -= u.column(j) * c;
            }
        }
        let r = x.norm();
        if r > 1e-8 {
            u.set_column(filled, &x.unscale(r));
            filled += 1;
        }
    }
}

/// Full SVD `a = U·diag(s)·V*` of a square block, `s` decreasing.
pub fn svd_sorted(a: &Block) -> (Block, Vec<f64>, Block) {
    let n = a.nrows();
    debug_assert_eq!(n, a.ncols());
    if n == 1 {
        let z = a[(0, 0)];
        let r = z.norm();
        let phase = if r > 0.0 { z / r } else { C64::new(1.0, 0.0) };
        return (
            Block::from_element(1, 1, phase),
            vec![r],
            Block::from_element(1, 1, C64::new(1.0, 0.0)),
        );
    }
    let (mut u, s, v) = jacobi_svd(a);
    let smax = s.first().copied().unwrap_or(0.0);
    if let Some(r) = s.iter().position(|&x| x <= 1e-14 * smax || x == 0.0) {
        complete_columns(&mut u, r);
    }
    (u, s, v)
}

/// Singular values of any rectangular block, descending.
pub fn singular_values(a: &Block) -> Vec<f64> {
    if a.nrows() == 1 && a.ncols() == 1 {
        return vec![a[(0, 0)].norm()];
    }
    if a.nrows() >= a.ncols() {
        jacobi_svd(a).1
    } else {
        jacobi_svd(&a.adjoint()).1
    }
}

pub fn largest_singular_value(a: &Block) -> f64 {
    singular_values(a).first().copied().unwrap_or(0.0)
}

/// `U·diag(d)·V*` for a real diagonal.
pub fn compose(u: &Block, d: &[f64], v: &Block) -> Block {
    let mut scaled = u.clone();
    for (j, &dj) in d.iter().enumerate() {
        scaled.column_mut(j).scale_mut(dj);
    }
    matmul(&scaled, &v.adjoint())
}

/// Thin polar factor of a tall `n×k` matrix: `L = U_w·V_w*`.
pub fn thin_polar_factor(w: &Block) -> Option<Block> {
    let (n, k) = w.shape();
    if k == 0 {
        return Some(Block::zeros(n, 0));
    }
    let (u, s, v) = jacobi_svd(w);
    if s.last().copied().unwrap_or(0.0) < 1e-8 {
        return None;
    }
    Some(matmul(&u, &v.adjoint()))
}

/// Eigen-decomposition of a Hermitian matrix, eigenvalues ascending.
#[cfg(test)]
pub fn hermitian_eigen(a: &Block) -> (Vec<f64>, Block) {
    let n = a.nrows();
    let sym = (a + a.adjoint()).scale(0.5);
    let eig = sym.symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]).then(i.cmp(&j)));
    let mut vecs = Block::zeros(n, n);
    let mut vals = Vec::with_capacity(n);
    for (dst, &src) in order.iter().enumerate() {
        vecs.set_column(dst, &eig.eigenvectors.column(src));
        vals.push(eig.eigenvalues[src]);
    }
    (vals, vecs)
}

/// Squared Frobenius norm.
pub fn frob_sq(a: &Block) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn svd_reconstructs_and_sorts() {
        let a = Block::from_row_slice(2, 2, &[c(1.0, 0.5), c(-0.3, 0.0), c(0.2, -1.0), c(0.7, 0.1)]);
        let (u, s, v) = svd_sorted(&a);
        assert!(s[0] >= s[1]);
        let back = compose(&u, &s, &v);
        assert!((back - a).norm() < 1e-12);
    }

    #[test]
    fn svd_with_repeated_singular_values() {
        let d = [
            (-0.0542584851065287, 0.14142347312095732),
            (-0.20474150264361776, -0.6574388111160165),
            (-0.5495676675469265, 0.29205138699337235),
            (-0.11340625501713118, 0.031034374267918788),
            (0.21167215814082901, -0.42708512126969495),
            (0.5917212835733675, -0.1758529963963868),
            (0.15320884087433376, -0.0502946642939931),
            (0.35687257789694177, -0.4063209073639666),
            (0.13559569297407031, 0.4393524983210257),
        ];
        let a = Block::from_iterator(3, 3, d.iter().map(|&(r, i)| c(r, i)));
        let (u, s, v) = svd_sorted(&a);
        assert!((s[0] - 1.0).abs() < 1e-12 && (s[1] - 1.0).abs() < 1e-12);
        assert!((compose(&u, &s, &v) - &a).norm() < 1e-13);
        assert!((u.adjoint() * &u - Block::identity(3, 3)).norm() < 1e-13);
        // Oracle: eigenvalues of a*a.
        let (vals, _) = hermitian_eigen(&(a.adjoint() * &a));
        assert!((s[2] * s[2] - vals[0]).abs() < 1e-13);
    }

    #[test]
    fn svd_of_rank_deficient_block() {
        let a = Block::from_row_slice(3, 3, &[c(1.0, 0.0), c(0.0, 1.0), c(0.0, 0.0), c(0.0, -1.0), c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)]);
        let (u, s, v) = svd_sorted(&a);
        assert!(s[1].abs() < 1e-14 && s[2] == 0.0);
        assert!((u.adjoint() * &u - Block::identity(3, 3)).norm() < 1e-13);
        assert!((compose(&u, &s, &v) - &a).norm() < 1e-13);
        assert_eq!(singular_values(&Block::from_row_slice(1, 2, &[c(3.0, 0.0), c(0.0, 4.0)])), vec![5.0]);
    }

    #[test]
    fn matmul_agrees_with_nalgebra() {
        let a = Block::from_fn(3, 3, |i, j| c(i as f64 - j as f64, (i * j) as f64 * 0.1));
        let b = Block::from_fn(3, 3, |i, j| c((i + 2 * j) as f64 * 0.3, -(i as f64)));
        assert!((matmul(&a, &b) - &a * &b).norm() < 1e-12);
    }

    #[test]
    fn hermitian_eigen_sorted_ascending() {
        let a = Block::from_row_slice(2, 2, &[c(2.0, 0.0), c(0.0, 1.0), c(0.0, -1.0), c(2.0, 0.0)]);
        let (vals, vecs) = hermitian_eigen(&a);
        assert!((vals[0] - 1.0).abs() < 1e-12 && (vals[1] - 3.0).abs() < 1e-12);
        let back = compose(&vecs, &vals, &vecs);
        assert!((back - a).norm() < 1e-12);
    }
}
