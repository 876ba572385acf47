//! Seeded random instances: Haar unitaries, Ginibre elements and
//! contractions.

use std::sync::Arc;

use rand::Rng as _;
use rand_distr::StandardNormal;

use super::linalg::{self, Block};
use super::{AlgebraElement, TracialAlgebra, UnitaryCertificate, C64};
use crate::rng::{rng_from, Rng};

fn complex_normal(rng: &mut Rng) -> C64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    C64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

fn ginibre_block(n: usize, rng: &mut Rng) -> Block {
    Block::from_fn(n, n, |_, _| complex_normal(rng))
}

/// Modified Gram–Schmidt (two passes) on the columns of a Ginibre matrix.
/// Keeping the diagonal of `R` positive makes the result Haar-distributed.
fn haar_block(n: usize, rng: &mut Rng) -> Block {
    let mut q = ginibre_block(n, rng);
    for j in 0..n {
        for _pass in 0..2 {
            for k in 0..j {
                let proj: C64 = (0..n).map(|i| q[(i, k)].conj() * q[(i, j)]).sum();
                for i in 0..n {
                    let qik = q[(i, k)];
                    q[(i, j)] -= qik * proj;
                }
            }
        }
        let norm = (0..n).map(|i| q[(i, j)].norm_sqr()).sum::<f64>().sqrt();
        for i in 0..n {
            q[(i, j)] /= norm;
        }
    }
    q
}

/// Blockwise Haar-distributed unitary, deterministic in `seed`.
pub fn haar_unitary(algebra: &Arc<TracialAlgebra>, seed: u64) -> UnitaryCertificate {
    haar_unitary_with(algebra, &mut rng_from(seed))
}

pub fn haar_unitary_with(algebra: &Arc<TracialAlgebra>, rng: &mut Rng) -> UnitaryCertificate {
    let blocks = algebra.blocks().iter().map(|&n| haar_block(n, rng)).collect();
    let u = AlgebraElement::from_blocks_unchecked(algebra, blocks);
    let defect = u.unitary_defect();
    UnitaryCertificate::from_parts(u, defect)
}

/// Element with i.i.d. standard complex Gaussian entries.
pub fn ginibre(algebra: &Arc<TracialAlgebra>, rng: &mut Rng) -> AlgebraElement {
    let blocks = algebra.blocks().iter().map(|&n| ginibre_block(n, rng)).collect();
    AlgebraElement::from_blocks_unchecked(algebra, blocks)
}

fn with_singular_values(algebra: &Arc<TracialAlgebra>, rng: &mut Rng, mut s: impl FnMut(&mut Rng) -> f64) -> AlgebraElement {
    let blocks = algebra
        .blocks()
        .iter()
        .map(|&n| {
            let u = haar_block(n, rng);
            let v = haar_block(n, rng);
            let d: Vec<f64> = (0..n).map(|_| s(rng)).collect();
            linalg::compose(&u, &d, &v)
        })
        .collect();
    AlgebraElement::from_blocks_unchecked(algebra, blocks)
}

/// Random element of the operator-norm ball of the given radius. Singular
/// values are uniform on `[0, radius]`, with an occasional exact `0` or
/// `radius` so that extreme points and singular elements are exercised.
pub fn random_ball_element(algebra: &Arc<TracialAlgebra>, radius: f64, rng: &mut Rng) -> AlgebraElement {
    with_singular_values(algebra, rng, |rng| match rng.random_range(0..8) {
        0 => 0.0,
        1 => radius,
        _ => radius * rng.random::<f64>(),
    })
}

/// Random contraction with `‖y‖₂ ≥ min_two_norm`.
///
/// Singular values are drawn as `1 − a·t` with a random depth `a`, mixed
/// with 0/1 patterns (partial isometries), and rejected until the 2-norm
/// condition holds.
pub fn random_contraction_near_sphere(algebra: &Arc<TracialAlgebra>, min_two_norm: f64, rng: &mut Rng) -> AlgebraElement {
    let slack = (1.0 - min_two_norm).clamp(0.0, 1.0);
    loop {
        let mode = rng.random_range(0..4);
        let depth = (4.0 * slack * rng.random::<f64>()).min(1.0);
        let y = with_singular_values(algebra, rng, |rng| match mode {
            0 => {
                if rng.random::<f64>() < 0.5 * slack {
                    0.0
                } else {
                    1.0
                }
            }
            _ => (1.0 - depth * rng.random::<f64>()).clamp(0.0, 1.0),
        });
        if y.two_norm() >= min_two_norm {
            return y;
        }
    }
}
