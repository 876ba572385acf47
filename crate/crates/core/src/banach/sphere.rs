//! Direction sets in real coefficient space.

use rand::Rng as _;
use rand_distr::StandardNormal;

use crate::rng::Rng;

pub(crate) fn normalize(v: &mut [f64]) -> bool {
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if n == 0.0 {
        return false;
    }
    v.iter_mut().for_each(|x| *x /= n);
    true
}

pub(crate) fn random_direction(d: usize, rng: &mut Rng) -> Vec<f64> {
    loop {
        let mut v: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
        if normalize(&mut v) {
            return v;
        }
    }
}

/// Number of grid steps per cube edge so that the surface lattice has at
/// most `cap` points.
pub(crate) fn surface_steps(d: usize, spacing: f64, cap: usize) -> usize {
    let mut m = ((2.0 / spacing).ceil() as usize).max(1);
    while m > 1 && surface_count(d, m) > cap as f64 {
        m -= 1;
    }
    m
}

fn surface_count(d: usize, m: usize) -> f64 {
    let side = (m + 1) as f64;
    side.powi(d as i32) - ((m as f64) - 1.0).max(0.0).powi(d as i32)
}

/// Normalized points of the lattice `{−1, −1 + 2/m, …, 1}^d` lying on the
/// cube surface: a direction set with angular spacing about `2/m`.
pub(crate) fn cube_surface_directions(d: usize, m: usize) -> Vec<Vec<f64>> {
    let side = m + 1;
    let total = side.pow(d as u32);
    let mut out = Vec::new();
    let mut idx = vec![0usize; d];
    for _ in 0..total {
        if idx.iter().any(|&i| i == 0 || i == m) {
            let mut v: Vec<f64> = idx.iter().map(|&i| -1.0 + 2.0 * i as f64 / m as f64).collect();
            if normalize(&mut v) {
                out.push(v);
            }
        }
        for k in 0..d {
            idx[k] += 1;
            if idx[k] < side {
                break;
            }
            idx[k] = 0;
        }
    }
    out
}

/// Full lattice of spacing `2/m` in the cube `[−1, 1]^d`, restricted to the
/// Euclidean unit ball.
pub(crate) fn ball_lattice(d: usize, m: usize) -> Vec<Vec<f64>> {
    let side = m + 1;
    let total = side.pow(d as u32);
    let mut out = Vec::new();
    let mut idx = vec![0usize; d];
    for _ in 0..total {
        let v: Vec<f64> = idx.iter().map(|&i| -1.0 + 2.0 * i as f64 / m as f64).collect();
        if v.iter().map(|x| x * x).sum::<f64>() <= 1.0 + 1e-12 {
            out.push(v);
        }
        for k in 0..d {
            idx[k] += 1;
            if idx[k] < side {
                break;
            }
            idx[k] = 0;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn surface_lattice_counts() {
        assert_eq!(cube_surface_directions(2, 2).len(), 8);
        assert_eq!(surface_count(2, 2), 8.0);
        assert_eq!(surface_count(3, 4), 125.0 - 27.0);
        assert!(surface_steps(4, 0.01, 100_000) < 200);
    }

    #[test]
    fn ball_lattice_is_inside() {
        let pts = ball_lattice(2, 4);
        assert!(pts.iter().all(|p| p[0] * p[0] + p[1] * p[1] <= 1.0 + 1e-12));
        assert_eq!(pts.len(), 13);
    }
}
