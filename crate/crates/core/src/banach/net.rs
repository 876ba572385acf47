use std::collections::BinaryHeap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::grid::Grid;
use super::sphere::{ball_lattice, cube_surface_directions, random_direction, surface_steps};
use super::{BanachError, Subspace};
use crate::algebra::{AlgebraElement, ElementRecord};
use crate::rng::child_rng;

#[derive(Clone, Debug)]
pub struct NetConfig {
    /// Largest complex dimension of `E` accepted.
    pub dim_cap: usize,
    pub min_epsilon: f64,
    /// Lattice points used as cover targets.
    pub max_candidates: usize,
    pub max_points: usize,
    /// Random probes per repair round and the number of rounds.
    pub repair_probes: usize,
    pub repair_rounds: usize,
    /// Relative slack kept below `ε/2` when placing centers.
    pub margin: f64,
    pub seed: u64,
}

impl Default for NetConfig {
    fn default() -> Self {
        Self {
            dim_cap: 4,
            min_epsilon: 0.1,
            max_candidates: 150_000,
            max_points: 50_000,
            repair_probes: 20_000,
            repair_rounds: 30,
            margin: 0.15,
            seed: 0,
        }
    }
}

/// An `ε/2`-net of `E ∩ (M)₁` whose points have operator norm `< 1 − ε/4`.
#[derive(Clone, Debug)]
pub struct Net {
    pub epsilon: f64,
    pub points: Vec<AlgebraElement>,
    /// `(1 + 8/ε)^{2·dim E}`, the covering bound for the `ε/4`-covering
    /// number of the unit ball of `ℓ²_n`.
    pub covering_bound: f64,
    coords: Vec<Vec<f64>>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct NetRecord {
    pub epsilon: f64,
    pub dim: usize,
    pub size: usize,
    pub covering_bound: f64,
    pub max_op_norm: f64,
    pub points: Vec<ElementRecord>,
}

impl Net {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn max_op_norm(&self) -> f64 {
        self.points.iter().map(|p| p.op_norm()).fold(0.0, f64::max)
    }

    pub fn to_record(&self) -> NetRecord {
        NetRecord {
            epsilon: self.epsilon,
            dim: self.coords.first().map_or(0, |c| c.len() / 2),
            size: self.len(),
            covering_bound: self.covering_bound,
            max_op_norm: self.max_op_norm(),
            points: self.points.iter().map(|p| p.to_record()).collect(),
        }
    }

    /// Distance in coefficient space (equal to the 2-norm distance) from
    /// `c` to the nearest net point, looked up within `r` first.
    fn nearest(&self, index: &Grid, c: &[f64], r: f64) -> f64 {
        let mut best = f64::INFINITY;
        index.visit(c, r, |i| best = best.min(dist(&self.coords[i], c)));
        if best <= r {
            return best;
        }
        self.coords.iter().map(|p| dist(p, c)).fold(f64::INFINITY, f64::min)
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CoverReport {
    pub samples: usize,
    pub max_distance: f64,
    pub uncovered: usize,
    pub passed: bool,
}

pub fn covering_bound(epsilon: f64, dim: usize) -> f64 {
    (1.0 + 8.0 / epsilon).powi(2 * dim as i32)
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

fn op_of(e: &Subspace, c: &[f64]) -> f64 {
    e.from_real_coords(c).op_norm()
}

fn scaled(c: &[f64], s: f64) -> Vec<f64> {
    c.iter().map(|x| x * s).collect()
}

/// Point of the slice boundary in direction `u`.
fn boundary(e: &Subspace, u: &[f64]) -> Vec<f64> {
    scaled(u, 1.0 / op_of(e, u))
}

struct Greedy<'a> {
    e: &'a Subspace,
    shrink: f64,
    radius: f64,
    centers: Vec<Vec<f64>>,
    index: Grid,
}

/// Heap entry ordered by distance, then by lowest target index.
#[derive(PartialEq)]
struct Far(f64, usize);

impl Eq for Far {}

impl PartialOrd for Far {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Far {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.0.total_cmp(&other.0).then(other.1.cmp(&self.1))
    }
}

impl<'a> Greedy<'a> {
    fn new(e: &'a Subspace, shrink: f64, radius: f64) -> Self {
        let d = e.real_dim();
        let mut g = Self {
            e,
            shrink,
            radius,
            centers: Vec::new(),
            index: Grid::new(radius),
        };
        g.add(vec![0.0; d]);
        g
    }

    fn add(&mut self, c: Vec<f64>) {
        self.index.insert(self.centers.len(), &c);
        self.centers.push(c);
    }

    fn center_for(&self, p: &[f64]) -> Vec<f64> {
        let op = op_of(self.e, p);
        if op > self.shrink {
            scaled(p, self.shrink / op)
        } else {
            p.to_vec()
        }
    }

    fn covered(&self, p: &[f64]) -> bool {
        let mut hit = false;
        self.index.visit(p, self.radius, |i| hit |= dist(&self.centers[i], p) <= self.radius);
        hit
    }

    fn nearest(&self, p: &[f64]) -> (f64, usize) {
        let look = |best: &mut (f64, usize), i: usize| {
            let d = dist(&self.centers[i], p);
            if d < best.0 {
                *best = (d, i);
            }
        };
        let mut best = (f64::INFINITY, 0);
        self.index.visit(p, 2.0 * self.radius, |i| look(&mut best, i));
        if best.0 > 2.0 * self.radius {
            (0..self.centers.len()).for_each(|i| look(&mut best, i));
        }
        best
    }

    /// Walks from an uncovered point away from its nearest center, staying
    /// in the slice, towards a locally deepest hole of the cover.
    fn climb(&self, p: &[f64]) -> Vec<f64> {
        let mut x = p.to_vec();
        let (mut depth, mut near) = self.nearest(&x);
        let mut step = 0.25 * self.radius;
        for _ in 0..24 {
            let c = &self.centers[near];
            let away: Vec<f64> = x.iter().zip(c).map(|(a, b)| a + step * (a - b) / depth).collect();
            let op = op_of(self.e, &away);
            let y = if op > 1.0 { scaled(&away, 1.0 / op) } else { away };
            let (dy, ny) = self.nearest(&y);
            if dy > depth {
                (x, depth, near) = (y, dy, ny);
            } else {
                step *= 0.5;
            }
        }
        x
    }

    /// Farthest-point insertion until every target is within `radius`.
    /// Distances only shrink, so stale heap entries are re-pushed lazily
    /// and only targets near a new center are updated.
    fn cover(&mut self, targets: &[Vec<f64>], cap: usize) -> Result<(), BanachError> {
        let mut mind: Vec<f64> = targets
            .par_iter()
            .map(|t| self.centers.iter().map(|c| dist(c, t)).fold(f64::INFINITY, f64::min))
            .collect();
        let mut heap: BinaryHeap<Far> = mind.iter().enumerate().map(|(i, &d)| Far(d, i)).collect();
        let mut tindex = Grid::new(self.radius);
        for (i, t) in targets.iter().enumerate() {
            tindex.insert(i, t);
        }
        while let Some(Far(d, i)) = heap.pop() {
            if d != mind[i] {
                heap.push(Far(mind[i], i));
                continue;
            }
            if d <= self.radius {
                return Ok(());
            }
            let c = self.center_for(&targets[i]);
            tindex.visit(&c, d, |j| {
                let dj = dist(&c, &targets[j]);
                if dj < mind[j] {
                    mind[j] = dj;
                }
            });
            heap.push(Far(mind[i], i));
            self.add(c);
            if self.centers.len() > cap {
                return Err(BanachError::NetTooLarge(cap));
            }
        }
        Ok(())
    }
}

/// Greedy farthest-point `ε/2`-net of `E ∩ (M)₁` in coefficient space.
///
/// Targets are a lattice of the coefficient ball, the slice boundary in
/// lattice directions, and random boundary points; repair rounds add
/// centers for uncovered random probes.
pub fn build_net(e: &Subspace, epsilon: f64, cfg: &NetConfig) -> Result<Net, BanachError> {
    if !(epsilon > 0.0) {
        return Err(BanachError::InvalidParameter(format!("epsilon must be positive, got {epsilon}")));
    }
    let d = e.real_dim();
    let bound = covering_bound(epsilon, e.dim());
    if epsilon >= 2.0 || d == 0 {
        return Ok(Net {
            epsilon,
            points: vec![AlgebraElement::zero(e.parent())],
            covering_bound: bound,
            coords: vec![vec![0.0; d]],
        });
    }
    if e.dim() > cfg.dim_cap {
        return Err(BanachError::DimensionCap {
            dim: e.dim(),
            cap: cfg.dim_cap,
        });
    }
    if epsilon < cfg.min_epsilon {
        return Err(BanachError::InvalidParameter(format!(
            "epsilon {epsilon} is below the configured minimum {}",
            cfg.min_epsilon
        )));
    }

    let mut m = 2;
    while ((m + 2) as f64).powi(d as i32) <= cfg.max_candidates as f64 && 2.0 / (m as f64) > epsilon / 16.0 {
        m += 1;
    }
    let mut targets: Vec<Vec<f64>> = ball_lattice(d, m)
        .into_par_iter()
        .filter(|c| op_of(e, c) <= 1.0)
        .collect();
    let sm = surface_steps(d, epsilon / 8.0, cfg.max_candidates / 2);
    targets.extend(cube_surface_directions(d, sm).par_iter().map(|u| boundary(e, u)).collect::<Vec<_>>());
    let mut rng = child_rng(cfg.seed, &[1]);
    targets.extend((0..cfg.repair_probes).map(|_| random_direction(d, &mut rng)).map(|u| boundary(e, &u)));

    let mut g = Greedy::new(e, (1.0 - epsilon / 4.0) * (1.0 - 1e-9), 0.5 * epsilon * (1.0 - cfg.margin));
    g.cover(&targets, cfg.max_points)?;
    for round in 0..cfg.repair_rounds {
        let probes = probe_points(e, cfg.repair_probes, cfg.seed, 2 + round as u64);
        let bad: Vec<Vec<f64>> = probes
            .into_iter()
            .filter(|p| !g.covered(p))
            .collect();
        if bad.is_empty() {
            break;
        }
        let holes: Vec<Vec<f64>> = bad.par_iter().map(|p| g.climb(p)).collect();
        g.cover(&holes, cfg.max_points)?;
    }
    let points = g.centers.iter().map(|c| e.from_real_coords(c)).collect();
    Ok(Net {
        epsilon,
        points,
        covering_bound: bound,
        coords: g.centers,
    })
}

/// Half radially uniform points of the slice, half boundary points.
fn probe_points(e: &Subspace, n: usize, seed: u64, stream: u64) -> Vec<Vec<f64>> {
    let d = e.real_dim();
    (0..n)
        .into_par_iter()
        .map(|i| {
            let mut rng = child_rng(seed, &[stream, i as u64]);
            let u = random_direction(d, &mut rng);
            let b = boundary(e, &u);
            if i % 2 == 0 {
                let r = rand::Rng::random::<f64>(&mut rng).powf(1.0 / d as f64);
                scaled(&b, r)
            } else {
                b
            }
        })
        .collect()
}

/// Probabilistic check that every point of `E ∩ (M)₁` lies within `ε/2` of
/// the net.
pub fn cover_check(net: &Net, e: &Subspace, samples: usize, seed: u64) -> CoverReport {
    let half = 0.5 * net.epsilon;
    let mut index = Grid::new(half);
    for (i, c) in net.coords.iter().enumerate() {
        index.insert(i, c);
    }
    let dists: Vec<f64> = probe_points(e, samples, seed, u64::MAX)
        .par_iter()
        .map(|p| net.nearest(&index, p, half))
        .collect();
    let max_distance = dists.iter().copied().fold(0.0, f64::max);
    let uncovered = dists.iter().filter(|&&x| x > half).count();
    CoverReport {
        samples,
        max_distance,
        uncovered,
        passed: uncovered == 0,
    }
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::algebra::make_algebra;
    use crate::banach::subspace_span;

    #[test]
    fn disc_net() {
        let a = Arc::new(make_algebra("M2").unwrap());
        let e = subspace_span(&a, &[AlgebraElement::identity(&a)]).unwrap();
        let net = build_net(&e, 0.5, &NetConfig::default()).unwrap();
        assert!(net.len() >= 16 && net.len() <= 60, "size {}", net.len());
        assert!(net.max_op_norm() < 1.0 - 0.125);
        assert!((net.covering_bound - 289.0).abs() < 1e-9);
        assert!(cover_check(&net, &e, 20_000, 5).passed);
    }

    #[test]
    fn large_epsilon_gives_origin() {
        let a = Arc::new(make_algebra("M2").unwrap());
        let e = subspace_span(&a, &[AlgebraElement::identity(&a)]).unwrap();
        let net = build_net(&e, 2.0, &NetConfig::default()).unwrap();
        assert_eq!(net.len(), 1);
        assert_eq!(net.points[0], AlgebraElement::zero(&a));
    }

    #[test]
    fn dimension_cap() {
        let a = Arc::new(make_algebra("M3").unwrap());
        let units: Vec<_> = (0..5).map(|k| AlgebraElement::matrix_unit(&a, 0, k / 3, k % 3)).collect();
        let e = subspace_span(&a, &units).unwrap();
        assert!(matches!(build_net(&e, 0.5, &NetConfig::default()), Err(BanachError::DimensionCap { dim: 5, cap: 4 })));
    }
}
