use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::project::{project_ball_cap, ProjectionConfig, MEMBERSHIP_TOL};
use super::sphere::{cube_surface_directions, normalize, random_direction, surface_steps};
use super::{map_extremes, BanachError, Subspace, SubspaceMap};
use crate::algebra::AlgebraElement;
use crate::rng::child_rng;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    /// Norm bounds plus mutual `ε`-containment of the unit-ball slices.
    Definition,
    /// Strict containment for rescaled `T` and `S = T⁻¹` with
    /// `‖ST − id‖, ‖TS − id‖ < ε` and `‖T‖, ‖S‖ < 1 + ε`.
    Alternate,
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Variant::Definition => "definition",
            Variant::Alternate => "alternate",
        })
    }
}

impl std::str::FromStr for Variant {
    type Err = BanachError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "definition" => Ok(Variant::Definition),
            "alternate" => Ok(Variant::Alternate),
            _ => Err(BanachError::InvalidParameter(format!("unknown variant `{s}`"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    Fail,
}

impl Verdict {
    pub fn passed(self) -> bool {
        self == Verdict::Pass
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IsometryReport {
    pub variant: Variant,
    pub epsilon: f64,
    pub net_resolution: f64,
    #[serde(rename = "norm_T")]
    pub norm_t: f64,
    #[serde(rename = "norm_Tinv")]
    pub norm_tinv: f64,
    pub fwd_defect: f64,
    pub bwd_defect: f64,
    pub verdict: Verdict,
}

#[derive(Clone, Debug)]
pub struct IsometryConfig {
    /// Cap on lattice directions; the lattice is coarsened to fit.
    pub max_directions: usize,
    pub random_directions: usize,
    /// Directions refined by pattern search after the sweep.
    pub refine_top: usize,
    pub refine_steps: usize,
    pub projection: ProjectionConfig,
    pub seed: u64,
}

impl Default for IsometryConfig {
    fn default() -> Self {
        Self {
            max_directions: 100_000,
            random_directions: 2_000,
            refine_top: 4,
            refine_steps: 40,
            projection: ProjectionConfig::default(),
            seed: 0,
        }
    }
}

impl IsometryConfig {
    /// A cheaper sweep for use inside game loops.
    pub fn quick() -> Self {
        Self {
            max_directions: 4_000,
            random_directions: 256,
            refine_top: 2,
            refine_steps: 20,
            ..Self::default()
        }
    }
}

fn directions(d: usize, resolution: f64, cfg: &IsometryConfig) -> Vec<Vec<f64>> {
    let m = surface_steps(d, resolution, cfg.max_directions);
    let mut dirs = cube_surface_directions(d, m);
    let mut rng = child_rng(cfg.seed, &[0x150]);
    dirs.extend((0..cfg.random_directions).map(|_| random_direction(d, &mut rng)));
    dirs
}

/// Point of `∂(E ∩ (M)₁)` in coefficient direction `u`.
fn boundary_point(e: &Subspace, u: &[f64]) -> AlgebraElement {
    let x = e.from_real_coords(u);
    let op = x.op_norm();
    x.scale_real(1.0 / op)
}

/// Maximize `f` over directions: full sweep, then pattern search from the
/// best few. `f` must be cheap enough to call on every direction.
fn sweep_max(dirs: &[Vec<f64>], cfg: &IsometryConfig, resolution: f64, f: &(dyn Fn(&[f64]) -> f64 + Sync)) -> f64 {
    let mut vals: Vec<(usize, f64)> = dirs.par_iter().map(|u| f(u)).enumerate().collect();
    vals.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    let best = vals.first().map_or(0.0, |v| v.1);
    let refined = vals
        .par_iter()
        .take(cfg.refine_top)
        .map(|&(i, v)| pattern_search(&dirs[i], v, resolution, cfg.refine_steps, f))
        .reduce(|| 0.0, f64::max);
    best.max(refined)
}

fn pattern_search(start: &[f64], start_val: f64, resolution: f64, steps: usize, f: &(dyn Fn(&[f64]) -> f64 + Sync)) -> f64 {
    let d = start.len();
    let mut u = start.to_vec();
    let mut val = start_val;
    let mut step = resolution.min(0.5);
    for _ in 0..steps {
        let mut improved = false;
        for k in 0..d {
            for sign in [1.0, -1.0] {
                let mut v = u.clone();
                v[k] += sign * step;
                if !normalize(&mut v) {
                    continue;
                }
                let fv = f(&v);
                if fv > val {
                    u = v;
                    val = fv;
                    improved = true;
                }
            }
        }
        if !improved {
            step *= 0.5;
            if step < 1e-9 {
                break;
            }
        }
    }
    val
}

/// `sup_{x ∈ E ∩ (M)₁} dist(T x, F ∩ (N)₁)`, approximated over boundary
/// directions (the distance is convex along rays and vanishes at 0).
fn containment_defect(t: &SubspaceMap, resolution: f64, cfg: &IsometryConfig) -> Result<f64, BanachError> {
    let e = t.domain();
    let f = t.codomain();
    let dirs = directions(e.real_dim(), resolution, cfg);
    // Cheap upper bound by radial shrinking; exact values only where it can
    // beat the running maximum.
    let mut ub: Vec<(usize, f64)> = dirs
        .par_iter()
        .map(|u| {
            let y = t.apply(&boundary_point(e, u));
            let op = y.op_norm();
            if op <= 1.0 + MEMBERSHIP_TOL {
                0.0
            } else {
                y.two_norm() * (1.0 - 1.0 / op)
            }
        })
        .enumerate()
        .collect();
    ub.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    let exact = |u: &[f64]| -> Result<f64, BanachError> {
        let y = t.apply(&boundary_point(e, u));
        Ok(project_ball_cap(&y, f, &cfg.projection)?.distance)
    };
    let mut best = 0.0f64;
    let mut top: Vec<(usize, f64)> = Vec::new();
    for chunk in ub.chunks(64) {
        if chunk[0].1 <= best {
            break;
        }
        let vals: Vec<(usize, f64)> = chunk
            .par_iter()
            .filter(|&&(_, b)| b > best)
            .map(|&(i, _)| exact(&dirs[i]).map(|v| (i, v)))
            .collect::<Result<_, _>>()?;
        for (i, v) in vals {
            best = best.max(v);
            top.push((i, v));
        }
    }
    if best == 0.0 {
        return Ok(0.0);
    }
    top.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    let f_exact = |u: &[f64]| exact(u).unwrap_or(0.0);
    let refined = top
        .par_iter()
        .take(cfg.refine_top)
        .map(|&(i, v)| pattern_search(&dirs[i], v, resolution, cfg.refine_steps, &f_exact))
        .reduce(|| 0.0, f64::max);
    Ok(best.max(refined))
}

/// `sup_{x ∈ ∂(E ∩ (M)₁)} ‖T x‖_op`.
fn image_op_sup(t: &SubspaceMap, resolution: f64, cfg: &IsometryConfig) -> f64 {
    let e = t.domain();
    let dirs = directions(e.real_dim(), resolution, cfg);
    sweep_max(&dirs, cfg, resolution, &|u| t.apply(&boundary_point(e, u)).op_norm())
}

/// Diagnoses `T` as an `ε`-almost isometry between `(E, E ∩ (M)₁)` and
/// `(F, F ∩ (N)₁)`, with containment distances measured in 2-norm.
///
/// Suprema over the slices are approximated by a direction net of angular
/// spacing about `net_resolution` (coarsened to the configured cap), random
/// directions and local refinement, so the defects are lower estimates of
/// the true suprema.
pub fn check_almost_isometry(
    t: &SubspaceMap,
    epsilon: f64,
    net_resolution: f64,
    variant: Variant,
    cfg: &IsometryConfig,
) -> Result<IsometryReport, BanachError> {
    if !(epsilon > 0.0) || !(net_resolution > 0.0) {
        return Err(BanachError::InvalidParameter(format!(
            "epsilon and net_resolution must be positive (got {epsilon}, {net_resolution})"
        )));
    }
    let (nt, ntinv) = map_extremes(t)?;
    let inv = t.inverse()?;
    let report = match variant {
        Variant::Definition => {
            let fwd = containment_defect(t, net_resolution, cfg)?;
            let bwd = containment_defect(&inv, net_resolution, cfg)?;
            let pass = nt <= 1.0 + epsilon && ntinv <= 1.0 + epsilon && fwd <= epsilon && bwd <= epsilon;
            IsometryReport {
                variant,
                epsilon,
                net_resolution,
                norm_t: nt,
                norm_tinv: ntinv,
                fwd_defect: fwd,
                bwd_defect: bwd,
                verdict: if pass { Verdict::Pass } else { Verdict::Fail },
            }
        }
        Variant::Alternate => {
            // T' = T/k_T and S' = T⁻¹/k_S map the slices into each other;
            // then S'T' = id/(k_T k_S).
            let k = |v: f64| if v <= 1.0 + MEMBERSHIP_TOL { 1.0 } else { v };
            let kt = k(image_op_sup(t, net_resolution, cfg));
            let ks = k(image_op_sup(&inv, net_resolution, cfg));
            let defect = (1.0 / (kt * ks) - 1.0).abs();
            let (nt, ntinv) = (nt / kt, ntinv / ks);
            let pass = nt < 1.0 + epsilon && ntinv < 1.0 + epsilon && defect < epsilon;
            IsometryReport {
                variant,
                epsilon,
                net_resolution,
                norm_t: nt,
                norm_tinv: ntinv,
                fwd_defect: defect,
                bwd_defect: defect,
                verdict: if pass { Verdict::Pass } else { Verdict::Fail },
            }
        }
    };
    Ok(report)
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::algebra::make_algebra;
    use crate::banach::subspace_span;

    #[test]
    fn identity_passes_both_variants() {
        let a = Arc::new(make_algebra("M2").unwrap());
        let e = subspace_span(&a, &[AlgebraElement::identity(&a), AlgebraElement::real_diag(&a, &[1.0, -1.0]).unwrap()]).unwrap();
        let id = SubspaceMap::identity(&e);
        for variant in [Variant::Definition, Variant::Alternate] {
            let r = check_almost_isometry(&id, 1e-6, 0.05, variant, &IsometryConfig::quick()).unwrap();
            assert_eq!((r.norm_t, r.norm_tinv, r.fwd_defect, r.bwd_defect), (1.0, 1.0, 0.0, 0.0));
            assert!(r.verdict.passed());
        }
    }

    #[test]
    fn scaling_fails() {
        let a = Arc::new(make_algebra("M2").unwrap());
        let one = AlgebraElement::identity(&a);
        let t = SubspaceMap::from_pairs(&[one.clone()], &[one.scale_real(1.2)]).unwrap();
        let r = check_almost_isometry(&t, 0.1, 0.01, Variant::Definition, &IsometryConfig::default()).unwrap();
        assert!((r.norm_t - 1.2).abs() < 1e-12);
        assert!((r.fwd_defect - 0.2).abs() < 1e-6);
        assert_eq!(r.bwd_defect, 0.0);
        assert_eq!(r.verdict, Verdict::Fail);
    }

    #[test]
    fn report_schema() {
        let a = Arc::new(make_algebra("M2").unwrap());
        let e = subspace_span(&a, &[AlgebraElement::identity(&a)]).unwrap();
        let r = check_almost_isometry(&SubspaceMap::identity(&e), 0.1, 0.1, Variant::Alternate, &IsometryConfig::quick()).unwrap();
        let v = serde_json::to_value(&r).unwrap();
        let mut keys: Vec<_> = v.as_object().unwrap().keys().cloned().collect();
        keys.sort();
        assert_eq!(keys, ["bwd_defect", "epsilon", "fwd_defect", "net_resolution", "norm_T", "norm_Tinv", "variant", "verdict"]);
        assert_eq!(v["variant"], "alternate");
        assert_eq!(v["verdict"], "pass");
    }
}
