//! Named, seeded property checks.
//!
//! Each check draws random instances over a battery of algebras and
//! reports the worst excess `lhs − bound` seen over all asserted
//! inequalities (or the worst deviation for identities). A check passes
//! iff that excess is at most its tolerance.

use std::collections::BTreeMap;
use std::sync::Arc;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::algebra::{
    avg_two_unitaries, haar_unitary_with, make_algebra, nearest_unitary, polar, random_ball_element, random_contraction_near_sphere, AlgebraElement,
    AlgebraError, TracialAlgebra, C64,
};
use crate::banach::{build_net, cover_check, subspace_span, BanachError, NetConfig, SubspaceMap};
use crate::eval::{eval_qf, eval_sentence, Assignment, EvalConfig, EvalError};
use crate::formula::{op_transform, parse, parse_formula, FormulaError};
use crate::games::{gram_matrix, solve_representation, GameError, GramBudget, Representation};
use crate::rng::{child_rng, derive_seed, Rng};

pub const REPORT_SCHEMA: u32 = 1;

pub const CHECK_NAMES: [&str; 10] = [
    "unitary-lemma",
    "claim2-bound",
    "avg2-exact",
    "z4-identity",
    "kirchberg-step",
    "jordan-transpose",
    "op-duality",
    "net-proposition",
    "polarization-transfer",
    "linear-independence-perturb",
];

pub const DEFAULT_BATTERY: [&str; 6] = ["M2", "M3", "M4", "C+C:1/2,1/2", "C+C:1/3,2/3", "M2+M3:0.4,0.6"];

/// Trials per algebra in a default run.
pub const DEFAULT_TRIALS: usize = 1000;

const EPSILONS: [f64; 4] = [0.3, 0.1, 0.03, 0.01];

#[derive(Debug, Error, Clone, PartialEq)]
pub enum VerifyError {
    #[error("unknown check `{0}`")]
    UnknownCheck(String),
    #[error("empty algebra battery")]
    EmptyBattery,
    #[error(transparent)]
    Algebra(#[from] AlgebraError),
    #[error(transparent)]
    Banach(#[from] BanachError),
    #[error(transparent)]
    Formula(#[from] FormulaError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Game(#[from] GameError),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckReport {
    pub schema_version: u32,
    pub name: String,
    pub trials: usize,
    pub worst_slack: f64,
    pub tolerance: f64,
    pub pass: bool,
    pub seed: u64,
    pub algebras: Vec<String>,
    /// Recorded quantities that are not asserted.
    pub observations: BTreeMap<String, f64>,
    pub notes: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SuiteSummary {
    pub schema_version: u32,
    pub seed: u64,
    pub trials: usize,
    pub passed: usize,
    pub failed: usize,
    pub reports: Vec<CheckReport>,
}

/// Accumulates the worst excess of a check.
#[derive(Default)]
struct Tally {
    worst: f64,
    trials: usize,
    observations: BTreeMap<String, f64>,
    notes: Vec<String>,
}

impl Tally {
    fn new() -> Self {
        Self {
            worst: f64::NEG_INFINITY,
            ..Self::default()
        }
    }

    fn excess(&mut self, lhs: f64, bound: f64) {
        let e = lhs - bound;
        // NaN counts as a failure.
        self.worst = if e.is_nan() { f64::INFINITY } else { self.worst.max(e) };
    }

    fn observe_max(&mut self, key: &str, v: f64) {
        let slot = self.observations.entry(key.to_string()).or_insert(f64::NEG_INFINITY);
        *slot = slot.max(v);
    }

    fn observe_min(&mut self, key: &str, v: f64) {
        let slot = self.observations.entry(key.to_string()).or_insert(f64::INFINITY);
        *slot = slot.min(v);
    }

    fn observe_add(&mut self, key: &str, v: f64) {
        *self.observations.entry(key.to_string()).or_insert(0.0) += v;
    }
}

type Battery = [Arc<TracialAlgebra>];

fn trial_rng(seed: u64, alg: usize, stream: u64, trial: usize) -> Rng {
    child_rng(seed, &[alg as u64, stream, trial as u64])
}

/// Runs `f` over `trials` seeded instances per algebra in parallel and
/// merges the per-trial tallies in order.
fn per_trial<F>(battery: &Battery, trials: usize, seed: u64, stream: u64, tally: &mut Tally, f: F)
where
    F: Fn(&Arc<TracialAlgebra>, &mut Rng, &mut Tally) + Sync,
{
    for (ai, alg) in battery.iter().enumerate() {
        let parts: Vec<Tally> = (0..trials)
            .into_par_iter()
            .map(|t| {
                let mut local = Tally::new();
                f(alg, &mut trial_rng(seed, ai, stream, t), &mut local);
                local
            })
            .collect();
        for p in parts {
            tally.worst = tally.worst.max(p.worst);
            tally.trials += 1;
            for (k, v) in p.observations {
                if k.ends_with("_count") {
                    tally.observe_add(&k, v);
                } else if k.starts_with("min_") {
                    tally.observe_min(&k, v);
                } else {
                    tally.observe_max(&k, v);
                }
            }
        }
    }
}

fn trace_re(x: &AlgebraElement) -> f64 {
    x.trace().re
}

fn unitary_lemma(battery: &Battery, trials: usize, seed: u64, t: &mut Tally) {
    for (k, &eps) in EPSILONS.iter().enumerate() {
        per_trial(battery, trials, seed, k as u64, t, |alg, rng, t| {
            let y = random_contraction_near_sphere(alg, 1.0 - 2.0 * eps, rng);
            let p = polar(&y);
            let v = p.unitary.element();
            let d = y.distance(v).expect("same algebra");
            t.excess(d, 4.0 * eps.sqrt());
            let abs_y = &p.positive;
            let one = AlgebraElement::identity(alg);
            let tr_abs = trace_re(abs_y);
            let tr_sq = abs_y.two_norm_sq();
            let y2 = y.two_norm();
            let lhs = (&one - abs_y).two_norm_sq();
            let expanded = 1.0 + tr_sq - 2.0 * tr_abs;
            // ‖1 − |y|‖₂² = 1 + tr|y|² − 2 tr|y| is an identity.
            t.excess((lhs - expanded).abs(), 1e-12);
            t.excess(expanded, 1.0 - tr_abs + 1e-12);
            t.excess(1.0 - tr_abs, 1.0 - y2 * y2 + 1e-12);
            t.excess(1.0 - y2 * y2, 4.0 * eps);
            if 1.0 - tr_abs > 1.0 - y2 + 1e-12 {
                t.observe_add("literal_link_violation_count", 1.0);
            }
            t.observe_max("max_ratio_to_sqrt_eps", d / eps.sqrt());
            t.observe_max("max_ratio_to_sqrt2eps_plus_eps", d / ((2.0 * eps).sqrt() + eps));
        });
    }
    t.notes.push(
        "asserted chain: ||1-|y|||^2 = 1 + tr|y|^2 - 2tr|y| <= 1 - tr|y| <= 1 - ||y||^2 <= 4eps; \
         the link 1 - tr|y| <= 1 - ||y|| is counted, not asserted"
            .into(),
    );
    t.observations.entry("literal_link_violation_count".into()).or_insert(0.0);
}

fn claim2(battery: &Battery, trials: usize, seed: u64, t: &mut Tally) {
    for (k, &eps) in EPSILONS.iter().enumerate() {
        per_trial(battery, trials, seed, k as u64, t, |alg, rng, t| {
            let x = random_contraction_near_sphere(alg, 1.0 - eps, rng);
            let u = nearest_unitary(&x);
            let d = x.distance(u.element()).expect("same algebra");
            t.excess(d, 2.0 * eps.sqrt());
            t.observe_max("max_ratio_to_sqrt_eps", d / eps.sqrt());
        });
    }
}

fn avg2(battery: &Battery, trials: usize, seed: u64, t: &mut Tally) {
    per_trial(battery, trials, seed, 0, t, |alg, rng, t| {
        let x = random_ball_element(alg, 1.0, rng);
        match avg_two_unitaries(&x) {
            Ok((w1, w2)) => {
                let mid = (w1.element() + w2.element()).scale_real(0.5);
                t.excess(mid.distance(&x).expect("same algebra"), 0.0);
                t.excess(w1.defect(), 0.0);
                t.excess(w2.defect(), 0.0);
            }
            Err(_) => t.excess(f64::INFINITY, 0.0),
        }
    });
}

fn z4(battery: &Battery, trials: usize, seed: u64, t: &mut Tally) {
    let i = C64::new(0.0, 1.0);
    per_trial(battery, trials, seed, 0, t, |alg, rng, t| {
        let u = haar_unitary_with(alg, rng).into_element();
        let w = haar_unitary_with(alg, rng).into_element();
        let ip = u.inner(&w).expect("same algebra");
        let d = u.distance(&w).expect("same algebra");
        let di = u.distance(&w.scale(i)).expect("same algebra");
        t.excess((ip.re - (1.0 - 0.5 * d * d)).abs(), 0.0);
        t.excess((ip.im - (1.0 - 0.5 * di * di)).abs(), 0.0);
    });
}

fn kirchberg(battery: &Battery, trials: usize, seed: u64, t: &mut Tally) {
    per_trial(battery, trials, seed, 0, t, |alg, rng, t| {
        let u = haar_unitary_with(alg, rng).into_element();
        let w = haar_unitary_with(alg, rng).into_element();
        let conj = w.adjoint().mul(&u, false).and_then(|x| x.mul(&w, false)).expect("same algebra");
        for image in [u.clone(), u.transpose(), conj] {
            t.excess(image.unitary_defect(), 0.0);
        }
    });
}

fn jordan_transpose(battery: &Battery, trials: usize, seed: u64, t: &mut Tally) {
    per_trial(battery, trials, seed, 0, t, |alg, rng, t| {
        let x = random_ball_element(alg, 1.0, rng);
        let y = random_ball_element(alg, 1.0, rng);
        let lhs = x.jordan(&y).expect("same algebra").transpose();
        let rhs = x.transpose().jordan(&y.transpose()).expect("same algebra");
        t.excess(lhs.max_abs_diff(&rhs), 0.0);
        t.excess(x.adjoint().transpose().max_abs_diff(&x.transpose().adjoint()), 0.0);
    });
}

/// Quantifier-free formulas used by the op-duality check.
pub const OP_QF_BATTERY: [&str; 6] = [
    "n2(x*y - y*x)",
    "reip(x*y*z, z*x)",
    "imip(x*y^*, y*z*x)",
    "max(n2(x*x*y - 0.5*y), abs(reip(x, y*z)))",
    "n2(x*(y + z)*x^*) -. n2(z*y)",
    "min(n2([0,1]*x*y*z + z), 3*reip(one, x*y))",
];

/// Sentences compared with their opposites by the op-duality check.
pub const OP_SENTENCE_BATTERY: [&str; 3] = [
    "sup x:C1. sup y:C1. n2(x*y - y*x)",
    "sup x:C1. n2(x*x*x^* - x^**x*x)",
    "sup x:C1. inf y:C1. n2(x*y - y*x*x)",
];

fn op_duality(battery: &Battery, trials: usize, seed: u64, t: &mut Tally) -> Result<(), VerifyError> {
    let formulas = OP_QF_BATTERY.iter().map(|s| parse_formula(s)).collect::<Result<Vec<_>, _>>()?;
    per_trial(battery, trials, seed, 0, t, |alg, rng, t| {
        let mut a = Assignment::new();
        for v in ["x", "y", "z"] {
            a.bind_unchecked(v, random_ball_element(alg, 1.0, rng));
        }
        for f in &formulas {
            let lhs = eval_qf(&op_transform(f), &a, alg, false);
            let rhs = eval_qf(f, &a, alg, true);
            match (lhs, rhs) {
                (Ok(l), Ok(r)) if l.to_bits() == r.to_bits() => t.excess(0.0, 0.0),
                (Ok(l), Ok(r)) => t.excess((l - r).abs().max(f64::MIN_POSITIVE), 0.0),
                _ => t.excess(f64::INFINITY, 0.0),
            }
        }
    });
    // Sentence level on full matrix algebras, where A ≅ A^op.
    let factors: Vec<&Arc<TracialAlgebra>> = battery.iter().filter(|a| a.num_blocks() == 1 && a.blocks()[0] <= 3).collect();
    for (k, alg) in factors.iter().enumerate() {
        for (j, text) in OP_SENTENCE_BATTERY.iter().enumerate() {
            let sigma = parse(text)?;
            let cfg = EvalConfig::new(derive_seed(seed, &[1, k as u64, j as u64]))
                .with_restarts(12)
                .with_iterations(60, 30);
            let a = eval_sentence(&sigma, alg, &cfg)?;
            let b = eval_sentence(&op_transform(&sigma), alg, &cfg)?;
            let gap = (a.value - b.value).abs();
            let allowed = 2.0 * a.uncertainty.max(b.uncertainty);
            t.excess(gap, allowed);
            t.observe_max("max_sentence_gap", gap);
        }
    }
    t.notes.push("quantifier-free values compared bitwise; sentence gaps compared with twice the larger reported uncertainty".into());
    Ok(())
}

fn net_proposition(trials: usize, seed: u64, t: &mut Tally) -> Result<(), VerifyError> {
    let m2 = Arc::new(make_algebra("M2")?);
    let eps = 0.25;
    let samples = (100 * trials).clamp(1_000, 100_000);
    for n in 1..=2usize {
        let mut rng = child_rng(seed, &[n as u64]);
        let us: Vec<AlgebraElement> = (0..n).map(|_| haar_unitary_with(&m2, &mut rng).into_element()).collect();
        let e = subspace_span(&m2, &us)?;
        let net = build_net(
            &e,
            eps,
            &NetConfig {
                seed: derive_seed(seed, &[n as u64, 1]),
                ..NetConfig::default()
            },
        )?;
        let cover = cover_check(&net, &e, samples, derive_seed(seed, &[n as u64, 2]));
        t.excess(cover.max_distance, eps / 2.0);
        let mut family = us.clone();
        for x in &net.points {
            let (w1, w2) = avg_two_unitaries(x)?;
            let mid = (w1.element() + w2.element()).scale_real(0.5);
            t.excess(mid.distance(x)?, 1e-10);
            t.excess(w1.defect().max(w2.defect()), 1e-10);
            family.push(w1.into_element());
            family.push(w2.into_element());
        }
        let s = family.len() as f64;
        t.excess(s, (n + 2 * net.len()) as f64);
        t.observe_max(&format!("net_size_n{n}"), net.len() as f64);
        t.observe_max(&format!("family_size_n{n}"), s);
        t.observe_max(&format!("cover_max_distance_n{n}"), cover.max_distance);
        match solve_representation(&us, &m2, GramBudget::default(), derive_seed(seed, &[n as u64, 3])) {
            Representation::Found { norm_t, norm_tinv, .. } => {
                t.excess(norm_t.max(norm_tinv), 1.0 + eps);
            }
            Representation::DimensionCount { .. } => t.excess(f64::INFINITY, 0.0),
        }
        t.trials += 1;
    }
    t.notes.push(
        "Popa's constant is replaced by the exact two-unitary decomposition of net points; \
         family = input unitaries plus both factors of every net point"
            .into(),
    );
    Ok(())
}

fn random_isometry_like(dim: usize, delta: f64, rng: &mut Rng) -> DMatrix<C64> {
    use rand::Rng as _;
    let one = Arc::new(TracialAlgebra::matrix(dim));
    let w = haar_unitary_with(&one, rng).into_element();
    let v = haar_unitary_with(&one, rng).into_element();
    let s = DMatrix::<C64>::from_fn(dim, dim, |i, j| {
        if i == j {
            let lo = 1.0 / (1.0 + delta);
            let hi = 1.0 + delta;
            let r = match rng.random_range(0..4) {
                0 => lo,
                1 => hi,
                _ => lo + (hi - lo) * rng.random::<f64>(),
            };
            C64::new(r, 0.0)
        } else {
            C64::new(0.0, 0.0)
        }
    });
    w.block(0) * s * v.block(0)
}

fn polarization(battery: &Battery, trials: usize, seed: u64, t: &mut Tally) {
    for (k, &delta) in [0.1, 0.01, 0.001].iter().enumerate() {
        per_trial(battery, trials, seed, k as u64, t, |alg, rng, t| {
            let n = alg.complex_dim().min(3);
            let us: Vec<AlgebraElement> = (0..n).map(|_| haar_unitary_with(alg, rng).into_element()).collect();
            let Ok(e) = subspace_span(alg, &us) else {
                return;
            };
            let m = random_isometry_like(e.dim(), delta, rng);
            let Ok(map) = SubspaceMap::from_matrix(e.clone(), e, m) else {
                t.excess(f64::INFINITY, 0.0);
                return;
            };
            let images: Vec<AlgebraElement> = us.iter().map(|u| map.apply(u)).collect();
            let g = gram_matrix(&us);
            let h = gram_matrix(&images);
            let dev = g.iter().zip(h.iter()).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
            t.excess(dev, 8.0 * delta + 4.0 * delta * delta);
            t.observe_max(&format!("max_ratio_delta_{delta}"), dev / delta);
        });
    }
    t.notes.push("T = W·diag(s)·V on span of random unitaries with s in [1/(1+δ), 1+δ]".into());
}

const RANK_TOL: f64 = 1e-12;

fn independence(battery: &Battery, trials: usize, seed: u64, t: &mut Tally) {
    for (k, &eps) in [0.3, 0.1, 0.03].iter().enumerate() {
        per_trial(battery, trials, seed, k as u64, t, |alg, rng, t| {
            let n = (alg.complex_dim() - 1).clamp(1, 3);
            let us: Vec<AlgebraElement> = (0..n).map(|_| haar_unitary_with(alg, rng).into_element()).collect();
            let Ok(e) = subspace_span(alg, &us) else {
                return;
            };
            let u = &us[0];
            let h = haar_unitary_with(alg, rng).into_element();
            let moved = nearest_unitary(&(u + &h.scale_real(eps / 4.0))).into_element();
            t.excess(u.distance(&moved).expect("same algebra"), eps);
            // Numerical rank test: relative residual norm well above rounding.
            let rel = e.residual(&moved).expect("same algebra").1.sqrt();
            t.observe_min("min_relative_residual", rel);
            if rel > RANK_TOL {
                t.excess(0.0, 0.0);
            } else {
                t.observe_add("dependent_count", 1.0);
                t.excess(1.0, 0.0);
            }
        });
    }
    t.observations.entry("dependent_count".into()).or_insert(0.0);
}

fn battery_of(specs: &[String]) -> Result<Vec<Arc<TracialAlgebra>>, VerifyError> {
    if specs.is_empty() {
        return Err(VerifyError::EmptyBattery);
    }
    specs.iter().map(|s| Ok(Arc::new(make_algebra(s)?))).collect()
}

/// Runs one named check with `trials` instances per algebra (and per
/// parameter value, where a check sweeps one).
pub fn run_check(name: &str, battery: &[String], trials: usize, seed: u64) -> Result<CheckReport, VerifyError> {
    let index = CHECK_NAMES
        .iter()
        .position(|&n| n == name)
        .ok_or_else(|| VerifyError::UnknownCheck(name.to_string()))?;
    let algs = battery_of(battery)?;
    let s = derive_seed(seed, &[index as u64]);
    let mut t = Tally::new();
    let (tolerance, algebras) = match name {
        "unitary-lemma" => {
            unitary_lemma(&algs, trials, s, &mut t);
            (0.0, battery.to_vec())
        }
        "claim2-bound" => {
            claim2(&algs, trials, s, &mut t);
            (0.0, battery.to_vec())
        }
        "avg2-exact" => {
            avg2(&algs, trials, s, &mut t);
            (1e-10, battery.to_vec())
        }
        "z4-identity" => {
            z4(&algs, trials, s, &mut t);
            (1e-12, battery.to_vec())
        }
        "kirchberg-step" => {
            kirchberg(&algs, trials, s, &mut t);
            (1e-10, battery.to_vec())
        }
        "jordan-transpose" => {
            jordan_transpose(&algs, trials, s, &mut t);
            (0.0, battery.to_vec())
        }
        "op-duality" => {
            op_duality(&algs, trials, s, &mut t)?;
            (0.0, battery.to_vec())
        }
        "net-proposition" => {
            net_proposition(trials, s, &mut t)?;
            (0.0, vec!["M2".to_string()])
        }
        "polarization-transfer" => {
            polarization(&algs, trials, s, &mut t);
            (1e-12, battery.to_vec())
        }
        "linear-independence-perturb" => {
            independence(&algs, trials, s, &mut t);
            (0.0, battery.to_vec())
        }
        _ => unreachable!("name checked above"),
    };
    let worst = if t.worst == f64::NEG_INFINITY { 0.0 } else { t.worst };
    Ok(CheckReport {
        schema_version: REPORT_SCHEMA,
        name: name.to_string(),
        trials: t.trials,
        worst_slack: worst,
        tolerance,
        pass: worst <= tolerance,
        seed,
        algebras,
        observations: t.observations,
        notes: t.notes,
    })
}

/// Runs every registered check.
pub fn run_all(battery: &[String], trials: usize, seed: u64) -> Result<SuiteSummary, VerifyError> {
    let reports = CHECK_NAMES
        .iter()
        .map(|name| run_check(name, battery, trials, seed))
        .collect::<Result<Vec<_>, _>>()?;
    let passed = reports.iter().filter(|r| r.pass).count();
    Ok(SuiteSummary {
        schema_version: REPORT_SCHEMA,
        seed,
        trials,
        passed,
        failed: reports.len() - passed,
        reports,
    })
}

pub fn default_battery() -> Vec<String> {
    DEFAULT_BATTERY.iter().map(|s| s.to_string()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_check_passes_at_small_scale() {
        let battery = vec!["M2".to_string(), "C+C:1/3,2/3".to_string()];
        for name in CHECK_NAMES {
            let r = run_check(name, &battery, 20, 11).unwrap();
            assert!(r.pass, "{name}: {r:?}");
        }
    }

    #[test]
    fn reports_are_reproducible() {
        let battery = vec!["M3".to_string()];
        let a = run_check("claim2-bound", &battery, 30, 5).unwrap();
        let b = run_check("claim2-bound", &battery, 30, 5).unwrap();
        assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
        assert!(matches!(run_check("nope", &battery, 1, 0), Err(VerifyError::UnknownCheck(_))));
    }
}
