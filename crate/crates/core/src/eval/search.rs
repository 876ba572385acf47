use std::sync::Arc;

use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{eval_qf, Assignment, EvalError};
use crate::algebra::{ginibre, haar_unitary_with, nearest_unitary, random_ball_element, AlgebraElement, ElementRecord, TracialAlgebra, DYADIC_GRID_BITS};
use crate::formula::{sentence_hash, Formula, Quantifier, Sort};
use crate::rng::{child_rng, Rng};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalConfig {
    /// Restarts and local-search iterations of the outermost layer.
    pub restarts: usize,
    pub iterations: usize,
    /// Restarts and iterations of every nested layer. Restart 0 of a nested
    /// layer is warm-started from the previous witness.
    pub inner_restarts: usize,
    pub inner_iterations: usize,
    pub tolerance: f64,
    pub seed: u64,
    /// Evaluate in `A^op`.
    pub opposite: bool,
    /// Matrix evaluations allowed per outer restart.
    pub max_evaluations: u64,
}

impl EvalConfig {
    pub fn new(seed: u64) -> Self {
        Self {
            restarts: 32,
            iterations: 400,
            inner_restarts: 2,
            inner_iterations: 60,
            tolerance: 1e-6,
            seed,
            opposite: false,
            max_evaluations: 5_000_000,
        }
    }

    pub fn with_restarts(mut self, r: usize) -> Self {
        self.restarts = r;
        self
    }

    pub fn with_iterations(mut self, outer: usize, inner: usize) -> Self {
        self.iterations = outer;
        self.inner_iterations = inner;
        self
    }

    pub fn opposite(mut self, on: bool) -> Self {
        self.opposite = on;
        self
    }
}

/// A quantified variable and the element chosen for it on the reported
/// optimal path: minimizers for `inf` layers, best adversary samples for
/// `sup` layers.
#[derive(Clone, Debug)]
pub struct Witness {
    pub var: String,
    pub sort: Sort,
    pub quantifier: Quantifier,
    pub element: AlgebraElement,
}

#[derive(Clone, Debug)]
pub struct EvalResult {
    pub value: f64,
    /// Heuristic error bar: tolerance, plus the gap between the best
    /// even- and odd-indexed restarts at each layer along the witness path;
    /// doubled (plus `1e-2`) when the budget ran out.
    pub uncertainty: f64,
    pub witnesses: Vec<Witness>,
    pub budget_exhausted: bool,
    pub evaluations: u64,
    pub config: EvalConfig,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct WitnessRecord {
    pub var: String,
    pub sort: String,
    pub quantifier: String,
    pub element: ElementRecord,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EvalReport {
    pub schema_version: u32,
    pub sentence_hash: String,
    pub sentence: String,
    pub algebra_spec: String,
    pub value: f64,
    pub uncertainty: f64,
    pub seed: u64,
    pub restarts: usize,
    pub iterations: usize,
    pub inner_restarts: usize,
    pub inner_iterations: usize,
    pub opposite: bool,
    pub budget_exhausted: bool,
    pub evaluations: u64,
    pub witnesses: Vec<WitnessRecord>,
}

impl EvalResult {
    /// Assignment of every witness.
    pub fn witness_assignment(&self) -> Assignment {
        let mut a = Assignment::new();
        for w in &self.witnesses {
            a.bind_unchecked(&w.var, w.element.clone());
        }
        a
    }

    pub fn report(&self, sigma: &Formula, alg: &TracialAlgebra) -> EvalReport {
        EvalReport {
            schema_version: 1,
            sentence_hash: sentence_hash(sigma),
            sentence: sigma.to_string(),
            algebra_spec: alg.to_string(),
            value: self.value,
            uncertainty: self.uncertainty,
            seed: self.config.seed,
            restarts: self.config.restarts,
            iterations: self.config.iterations,
            inner_restarts: self.config.inner_restarts,
            inner_iterations: self.config.inner_iterations,
            opposite: self.config.opposite,
            budget_exhausted: self.budget_exhausted,
            evaluations: self.evaluations,
            witnesses: self
                .witnesses
                .iter()
                .map(|w| WitnessRecord {
                    var: w.var.clone(),
                    sort: w.sort.to_string(),
                    quantifier: w.quantifier.to_string(),
                    element: w.element.to_record(),
                })
                .collect(),
        }
    }
}

struct Layer {
    kind: Quantifier,
    vars: Vec<(String, Sort)>,
}

struct Ctx<'a> {
    layers: Vec<Layer>,
    matrix: &'a Formula,
    alg: &'a Arc<TracialAlgebra>,
    cfg: &'a EvalConfig,
}

#[derive(Default)]
struct Budget {
    evals: u64,
    calls: u64,
    exhausted: bool,
}

#[derive(Clone)]
struct Outcome {
    value: f64,
    /// Chosen elements for this layer and all deeper ones.
    path: Vec<Vec<AlgebraElement>>,
    uncertainty: f64,
}

fn better(kind: Quantifier, a: f64, b: f64) -> bool {
    match kind {
        Quantifier::Inf => a < b,
        Quantifier::Sup => a > b,
    }
}

/// Projection onto the sort domain. Ball elements are pulled slightly
/// inside and rounded to a dyadic grid, so that the two-unitary
/// decomposition reproduces them exactly.
fn project(x: &AlgebraElement, sort: Sort) -> AlgebraElement {
    match sort {
        Sort::Ball(n) => {
            let r = n as f64;
            let inner = r * (1.0 - 2f64.powi(-38));
            let mut y = x.clip_to_ball(r);
            if y.op_norm() > inner {
                y = y.scale_real(1.0 - 2f64.powi(-38));
            }
            y.snap_to_grid(DYADIC_GRID_BITS)
        }
        Sort::Unitary => nearest_unitary(x).into_element(),
    }
}

fn random_point(alg: &Arc<TracialAlgebra>, sort: Sort, rng: &mut Rng) -> AlgebraElement {
    match sort {
        Sort::Ball(n) => project(&random_ball_element(alg, n as f64, rng), sort),
        Sort::Unitary => haar_unitary_with(alg, rng).into_element(),
    }
}

/// Restart 1 starts from the identity and restart 3 from zero (for ball
/// sorts); the others start at random.
fn start_point(alg: &Arc<TracialAlgebra>, sort: Sort, k: usize, rng: &mut Rng) -> AlgebraElement {
    match (k, sort) {
        (1, Sort::Ball(n)) => project(&AlgebraElement::identity(alg).scale_real(n as f64), sort),
        (1, Sort::Unitary) => AlgebraElement::identity(alg),
        (3, Sort::Ball(_)) => AlgebraElement::zero(alg),
        _ => random_point(alg, sort, rng),
    }
}

fn perturb(x: &AlgebraElement, sort: Sort, step: f64, rng: &mut Rng) -> AlgebraElement {
    let d = ginibre(x.algebra(), rng);
    let d = d.scale_real(step * sort.radius() / d.two_norm());
    project(&(x + &d), sort)
}

fn propose(xs: &[AlgebraElement], sorts: &[Sort], step: f64, rng: &mut Rng) -> Vec<AlgebraElement> {
    let k = xs.len();
    let mode = rng.random_range(0..10);
    let j = rng.random_range(0..k);
    let mut out = xs.to_vec();
    match (mode, sorts[j]) {
        (0, Sort::Ball(n)) => {
            out[j] = project(&nearest_unitary(&xs[j]).into_element().scale_real(n as f64), sorts[j]);
        }
        (1..=4, _) => out[j] = perturb(&xs[j], sorts[j], step, rng),
        _ => {
            for i in 0..k {
                out[i] = perturb(&xs[i], sorts[i], step, rng);
            }
        }
    }
    out
}

impl Ctx<'_> {
    fn evaluate(&self, layer: usize, asg: &mut Assignment, xs: &[AlgebraElement], hint: Option<&[Vec<AlgebraElement>]>, budget: &mut Budget) -> Result<Outcome, EvalError> {
        for ((name, _), x) in self.layers[layer].vars.iter().zip(xs) {
            asg.bind_unchecked(name, x.clone());
        }
        let mut out = self.solve(layer + 1, asg, hint, budget)?;
        out.path.insert(0, xs.to_vec());
        Ok(out)
    }

    /// Optimizes layers `layer..` for the current assignment.
    fn solve(&self, layer: usize, asg: &mut Assignment, hint: Option<&[Vec<AlgebraElement>]>, budget: &mut Budget) -> Result<Outcome, EvalError> {
        if layer == self.layers.len() {
            budget.evals += 1;
            return Ok(Outcome {
                value: eval_qf(self.matrix, asg, self.alg, self.cfg.opposite)?,
                path: Vec::new(),
                uncertainty: 0.0,
            });
        }
        let kind = self.layers[layer].kind;
        let runs = (0..self.cfg.inner_restarts.max(1))
            .map(|k| self.restart(layer, k, asg, hint, budget))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(select(kind, runs, self.cfg.tolerance))
    }

    /// One multi-start run of projected local search on `layer`.
    fn restart(&self, layer: usize, k: usize, asg: &mut Assignment, hint: Option<&[Vec<AlgebraElement>]>, budget: &mut Budget) -> Result<Outcome, EvalError> {
        let cfg = self.cfg;
        let l = &self.layers[layer];
        let sorts: Vec<Sort> = l.vars.iter().map(|v| v.1).collect();
        let iterations = if layer == 0 { cfg.iterations } else { cfg.inner_iterations };
        let mut rng = child_rng(cfg.seed, &[layer as u64, k as u64, budget.calls]);
        budget.calls += 1;
        let (start, deeper) = match hint {
            Some(h) if k == 0 && !h.is_empty() => (h[0].clone(), Some(&h[1..])),
            _ => (sorts.iter().map(|&s| start_point(self.alg, s, k, &mut rng)).collect(), None),
        };
        let mut best = self.evaluate(layer, asg, &start, deeper, budget)?;
        let mut step = 0.5;
        for _ in 0..iterations {
            if budget.evals >= cfg.max_evaluations {
                budget.exhausted = true;
                break;
            }
            if step < 1e-9 {
                break;
            }
            let cand = propose(&best.path[0], &sorts, step, &mut rng);
            let hint_inner: Vec<Vec<AlgebraElement>> = best.path[1..].to_vec();
            let out = self.evaluate(layer, asg, &cand, Some(&hint_inner), budget)?;
            if better(l.kind, out.value, best.value) {
                best = out;
                step = (step * 1.5).min(1.0);
            } else {
                step *= 0.8;
            }
        }
        for (name, _) in &l.vars {
            asg.remove(name);
        }
        Ok(best)
    }
}

/// Best run with ties broken by index; the even/odd gap is added to the
/// uncertainty.
fn select(kind: Quantifier, runs: Vec<Outcome>, tol: f64) -> Outcome {
    let pick = |it: &mut dyn Iterator<Item = &Outcome>| -> Option<f64> {
        it.map(|o| o.value)
            .fold(None, |acc: Option<f64>, v| match acc {
                Some(a) if !better(kind, v, a) => Some(a),
                _ => Some(v),
            })
    };
    let even = pick(&mut runs.iter().step_by(2));
    let odd = pick(&mut runs.iter().skip(1).step_by(2));
    let spread = match (even, odd) {
        (Some(a), Some(b)) => (a - b).abs(),
        _ => 0.0,
    };
    let mut best: Option<Outcome> = None;
    for r in runs {
        match &best {
            Some(b) if !better(kind, r.value, b.value) => {}
            _ => best = Some(r),
        }
    }
    let mut best = best.expect("at least one restart");
    best.uncertainty += spread + tol;
    best
}

fn layers_of(prefix: &[(Quantifier, String, Sort)]) -> Vec<Layer> {
    let mut layers: Vec<Layer> = Vec::new();
    for (kind, var, sort) in prefix {
        match layers.last_mut() {
            Some(l) if l.kind == *kind => l.vars.push((var.clone(), *sort)),
            _ => layers.push(Layer {
                kind: *kind,
                vars: vec![(var.clone(), *sort)],
            }),
        }
    }
    layers
}

/// Minimax estimate of a prenex formula whose free variables are assigned
/// in `base`. Consecutive quantifiers of one kind are optimized jointly.
pub fn eval_with(sigma: &Formula, alg: &Arc<TracialAlgebra>, cfg: &EvalConfig, base: &Assignment) -> Result<EvalResult, EvalError> {
    if !sigma.is_prenex() {
        return Err(EvalError::NotPrenex);
    }
    for v in sigma.free_vars() {
        if base.get(&v).is_none() {
            return Err(EvalError::NotClosed(v));
        }
    }
    let (prefix, matrix) = sigma.prefix();
    let ctx = Ctx {
        layers: layers_of(&prefix),
        matrix,
        alg,
        cfg,
    };
    if ctx.layers.is_empty() {
        return Ok(EvalResult {
            value: eval_qf(matrix, base, alg, cfg.opposite)?,
            uncertainty: 0.0,
            witnesses: Vec::new(),
            budget_exhausted: false,
            evaluations: 1,
            config: cfg.clone(),
        });
    }
    let runs: Vec<(Outcome, Budget)> = (0..cfg.restarts.max(1))
        .into_par_iter()
        .map(|k| {
            let mut budget = Budget::default();
            let mut asg = base.clone();
            ctx.restart(0, k, &mut asg, None, &mut budget).map(|o| (o, budget))
        })
        .collect::<Result<_, _>>()?;
    let evaluations = runs.iter().map(|r| r.1.evals).sum();
    let exhausted = runs.iter().any(|r| r.1.exhausted);
    let best = select(ctx.layers[0].kind, runs.into_iter().map(|r| r.0).collect(), cfg.tolerance);
    let mut witnesses = Vec::new();
    for (layer, xs) in ctx.layers.iter().zip(&best.path) {
        for ((var, sort), x) in layer.vars.iter().zip(xs) {
            witnesses.push(Witness {
                var: var.clone(),
                sort: *sort,
                quantifier: layer.kind,
                element: x.clone(),
            });
        }
    }
    let uncertainty = if exhausted { 2.0 * best.uncertainty + 1e-2 } else { best.uncertainty };
    Ok(EvalResult {
        value: best.value,
        uncertainty,
        witnesses,
        budget_exhausted: exhausted,
        evaluations,
        config: cfg.clone(),
    })
}

/// Minimax estimate of a closed prenex sentence.
pub fn eval_sentence(sigma: &Formula, alg: &Arc<TracialAlgebra>, cfg: &EvalConfig) -> Result<EvalResult, EvalError> {
    eval_with(sigma, alg, cfg, &Assignment::new())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::make_algebra;
    use crate::formula::parse;

    fn alg(s: &str) -> Arc<TracialAlgebra> {
        Arc::new(make_algebra(s).unwrap())
    }

    #[test]
    fn sup_of_two_norm_is_one() {
        for spec in ["M2", "C+C:1/3,2/3", "M3"] {
            let a = alg(spec);
            let r = eval_sentence(&parse("sup x:C1. n2(x)").unwrap(), &a, &EvalConfig::new(1)).unwrap();
            assert!((r.value - 1.0).abs() < 1e-6, "{spec}: {}", r.value);
        }
    }

    #[test]
    fn projection_of_trace_one_third() {
        let s = parse("inf p:C1. max(n2(p*p - p), n2(p^* - p), abs(reip(p, one) - 1/3))").unwrap();
        let r = eval_sentence(&s, &alg("C+C:1/3,2/3"), &EvalConfig::new(3)).unwrap();
        assert!(r.value < 2e-3, "{}", r.value);
        let w = &r.witnesses[0].element;
        assert!(w.max_abs_diff(&AlgebraElement::real_diag(&alg("C+C:1/3,2/3"), &[1.0, 0.0]).unwrap()) < 1e-2);
    }

    #[test]
    fn witnesses_reproduce_value() {
        let a = alg("M2");
        let s = parse("sup x:C1. inf y:C1. n2(x*y - y*x) + n2(x - y)").unwrap();
        let cfg = EvalConfig::new(5).with_restarts(4).with_iterations(40, 20);
        let r = eval_sentence(&s, &a, &cfg).unwrap();
        let (_, m) = s.prefix();
        let v = eval_qf(m, &r.witness_assignment(), &a, false).unwrap();
        assert_eq!(v, r.value);
        assert!(r.uncertainty >= 0.0);
    }

    #[test]
    fn deterministic_and_monotone_in_restarts() {
        let a = alg("M2");
        let s = parse("inf x:C1. inf y:U. n2(x*y - y*x - 0.5*one) + abs(reip(x, one))").unwrap();
        let c8 = EvalConfig::new(9).with_restarts(8).with_iterations(50, 10);
        let r1 = eval_sentence(&s, &a, &c8).unwrap();
        let r2 = eval_sentence(&s, &a, &c8).unwrap();
        assert_eq!(r1.value.to_bits(), r2.value.to_bits());
        let r16 = eval_sentence(&s, &a, &c8.clone().with_restarts(16)).unwrap();
        assert!(r16.value <= r1.value);
    }

    #[test]
    fn rejects_open_sentences() {
        let a = alg("M2");
        let f = crate::formula::parse_formula("n2(x)").unwrap();
        assert!(matches!(eval_sentence(&f, &a, &EvalConfig::new(0)), Err(EvalError::NotClosed(_))));
    }
}
