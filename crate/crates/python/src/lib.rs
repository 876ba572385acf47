//! Python bindings: algebras and elements, formulas and their transforms,
//! sentence evaluation, games, nets and the verification suite.
//!
//! Structured results (reports, transcripts) cross the boundary as JSON and
//! are decoded with Python's `json` module, so they match the CLI output.

use std::sync::Arc;

use nalgebra::DMatrix;
use pyo3::exceptions::{PyTypeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyAny;

use eflab_core::algebra::{self as alg, make_algebra, AlgebraElement as CoreElement, TracialAlgebra, C64};
use eflab_core::banach::{build_net as core_build_net, cover_check, subspace_span, NetConfig};
use eflab_core::eval::{eval_sentence, EvalConfig};
use eflab_core::formula::{self, UnitaryMode};
use eflab_core::games::{self, GameConfig, GameKind, GameTranscript};
use eflab_core::verify;

fn err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn to_python<'py, T: serde::Serialize>(py: Python<'py>, value: &T) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(value).map_err(err)?;
    py.import("json")?.call_method1("loads", (text,))
}

/// A finite-dimensional tracial algebra `⊕ M_{n_i}` with trace weights.
#[pyclass(frozen, module = "eflab")]
struct Algebra {
    inner: Arc<TracialAlgebra>,
    spec: String,
}

#[pymethods]
impl Algebra {
    /// Parses a spec such as `"M2"`, `"C+C:1/3,2/3"` or `"M2+M3:0.4,0.6"`.
    #[new]
    fn new(spec: &str) -> PyResult<Self> {
        Ok(Self {
            inner: Arc::new(make_algebra(spec).map_err(err)?),
            spec: spec.to_string(),
        })
    }

    #[getter]
    fn spec(&self) -> &str {
        &self.spec
    }

    #[getter]
    fn blocks(&self) -> Vec<usize> {
        self.inner.blocks().to_vec()
    }

    #[getter]
    fn weights(&self) -> Vec<f64> {
        self.inner.weights().to_vec()
    }

    /// Complex dimension.
    #[getter]
    fn dim(&self) -> usize {
        self.inner.complex_dim()
    }

    fn identity(&self) -> Element {
        Element(CoreElement::identity(&self.inner))
    }

    fn zero(&self) -> Element {
        Element(CoreElement::zero(&self.inner))
    }

    fn haar_unitary(&self, seed: u64) -> Element {
        Element(alg::haar_unitary(&self.inner, seed).into_element())
    }

    /// Element from a literal such as `"E12 + E21"` or `"diag(1,-1)"`.
    fn parse(&self, literal: &str) -> PyResult<Element> {
        games::parse_element(literal, &self.inner).map(Element).map_err(err)
    }

    /// Element from nested lists: one square matrix (list of rows) per block.
    fn element(&self, blocks: Vec<Vec<Vec<C64>>>) -> PyResult<Element> {
        let mats = blocks
            .into_iter()
            .map(|rows| {
                let n = rows.len();
                if rows.iter().any(|r| r.len() != n) {
                    return Err(PyValueError::new_err("blocks must be square"));
                }
                Ok(DMatrix::from_fn(n, n, |i, j| rows[i][j]))
            })
            .collect::<PyResult<Vec<_>>>()?;
        CoreElement::from_blocks(&self.inner, mats).map(Element).map_err(err)
    }

    fn __repr__(&self) -> String {
        format!("Algebra({:?})", self.spec)
    }
}

/// An element of an [`Algebra`].
#[pyclass(frozen, from_py_object, name = "Element", module = "eflab")]
#[derive(Clone)]
struct Element(CoreElement);

fn scalar(other: &Bound<'_, PyAny>) -> Option<C64> {
    other.extract::<C64>().ok()
}

#[pymethods]
impl Element {
    /// The blocks as nested lists of complex numbers.
    fn blocks(&self) -> Vec<Vec<Vec<C64>>> {
        self.0
            .blocks()
            .iter()
            .map(|b| (0..b.nrows()).map(|i| (0..b.ncols()).map(|j| b[(i, j)]).collect()).collect())
            .collect()
    }

    fn trace(&self) -> C64 {
        self.0.trace()
    }

    fn two_norm(&self) -> f64 {
        self.0.two_norm()
    }

    fn op_norm(&self) -> f64 {
        self.0.op_norm()
    }

    fn unitary_defect(&self) -> f64 {
        self.0.unitary_defect()
    }

    fn adjoint(&self) -> Element {
        Element(self.0.adjoint())
    }

    /// `⟨self, other⟩ = tr(other* self)`.
    fn inner(&self, other: &Element) -> PyResult<C64> {
        self.0.inner(&other.0).map_err(err)
    }

    fn distance(&self, other: &Element) -> PyResult<f64> {
        self.0.distance(&other.0).map_err(err)
    }

    /// Product in the algebra, or in its opposite.
    #[pyo3(signature = (other, opposite = false))]
    fn mul(&self, other: &Element, opposite: bool) -> PyResult<Element> {
        self.0.mul(&other.0, opposite).map(Element).map_err(err)
    }

    fn __add__(&self, other: &Element) -> PyResult<Element> {
        self.0.try_add(&other.0).map(Element).map_err(err)
    }

    fn __sub__(&self, other: &Element) -> PyResult<Element> {
        self.0.try_sub(&other.0).map(Element).map_err(err)
    }

    fn __neg__(&self) -> Element {
        Element(self.0.scale_real(-1.0))
    }

    fn __mul__(&self, other: &Bound<'_, PyAny>) -> PyResult<Element> {
        if let Ok(e) = other.cast::<Element>() {
            return self.mul(e.get(), false);
        }
        scalar(other)
            .map(|c| Element(self.0.scale(c)))
            .ok_or_else(|| PyTypeError::new_err("expected an Element or a number"))
    }

    fn __rmul__(&self, other: &Bound<'_, PyAny>) -> PyResult<Element> {
        scalar(other)
            .map(|c| Element(self.0.scale(c)))
            .ok_or_else(|| PyTypeError::new_err("expected a number"))
    }

    fn __repr__(&self) -> String {
        format!("Element({} blocks in {})", self.0.blocks().len(), self.0.algebra().label())
    }
}

/// Nearest unitary in 2-norm (the unitary part of the polar decomposition).
#[pyfunction]
fn nearest_unitary(x: &Element) -> Element {
    Element(alg::nearest_unitary(&x.0).into_element())
}

/// `(u, p)` with `x = u·p`.
#[pyfunction]
fn polar(x: &Element) -> (Element, Element) {
    let p = alg::polar(&x.0);
    (Element(p.unitary.into_element()), Element(p.positive))
}

/// Unitaries `(w1, w2)` with `x = (w1 + w2)/2` for a contraction `x`.
#[pyfunction]
fn avg_two_unitaries(x: &Element) -> PyResult<(Element, Element)> {
    let (a, b) = alg::avg_two_unitaries(&x.0).map_err(err)?;
    Ok((Element(a.into_element()), Element(b.into_element())))
}

/// A parsed continuous-logic formula.
#[pyclass(frozen, module = "eflab")]
struct Formula(formula::Formula);

#[pymethods]
impl Formula {
    #[new]
    fn new(text: &str) -> PyResult<Self> {
        formula::parse(text).map(Formula).map_err(err)
    }

    fn op(&self) -> Formula {
        Formula(formula::op_transform(&self.0))
    }

    fn u(&self) -> PyResult<Formula> {
        formula::unitary_transform(&self.0, UnitaryMode::U).map(Formula).map_err(err)
    }

    fn uu(&self) -> PyResult<Formula> {
        formula::unitary_transform(&self.0, UnitaryMode::Uu).map(Formula).map_err(err)
    }

    /// `σ_l` (the first `n − l` quantifiers removed) and the freed variables.
    fn strip(&self, level: usize) -> PyResult<(Formula, Vec<String>)> {
        let s = formula::strip_quantifiers(&self.0, level).map_err(err)?;
        Ok((Formula(s.formula), s.free.into_iter().map(|(v, _)| v).collect()))
    }

    #[getter]
    fn quantifier_count(&self) -> usize {
        self.0.quantifier_count()
    }

    #[getter]
    fn hash(&self) -> String {
        formula::sentence_hash(&self.0)
    }

    fn __str__(&self) -> String {
        self.0.to_string()
    }

    fn __repr__(&self) -> String {
        format!("Formula({:?})", self.0.to_string())
    }

    fn __eq__(&self, other: &Formula) -> bool {
        self.0 == other.0
    }
}

/// Heuristic minimax value of a sentence; returns the evaluation report.
#[pyfunction]
#[pyo3(signature = (sentence, algebra, seed, restarts = 32, opposite = false))]
fn evaluate<'py>(py: Python<'py>, sentence: &Formula, algebra: &Algebra, seed: u64, restarts: usize, opposite: bool) -> PyResult<Bound<'py, PyAny>> {
    let cfg = EvalConfig::new(seed).with_restarts(restarts).opposite(opposite);
    let r = py.detach(|| eval_sentence(&sentence.0, &algebra.inner, &cfg)).map_err(err)?;
    to_python(py, &r.report(&sentence.0, &algebra.inner))
}

/// A game transcript.
#[pyclass(frozen, module = "eflab")]
struct Transcript(GameTranscript);

#[pymethods]
impl Transcript {
    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        GameTranscript::from_json(text).map(Transcript).map_err(err)
    }

    fn to_json(&self) -> String {
        self.0.to_json()
    }

    /// `"player1"` or `"player2"`.
    #[getter]
    fn winner(&self) -> String {
        serde_json::to_value(self.0.verdict.winner).ok().and_then(|v| v.as_str().map(str::to_string)).unwrap_or_default()
    }

    #[getter]
    fn forfeit(&self) -> bool {
        self.0.verdict.forfeit
    }

    #[getter]
    fn reason(&self) -> String {
        self.0.verdict.reason.clone()
    }

    /// `(name, value, bound)` for every adjudicated quantity.
    #[getter]
    fn margins(&self) -> Vec<(String, f64, f64)> {
        self.0.margins.iter().map(|m| (m.name.clone(), m.value, m.bound)).collect()
    }

    fn as_dict<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        to_python(py, &self.0)
    }

    /// Re-runs the referee on the recorded moves, optionally at another ε.
    #[pyo3(signature = (eps = None))]
    fn readjudicate(&self, eps: Option<f64>) -> PyResult<Transcript> {
        games::readjudicate(&self.0, eps).map(Transcript).map_err(err)
    }
}

/// Plays one game. `game` is atomic, banach, unitary or representability.
#[pyfunction]
#[pyo3(signature = (game, m, n, rounds, eps, seed, p1 = None, p2 = None, formulas = None))]
#[allow(clippy::too_many_arguments)]
fn play(py: Python<'_>, game: &str, m: &str, n: &str, rounds: usize, eps: f64, seed: u64, p1: Option<String>, p2: Option<String>, formulas: Option<Vec<String>>) -> PyResult<Transcript> {
    let kind: GameKind = game.parse().map_err(err)?;
    let mut cfg = GameConfig::new(kind, rounds, eps, m, n, seed);
    if let Some(p) = p1 {
        cfg.player1 = p;
    }
    if let Some(p) = p2 {
        cfg.player2 = p;
    }
    cfg.formulas = formulas.unwrap_or_default();
    py.detach(|| games::play(&cfg)).map(Transcript).map_err(err)
}

/// ε/2-net of the unit-ball slice of `span(vectors)` and its cover check.
#[pyfunction]
#[pyo3(signature = (vectors, eps, seed, samples = 100_000))]
fn build_net<'py>(py: Python<'py>, vectors: Vec<Element>, eps: f64, seed: u64, samples: usize) -> PyResult<Bound<'py, PyAny>> {
    let first = vectors.first().ok_or_else(|| PyValueError::new_err("empty span"))?;
    let parent = Arc::clone(first.0.algebra());
    let vs: Vec<CoreElement> = vectors.iter().map(|v| v.0.clone()).collect();
    let (net, cover) = py
        .detach(|| {
            let e = subspace_span(&parent, &vs)?;
            let net = core_build_net(&e, eps, &NetConfig { seed, ..NetConfig::default() })?;
            let cover = cover_check(&net, &e, samples, eflab_core::rng::derive_seed(seed, &[u64::MAX]));
            Ok::<_, eflab_core::banach::BanachError>((net, cover))
        })
        .map_err(err)?;
    let mut record = net.to_record();
    record.points.clear();
    let out = py.import("json")?.call_method1("loads", (serde_json::json!({"net": record, "cover": cover}).to_string(),))?;
    Ok(out)
}

/// Runs one named check (or every check with `name=None`) of the suite.
#[pyfunction]
#[pyo3(signature = (name = None, seed = 0, trials = 1000, battery = None))]
fn run_verify<'py>(py: Python<'py>, name: Option<String>, seed: u64, trials: usize, battery: Option<Vec<String>>) -> PyResult<Bound<'py, PyAny>> {
    let battery = battery.unwrap_or_else(verify::default_battery);
    match name {
        Some(n) => {
            let r = py.detach(|| verify::run_check(&n, &battery, trials, seed)).map_err(err)?;
            to_python(py, &r)
        }
        None => {
            let s = py.detach(|| verify::run_all(&battery, trials, seed)).map_err(err)?;
            to_python(py, &s)
        }
    }
}

#[pymodule]
fn eflab(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Algebra>()?;
    m.add_class::<Element>()?;
    m.add_class::<Formula>()?;
    m.add_class::<Transcript>()?;
    m.add_function(wrap_pyfunction!(nearest_unitary, m)?)?;
    m.add_function(wrap_pyfunction!(polar, m)?)?;
    m.add_function(wrap_pyfunction!(avg_two_unitaries, m)?)?;
    m.add_function(wrap_pyfunction!(evaluate, m)?)?;
    m.add_function(wrap_pyfunction!(play, m)?)?;
    m.add_function(wrap_pyfunction!(build_net, m)?)?;
    m.add_function(wrap_pyfunction!(run_verify, m)?)?;
    m.add("CHECK_NAMES", verify::CHECK_NAMES.to_vec())?;
    Ok(())
}
