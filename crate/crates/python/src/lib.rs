//! Python bindings. Matrices, points and codes are wrapped directly;
//! witnesses and certificates also travel as JSON so they can be stored
//! and checked with the command line tool.

use markov_codes::equivalence::VerifyOptions;
use markov_codes::format::Artifact;
use markov_codes::{
    self as mc, enumerate_words, CodeCandidate, CodedShift, ConjugacyResult, ElementaryResult, EventuallyPeriodicPoint,
    Symbol, TransitionMatrix, Word,
};
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

fn value_error(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

type CheckTuple = (String, bool, Option<String>, String);

fn report_rows(r: &mc::Report) -> Vec<CheckTuple> {
    r.checks.iter().map(|c| (c.name.clone(), c.passed, c.reason.clone(), c.detail.clone())).collect()
}

/// 0-1 transition matrix of an irreducible, non-permutation shift.
#[pyclass(name = "Matrix", frozen, eq, from_py_object)]
#[derive(Clone, PartialEq)]
struct PyMatrix(TransitionMatrix);

#[pymethods]
impl PyMatrix {
    #[new]
    fn new(rows: Vec<Vec<i64>>) -> PyResult<Self> {
        TransitionMatrix::new(&rows)
            .map(PyMatrix)
            .map_err(|e| PyValueError::new_err((e.reason(), e.to_string())))
    }

    #[staticmethod]
    fn full(n: usize) -> PyResult<Self> {
        TransitionMatrix::full_shift(n).map(PyMatrix).map_err(value_error)
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        TransitionMatrix::from_json(text).map(PyMatrix).map_err(value_error)
    }

    fn to_json(&self) -> String {
        self.0.to_json()
    }

    #[getter]
    fn n(&self) -> usize {
        self.0.size()
    }

    fn rows(&self) -> Vec<Vec<u32>> {
        self.0.to_rows().into_iter().map(|r| r.into_iter().map(u32::from).collect()).collect()
    }

    fn allows(&self, a: Symbol, b: Symbol) -> bool {
        self.0.allows(a, b)
    }

    /// Number of points of period `k`, i.e. `tr(A^k)`.
    fn periodic_point_count(&self, k: usize) -> u128 {
        self.0.periodic_point_count(k)
    }

    fn words(&self, k: usize) -> Vec<Vec<Symbol>> {
        enumerate_words(&self.0, k).into_iter().map(|w| w.0).collect()
    }

    fn sample_points(&self, count: usize) -> Vec<PyPoint> {
        mc::sample_points(&self.0, count).into_iter().map(PyPoint).collect()
    }

    /// Canonical matrix after merging states until nothing merges.
    fn amalgamate(&self) -> PyMatrix {
        PyMatrix(mc::total_amalgamation(&self.0).canonical)
    }

    fn is_isomorphic(&self, other: &PyMatrix) -> bool {
        mc::matrices_isomorphic(&self.0, &other.0).is_some()
    }

    fn __repr__(&self) -> String {
        format!("Matrix({:?})", self.0.to_rows())
    }

    fn __str__(&self) -> String {
        self.0.to_string().trim_end().to_string()
    }
}

/// Eventually periodic point `preperiod · period^∞`, stored canonically.
#[pyclass(name = "Point", frozen, eq, hash, from_py_object)]
#[derive(Clone, PartialEq, Eq, Hash)]
struct PyPoint(EventuallyPeriodicPoint);

#[pymethods]
impl PyPoint {
    #[new]
    #[pyo3(signature = (preperiod, period))]
    fn new(preperiod: Vec<Symbol>, period: Vec<Symbol>) -> PyResult<Self> {
        EventuallyPeriodicPoint::new(preperiod, period).map(PyPoint).map_err(value_error)
    }

    #[getter]
    fn preperiod(&self) -> Vec<Symbol> {
        self.0.preperiod().to_vec()
    }

    #[getter]
    fn period(&self) -> Vec<Symbol> {
        self.0.period().to_vec()
    }

    fn prefix(&self, len: usize) -> Vec<Symbol> {
        self.0.prefix(len)
    }

    fn shift(&self, k: usize) -> PyPoint {
        PyPoint(self.0.shift_by(k))
    }

    fn __repr__(&self) -> String {
        format!("Point({:?}, {:?})", self.0.preperiod(), self.0.period())
    }

    fn __str__(&self) -> String {
        self.0.to_string()
    }
}

/// A verified right Markov code together with its coded shift.
#[pyclass(name = "MarkovCode", frozen)]
struct PyCode(CodedShift);

#[pymethods]
impl PyCode {
    /// Raises `ValueError((condition, message))` when a condition fails.
    #[new]
    #[pyo3(signature = (matrix, words, lmax = 8))]
    fn new(matrix: &PyMatrix, words: Vec<Vec<Symbol>>, lmax: usize) -> PyResult<Self> {
        let c = CodeCandidate::new(matrix.0.clone(), words.into_iter().map(Word).collect()).map_err(value_error)?;
        let m = mc::verify_markov_code(&c, lmax).map_err(|f| PyValueError::new_err((f.condition(), f.to_string())))?;
        CodedShift::new(m).map(PyCode).map_err(value_error)
    }

    #[staticmethod]
    fn enumerate(matrix: &PyMatrix, max_len: usize, lmax: usize) -> PyResult<Vec<PyCode>> {
        let codes = mc::enumerate_markov_codes(&matrix.0, max_len, lmax).map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
        codes.into_iter().map(|m| CodedShift::new(m).map(PyCode).map_err(value_error)).collect()
    }

    #[getter]
    fn words(&self) -> Vec<Vec<Symbol>> {
        self.0.code().words().iter().map(|w| w.0.clone()).collect()
    }

    #[getter]
    fn k0(&self) -> usize {
        self.0.code().k0()
    }

    /// Least `L` for which the shift condition holds.
    #[getter]
    fn min_l(&self) -> usize {
        self.0.code().min_l()
    }

    fn matrix(&self) -> PyMatrix {
        PyMatrix(self.0.base_matrix().clone())
    }

    fn coded_matrix(&self) -> PyMatrix {
        PyMatrix(self.0.coded_matrix().clone())
    }

    fn encode(&self, x: &PyPoint) -> PyResult<PyPoint> {
        self.0.encode(&x.0).map(PyPoint).map_err(value_error)
    }

    fn decode(&self, y: &PyPoint) -> PyResult<PyPoint> {
        self.0.decode(&y.0).map(PyPoint).map_err(value_error)
    }

    /// Parses a finite buffer; returns the emitted indices and the held-back tail.
    fn stream_step(&self, buffer: Vec<Symbol>) -> PyResult<(Vec<Symbol>, Vec<Symbol>)> {
        self.0.stream_step(&buffer).map(|(e, h)| (e, h.0)).map_err(value_error)
    }

    fn coe_witness(&self) -> PyResult<PyCoeWitness> {
        mc::build_coe_witness(self.0.base_matrix(), self.0.code()).map(PyCoeWitness).map_err(value_error)
    }

    fn __repr__(&self) -> String {
        format!("MarkovCode({})", self.0.code().candidate())
    }
}

#[pyclass(name = "CoeWitness", frozen)]
struct PyCoeWitness(mc::CoeWitness);

#[pymethods]
impl PyCoeWitness {
    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        mc::CoeWitness::from_json(text).map(PyCoeWitness).map_err(value_error)
    }

    fn to_json(&self) -> String {
        self.0.to_json()
    }

    #[getter]
    fn l(&self) -> usize {
        self.0.l
    }

    #[getter]
    fn k2(&self) -> usize {
        self.0.k2
    }

    /// One `(name, passed, reason, detail)` tuple per check.
    #[pyo3(signature = (points, budget = 256))]
    fn verify(&self, points: Vec<PyPoint>, budget: usize) -> PyResult<Vec<CheckTuple>> {
        let points: Vec<_> = points.into_iter().map(|p| p.0).collect();
        mc::verify_coe_witness(&self.0, &points, budget).map(|r| report_rows(&r)).map_err(value_error)
    }
}

/// Pair of mutually inverse sliding block codes.
#[pyclass(name = "Conjugacy", frozen)]
struct PyConjugacy(mc::ConjugacyWitness);

fn table(m: &mc::coded::BlockMap) -> Vec<(Vec<Symbol>, Symbol)> {
    m.table().iter().map(|(k, v)| (k.clone(), *v)).collect()
}

#[pymethods]
impl PyConjugacy {
    #[getter]
    fn window(&self) -> usize {
        self.0.verified_window()
    }

    fn forward_table(&self) -> Vec<(Vec<Symbol>, Symbol)> {
        table(self.0.forward())
    }

    fn backward_table(&self) -> Vec<(Vec<Symbol>, Symbol)> {
        table(self.0.backward())
    }

    fn forward(&self, x: &PyPoint) -> PyResult<PyPoint> {
        mc::apply_sliding_block(self.0.forward(), &x.0).map(PyPoint).map_err(value_error)
    }

    fn backward(&self, y: &PyPoint) -> PyResult<PyPoint> {
        mc::apply_sliding_block(self.0.backward(), &y.0).map(PyPoint).map_err(value_error)
    }
}

#[pyclass(name = "Certificate", frozen)]
struct PyCertificate(mc::EquivalenceCertificate);

#[pymethods]
impl PyCertificate {
    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        mc::EquivalenceCertificate::from_json(text).map(PyCertificate).map_err(value_error)
    }

    fn to_json(&self) -> String {
        self.0.to_json()
    }

    fn __len__(&self) -> usize {
        self.0.steps.len()
    }

    fn reversed(&self) -> PyCertificate {
        PyCertificate(self.0.reversed())
    }

    fn chain(&self, next: &PyCertificate) -> PyResult<PyCertificate> {
        self.0.chain(&next.0).map(PyCertificate).map_err(value_error)
    }

    #[pyo3(signature = (samples = 100, lmax = 8))]
    fn verify(&self, samples: usize, lmax: usize) -> Vec<CheckTuple> {
        let opts = VerifyOptions { sample_count: samples, l_max: lmax, ..VerifyOptions::default() };
        report_rows(&mc::verify_certificate(&self.0, &opts))
    }
}

/// `None` means nothing was found within the bound, which is not a disproof.
#[pyfunction]
#[pyo3(signature = (a, b, wmax = 4))]
fn conjugacy(a: &PyMatrix, b: &PyMatrix, wmax: usize) -> Option<PyConjugacy> {
    match mc::check_one_sided_conjugacy(&a.0, &b.0, wmax) {
        ConjugacyResult::Found(w) => Some(PyConjugacy(w)),
        ConjugacyResult::NotFoundWithin { .. } => None,
    }
}

#[pyfunction]
#[pyo3(signature = (a, b, max_len = 4, lmax = 8, wmax = 4))]
fn elementary_equivalence(
    py: Python<'_>,
    a: &PyMatrix,
    b: &PyMatrix,
    max_len: usize,
    lmax: usize,
    wmax: usize,
) -> PyResult<Option<PyCertificate>> {
    let (a, b) = (a.0.clone(), b.0.clone());
    let r = py
        .detach(|| mc::check_elementary_coded_equivalence(&a, &b, max_len, lmax, wmax))
        .map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
    Ok(match r {
        ElementaryResult::Found(c) => Some(PyCertificate(c)),
        ElementaryResult::NotFoundWithin { .. } => None,
    })
}

#[pymodule]
#[pyo3(name = "markov_codes")]
fn markov_codes_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyMatrix>()?;
    m.add_class::<PyPoint>()?;
    m.add_class::<PyCode>()?;
    m.add_class::<PyCoeWitness>()?;
    m.add_class::<PyConjugacy>()?;
    m.add_class::<PyCertificate>()?;
    m.add_function(wrap_pyfunction!(conjugacy, m)?)?;
    m.add_function(wrap_pyfunction!(elementary_equivalence, m)?)?;
    Ok(())
}
