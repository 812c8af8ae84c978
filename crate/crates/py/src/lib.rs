//! Python bindings. Reports with nested structure are returned as plain
//! dicts decoded from the same JSON the command-line tool emits.

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyModule;
use serde::Serialize;

use qubit_corr_core as core;
use qubit_corr_core::criteria::{GridConfig, PmRow};
use qubit_corr_core::entanglement::EntanglementConfig;
use qubit_corr_core::scenarios::{bell_to_conditional, Party, QPM_LABELS};

pyo3::create_exception!(qubit_corr, QubitCorrError, PyValueError);

fn err(e: core::Error) -> PyErr {
    QubitCorrError::new_err(e.to_string())
}

fn to_dict<'py, T: Serialize>(py: Python<'py>, value: &T) -> PyResult<Bound<'py, PyAny>> {
    let text = core::io::to_json(value).map_err(err)?;
    PyModule::import(py, "json")?.call_method1("loads", (text,))
}

fn party(name: &str) -> PyResult<Party> {
    match name {
        "A" | "a" => Ok(Party::A),
        "B" | "b" => Ok(Party::B),
        other => Err(PyValueError::new_err(format!("party must be 'A' or 'B', got {other:?}"))),
    }
}

/// Expectation values of a set of prepared states.
#[pyclass(name = "RecordSet", module = "qubit_corr", frozen)]
struct PyRecordSet {
    inner: core::PmRecordSet,
}

#[pymethods]
impl PyRecordSet {
    #[new]
    #[pyo3(signature = (values, labels=None, measurements=None, weights=None))]
    fn new(
        values: Vec<Vec<f64>>,
        labels: Option<Vec<String>>,
        measurements: Option<Vec<String>>,
        weights: Option<Vec<f64>>,
    ) -> PyResult<Self> {
        let m = values.first().map_or(0, Vec::len);
        let measurements = measurements.unwrap_or_else(|| (0..m).map(|i| format!("A{i}")).collect());
        let labels = labels.unwrap_or_else(|| (0..values.len()).map(|k| format!("rho{k}")).collect());
        if labels.len() != values.len() || weights.as_ref().is_some_and(|w| w.len() != values.len()) {
            return Err(PyValueError::new_err("labels and weights must have one entry per row"));
        }
        let rows = values
            .into_iter()
            .zip(labels)
            .enumerate()
            .map(|(k, (expectations, label))| PmRow { label, weight: weights.as_ref().map(|w| w[k]), expectations })
            .collect();
        Ok(Self { inner: core::PmRecordSet::new(measurements, rows).map_err(err)? })
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        Ok(Self { inner: core::io::read_pm(text).map_err(err)? })
    }

    fn to_json(&self) -> PyResult<String> {
        core::io::write_pm(&self.inner).map_err(err)
    }

    #[getter]
    fn n_states(&self) -> usize {
        self.inner.n_states()
    }

    #[getter]
    fn n_measurements(&self) -> usize {
        self.inner.n_measurements()
    }

    #[getter]
    fn labels(&self) -> Vec<String> {
        self.inner.rows().iter().map(|r| r.label.clone()).collect()
    }

    fn values(&self) -> Vec<Vec<f64>> {
        self.inner.rows().iter().map(|r| r.expectations.clone()).collect()
    }

    /// Same records as outcome-0 probabilities `(1 + A) / 2`.
    fn probabilities(&self) -> Self {
        Self { inner: self.inner.to_outcome0_probabilities() }
    }

    fn __len__(&self) -> usize {
        self.inner.n_states()
    }

    fn __repr__(&self) -> String {
        format!("RecordSet(n_states={}, n_measurements={})", self.inner.n_states(), self.inner.n_measurements())
    }
}

/// Two-party table `p[alpha][beta][a][b]`.
#[pyclass(name = "BellCorrelation", module = "qubit_corr", frozen)]
struct PyBellCorrelation {
    inner: core::BellCorrelation,
}

#[pymethods]
impl PyBellCorrelation {
    #[new]
    fn new(p: [[[[f64; 2]; 2]; 2]; 2]) -> PyResult<Self> {
        Ok(Self { inner: core::BellCorrelation::new(p).map_err(err)? })
    }

    #[staticmethod]
    fn from_correlators(a: [f64; 2], b: [f64; 2], ab: [[f64; 2]; 2]) -> PyResult<Self> {
        Ok(Self { inner: core::BellCorrelation::from_correlators(a, b, ab).map_err(err)? })
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        Ok(Self { inner: core::io::read_bell(text).map_err(err)? })
    }

    fn to_json(&self) -> PyResult<String> {
        core::io::write_bell(&self.inner).map_err(err)
    }

    #[getter]
    fn p(&self) -> [[[[f64; 2]; 2]; 2]; 2] {
        *self.inner.table()
    }

    fn correlators(&self) -> [[f64; 2]; 2] {
        self.inner.correlators()
    }

    fn marginals(&self) -> ([f64; 2], [f64; 2]) {
        self.inner.marginals()
    }

    fn signaling(&self) -> f64 {
        core::scenarios::nonsignaling_check(&self.inner)
    }

    /// States prepared for `party` by the other party's outcomes.
    #[pyo3(signature = (party="A"))]
    fn conditional(&self, party: &str) -> PyResult<PyRecordSet> {
        let c = bell_to_conditional(&self.inner, self::party(party)?).map_err(err)?;
        Ok(PyRecordSet { inner: c.records })
    }

    fn __repr__(&self) -> String {
        format!("BellCorrelation(correlators={:?})", self.inner.correlators())
    }
}

#[pyfunction]
fn qbell(x: f64, y: f64) -> PyResult<PyBellCorrelation> {
    Ok(PyBellCorrelation { inner: core::qbell(x, y).map_err(err)? })
}

#[pyfunction]
fn qpm(x: f64, y: f64) -> PyResult<PyRecordSet> {
    Ok(PyRecordSet { inner: core::qpm(x, y).map_err(err)? })
}

fn grid(points: usize, tol: f64) -> PyResult<GridConfig> {
    if points < 11 || !(tol > 0.0) {
        return Err(PyValueError::new_err("grid needs at least 11 points and a positive tolerance"));
    }
    Ok(GridConfig::default().with_coarse(points).with_tol(tol))
}

#[pyfunction]
#[pyo3(signature = (records, i=0, j=1, tol=core::EPS))]
fn pvm_feasible<'py>(py: Python<'py>, records: &PyRecordSet, i: usize, j: usize, tol: f64) -> PyResult<Bound<'py, PyAny>> {
    let rep = py.detach(|| core::pvm_feasible(&records.inner, i, j, tol)).map_err(err)?;
    to_dict(py, &rep)
}

#[pyfunction]
#[pyo3(signature = (records, i=0, j=1, grid_points=101, tol=core::EPS))]
fn povm_feasible<'py>(
    py: Python<'py>,
    records: &PyRecordSet,
    i: usize,
    j: usize,
    grid_points: usize,
    tol: f64,
) -> PyResult<Bound<'py, PyAny>> {
    let g = grid(grid_points, tol)?;
    let rep = py.detach(|| core::povm_feasible(&records.inner, i, j, &g)).map_err(err)?;
    to_dict(py, &rep)
}

#[pyfunction]
#[pyo3(signature = (records, i=0, j=1, grid_points=101, cells=false))]
fn infer<'py>(py: Python<'py>, records: &PyRecordSet, i: usize, j: usize, grid_points: usize, cells: bool) -> PyResult<Bound<'py, PyAny>> {
    let g = grid(grid_points, core::EPS)?;
    let rep = py.detach(|| core::infer_report(&records.inner, i, j, &g, cells)).map_err(err)?;
    to_dict(py, &rep)
}

#[pyfunction]
#[pyo3(signature = (corr, seed=None, grid_points=101))]
fn entangle<'py>(py: Python<'py>, corr: &PyBellCorrelation, seed: Option<u64>, grid_points: usize) -> PyResult<Bound<'py, PyAny>> {
    let mut cfg = EntanglementConfig { grid: grid(grid_points, core::EPS)?, ..Default::default() };
    if let Some(s) = seed {
        cfg = cfg.with_seed(s);
    }
    let rep = py.detach(|| core::entanglement_verdict(&corr.inner, &cfg)).map_err(err)?;
    to_dict(py, &rep)
}

#[pyfunction]
fn svw_witness(corr: &PyBellCorrelation) -> f64 {
    core::witnesses::svw_witness(&corr.inner).value
}

#[pyfunction]
fn npa_arcsin(corr: &PyBellCorrelation) -> PyResult<f64> {
    Ok(core::witnesses::npa_arcsin(&corr.inner).map_err(err)?.value)
}

#[pyfunction]
#[pyo3(signature = (records, states=None))]
fn bqb_det(records: &PyRecordSet, states: Option<[String; 4]>) -> PyResult<f64> {
    let labels = states.unwrap_or_else(|| QPM_LABELS.map(String::from));
    let arr = [0, 1, 2, 3].map(|k| labels[k].as_str());
    Ok(core::witnesses::bqb_det(&records.inner, arr).map_err(err)?.value)
}

/// `(x, y, u, r)` of the closed-form boundary at angle `theta`.
#[pyfunction]
fn sm_boundary(theta: f64) -> PyResult<(f64, f64, f64, f64)> {
    let p = core::inference::sm_boundary(theta).map_err(err)?;
    Ok((p.x, p.y, p.u, p.r))
}

#[pymodule]
fn qubit_corr(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("QubitCorrError", m.py().get_type::<QubitCorrError>())?;
    m.add("EPS", core::EPS)?;
    m.add_class::<PyRecordSet>()?;
    m.add_class::<PyBellCorrelation>()?;
    m.add_function(wrap_pyfunction!(qbell, m)?)?;
    m.add_function(wrap_pyfunction!(qpm, m)?)?;
    m.add_function(wrap_pyfunction!(pvm_feasible, m)?)?;
    m.add_function(wrap_pyfunction!(povm_feasible, m)?)?;
    m.add_function(wrap_pyfunction!(infer, m)?)?;
    m.add_function(wrap_pyfunction!(entangle, m)?)?;
    m.add_function(wrap_pyfunction!(svw_witness, m)?)?;
    m.add_function(wrap_pyfunction!(npa_arcsin, m)?)?;
    m.add_function(wrap_pyfunction!(bqb_det, m)?)?;
    m.add_function(wrap_pyfunction!(sm_boundary, m)?)?;
    Ok(())
}
