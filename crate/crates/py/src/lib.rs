use lethargy_core as core;
use lethargy_core::scenario::{load_scenario, parse_scenario, run, RunOptions};
use lethargy_core::{ConstructOptions, Tail};
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

fn err(e: core::Error) -> PyErr {
    if e.is_input_error() {
        PyValueError::new_err(e.to_string())
    } else {
        PyRuntimeError::new_err(e.to_string())
    }
}

fn norm_of(p: f64) -> PyResult<core::NormSpec> {
    core::NormSpec::new(p).map_err(err)
}

fn vector(x: Vec<f64>) -> PyResult<core::Vector> {
    core::Vector::new(x).map_err(err)
}

fn opts(tol: Option<f64>) -> ConstructOptions {
    tol.map(ConstructOptions::with_tol).unwrap_or_default()
}

/// A linear subspace of R^m, stored with an orthonormal basis.
#[pyclass(name = "Subspace", module = "lethargy", skip_from_py_object)]
#[derive(Clone)]
struct PySubspace(core::Subspace);

#[pymethods]
impl PySubspace {
    #[new]
    fn new(ambient_dim: usize, columns: Vec<Vec<f64>>) -> PyResult<Self> {
        let cols = columns.into_iter().map(vector).collect::<PyResult<Vec<_>>>()?;
        core::Subspace::span(ambient_dim, &cols).map(PySubspace).map_err(err)
    }

    #[staticmethod]
    fn zero(ambient_dim: usize) -> Self {
        PySubspace(core::Subspace::zero(ambient_dim))
    }

    /// span{e_1, ..., e_k}
    #[staticmethod]
    fn coordinate(ambient_dim: usize, k: usize) -> PyResult<Self> {
        core::Subspace::coordinate(ambient_dim, k).map(PySubspace).map_err(err)
    }

    #[getter]
    fn rank(&self) -> usize {
        self.0.rank()
    }

    #[getter]
    fn ambient_dim(&self) -> usize {
        self.0.ambient_dim()
    }

    #[pyo3(signature = (x, tol=None))]
    fn contains(&self, x: Vec<f64>, tol: Option<f64>) -> PyResult<bool> {
        core::contains(&self.0, &vector(x)?, tol.unwrap_or(core::space::NEST_TOL)).map_err(err)
    }

    fn __repr__(&self) -> String {
        format!("Subspace(ambient_dim={}, rank={})", self.0.ambient_dim(), self.0.rank())
    }
}

/// Nested subspaces Y_1 ⊂ Y_2 ⊂ ... with a norm on the ambient space.
#[pyclass(name = "Chain", module = "lethargy")]
struct PyChain(core::Chain);

#[pymethods]
impl PyChain {
    #[new]
    fn new(p: f64, levels: Vec<PyRef<'_, PySubspace>>) -> PyResult<Self> {
        let levels = levels.iter().map(|s| s.0.clone()).collect();
        core::Chain::new(norm_of(p)?, levels).map(PyChain).map_err(err)
    }

    /// Y_k = span{e_1, ..., e_k} for k = 1..depth.
    #[staticmethod]
    fn coordinate(ambient_dim: usize, depth: usize, p: f64) -> PyResult<Self> {
        core::Chain::coordinate(ambient_dim, depth, norm_of(p)?).map(PyChain).map_err(err)
    }

    #[getter]
    fn p(&self) -> f64 {
        self.0.norm().p()
    }

    #[getter]
    fn depth(&self) -> usize {
        self.0.depth()
    }

    #[getter]
    fn ambient_dim(&self) -> usize {
        self.0.ambient_dim()
    }

    fn level(&self, k: usize) -> PyResult<PySubspace> {
        self.0
            .level(k)
            .cloned()
            .map(PySubspace)
            .ok_or_else(|| PyValueError::new_err(format!("no level {k}")))
    }

    fn __repr__(&self) -> String {
        format!("Chain(p={}, depth={}, ambient_dim={})", self.0.norm().p(), self.0.depth(), self.0.ambient_dim())
    }
}

/// Non-increasing targets d_1 >= d_2 >= ..., continued by zeros or geometrically.
#[pyclass(name = "Targets", module = "lethargy")]
struct PyTargets(core::TargetSequence);

#[pymethods]
impl PyTargets {
    #[new]
    #[pyo3(signature = (values, ratio=None))]
    fn new(values: Vec<f64>, ratio: Option<f64>) -> PyResult<Self> {
        let tail = ratio.map(Tail::Geometric).unwrap_or(Tail::Zero);
        core::TargetSequence::new(values, tail).map(PyTargets).map_err(err)
    }

    fn get(&self, n: usize) -> f64 {
        self.0.get(n)
    }

    #[getter]
    fn values(&self) -> Vec<f64> {
        self.0.values().to_vec()
    }

    #[getter]
    fn ratio(&self) -> Option<f64> {
        match self.0.tail() {
            Tail::Zero => None,
            Tail::Geometric(r) => Some(r),
        }
    }

    fn __repr__(&self) -> String {
        format!("Targets({:?}, ratio={:?})", self.0.values(), self.ratio())
    }
}

/// Result of a finite or prefix construction.
#[pyclass(name = "Construction", module = "lethargy")]
struct PyConstruction(core::ConstructionTrace);

#[pymethods]
impl PyConstruction {
    #[getter]
    fn x(&self) -> Vec<f64> {
        self.0.x.to_vec()
    }

    #[getter]
    fn coefficients(&self) -> Vec<f64> {
        self.0.coefficients.clone()
    }

    #[getter]
    fn achieved(&self) -> Vec<f64> {
        self.0.achieved.iter().map(|a| a.value).collect()
    }

    #[getter]
    fn residuals(&self) -> Vec<f64> {
        self.0.residuals.clone()
    }

    #[getter]
    fn step_vectors(&self) -> Vec<Vec<f64>> {
        self.0.step_vectors.iter().map(|v| v.to_vec()).collect()
    }

    /// (k, lambda, loose bound, loose ok) per constrained coefficient.
    #[getter]
    fn bounds(&self) -> Vec<(usize, f64, f64, bool)> {
        self.0.bounds.iter().map(|b| (b.k, b.lambda, b.loose, b.loose_ok)).collect()
    }

    fn max_residual(&self) -> f64 {
        self.0.max_residual()
    }
}

/// Distance from x to y; returns (value, certified gap).
#[pyfunction]
#[pyo3(signature = (x, y, p, tol=None))]
fn rho(x: Vec<f64>, y: PyRef<'_, PySubspace>, p: f64, tol: Option<f64>) -> PyResult<(f64, f64)> {
    let norm = norm_of(p)?;
    let r = core::rho(&vector(x)?, &y.0, norm, tol.unwrap_or(core::distance::default_tol(norm))).map_err(err)?;
    Ok((r.value, r.achieved_tol))
}

#[pyfunction]
#[pyo3(signature = (x, y, p, tol=None))]
fn best_approximant(x: Vec<f64>, y: PyRef<'_, PySubspace>, p: f64, tol: Option<f64>) -> PyResult<Vec<f64>> {
    let norm = norm_of(p)?;
    core::best_approximant(&vector(x)?, &y.0, norm, tol.unwrap_or(core::distance::default_tol(norm)))
        .map(|v| v.to_vec())
        .map_err(err)
}

#[pyfunction]
#[pyo3(signature = (chain, targets, tol=None))]
fn finite_construct(chain: PyRef<'_, PyChain>, targets: PyRef<'_, PyTargets>, tol: Option<f64>) -> PyResult<PyConstruction> {
    core::finite_construct(&chain.0, &targets.0, &opts(tol)).map(PyConstruction).map_err(err)
}

#[pyfunction]
#[pyo3(signature = (chain, targets, n, tol=None))]
fn construct_prefix(
    chain: PyRef<'_, PyChain>,
    targets: PyRef<'_, PyTargets>,
    n: usize,
    tol: Option<f64>,
) -> PyResult<PyConstruction> {
    core::construct_prefix(&chain.0, &targets.0, n, &opts(tol)).map(PyConstruction).map_err(err)
}

/// Returns a dict with `x` (one entry per prefix, None on failure),
/// `differences`, `sup_tail` and `non_increasing`.
#[pyfunction]
#[pyo3(signature = (chain, targets, n_max, tol=None))]
fn construct_sequence<'py>(
    py: Python<'py>,
    chain: PyRef<'_, PyChain>,
    targets: PyRef<'_, PyTargets>,
    n_max: usize,
    tol: Option<f64>,
) -> PyResult<Bound<'py, PyDict>> {
    let s = core::construct_sequence(&chain.0, &targets.0, n_max, &opts(tol)).map_err(err)?;
    let xs: Vec<Option<Vec<f64>>> = s.prefixes.iter().map(|p| p.result.as_ref().ok().map(|t| t.x.to_vec())).collect();
    let out = PyDict::new(py);
    out.set_item("x", xs)?;
    out.set_item("differences", s.differences)?;
    out.set_item("sup_tail", s.sup_tail)?;
    out.set_item("non_increasing", s.non_increasing)?;
    Ok(out)
}

/// Returns (passes, n0, margins).
#[pyfunction]
fn check_borodin_condition(targets: PyRef<'_, PyTargets>) -> (bool, Option<usize>, Vec<f64>) {
    let r = core::check_borodin_condition(&targets.0);
    (r.passes, r.n0, r.margins)
}

/// Runs a scenario file (or TOML text with `text=True`); returns (exit code, JSON report).
#[pyfunction]
#[pyo3(signature = (source, text=false, tol=None))]
fn run_scenario(source: &str, text: bool, tol: Option<f64>) -> PyResult<(i32, String)> {
    let mut s = if text { parse_scenario(source) } else { load_scenario(source) }.map_err(err)?;
    if let Some(t) = tol {
        s.set_tolerance(t).map_err(err)?;
    }
    let report = run(&s, &RunOptions::default());
    Ok((report.exit_code, report.to_json()))
}

#[pymodule]
fn lethargy(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PySubspace>()?;
    m.add_class::<PyChain>()?;
    m.add_class::<PyTargets>()?;
    m.add_class::<PyConstruction>()?;
    m.add_function(wrap_pyfunction!(rho, m)?)?;
    m.add_function(wrap_pyfunction!(best_approximant, m)?)?;
    m.add_function(wrap_pyfunction!(finite_construct, m)?)?;
    m.add_function(wrap_pyfunction!(construct_prefix, m)?)?;
    m.add_function(wrap_pyfunction!(construct_sequence, m)?)?;
    m.add_function(wrap_pyfunction!(check_borodin_condition, m)?)?;
    m.add_function(wrap_pyfunction!(run_scenario, m)?)?;
    Ok(())
}
