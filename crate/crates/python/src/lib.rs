//! Python bindings: operators, fields and the classification and slicing
//! reports. Reports come back as plain dicts (the same shape as the CLI's
//! `result` object).

use nalgebra::DMatrix;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyAny;
use serde::Serialize;

use symlab::bv::{
    cantor_function as cantor, verify_hyperplane_slicing as hyperplane, verify_jump_density as jump,
    verify_line_slicing as lines, FieldSpec, SyntheticField,
};
use symlab::catalog::{catalog, CatalogParams};
use symlab::classify::{self as cls, best_witness, Budget, SpectralPair, Tolerances};
use symlab::linearize::{check_linearization_properties, linearize as lin};
use symlab::operator::OperatorSpec;
use symlab::slicing::{check_slice_properties, polarize as polar};
use symlab::tensor::multiindex_enumerate as enumerate;

fn err(e: symlab::Error) -> PyErr {
    match e {
        symlab::Error::NotFound(m) => PyRuntimeError::new_err(m),
        other => PyValueError::new_err(other.to_string()),
    }
}

fn to_py<'py, T: Serialize>(py: Python<'py>, v: &T) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(v).map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
    py.import("json")?.call_method1("loads", (text,))
}

fn rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

/// Search settings shared by the analysis functions.
#[pyclass(module = "symlab_py", skip_from_py_object)]
#[derive(Clone, Default)]
struct Settings {
    budget: Budget,
    tol: Tolerances,
}

#[pymethods]
impl Settings {
    #[new]
    #[pyo3(signature = (*, sphere_samples=None, random_directions=None, restarts=None, canceling_samples=None, tol_rank=None, tol_ellipticity=None, tol_pair=None))]
    #[allow(clippy::too_many_arguments)]
    fn new(
        sphere_samples: Option<usize>,
        random_directions: Option<usize>,
        restarts: Option<usize>,
        canceling_samples: Option<usize>,
        tol_rank: Option<f64>,
        tol_ellipticity: Option<f64>,
        tol_pair: Option<f64>,
    ) -> Self {
        let mut s = Settings::default();
        s.budget.sphere_samples = sphere_samples.or(s.budget.sphere_samples);
        s.budget.random_directions = random_directions.unwrap_or(s.budget.random_directions);
        s.budget.restarts = restarts.unwrap_or(s.budget.restarts);
        s.budget.canceling_samples = canceling_samples.unwrap_or(s.budget.canceling_samples);
        s.tol.rank = tol_rank.unwrap_or(s.tol.rank);
        s.tol.ellipticity = tol_ellipticity.unwrap_or(s.tol.ellipticity);
        s.tol.pair = tol_pair.unwrap_or(s.tol.pair);
        s
    }

    fn __repr__(&self) -> String {
        format!("Settings(budget={:?}, tolerances={:?})", self.budget, self.tol)
    }
}

fn settings(s: Option<&Settings>) -> Settings {
    s.cloned().unwrap_or_default()
}

/// A homogeneous constant-coefficient operator 𝔸^k(D).
#[pyclass(module = "symlab_py", frozen, skip_from_py_object)]
#[derive(Clone)]
struct Operator {
    inner: symlab::Operator,
}

#[pymethods]
impl Operator {
    /// Builds a catalog operator, e.g. `Operator.catalog("scrDk", n=3, k=2)`.
    #[staticmethod]
    #[pyo3(signature = (name, *, n=None, k=None, dim_v=None, r=None))]
    fn catalog(name: &str, n: Option<usize>, k: Option<usize>, dim_v: Option<usize>, r: Option<Vec<Vec<f64>>>) -> PyResult<Self> {
        let r = match r {
            Some(rows) => {
                let cols = rows.first().map_or(0, Vec::len);
                if rows.is_empty() || cols == 0 || rows.iter().any(|x| x.len() != cols) {
                    return Err(PyValueError::new_err("r must be a non-empty rectangular matrix"));
                }
                Some(DMatrix::from_row_iterator(rows.len(), cols, rows.into_iter().flatten()))
            }
            None => None,
        };
        let params = CatalogParams {
            n: n.or(r.as_ref().map(|m| m.ncols())),
            dim_v,
            k,
            r,
        };
        Ok(Operator {
            inner: catalog(name, &params).map_err(err)?,
        })
    }

    /// Parses the JSON operator format used by `symlab --operator FILE`.
    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        let spec: OperatorSpec = serde_json::from_str(text).map_err(|e| PyValueError::new_err(e.to_string()))?;
        Ok(Operator {
            inner: symlab::Operator::from_spec(&spec).map_err(err)?,
        })
    }

    fn to_json(&self) -> String {
        serde_json::to_string(&self.inner.to_spec()).expect("spec serializes")
    }

    #[getter]
    fn n(&self) -> usize {
        self.inner.n()
    }

    #[getter]
    fn dim_v(&self) -> usize {
        self.inner.dim_v()
    }

    #[getter]
    fn dim_w(&self) -> usize {
        self.inner.dim_w()
    }

    #[getter]
    fn order(&self) -> usize {
        self.inner.order()
    }

    #[getter]
    fn name(&self) -> Option<String> {
        self.inner.name().map(str::to_string)
    }

    /// 𝔸^k(ξ) as a dimW × dimV list of rows.
    fn symbol(&self, xi: Vec<f64>) -> PyResult<Vec<Vec<f64>>> {
        Ok(rows(&self.inner.symbol(&xi).map_err(err)?))
    }

    fn linearized_symbol(&self) -> Vec<Vec<f64>> {
        rows(&self.inner.linearized_symbol())
    }

    fn scaled(&self, t: f64) -> PyResult<Self> {
        Ok(Operator {
            inner: self.inner.scaled(t).map_err(err)?,
        })
    }

    /// The first-order operator d𝔸 (k = 1 returns a copy).
    fn linearize(&self) -> PyResult<Self> {
        Ok(Operator {
            inner: lin(&self.inner).map_err(err)?.d_op,
        })
    }

    fn __repr__(&self) -> String {
        format!(
            "Operator(name={:?}, n={}, dimV={}, dimW={}, order={})",
            self.inner.name().unwrap_or(""),
            self.inner.n(),
            self.inner.dim_v(),
            self.inner.dim_w(),
            self.inner.order()
        )
    }
}

/// A synthetic BV field Σ_p b_p g_p(x·ν_p) on a box.
#[pyclass(module = "symlab_py", frozen, skip_from_py_object)]
#[derive(Clone)]
struct Field {
    inner: SyntheticField,
}

#[pymethods]
impl Field {
    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        let spec: FieldSpec = serde_json::from_str(text).map_err(|e| PyValueError::new_err(e.to_string()))?;
        Ok(Field {
            inner: SyntheticField::from_spec(&spec).map_err(err)?,
        })
    }

    fn to_json(&self) -> String {
        serde_json::to_string(&self.inner.to_spec()).expect("spec serializes")
    }

    #[getter]
    fn n(&self) -> usize {
        self.inner.n
    }

    #[getter]
    fn dim_v(&self) -> usize {
        self.inner.dim_v
    }

    /// ∇^{k−1}u at x (k = 1 gives u).
    #[pyo3(signature = (x, k=1))]
    fn eval(&self, x: Vec<f64>, k: usize) -> PyResult<Vec<f64>> {
        if x.len() != self.inner.n || k == 0 {
            return Err(PyValueError::new_err("need x of length n and k ≥ 1"));
        }
        Ok(self.inner.eval(k, &x).iter().copied().collect())
    }
}

fn pair(op: &symlab::Operator, xi: &[f64], e: &[f64], tol: f64) -> PyResult<SpectralPair> {
    let (w, residual) = best_witness(op, xi, e).map_err(err)?;
    if !(residual <= tol) {
        return Err(PyValueError::new_err(format!(
            "({xi:?}, {e:?}) is not a spectral pair: residual {residual:e}"
        )));
    }
    Ok(SpectralPair {
        xi: xi.to_vec(),
        coordinate: e.to_vec(),
        witness: w.iter().copied().collect(),
        residual,
    })
}

#[pyfunction]
#[pyo3(signature = (op, *, seed=0, settings=None))]
fn classify<'py>(py: Python<'py>, op: &Operator, seed: u64, settings: Option<&Settings>) -> PyResult<Bound<'py, PyAny>> {
    let s = self::settings(settings);
    to_py(py, &cls::classify(&op.inner, &s.budget, &s.tol, seed).map_err(err)?)
}

#[pyfunction]
#[pyo3(signature = (op, *, seed=0, settings=None))]
fn mixing_check<'py>(py: Python<'py>, op: &Operator, seed: u64, settings: Option<&Settings>) -> PyResult<Bound<'py, PyAny>> {
    let s = self::settings(settings);
    to_py(py, &cls::mixing_check(&op.inner, &s.budget, &s.tol, seed).map_err(err)?)
}

/// Residual of the best witness for (ξ, e); zero on the rank-one spectrum.
#[pyfunction]
fn pair_residual(op: &Operator, xi: Vec<f64>, e: Vec<f64>) -> PyResult<f64> {
    cls::pair_residual(&op.inner, &xi, &e).map_err(err)
}

#[pyfunction]
#[pyo3(signature = (op, xi, e, *, seed=0, settings=None))]
fn slice_report<'py>(
    py: Python<'py>,
    op: &Operator,
    xi: Vec<f64>,
    e: Vec<f64>,
    seed: u64,
    settings: Option<&Settings>,
) -> PyResult<Bound<'py, PyAny>> {
    let s = self::settings(settings);
    let p = pair(&op.inner, &xi, &e, s.tol.pair)?;
    to_py(py, &check_slice_properties(&op.inner, &p, &s.budget, &s.tol, seed).map_err(err)?)
}

#[pyfunction]
#[pyo3(signature = (op, xi, e, eta, f, *, settings=None))]
fn polarize<'py>(
    py: Python<'py>,
    op: &Operator,
    xi: Vec<f64>,
    e: Vec<f64>,
    eta: Vec<f64>,
    f: Vec<f64>,
    settings: Option<&Settings>,
) -> PyResult<Bound<'py, PyAny>> {
    let s = self::settings(settings);
    let p1 = pair(&op.inner, &xi, &e, s.tol.pair)?;
    let p2 = pair(&op.inner, &eta, &f, s.tol.pair)?;
    to_py(py, &polar(&op.inner, &p1, &p2, &s.tol).map_err(err)?)
}

#[pyfunction]
#[pyo3(signature = (op, *, seed=0, settings=None))]
fn linearization_report<'py>(py: Python<'py>, op: &Operator, seed: u64, settings: Option<&Settings>) -> PyResult<Bound<'py, PyAny>> {
    let s = self::settings(settings);
    to_py(py, &check_linearization_properties(&op.inner, &s.budget, &s.tol, seed).map_err(err)?)
}

#[pyfunction]
#[pyo3(signature = (op, field, xi, e, *, lines=256, tol_pair=1e-8))]
fn verify_line_slicing<'py>(
    py: Python<'py>,
    op: &Operator,
    field: &Field,
    xi: Vec<f64>,
    e: Vec<f64>,
    lines: usize,
    tol_pair: f64,
) -> PyResult<Bound<'py, PyAny>> {
    let p = pair(&op.inner, &xi, &e, tol_pair)?;
    let b = field.inner.domain.clone();
    to_py(py, &self::lines(&op.inner, &field.inner, &p, &b, lines).map_err(err)?)
}

#[pyfunction]
fn verify_jump_density<'py>(py: Python<'py>, op: &Operator, field: &Field) -> PyResult<Bound<'py, PyAny>> {
    to_py(py, &jump(&op.inner, &field.inner, &field.inner.domain).map_err(err)?)
}

#[pyfunction]
#[pyo3(signature = (op, field, xi, e, *, stations=256, tol_pair=1e-8))]
fn verify_hyperplane_slicing<'py>(
    py: Python<'py>,
    op: &Operator,
    field: &Field,
    xi: Vec<f64>,
    e: Vec<f64>,
    stations: usize,
    tol_pair: f64,
) -> PyResult<Bound<'py, PyAny>> {
    let p = pair(&op.inner, &xi, &e, tol_pair)?;
    to_py(py, &hyperplane(&op.inner, &field.inner, &p, &field.inner.domain, stations).map_err(err)?)
}

/// Multi-indices of order k in n variables, in reverse lexicographic order.
#[pyfunction]
fn multiindex_enumerate(n: usize, k: usize) -> PyResult<Vec<Vec<usize>>> {
    Ok(enumerate(n, k).map_err(err)?.into_iter().map(|a| a.0).collect())
}

#[pyfunction]
fn cantor_function(x: f64) -> f64 {
    cantor(x)
}

#[pymodule]
fn symlab_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Settings>()?;
    m.add_class::<Operator>()?;
    m.add_class::<Field>()?;
    m.add_function(wrap_pyfunction!(classify, m)?)?;
    m.add_function(wrap_pyfunction!(mixing_check, m)?)?;
    m.add_function(wrap_pyfunction!(pair_residual, m)?)?;
    m.add_function(wrap_pyfunction!(slice_report, m)?)?;
    m.add_function(wrap_pyfunction!(polarize, m)?)?;
    m.add_function(wrap_pyfunction!(linearization_report, m)?)?;
    m.add_function(wrap_pyfunction!(verify_line_slicing, m)?)?;
    m.add_function(wrap_pyfunction!(verify_jump_density, m)?)?;
    m.add_function(wrap_pyfunction!(verify_hyperplane_slicing, m)?)?;
    m.add_function(wrap_pyfunction!(multiindex_enumerate, m)?)?;
    m.add_function(wrap_pyfunction!(cantor_function, m)?)?;
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    Ok(())
}
