//! Python bindings for the lattice solver, verifiers and continuum checks.

use std::path::PathBuf;

use num_complex::Complex64;
use pyo3::exceptions::{PyIOError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use hitchin_lattice::adhm;
use hitchin_lattice::continuum::{
    lattice_to_continuum_rate, nahm_limit_sweep, HolomorphicFamily, Sampling,
};
use hitchin_lattice::io::{DataFile, Metadata};
use hitchin_lattice::lattice::{residual_report, LatticeShape, MatrixLatticeField};
use hitchin_lattice::lax::{commutator_coefficients, integrability_certificate};
use hitchin_lattice::linalg::CMat;
use hitchin_lattice::solver::{self, InitialGuess, Normalization, SolverConfig};
use hitchin_lattice::{Error, Grid, InstantonData};

fn to_py(e: Error) -> PyErr {
    match e {
        Error::NonConvergence { .. } => PyRuntimeError::new_err(e.to_string()),
        Error::Io(_) => PyIOError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn grid(rows: Vec<Vec<f64>>, name: &str) -> PyResult<Grid<f64>> {
    Grid::from_rows(rows).ok_or_else(|| PyValueError::new_err(format!("{name}: ragged rows")))
}

fn cmat_rows(m: &CMat) -> Vec<Vec<Complex64>> {
    (0..m.nrows())
        .map(|r| (0..m.ncols()).map(|c| m[(r, c)]).collect())
        .collect()
}

fn max_entry(m: &CMat) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Rows of a convergence table and the fitted order.
type Table = (Vec<(usize, f64, f64)>, f64);

#[pyclass(name = "InstantonData", module = "pyhitchin", from_py_object)]
#[derive(Clone)]
struct PyInstanton {
    inner: InstantonData,
}

#[pymethods]
impl PyInstanton {
    #[new]
    #[pyo3(signature = (n1, n2, f, g, a0, b0))]
    fn new(
        n1: usize,
        n2: usize,
        f: Vec<Vec<f64>>,
        g: Vec<Vec<f64>>,
        a0: f64,
        b0: f64,
    ) -> PyResult<Self> {
        let inner =
            InstantonData::new(n1, n2, grid(f, "F")?, grid(g, "G")?, a0, b0).map_err(to_py)?;
        Ok(Self { inner })
    }

    #[staticmethod]
    fn constant(n1: usize, n2: usize, value: f64) -> PyResult<Self> {
        Ok(Self {
            inner: InstantonData::constant(n1, n2, value).map_err(to_py)?,
        })
    }

    /// Closed-form solution for `(2,2)`, `(2,4)`, `(4,2)` or a single row or column.
    #[staticmethod]
    #[pyo3(signature = (n1, n2, scale = 1.0))]
    fn closed_form(n1: usize, n2: usize, scale: f64) -> Option<Self> {
        solver::closed_form(n1, n2, scale).map(|inner| Self { inner })
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        let file = DataFile::from_json_str(text).map_err(to_py)?;
        Ok(Self {
            inner: file.to_instanton().map_err(to_py)?,
        })
    }

    #[staticmethod]
    fn read(path: PathBuf) -> PyResult<Self> {
        let file = DataFile::read(&path).map_err(to_py)?;
        Ok(Self {
            inner: file.to_instanton().map_err(to_py)?,
        })
    }

    fn to_json(&self) -> String {
        DataFile::from_data(&self.inner, Metadata::default()).to_json_string()
    }

    fn write(&self, path: PathBuf) -> PyResult<()> {
        DataFile::from_data(&self.inner, Metadata::default())
            .write(&path)
            .map_err(to_py)
    }

    #[getter]
    fn n1(&self) -> usize {
        self.inner.n1()
    }

    #[getter]
    fn n2(&self) -> usize {
        self.inner.n2()
    }

    #[getter(F)]
    fn f(&self) -> Vec<Vec<f64>> {
        self.inner.f().to_rows()
    }

    #[getter(G)]
    fn g(&self) -> Vec<Vec<f64>> {
        self.inner.g().to_rows()
    }

    #[getter]
    fn a0(&self) -> f64 {
        self.inner.a0()
    }

    #[getter]
    fn b0(&self) -> f64 {
        self.inner.b0()
    }

    fn unknown_count(&self) -> usize {
        self.inner.unknown_count()
    }

    fn equation_count(&self) -> usize {
        self.inner.equation_count()
    }

    fn scaled(&self, factor: f64) -> PyResult<Self> {
        Ok(Self {
            inner: self.inner.scaled(factor).map_err(to_py)?,
        })
    }

    fn sum_of_squares(&self) -> f64 {
        self.inner.sum_of_squares()
    }

    fn residual_report(&self) -> PyResidualReport {
        PyResidualReport {
            inner: self.inner.residual_report(),
        }
    }

    fn to_field(&self) -> PyField {
        PyField {
            inner: self.inner.to_field(),
        }
    }

    fn adhm(&self) -> PyADHM {
        PyADHM {
            inner: adhm::assemble(&self.inner),
        }
    }

    /// Largest mismatch between ADHM residuals and lattice residuals.
    fn correspondence_error(&self) -> PyResult<f64> {
        Ok(adhm::verify_correspondence(&self.inner)
            .map_err(to_py)?
            .max())
    }

    fn __repr__(&self) -> String {
        format!(
            "InstantonData(n1={}, n2={}, a0={}, b0={})",
            self.inner.n1(),
            self.inner.n2(),
            self.inner.a0(),
            self.inner.b0()
        )
    }
}

#[pyclass(name = "ResidualReport", module = "pyhitchin", frozen)]
struct PyResidualReport {
    inner: hitchin_lattice::ResidualReport,
}

#[pymethods]
impl PyResidualReport {
    #[getter]
    fn max_abs(&self) -> f64 {
        self.inner.max_abs
    }

    #[getter]
    fn scaled_max(&self) -> f64 {
        self.inner.scaled_max
    }

    #[getter]
    fn field_scale(&self) -> f64 {
        self.inner.field_scale
    }

    /// Per-site norms of the holomorphic equation.
    #[getter]
    fn r1(&self) -> Vec<Vec<f64>> {
        self.inner.r1.to_rows()
    }

    /// Per-site norms of the moment equation.
    #[getter]
    fn r2(&self) -> Vec<Vec<f64>> {
        self.inner.r2.to_rows()
    }

    fn offending_sites(&self, threshold: f64) -> Vec<(&'static str, usize, usize, f64)> {
        self.inner.offending_sites(threshold)
    }
}

#[pyclass(name = "LatticeField", module = "pyhitchin", frozen)]
struct PyField {
    inner: MatrixLatticeField,
}

fn shape(n1: usize, n2: usize, p: usize, periodic: bool) -> PyResult<LatticeShape> {
    if periodic {
        LatticeShape::periodic(n1, n2, p)
    } else {
        LatticeShape::zero_padded(n1, n2, p)
    }
    .map_err(to_py)
}

#[pymethods]
impl PyField {
    #[staticmethod]
    #[pyo3(signature = (n1, n2, p, seed, periodic = true))]
    fn random(n1: usize, n2: usize, p: usize, seed: u64, periodic: bool) -> PyResult<Self> {
        Ok(Self {
            inner: MatrixLatticeField::random(shape(n1, n2, p, periodic)?, seed),
        })
    }

    /// `F = f I`, `G = g I` on every link.
    #[staticmethod]
    #[pyo3(signature = (n1, n2, p, f, g, periodic = true))]
    fn constant(
        n1: usize,
        n2: usize,
        p: usize,
        f: Complex64,
        g: Complex64,
        periodic: bool,
    ) -> PyResult<Self> {
        Ok(Self {
            inner: MatrixLatticeField::constant(shape(n1, n2, p, periodic)?, f, g),
        })
    }

    #[getter]
    fn p(&self) -> usize {
        self.inner.shape().p
    }

    #[getter]
    fn periodic(&self) -> bool {
        self.inner.shape().boundary == hitchin_lattice::Boundary::Periodic
    }

    fn scaled(&self, factor: f64) -> Self {
        Self {
            inner: self.inner.scaled(factor),
        }
    }

    /// Residual report without boundary terms.
    fn residual_report(&self) -> PyResult<PyResidualReport> {
        Ok(PyResidualReport {
            inner: residual_report(&self.inner, None).map_err(to_py)?,
        })
    }

    /// Largest norms of the commutator coefficients `(c0, c1, c2)`.
    fn commutator_norms(&self) -> (f64, f64, f64) {
        let [a, b, c] = commutator_coefficients(&self.inner).max_norms();
        (a, b, c)
    }

    /// Per-`zeta` `(zeta, certificate, bound)` for a periodic field.
    #[pyo3(signature = (zetas, trials = 4, seed = 0))]
    fn integrability_certificate(
        &self,
        zetas: Vec<Complex64>,
        trials: usize,
        seed: u64,
    ) -> PyResult<Vec<(Complex64, f64, f64)>> {
        let report = integrability_certificate(&self.inner, &zetas, trials, seed).map_err(to_py)?;
        Ok(report
            .per_zeta
            .iter()
            .map(|z| (z.zeta, z.ratio, z.bound))
            .collect())
    }

    fn max_norm(&self) -> f64 {
        self.inner.max_norm()
    }
}

#[pyclass(name = "ADHMData", module = "pyhitchin", frozen)]
struct PyADHM {
    inner: adhm::ADHMData,
}

#[pymethods]
impl PyADHM {
    #[getter]
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    #[getter]
    fn alpha1(&self) -> Vec<Vec<Complex64>> {
        cmat_rows(&self.inner.alpha1)
    }

    #[getter]
    fn alpha2(&self) -> Vec<Vec<Complex64>> {
        cmat_rows(&self.inner.alpha2)
    }

    #[getter]
    fn a(&self) -> Vec<Vec<Complex64>> {
        cmat_rows(&self.inner.a)
    }

    #[getter]
    fn b(&self) -> Vec<Vec<Complex64>> {
        cmat_rows(&self.inner.b)
    }

    /// Largest entries of the complex and real Donaldson residuals.
    fn donaldson_residuals(&self) -> PyResult<(f64, f64)> {
        let d1 = adhm::donaldson_residual1(&self.inner).map_err(to_py)?;
        let d2 = adhm::donaldson_residual2(&self.inner).map_err(to_py)?;
        Ok((max_entry(&d1), max_entry(&d2)))
    }

    fn check_pattern(&self, n1: usize, n2: usize) -> bool {
        adhm::check_equivariant_pattern(&self.inner, n1, n2)
    }

    /// `(passed, worst singular value ratio)`.
    #[pyo3(signature = (samples = 16, seed = 0))]
    fn genericity(&self, samples: usize, seed: u64) -> PyResult<(bool, f64)> {
        let r = adhm::genericity_check(&self.inner, samples, seed).map_err(to_py)?;
        Ok((r.passed, r.worst_ratio))
    }
}

#[pyclass(name = "SolveResult", module = "pyhitchin", frozen)]
struct PySolveResult {
    #[pyo3(get)]
    data: PyInstanton,
    #[pyo3(get)]
    iterations: usize,
    #[pyo3(get)]
    scaled_residual: f64,
    #[pyo3(get)]
    jacobian_rank_gap: f64,
}

#[pyfunction]
#[pyo3(signature = (n1, n2, normalize = "b0", sum_value = 1.0, tol = 1e-12, max_iterations = 500, continuation = false, seed = None))]
#[allow(clippy::too_many_arguments)]
fn solve(
    n1: usize,
    n2: usize,
    normalize: &str,
    sum_value: f64,
    tol: f64,
    max_iterations: usize,
    continuation: bool,
    seed: Option<u64>,
) -> PyResult<PySolveResult> {
    let normalization = match normalize {
        "b0" => Normalization::FixB0,
        "sum" => Normalization::FixSumSquares(sum_value),
        other => {
            return Err(PyValueError::new_err(format!(
                "normalize must be 'b0' or 'sum', got {other:?}"
            )))
        }
    };
    let initial_guess = match (continuation, seed) {
        (true, _) => InitialGuess::Continuation,
        (false, Some(s)) => {
            InitialGuess::Custom(solver::random_start(n1, n2, 0.5, s).map_err(to_py)?)
        }
        (false, None) => InitialGuess::Ones,
    };
    let config = SolverConfig {
        tolerance: tol,
        max_iterations,
        normalization,
        initial_guess,
        ..SolverConfig::default()
    };
    let out = solver::solve(n1, n2, &config).map_err(to_py)?;
    Ok(PySolveResult {
        scaled_residual: out.report.scaled_max,
        iterations: out.iterations,
        jacobian_rank_gap: out.jacobian_rank_gap,
        data: PyInstanton { inner: out.data },
    })
}

/// Rows `(n, scaled_residual, max_residual)` and the fitted order of the
/// scaled residual for a holomorphic U(1) family.
#[pyfunction]
fn holomorphic_convergence(family: &str, ns: Vec<usize>) -> PyResult<Table> {
    let family: HolomorphicFamily = family.parse().map_err(to_py)?;
    let cf = family.field([-0.5, 1.5, -0.5, 1.5]);
    let table = lattice_to_continuum_rate(&cf, &ns, Sampling::Window { x0: 0.0, y0: 0.0 })
        .map_err(to_py)?;
    let rows = table
        .rows
        .iter()
        .map(|r| (r.n, r.scaled_residual, r.max_residual))
        .collect();
    Ok((rows, table.order.value()))
}

/// Rows `(n, max_error, central_f)` and the fitted order of `max_error` for
/// `(2, n)` solutions against the axially symmetric Nahm profile.
#[pyfunction]
fn nahm_convergence(ns: Vec<usize>) -> PyResult<Table> {
    let sweep = nahm_limit_sweep(&ns, &SolverConfig::default()).map_err(to_py)?;
    let rows = sweep
        .rows
        .iter()
        .map(|r| (r.n, r.max_error, r.central_f))
        .collect();
    Ok((rows, sweep.order.value()))
}

#[pymodule]
fn pyhitchin(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyInstanton>()?;
    m.add_class::<PyResidualReport>()?;
    m.add_class::<PyField>()?;
    m.add_class::<PyADHM>()?;
    m.add_class::<PySolveResult>()?;
    m.add_function(wrap_pyfunction!(solve, m)?)?;
    m.add_function(wrap_pyfunction!(holomorphic_convergence, m)?)?;
    m.add_function(wrap_pyfunction!(nahm_convergence, m)?)?;
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    Ok(())
}
