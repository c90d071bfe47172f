//! Python bindings for `heatcalc-core`.
//!
//! Matrices cross the boundary as lists of rows. Multipliers are picked from
//! the built-in library by name; arbitrary Python callables are not accepted
//! because the core evaluates them from worker threads.

use heatcalc_core::calculus::{self, CalculusOptions};
use heatcalc_core::dispersive::{self, ContourSpec};
use heatcalc_core::gamma_kernel::{self, DeltaForm, GammaKernel};
use heatcalc_core::linalg::{self, eigendecompose, BoydOptions};
use heatcalc_core::multiplier::HolderMultiplier;
use heatcalc_core::quadrature::QuadratureSpec;
use heatcalc_core::report::BoundReport;
use heatcalc_core::restriction::{self, NormMode};
use heatcalc_core::{Error, ExponentConfig, SymmetricOperator};
use nalgebra::DMatrix;
use num_complex::Complex64;
use pyo3::exceptions::{PyArithmeticError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

fn to_py(e: Error) -> PyErr {
    match e {
        Error::Domain(_)
        | Error::NotSymmetric { .. }
        | Error::NotPositive { .. }
        | Error::DimensionCap { .. }
        | Error::UnsupportedOrder(_)
        | Error::DegenerateWindow { .. }
        | Error::Parse(_) => PyValueError::new_err(e.to_string()),
        _ => PyArithmeticError::new_err(e.to_string()),
    }
}

fn rows<T: Copy + nalgebra::Scalar>(m: &DMatrix<T>) -> Vec<Vec<T>> {
    (0..m.nrows()).map(|i| m.row(i).iter().copied().collect()).collect()
}

fn from_rows(data: Vec<Vec<f64>>) -> PyResult<DMatrix<f64>> {
    let n = data.len();
    let m = data.first().map_or(0, Vec::len);
    if data.iter().any(|r| r.len() != m) {
        return Err(PyValueError::new_err("rows have different lengths"));
    }
    Ok(DMatrix::from_fn(n, m, |i, j| data[i][j]))
}

/// Symmetric positive-semidefinite operator.
#[pyclass(name = "Operator", frozen)]
struct PyOperator {
    inner: SymmetricOperator,
}

#[pymethods]
impl PyOperator {
    #[new]
    #[pyo3(signature = (rows, label = "matrix"))]
    fn new(rows: Vec<Vec<f64>>, label: &str) -> PyResult<Self> {
        let inner = SymmetricOperator::new(label, from_rows(rows)?).map_err(to_py)?;
        Ok(Self { inner })
    }

    /// Generator spec such as `torus:8:2`, `path:16` or `diag:1,2,3`.
    #[staticmethod]
    fn parse(spec: &str) -> PyResult<Self> {
        Ok(Self { inner: linalg::parse_generator(spec).map_err(to_py)? })
    }

    #[staticmethod]
    fn torus(n: usize, d: usize) -> PyResult<Self> {
        Ok(Self { inner: linalg::torus_laplacian(n, d).map_err(to_py)? })
    }

    #[staticmethod]
    fn path(n: usize) -> PyResult<Self> {
        Ok(Self { inner: linalg::path_laplacian(n).map_err(to_py)? })
    }

    #[staticmethod]
    fn diagonal(values: Vec<f64>) -> PyResult<Self> {
        Ok(Self { inner: SymmetricOperator::diagonal("diag", &values).map_err(to_py)? })
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    #[getter]
    fn label(&self) -> String {
        self.inner.label().to_string()
    }

    fn matrix(&self) -> Vec<Vec<f64>> {
        rows(self.inner.matrix())
    }

    fn eigenvalues(&self) -> PyResult<Vec<f64>> {
        Ok(eigendecompose(&self.inner).map_err(to_py)?.eigenvalues().to_vec())
    }

    fn fractional_power(&self, alpha: f64) -> PyResult<Self> {
        Ok(Self { inner: linalg::fractional_power(&self.inner, alpha).map_err(to_py)? })
    }

    /// `e^{-tH}`.
    fn heat_semigroup(&self, t: f64) -> PyResult<Vec<Vec<f64>>> {
        Ok(rows(&linalg::heat_semigroup(&self.inner, t).map_err(to_py)?))
    }

    /// Dense `H^N e^{-tH}`; raises ArithmeticError on overflow.
    fn semigroup_derivative(&self, t: f64, n: u32) -> PyResult<Vec<Vec<f64>>> {
        Ok(rows(&linalg::semigroup_derivative(&self.inner, t, n).map_err(to_py)?))
    }

    fn __repr__(&self) -> String {
        format!("Operator('{}', dim={})", self.inner.label(), self.inner.dim())
    }
}

/// Hoelder multiplier from the built-in library.
#[pyclass(name = "Multiplier", frozen)]
struct PyMultiplier {
    inner: HolderMultiplier,
}

#[pymethods]
impl PyMultiplier {
    #[new]
    fn new(name: &str) -> PyResult<Self> {
        Ok(Self { inner: HolderMultiplier::by_name(name).map_err(to_py)? })
    }

    fn __call__(&self, x: f64) -> f64 {
        self.inner.eval(x)
    }

    #[getter]
    fn label(&self) -> String {
        self.inner.label().to_string()
    }

    #[getter]
    fn rho(&self) -> f64 {
        self.inner.rho()
    }

    #[getter]
    fn holder_const(&self) -> f64 {
        self.inner.holder_const()
    }

    #[getter]
    fn sup_bound(&self) -> f64 {
        self.inner.sup_bound()
    }

    fn __repr__(&self) -> String {
        format!("Multiplier('{}')", self.inner.label())
    }
}

/// Gamma-kernel average `mu_N(phi)(lambda)` of a scalar multiplier.
#[pyfunction]
fn mu_n(phi: &PyMultiplier, n: u32, lam: f64) -> PyResult<f64> {
    gamma_kernel::mu_n(phi.inner.func().as_ref(), n, lam, &QuadratureSpec::default()).map_err(to_py)
}

#[pyfunction]
fn weight(n: u32, x: f64) -> f64 {
    gamma_kernel::weight(n, x)
}

/// Approximant of `phi(H)`; `delta` switches to the shifted kernel (form A).
#[pyfunction]
#[pyo3(signature = (op, phi, n, delta = None))]
fn approximate_calculus(
    py: Python<'_>,
    op: &PyOperator,
    phi: &PyMultiplier,
    n: u32,
    delta: Option<f64>,
) -> PyResult<Vec<Vec<f64>>> {
    let opts = CalculusOptions::default();
    let m = py
        .detach(|| match delta {
            Some(d) => calculus::approximate_calculus_delta(&op.inner, &phi.inner, n, d, DeltaForm::A, &opts),
            None => calculus::approximate_calculus(&op.inner, &phi.inner, n, &opts),
        })
        .map_err(to_py)?;
    Ok(rows(&m))
}

/// `phi(H)` through the eigendecomposition.
#[pyfunction]
fn oracle_calculus(op: &PyOperator, phi: &PyMultiplier) -> PyResult<Vec<Vec<f64>>> {
    let f = phi.inner.func().clone();
    Ok(rows(&calculus::oracle_calculus(&op.inner, move |x| f(x)).map_err(to_py)?))
}

/// Approximation error against the oracle, as a dict.
#[pyfunction]
fn calculus_report<'py>(py: Python<'py>, op: &PyOperator, phi: &PyMultiplier, n: u32) -> PyResult<Bound<'py, PyDict>> {
    let r = py
        .detach(|| {
            let s = eigendecompose(&op.inner)?;
            calculus::calculus_report(
                &op.inner,
                &s,
                &GammaKernel::theorem(n)?,
                n,
                1.0,
                &phi.inner,
                &CalculusOptions::default(),
            )
        })
        .map_err(to_py)?;
    let out = PyDict::new(py);
    out.set_item("N", r.n)?;
    out.set_item("approx_error_2", r.approx_error_2)?;
    out.set_item("scalar_sup_error", r.scalar_sup_error)?;
    out.set_item("quad_panels", r.quad_panels)?;
    out.set_item("kernel_corrected", r.kernel_corrected)?;
    Ok(out)
}

/// Smoothed k-th lambda-derivative of the spectral measure: `(matrix, trace)`.
#[pyfunction]
#[pyo3(signature = (op, lam, n, k = 0))]
fn spectral_density(op: &PyOperator, lam: f64, n: u32, k: u32) -> PyResult<(Vec<Vec<f64>>, f64)> {
    let d = calculus::spectral_density(&op.inner, lam, n, k).map_err(to_py)?;
    Ok((rows(&d.matrix), d.trace))
}

/// `||A||_{p -> q}`; exact where a closed form exists, otherwise a seeded lower bound.
#[pyfunction]
#[pyo3(signature = (a, p, q, seed = 0))]
fn opnorm(a: Vec<Vec<f64>>, p: f64, q: f64, seed: u64) -> PyResult<f64> {
    let opts = BoydOptions { seed, ..BoydOptions::default() };
    linalg::opnorm_p_q_with(&from_rows(a)?, p, q, &opts).map_err(to_py)
}

#[pyfunction]
fn sigma_of(p: f64, d: f64) -> PyResult<f64> {
    Ok(ExponentConfig::new(p, d).map_err(to_py)?.sigma())
}

fn report_dict<'py>(py: Python<'py>, r: &BoundReport) -> PyResult<Bound<'py, PyDict>> {
    let out = PyDict::new(py);
    out.set_item("assertion", &r.assertion)?;
    out.set_item("operator", &r.operator)?;
    out.set_item("sigma", r.sigma)?;
    out.set_item("sup_ratio", r.sup_ratio())?;
    out.set_item("lower_bound", r.lower_bound)?;
    out.set_item("flags", r.flags.clone())?;
    let table: Vec<(f64, f64, f64)> = r.rows.iter().map(|row| (row.param1, row.param2, row.ratio)).collect();
    out.set_item("rows", table)?;
    Ok(out)
}

/// Derivative-bound ratios over an (N, t) grid; exact norms at p = 1, seeded lower bounds otherwise.
#[pyfunction]
#[pyo3(signature = (op, p, d, n_grid = None, t_grid = None, seed = 0))]
fn derivative_bound<'py>(
    py: Python<'py>,
    op: &PyOperator,
    p: f64,
    d: f64,
    n_grid: Option<Vec<u32>>,
    t_grid: Option<Vec<f64>>,
    seed: u64,
) -> PyResult<Bound<'py, PyDict>> {
    let cfg = ExponentConfig::new(p, d).map_err(to_py)?;
    let mode = if p == 1.0 { NormMode::Exact } else { NormMode::Boyd(BoydOptions { seed, ..BoydOptions::default() }) };
    let n_grid = n_grid.unwrap_or_else(restriction::default_n_grid);
    let t_grid = t_grid.unwrap_or_else(restriction::default_t_grid);
    let r = py
        .detach(|| restriction::check_derivative_bound(&op.inner, &cfg, &n_grid, &t_grid, &mode))
        .map_err(to_py)?;
    report_dict(py, &r)
}

/// `(NsH)^{N+gamma} e^{-NsH}` through the Cauchy contour sum.
#[pyfunction]
#[pyo3(signature = (op, s, n, gamma = 1.0, nodes = dispersive::DEFAULT_CONTOUR_NODES))]
fn contour_power(op: &PyOperator, s: f64, n: u32, gamma: f64, nodes: usize) -> PyResult<Vec<Vec<f64>>> {
    let spec = ContourSpec::new(n, nodes).map_err(to_py)?;
    let k_sub = gamma.floor() as u32 + 1;
    Ok(rows(&dispersive::contour_power(&op.inner, s, &spec, gamma, k_sub).map_err(to_py)?))
}

/// `(sH)^gamma e^{-zeta s H}` through the subordination integral.
#[pyfunction]
#[pyo3(signature = (op, s, zeta, gamma, k = 1))]
fn subordinated_fractional(
    op: &PyOperator,
    s: f64,
    zeta: Complex64,
    gamma: f64,
    k: u32,
) -> PyResult<Vec<Vec<Complex64>>> {
    Ok(rows(&dispersive::subordinated_fractional(&op.inner, s, zeta, gamma, k).map_err(to_py)?))
}

#[pyfunction]
fn angular_integral(n: u32, sigma: f64) -> PyResult<f64> {
    dispersive::angular_integral(n, sigma).map_err(to_py)
}

#[pymodule]
fn heatcalc(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyOperator>()?;
    m.add_class::<PyMultiplier>()?;
    m.add_function(wrap_pyfunction!(mu_n, m)?)?;
    m.add_function(wrap_pyfunction!(weight, m)?)?;
    m.add_function(wrap_pyfunction!(approximate_calculus, m)?)?;
    m.add_function(wrap_pyfunction!(oracle_calculus, m)?)?;
    m.add_function(wrap_pyfunction!(calculus_report, m)?)?;
    m.add_function(wrap_pyfunction!(spectral_density, m)?)?;
    m.add_function(wrap_pyfunction!(opnorm, m)?)?;
    m.add_function(wrap_pyfunction!(sigma_of, m)?)?;
    m.add_function(wrap_pyfunction!(derivative_bound, m)?)?;
    m.add_function(wrap_pyfunction!(contour_power, m)?)?;
    m.add_function(wrap_pyfunction!(subordinated_fractional, m)?)?;
    m.add_function(wrap_pyfunction!(angular_integral, m)?)?;
    Ok(())
}
