use ::mpk as core;
use core::flow::{self as cflow, QuadraticHamiltonian, KNUTSEN_MASS};
use core::hardy::{self as chardy, DecayCertificate};
use core::linalg::{self, Mat};
use core::{Complex64 as C64, MpkError, Tolerances};
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::{PyDict, PyList};
use serde_json::Value;

fn err(e: MpkError) -> PyErr {
    let msg = format!("{}: {}", e.kind(), e);
    if e.is_numerical_guard() {
        PyRuntimeError::new_err(msg)
    } else {
        PyValueError::new_err(msg)
    }
}

fn mat(rows: Vec<Vec<f64>>) -> PyResult<Mat> {
    linalg::from_rows(&rows).map_err(err)
}

fn tol(strict: bool, tau_eig: f64) -> Tolerances {
    Tolerances { strict, tau_eig, ..Tolerances::default() }
}

/// serde_json value to plain Python objects
fn to_py<'py>(py: Python<'py>, v: &Value) -> PyResult<Bound<'py, PyAny>> {
    Ok(match v {
        Value::Null => py.None().into_bound(py),
        Value::Bool(b) => b.into_pyobject(py)?.to_owned().into_any(),
        Value::Number(n) => match n.as_i64() {
            Some(i) => i.into_pyobject(py)?.into_any(),
            None => n.as_f64().unwrap_or(f64::NAN).into_pyobject(py)?.into_any(),
        },
        Value::String(s) => s.into_pyobject(py)?.into_any(),
        Value::Array(a) => {
            let items = a.iter().map(|x| to_py(py, x)).collect::<PyResult<Vec<_>>>()?;
            PyList::new(py, items)?.into_any()
        }
        Value::Object(o) => {
            let d = PyDict::new(py);
            for (k, x) in o {
                d.set_item(k, to_py(py, x)?)?;
            }
            d.into_any()
        }
    })
}

fn ser<'py, T: serde::Serialize>(py: Python<'py>, v: &T) -> PyResult<Bound<'py, PyAny>> {
    to_py(py, &serde_json::to_value(v).map_err(|e| PyValueError::new_err(e.to_string()))?)
}

#[pyclass(name = "SymplecticMatrix", module = "mpk", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PySymplectic {
    inner: core::SymplecticMatrix,
}

#[pymethods]
impl PySymplectic {
    #[new]
    fn new(rows: Vec<Vec<f64>>) -> PyResult<Self> {
        Ok(PySymplectic { inner: core::SymplecticMatrix::new(mat(rows)?).map_err(err)? })
    }

    #[staticmethod]
    fn from_blocks(a: Vec<Vec<f64>>, b: Vec<Vec<f64>>, c: Vec<Vec<f64>>, d: Vec<Vec<f64>>) -> PyResult<Self> {
        let s = core::SymplecticMatrix::from_blocks(&mat(a)?, &mat(b)?, &mat(c)?, &mat(d)?).map_err(err)?;
        Ok(PySymplectic { inner: s })
    }

    #[staticmethod]
    fn identity(d: usize) -> Self {
        PySymplectic { inner: core::SymplecticMatrix::identity(d) }
    }

    #[staticmethod]
    fn standard_j(d: usize) -> Self {
        PySymplectic { inner: core::SymplecticMatrix::standard_j(d) }
    }

    #[staticmethod]
    fn fractional_fourier(theta: Vec<f64>) -> Self {
        PySymplectic { inner: core::SymplecticMatrix::fractional_fourier(&theta) }
    }

    #[staticmethod]
    fn partial_fourier(mask: Vec<bool>) -> Self {
        PySymplectic { inner: core::SymplecticMatrix::partial_fourier(&mask) }
    }

    #[staticmethod]
    fn dilation(e: Vec<Vec<f64>>) -> PyResult<Self> {
        Ok(PySymplectic { inner: core::SymplecticMatrix::dilation(&mat(e)?).map_err(err)? })
    }

    #[staticmethod]
    fn chirp(q: Vec<Vec<f64>>) -> PyResult<Self> {
        Ok(PySymplectic { inner: core::SymplecticMatrix::chirp(&mat(q)?).map_err(err)? })
    }

    #[staticmethod]
    fn multiplier(p: Vec<Vec<f64>>) -> PyResult<Self> {
        Ok(PySymplectic { inner: core::SymplecticMatrix::multiplier(&mat(p)?).map_err(err)? })
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn rows(&self) -> Vec<Vec<f64>> {
        linalg::to_rows(self.inner.matrix())
    }

    /// (A, B, C, D)
    fn blocks(&self) -> [Vec<Vec<f64>>; 4] {
        let s = &self.inner;
        [s.a(), s.b(), s.c(), s.d()].map(|m| linalg::to_rows(&m))
    }

    fn residual(&self) -> f64 {
        self.inner.residual()
    }

    fn rank_b(&self) -> usize {
        self.inner.rank_b(self.inner.default_rank_tol())
    }

    fn mu_s(&self) -> PyResult<f64> {
        core::symplectic::mu_s(&self.inner, self.inner.default_rank_tol()).map_err(err)
    }

    fn compose(&self, other: &PySymplectic) -> PyResult<Self> {
        Ok(PySymplectic { inner: self.inner.compose(&other.inner).map_err(err)? })
    }

    fn inverse(&self) -> Self {
        PySymplectic { inner: self.inner.inverse() }
    }

    fn __matmul__(&self, other: &PySymplectic) -> PyResult<Self> {
        self.compose(other)
    }

    /// The eight block relations as a list of dicts.
    fn relations<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        ser(py, &core::symplectic::verify_block_relations(&self.inner))
    }

    fn __repr__(&self) -> String {
        format!("SymplecticMatrix(d={}, rows={:?})", self.inner.dim(), linalg::to_rows(self.inner.matrix()))
    }
}

#[pyclass(name = "GridFunction", module = "mpk", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyGrid {
    inner: core::GridFunction,
}

#[pymethods]
impl PyGrid {
    /// Samples in row-major order on x_k = -L + k*2L/n.
    #[new]
    #[pyo3(signature = (dim, n, half_extent, samples))]
    fn new(dim: usize, n: usize, half_extent: f64, samples: Vec<C64>) -> PyResult<Self> {
        Ok(PyGrid { inner: core::GridFunction::new(dim, n, half_extent, samples).map_err(err)? })
    }

    /// e^{-pi a |x - center|^2}
    #[staticmethod]
    #[pyo3(signature = (dim, n, half_extent, a=1.0, center=None))]
    fn gaussian(dim: usize, n: usize, half_extent: f64, a: f64, center: Option<Vec<f64>>) -> PyResult<Self> {
        let c = center.unwrap_or_else(|| vec![0.0; dim]);
        if c.len() != dim {
            return Err(PyValueError::new_err("center has the wrong length"));
        }
        let f = core::GridFunction::from_fn(dim, n, half_extent, |x| {
            let r2: f64 = x.iter().zip(&c).map(|(p, q)| (p - q).powi(2)).sum();
            C64::new((-std::f64::consts::PI * a * r2).exp(), 0.0)
        })
        .map_err(err)?;
        Ok(PyGrid { inner: f })
    }

    #[staticmethod]
    fn load(path: &str) -> PyResult<Self> {
        Ok(PyGrid { inner: core::io::read_grid(path.as_ref()).map_err(err)? })
    }

    fn save(&self, path: &str) -> PyResult<()> {
        core::io::write_grid(path.as_ref(), &self.inner).map_err(err)
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    #[getter]
    fn n(&self) -> usize {
        self.inner.n()
    }

    #[getter]
    fn half_extent(&self) -> f64 {
        self.inner.half_extent()
    }

    fn samples(&self) -> Vec<C64> {
        self.inner.samples().to_vec()
    }

    fn coords(&self) -> Vec<f64> {
        (0..self.inner.n()).map(|k| self.inner.coord(k)).collect()
    }

    fn norm(&self) -> f64 {
        self.inner.norm_l2()
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }
}

/// Returns (output grid, list of warning dicts).
#[pyfunction]
#[pyo3(signature = (s, f, strict=false))]
fn apply_metaplectic<'py>(py: Python<'py>, s: &PySymplectic, f: &PyGrid, strict: bool) -> PyResult<(PyGrid, Bound<'py, PyAny>)> {
    let out = core::metaplectic::apply_metaplectic(&s.inner, &f.inner, &tol(strict, 1e-8)).map_err(err)?;
    Ok((PyGrid { inner: out.grid }, ser(py, &out.warnings)?))
}

#[pyfunction]
#[pyo3(signature = (f, sign=-1))]
fn fourier_transform(f: &PyGrid, sign: i32) -> PyResult<PyGrid> {
    Ok(PyGrid { inner: core::fourier_transform(&f.inner, sign).map_err(err)? })
}

#[pyfunction]
#[pyo3(signature = (s, f, seed=0))]
fn check_covariance<'py>(py: Python<'py>, s: &PySymplectic, f: &PyGrid, seed: u64) -> PyResult<Bound<'py, PyAny>> {
    ser(py, &core::wigner::check_covariance(&s.inner, &f.inner, &Tolerances::default(), seed).map_err(err)?)
}

#[pyfunction]
fn hardy_eigenvalues(m: Vec<Vec<f64>>, n: Vec<Vec<f64>>, s: &PySymplectic) -> PyResult<Vec<f64>> {
    chardy::hardy_eigenvalues(&mat(m)?, &mat(n)?, &s.inner, s.inner.default_rank_tol()).map_err(err)
}

/// Verdict dict for the certificate (M, N) against S.
#[pyfunction]
#[pyo3(signature = (s, m, n, tau_eig=1e-8))]
fn classify<'py>(py: Python<'py>, s: &PySymplectic, m: Vec<Vec<f64>>, n: Vec<Vec<f64>>, tau_eig: f64) -> PyResult<Bound<'py, PyAny>> {
    let cert = DecayCertificate::new(mat(m)?, mat(n)?, 1.0, 1.0).map_err(err)?;
    ser(py, &chardy::classify(&cert, &s.inner, &tol(false, tau_eig)))
}

#[pyfunction]
#[pyo3(signature = (s, halfwidth, n, half_extent))]
fn sharpness_witness<'py>(py: Python<'py>, s: &PySymplectic, halfwidth: f64, n: usize, half_extent: f64) -> PyResult<Bound<'py, PyAny>> {
    let r = chardy::sharpness_witness(&s.inner, halfwidth, n, half_extent, &Tolerances::default()).map_err(err)?;
    let d = PyDict::new(py);
    d.set_item("outside_fraction", r.outside_fraction)?;
    d.set_item("rank", r.rank)?;
    d.set_item("input", PyGrid { inner: r.input })?;
    d.set_item("output", PyGrid { inner: r.output })?;
    d.set_item("warnings", ser(py, &r.warnings)?)?;
    Ok(d.into_any())
}

/// S_t = exp(t J Mcal) for H(z) = <Mcal z, z>/2.
#[pyfunction]
fn flow(mcal: Vec<Vec<f64>>, t: f64) -> PyResult<PySymplectic> {
    let h = QuadraticHamiltonian::new(mat(mcal)?).map_err(err)?;
    Ok(PySymplectic { inner: cflow::flow(&h, t).map_err(err)?.s })
}

#[pyfunction]
#[pyo3(signature = (omega, t, m=1.0))]
fn oscillator_flow(omega: Vec<f64>, t: f64, m: f64) -> PyResult<PySymplectic> {
    let h = QuadraticHamiltonian::harmonic_oscillator(&omega, m).map_err(err)?;
    Ok(PySymplectic { inner: cflow::flow(&h, t).map_err(err)?.s })
}

#[pyfunction]
fn anisotropic_flow(t: f64) -> PyResult<PySymplectic> {
    let h = QuadraticHamiltonian::anisotropic_oscillator_2d();
    Ok(PySymplectic { inner: cflow::flow(&h, t).map_err(err)?.s })
}

/// Verdict for the anisotropic oscillator with M = diag(0, a), N = diag(0, b).
#[pyfunction]
fn anisotropic_check<'py>(py: Python<'py>, a: f64, b: f64, t1: f64) -> PyResult<Bound<'py, PyAny>> {
    let h = QuadraticHamiltonian::anisotropic_oscillator_2d();
    let d = |v: f64| Mat::from_row_slice(2, 2, &[0.0, 0.0, 0.0, v]);
    let cert = DecayCertificate::new(d(a), d(b), 1.0, 1.0).map_err(err)?;
    ser(py, &cflow::dynamical_hardy_check(&cert, &h, t1, &Tolerances::default()).map_err(err)?)
}

/// Decay e^{-alpha|x|^2} at t = 0 and e^{-beta|x|^2} at t1 for the oscillator
/// with frequencies omega in Knutsen's units.
#[pyfunction]
fn knutsen_comparison<'py>(py: Python<'py>, omega: Vec<f64>, alpha: f64, beta: f64, t1: f64) -> PyResult<Bound<'py, PyAny>> {
    let d = omega.len();
    let h = QuadraticHamiltonian::harmonic_oscillator(&omega, KNUTSEN_MASS).map_err(err)?;
    let pi = std::f64::consts::PI;
    let cert = DecayCertificate::new(Mat::identity(d, d) * (alpha / pi), Mat::identity(d, d) * (beta / pi), 1.0, 1.0).map_err(err)?;
    ser(py, &cflow::knutsen_comparison(&cert, &h, t1, &Tolerances::default()).map_err(err)?)
}

#[pymodule]
#[pyo3(name = "mpk")]
fn mpk_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PySymplectic>()?;
    m.add_class::<PyGrid>()?;
    m.add_function(wrap_pyfunction!(apply_metaplectic, m)?)?;
    m.add_function(wrap_pyfunction!(fourier_transform, m)?)?;
    m.add_function(wrap_pyfunction!(check_covariance, m)?)?;
    m.add_function(wrap_pyfunction!(hardy_eigenvalues, m)?)?;
    m.add_function(wrap_pyfunction!(classify, m)?)?;
    m.add_function(wrap_pyfunction!(sharpness_witness, m)?)?;
    m.add_function(wrap_pyfunction!(flow, m)?)?;
    m.add_function(wrap_pyfunction!(oscillator_flow, m)?)?;
    m.add_function(wrap_pyfunction!(anisotropic_flow, m)?)?;
    m.add_function(wrap_pyfunction!(anisotropic_check, m)?)?;
    m.add_function(wrap_pyfunction!(knutsen_comparison, m)?)?;
    m.add("KNUTSEN_MASS", KNUTSEN_MASS)?;
    Ok(())
}
