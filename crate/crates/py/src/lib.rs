//! Python bindings: configurations, model configs, realized operators and a
//! handful of estimators and checks.

use anderloc::estimators::{frac_moment, realization_operator, Ensemble, FmPoint};
use anderloc::model::{DisorderDistribution, Severity};
use anderloc::oracles::transfer_matrix_lyapunov as tm_lyapunov;
use anderloc::spectral::{full_eigen, ground_energy, resolvent_block_norm, BlockOptions};
use anderloc::verifier::exponent_schedule as schedule;
use anderloc::{Error, Partition, SparseOperator};
use num_complex::Complex64;
use pyo3::exceptions::{PyArithmeticError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

fn err(e: Error) -> PyErr {
    if e.is_numerical() {
        PyArithmeticError::new_err(e.to_string())
    } else {
        PyValueError::new_err(e.to_string())
    }
}

#[pyclass(name = "Configuration", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyConfiguration(anderloc::Configuration);

#[pymethods]
impl PyConfiguration {
    #[new]
    fn new(points: Vec<Vec<f64>>) -> PyResult<Self> {
        anderloc::Configuration::new(points).map(Self).map_err(err)
    }

    #[getter]
    fn d(&self) -> usize {
        self.0.d()
    }

    #[getter]
    fn n(&self) -> usize {
        self.0.n()
    }

    fn points(&self) -> Vec<Vec<f64>> {
        self.0.points().map(|p| p.to_vec()).collect()
    }

    fn diameter(&self) -> f64 {
        anderloc::diameter(&self.0)
    }

    fn __repr__(&self) -> String {
        format!("Configuration({:?})", self.points())
    }
}

#[pyclass(name = "ModelConfig", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyModelConfig(anderloc::ModelConfig);

#[pymethods]
impl PyModelConfig {
    #[staticmethod]
    fn from_toml(text: &str) -> PyResult<Self> {
        anderloc::ModelConfig::from_toml_str(text).map(Self).map_err(err)
    }

    /// Strict lattice on `(0, m+1)^d` with uniform disorder on `[0, eta_max]`.
    #[staticmethod]
    fn lattice(d: usize, n: usize, m: usize, eta_max: f64) -> Self {
        Self(anderloc::ModelConfig::lattice(d, n, m, eta_max))
    }

    fn to_toml(&self) -> String {
        self.0.to_toml_string()
    }

    #[getter]
    fn d(&self) -> usize {
        self.0.d()
    }

    #[getter]
    fn n(&self) -> usize {
        self.0.n()
    }

    fn hash(&self) -> String {
        self.0.hash()
    }

    fn validate(&self) -> PyResult<()> {
        self.0.validate().map_err(err)
    }

    /// `(severity, message)` pairs, severity `"hard"` or `"warning"`.
    fn findings(&self) -> Vec<(String, String)> {
        self.0
            .findings()
            .into_iter()
            .map(|f| (if f.severity == Severity::Hard { "hard" } else { "warning" }.to_string(), f.message))
            .collect()
    }

    /// Hamiltonian of realization `r` on the configured domain.
    fn operator(&self, seed: u64, r: u64) -> PyResult<PyOperator> {
        let omega = self.0.region().map_err(err)?;
        realization_operator(&self.0, &omega, seed, r).map(PyOperator).map_err(err)
    }
}

#[pyclass(name = "Operator", frozen)]
struct PyOperator(SparseOperator);

#[pymethods]
impl PyOperator {
    #[getter]
    fn dim(&self) -> usize {
        self.0.dim()
    }

    #[getter]
    fn nnz(&self) -> usize {
        self.0.nnz()
    }

    /// `(rows, cols, values)` of the stored entries.
    fn coo(&self) -> (Vec<usize>, Vec<usize>, Vec<f64>) {
        let (mut rows, mut cols, mut vals) = (Vec::new(), Vec::new(), Vec::new());
        for i in 0..self.0.dim() {
            for (j, v) in self.0.row(i) {
                rows.push(i);
                cols.push(j);
                vals.push(v);
            }
        }
        (rows, cols, vals)
    }

    fn eigenvalues(&self) -> PyResult<Vec<f64>> {
        full_eigen(&self.0).map(|e| e.values).map_err(err)
    }

    fn ground_energy(&self) -> PyResult<f64> {
        ground_energy(&self.0).map_err(err)
    }

    /// `‖χ_x (H - z)^{-1} χ_y‖`.
    fn resolvent_block_norm(&self, z: Complex64, x: &PyConfiguration, y: &PyConfiguration) -> PyResult<f64> {
        resolvent_block_norm(&self.0, z, &x.0, &y.0, &BlockOptions::default()).map_err(err)
    }
}

#[pyfunction]
fn hausdorff_dist(x: &PyConfiguration, y: &PyConfiguration) -> PyResult<f64> {
    anderloc::hausdorff_dist(&x.0, &y.0).map_err(err)
}

/// Distance for the partition with first block `j` (0-based particle indices).
#[pyfunction]
fn partition_dist(x: &PyConfiguration, y: &PyConfiguration, j: Vec<usize>) -> PyResult<f64> {
    let p = Partition::new(x.0.n(), &j).map_err(err)?;
    anderloc::partition_dist(&x.0, &y.0, &p).map_err(err)
}

/// Ensemble mean of `‖χ_x (H - z)^{-1} χ_y‖^s`: `(mean, stderr, count)`.
#[pyfunction]
#[pyo3(signature = (config, z, x, y, s, seed, realizations))]
fn frac_moment_estimate(
    py: Python<'_>,
    config: &PyModelConfig,
    z: Complex64,
    x: &PyConfiguration,
    y: &PyConfiguration,
    s: f64,
    seed: u64,
    realizations: usize,
) -> PyResult<(f64, f64, usize)> {
    let omega = config.0.region().map_err(err)?;
    let point = FmPoint { z, x: x.0.clone(), y: y.0.clone() };
    let est = py
        .detach(|| frac_moment(&config.0, &omega, &point, s, &Ensemble::new(seed, realizations), &BlockOptions::default()))
        .map_err(err)?;
    Ok((est.mean, est.stderr, est.count))
}

#[pyfunction]
fn exponent_schedule<'py>(py: Python<'py>, beta1: f64, n: usize, d: usize, p_w: f64) -> PyResult<Bound<'py, PyDict>> {
    let s = schedule(beta1, n, d, p_w).map_err(err)?;
    let out = PyDict::new(py);
    out.set_item("beta", s.beta)?;
    out.set_item("alpha", s.alpha)?;
    out.set_item("bound", s.bound)?;
    out.set_item("max_n", s.max_n)?;
    out.set_item("admissible", s.admissible)?;
    Ok(out)
}

/// Lyapunov exponent of the one-particle chain with uniform disorder on `[0, eta_max]`: `(gamma, stderr)`.
#[pyfunction]
#[pyo3(signature = (eta_max, energy, length=100_000, replicas=8, seed=0))]
fn transfer_matrix_lyapunov(
    py: Python<'_>,
    eta_max: f64,
    energy: f64,
    length: usize,
    replicas: usize,
    seed: u64,
) -> PyResult<(f64, f64)> {
    let dist = DisorderDistribution::uniform(eta_max);
    let r = py.detach(|| tm_lyapunov(&dist, energy, length, replicas, seed)).map_err(err)?;
    Ok((r.gamma, r.stderr))
}

#[pymodule]
fn anderloc_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyConfiguration>()?;
    m.add_class::<PyModelConfig>()?;
    m.add_class::<PyOperator>()?;
    m.add_function(wrap_pyfunction!(hausdorff_dist, m)?)?;
    m.add_function(wrap_pyfunction!(partition_dist, m)?)?;
    m.add_function(wrap_pyfunction!(frac_moment_estimate, m)?)?;
    m.add_function(wrap_pyfunction!(exponent_schedule, m)?)?;
    m.add_function(wrap_pyfunction!(transfer_matrix_lyapunov, m)?)?;
    Ok(())
}
