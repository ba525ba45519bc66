//! Python bindings for `smqs_core`.

use num_complex::Complex64;
use pyo3::exceptions::{PyOSError, PyValueError};
use pyo3::prelude::*;
use rand::rngs::StdRng;
use rand::SeedableRng;

use smqs_core::harness::{self, Scenario, ScenarioConfig};
use smqs_core::protocol::{ProtocolConfig, SecretString, DEFAULT_DECOY_COUNT};
use smqs_core::{verification, Basis, Error};

fn to_py(err: Error) -> PyErr {
    match err {
        Error::Io { .. } => PyOSError::new_err(err.to_string()),
        other => PyValueError::new_err(other.to_string()),
    }
}

fn basis(raw: &str) -> PyResult<Basis> {
    raw.parse().map_err(to_py)
}

fn rng(seed: Option<u64>) -> StdRng {
    match seed {
        Some(s) => StdRng::seed_from_u64(s),
        None => StdRng::from_entropy(),
    }
}

/// Dense state of `qudits` qudits of dimension `level`.
#[pyclass(name = "QuditRegister", module = "smqs")]
struct PyQuditRegister {
    inner: smqs_core::QuditRegister,
}

#[pymethods]
impl PyQuditRegister {
    #[staticmethod]
    fn basis_state(level: usize, digits: Vec<usize>) -> PyResult<Self> {
        let inner = smqs_core::QuditRegister::basis_state(level, &digits).map_err(to_py)?;
        Ok(Self { inner })
    }

    #[staticmethod]
    fn omega_state(level: usize, qudits: usize) -> PyResult<Self> {
        let inner = smqs_core::QuditRegister::omega_state(level, qudits).map_err(to_py)?;
        Ok(Self { inner })
    }

    #[staticmethod]
    fn from_amplitudes(level: usize, qudits: usize, amplitudes: Vec<Complex64>) -> PyResult<Self> {
        let inner =
            smqs_core::QuditRegister::from_amplitudes(level, qudits, amplitudes).map_err(to_py)?;
        Ok(Self { inner })
    }

    #[getter]
    fn level(&self) -> usize {
        self.inner.level()
    }

    #[getter]
    fn qudits(&self) -> usize {
        self.inner.qudits()
    }

    #[getter]
    fn amplitudes(&self) -> Vec<Complex64> {
        self.inner.amplitudes().to_vec()
    }

    fn probabilities(&self) -> Vec<f64> {
        self.inner.probabilities()
    }

    fn norm_sqr(&self) -> f64 {
        self.inner.norm_sqr()
    }

    fn tensor(&self, other: &Self) -> PyResult<Self> {
        let inner = self.inner.tensor(&other.inner).map_err(to_py)?;
        Ok(Self { inner })
    }

    fn apply_qft(&mut self, target: usize) -> PyResult<()> {
        self.inner.apply_qft(target).map_err(to_py)
    }

    fn apply_iqft(&mut self, target: usize) -> PyResult<()> {
        self.inner.apply_iqft(target).map_err(to_py)
    }

    fn apply_shift(&mut self, target: usize, shift: usize) -> PyResult<()> {
        self.inner.apply_shift(target, shift).map_err(to_py)
    }

    /// Exact outcome probabilities for measuring `target` in "V1" or "V2".
    fn outcome_distribution(&self, target: usize, basis: &str) -> PyResult<Vec<f64>> {
        let basis = self::basis(basis)?;
        self.inner
            .outcome_distribution(target, basis)
            .map_err(to_py)
    }

    /// Returns `(value, posterior)`; the register itself is left unchanged.
    #[pyo3(signature = (target, basis, seed=None))]
    fn measure(&self, target: usize, basis: &str, seed: Option<u64>) -> PyResult<(usize, Self)> {
        let basis = self::basis(basis)?;
        let outcome = self
            .inner
            .measure(target, basis, &mut rng(seed))
            .map_err(to_py)?;
        Ok((
            outcome.value,
            Self {
                inner: outcome.posterior,
            },
        ))
    }

    #[pyo3(signature = (other, tol=1e-9))]
    fn approx_equal(&self, other: &Self, tol: f64) -> PyResult<bool> {
        self.inner.approx_equal(&other.inner, tol).map_err(to_py)
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn __repr__(&self) -> String {
        format!(
            "QuditRegister(level={}, qudits={})",
            self.inner.level(),
            self.inner.qudits()
        )
    }
}

/// The attacker's single-qudit state `QFT⁻¹|r⟩`.
#[pyfunction]
fn fake_particle(level: usize, r: usize) -> PyResult<PyQuditRegister> {
    let inner = smqs_core::fake_particle(level, r).map_err(to_py)?;
    Ok(PyQuditRegister { inner })
}

#[pyfunction]
fn recover_secret_digit(announced: usize, r: usize, level: usize) -> usize {
    smqs_core::recover_secret_digit(announced, r, level)
}

/// Element-wise sum modulo `level` of equal-length result strings.
#[pyfunction]
fn compute_sum(results: Vec<Vec<usize>>, level: usize) -> PyResult<Vec<usize>> {
    smqs_core::compute_sum(&results, level).map_err(to_py)
}

#[pyfunction]
fn v1_pass(announced: Vec<usize>, level: usize) -> bool {
    verification::v1_pass(&announced, level)
}

#[pyfunction]
fn v2_pass(announced: Vec<usize>) -> bool {
    verification::v2_pass(&announced)
}

#[pyfunction]
fn eve_decoy_error_probability(level: usize) -> PyResult<f64> {
    smqs_core::adversary::eve_decoy_error_probability(level).map_err(to_py)
}

/// `(tag, description)` for every scenario.
#[pyfunction]
fn list_scenarios() -> Vec<(&'static str, &'static str)> {
    Scenario::ALL
        .iter()
        .map(|s| (s.tag(), s.description()))
        .collect()
}

/// Runs a scenario and returns the report as a JSON string.
#[pyfunction]
#[pyo3(signature = (
    scenario, d=10, n=3, m=1, eta=0, decoys=DEFAULT_DECOY_COUNT, threshold=0.0,
    trials=1000, seed=0, secrets=None, fake_r=None, out=None
))]
#[allow(clippy::too_many_arguments)]
fn run_scenario(
    py: Python<'_>,
    scenario: &str,
    d: usize,
    n: usize,
    m: usize,
    eta: usize,
    decoys: usize,
    threshold: f64,
    trials: usize,
    seed: u64,
    secrets: Option<Vec<Vec<usize>>>,
    fake_r: Option<usize>,
    out: Option<std::path::PathBuf>,
) -> PyResult<String> {
    let kind: Scenario = scenario.parse().map_err(to_py)?;
    let protocol = ProtocolConfig::new(d, n, m)
        .with_checks(eta)
        .with_decoys(decoys)
        .with_error_threshold(threshold);
    let mut cfg = ScenarioConfig::new(kind, protocol, trials, seed);
    cfg.secrets = secrets
        .map(|rows| rows.into_iter().map(|r| SecretString::new(r, d)).collect())
        .transpose()
        .map_err(to_py)?;
    cfg.fake_r = fake_r;
    cfg.output = out.clone();
    let doc = py.detach(|| harness::run_scenario(&cfg)).map_err(to_py)?;
    if let Some(path) = &out {
        harness::write_report(&doc, path).map_err(to_py)?;
    }
    serde_json::to_string(&doc).map_err(|e| to_py(e.into()))
}

#[pymodule]
fn smqs(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyQuditRegister>()?;
    m.add_function(wrap_pyfunction!(fake_particle, m)?)?;
    m.add_function(wrap_pyfunction!(recover_secret_digit, m)?)?;
    m.add_function(wrap_pyfunction!(compute_sum, m)?)?;
    m.add_function(wrap_pyfunction!(v1_pass, m)?)?;
    m.add_function(wrap_pyfunction!(v2_pass, m)?)?;
    m.add_function(wrap_pyfunction!(eve_decoy_error_probability, m)?)?;
    m.add_function(wrap_pyfunction!(list_scenarios, m)?)?;
    m.add_function(wrap_pyfunction!(run_scenario, m)?)?;
    m.add("SCHEMA_VERSION", harness::SCHEMA_VERSION)?;
    Ok(())
}
