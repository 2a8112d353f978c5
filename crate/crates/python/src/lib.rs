use std::collections::BTreeMap;

use fairpsi::binning;
use fairpsi::config::ScenarioConfig;
use fairpsi::dec::Dec;
use fairpsi::field::FieldParams;
use fairpsi::ole::OleMode;
use fairpsi::poly::{self, RootStrategy};
use fairpsi::report;
use fairpsi::{ane, scenarios, selftest};
use pyo3::exceptions::{PyKeyError, PyValueError};
use pyo3::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

fn value_err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

/// A scenario config: protocol, sets, economics, strategies and seed.
#[pyclass(module = "fairpsi_py")]
struct Scenario {
    inner: ScenarioConfig,
}

#[pymethods]
impl Scenario {
    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        Ok(Self { inner: ScenarioConfig::from_json(text).map_err(value_err)? })
    }

    /// One of the built-in scenarios, by name.
    #[staticmethod]
    fn builtin(name: &str) -> PyResult<Self> {
        let s = scenarios::get(name).ok_or_else(|| PyKeyError::new_err(name.to_string()))?;
        Ok(Self { inner: s.config().map_err(value_err)? })
    }

    fn to_json(&self) -> String {
        self.inner.to_json()
    }

    #[getter]
    fn protocol(&self) -> String {
        serde_json::to_value(self.inner.protocol).ok().and_then(|v| v.as_str().map(String::from)).unwrap_or_default()
    }

    #[getter]
    fn seed(&self) -> u64 {
        self.inner.seed.0
    }

    #[setter]
    fn set_seed(&mut self, seed: u64) {
        self.inner.seed = Dec(seed);
    }

    #[getter]
    fn clients(&self) -> usize {
        self.inner.clients()
    }

    /// Use the OT-based OLE construction instead of the ideal functionality.
    #[setter]
    fn set_constructed_ole(&mut self, on: bool) {
        self.inner.ole_mode = if on { OleMode::Constructed } else { OleMode::Ideal };
    }

    fn run(&self, py: Python<'_>) -> PyResult<Report> {
        let config = self.inner.clone();
        let inner = py.detach(move || report::run(&config)).map_err(value_err)?;
        Ok(Report { inner })
    }

    /// Net payoff of every extractor profile, as a JSON array.
    fn payoff_matrix_json(&self, py: Python<'_>) -> PyResult<String> {
        let config = self.inner.clone();
        let rows = py.detach(move || ane::payoff_matrix(&config)).map_err(value_err)?;
        serde_json::to_string(&rows).map_err(value_err)
    }

    fn __repr__(&self) -> String {
        format!("Scenario(protocol={:?}, clients={}, seed={})", self.protocol(), self.clients(), self.seed())
    }
}

/// The result of one run.
#[pyclass(module = "fairpsi_py", frozen)]
struct Report {
    inner: report::Report,
}

#[pymethods]
impl Report {
    #[getter]
    fn outcome(&self) -> String {
        serde_json::to_value(self.inner.kind()).ok().and_then(|v| v.as_str().map(String::from)).unwrap_or_default()
    }

    #[getter]
    fn case(&self) -> Option<&'static str> {
        self.inner.case_name()
    }

    #[getter]
    fn intersection(&self) -> Option<Vec<u64>> {
        self.inner.intersection().map(|s| s.into_iter().collect())
    }

    #[getter]
    fn oracle(&self) -> Vec<u64> {
        self.inner.oracle().into_iter().collect()
    }

    #[getter]
    fn misbehaving(&self) -> Vec<usize> {
        self.inner.misbehaving().into_iter().collect()
    }

    #[getter]
    fn ole_calls(&self) -> u64 {
        self.inner.ole_calls()
    }

    fn net_changes(&self) -> BTreeMap<String, i128> {
        self.inner.net_changes().into_iter().map(|(a, v)| (a.to_string(), v)).collect()
    }

    fn summary_json(&self) -> String {
        self.inner.summary().to_string()
    }

    fn transcript_jsonl(&self) -> String {
        self.inner.transcript().to_jsonl()
    }

    fn __repr__(&self) -> String {
        format!("Report(outcome={:?}, case={:?})", self.outcome(), self.case())
    }
}

/// A polynomial over a prime field, coefficients lowest degree first.
#[pyclass(module = "fairpsi_py", frozen)]
struct Polynomial {
    inner: poly::Polynomial,
}

#[pymethods]
impl Polynomial {
    #[new]
    fn new(modulus: u64, coeffs: Vec<u64>) -> PyResult<Self> {
        let field = FieldParams::new(modulus).map_err(value_err)?;
        Ok(Self { inner: poly::Polynomial::from_u64s(field, &coeffs) })
    }

    #[staticmethod]
    fn from_roots(modulus: u64, roots: Vec<u64>) -> PyResult<Self> {
        let field = FieldParams::new(modulus).map_err(value_err)?;
        let roots: Vec<_> = roots.into_iter().map(|r| field.elem(r)).collect();
        Ok(Self { inner: poly::Polynomial::from_roots(field, &roots) })
    }

    #[getter]
    fn degree(&self) -> Option<usize> {
        self.inner.degree().finite()
    }

    #[getter]
    fn coeffs(&self) -> Vec<u64> {
        self.inner.coeffs().iter().map(|c| c.value()).collect()
    }

    fn __call__(&self, x: u64) -> u64 {
        self.inner.eval(self.inner.field().elem(x)).value()
    }

    /// Distinct roots in ascending order.
    #[pyo3(signature = (seed=0))]
    fn roots(&self, seed: u64) -> PyResult<Vec<u64>> {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let roots = self.inner.roots(RootStrategy::FullFactor, &mut rng).map_err(value_err)?;
        Ok(roots.into_iter().map(|r| r.value()).collect())
    }

    fn __mul__(&self, other: &Polynomial) -> Self {
        Self { inner: &self.inner * &other.inner }
    }

    fn __add__(&self, other: &Polynomial) -> Self {
        Self { inner: &self.inner + &other.inner }
    }

    fn __eq__(&self, other: &Polynomial) -> bool {
        self.inner == other.inner
    }

    fn __repr__(&self) -> String {
        format!("Polynomial(modulus={}, coeffs={:?})", self.inner.field().modulus(), self.coeffs())
    }
}

/// Smallest bin count keeping the overflow probability below 2^-exponent.
#[pyfunction]
fn size_table(elements: u64, bin_capacity: u64, exponent: u32) -> PyResult<u64> {
    binning::size_table(elements, bin_capacity, exponent).map_err(value_err)
}

#[pyfunction]
fn overflow_log2_bound(elements: u64, bin_capacity: u64, bins: u64) -> Option<f64> {
    binning::overflow_log2_bound(elements, bin_capacity, bins)
}

#[pyfunction]
fn scenario_names() -> Vec<&'static str> {
    scenarios::LIBRARY.iter().map(|s| s.name).collect()
}

/// `(name, passed, cases)` for each exhaustive small-field check.
#[pyfunction]
fn run_selftest(py: Python<'_>) -> Vec<(&'static str, bool, u64)> {
    py.detach(selftest::run).into_iter().map(|c| (c.name, c.passed(), c.cases)).collect()
}

#[pymodule]
fn fairpsi_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Scenario>()?;
    m.add_class::<Report>()?;
    m.add_class::<Polynomial>()?;
    m.add_function(wrap_pyfunction!(size_table, m)?)?;
    m.add_function(wrap_pyfunction!(overflow_log2_bound, m)?)?;
    m.add_function(wrap_pyfunction!(scenario_names, m)?)?;
    m.add_function(wrap_pyfunction!(run_selftest, m)?)?;
    Ok(())
}
