//! Python bindings for the `progressftx` simulator.

use std::path::PathBuf;

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use progressftx::bounds;
use progressftx::channel::{db_to_linear, ChannelModel};
use progressftx::gains::GainTable;
use progressftx::harness::config::ExperimentConfig;
use progressftx::harness::csvio::emit_csv;
use progressftx::harness::sweep::{run_sweep, simulate, trial_rng};
use progressftx::linclass::{self, PartialFeatureVector};
use progressftx::protocol::{self, SchemeKind, Simulator};
use progressftx::statmodel;
use progressftx::stopping;

fn py_err(e: progressftx::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

#[pyclass(name = "GmModel", module = "progressftx_py", from_py_object)]
#[derive(Clone)]
struct PyGmModel {
    inner: statmodel::GmModel,
}

#[pymethods]
impl PyGmModel {
    #[new]
    fn new(centroids: Vec<Vec<f64>>, variances: Vec<f64>) -> PyResult<Self> {
        let inner = statmodel::GmModel::new(centroids, variances).map_err(py_err)?;
        Ok(PyGmModel { inner })
    }

    /// Model with unit variances whose per-dimension gains equal `profile`.
    /// Defaults to the two-class, 40-dimension geometric profile.
    #[staticmethod]
    #[pyo3(signature = (classes=2, profile=None, seed=0))]
    fn synthesize(classes: usize, profile: Option<Vec<f64>>, seed: u64) -> PyResult<Self> {
        let profile = profile.unwrap_or_else(statmodel::default_profile);
        let inner = statmodel::GmModel::synthesize(classes, &profile, &mut ChaCha8Rng::seed_from_u64(seed))
            .map_err(py_err)?;
        Ok(PyGmModel { inner })
    }

    #[staticmethod]
    fn from_text(text: &str) -> PyResult<Self> {
        let inner = statmodel::GmModel::from_text("<python>", text).map_err(py_err)?;
        Ok(PyGmModel { inner })
    }

    fn to_text(&self) -> String {
        self.inner.to_text()
    }

    #[getter]
    fn classes(&self) -> usize {
        self.inner.classes()
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    #[getter]
    fn centroids(&self) -> Vec<Vec<f64>> {
        self.inner.centroids().to_vec()
    }

    #[getter]
    fn variances(&self) -> Vec<f64> {
        self.inner.variances().to_vec()
    }

    /// Per-dimension discriminant gains.
    fn gains(&self) -> Vec<f64> {
        GainTable::new(&self.inner).per_dim().to_vec()
    }

    /// Dimensions by decreasing gain.
    fn gain_order(&self) -> Vec<usize> {
        GainTable::new(&self.inner).order().to_vec()
    }

    /// Draws `(features, label)` from the stream used for trial `trial`.
    #[pyo3(signature = (seed, trial=0, label=None))]
    fn sample(&self, seed: u64, trial: u64, label: Option<usize>) -> PyResult<(Vec<f64>, usize)> {
        let s = self.inner.sample(&mut trial_rng(seed, trial), label).map_err(py_err)?;
        Ok((s.features, s.label))
    }

    /// Label decided from `features` restricted to `indices`.
    fn classify(&self, features: Vec<f64>, indices: Vec<usize>) -> PyResult<usize> {
        linclass::classify(&self.pfv(&features, &indices)?, &self.inner).map_err(py_err)
    }

    fn posteriors(&self, features: Vec<f64>, indices: Vec<usize>) -> PyResult<Vec<f64>> {
        let p = linclass::posteriors(&self.pfv(&features, &indices)?, &self.inner).map_err(py_err)?;
        Ok(p.probs)
    }

    fn entropy(&self, features: Vec<f64>, indices: Vec<usize>) -> PyResult<f64> {
        linclass::entropy(&self.pfv(&features, &indices)?, &self.inner).map_err(py_err)
    }

    fn __repr__(&self) -> String {
        format!("GmModel(classes={}, dim={})", self.inner.classes(), self.inner.dim())
    }
}

impl PyGmModel {
    fn pfv(&self, features: &[f64], indices: &[usize]) -> PyResult<PartialFeatureVector> {
        if features.len() != self.inner.dim() {
            return Err(PyValueError::new_err(format!(
                "expected {} features, got {}",
                self.inner.dim(),
                features.len()
            )));
        }
        PartialFeatureVector::from_subset(features, indices).map_err(py_err)
    }
}

#[pyclass(name = "Channel", module = "progressftx_py", from_py_object)]
#[derive(Clone, Copy)]
struct PyChannel {
    inner: ChannelModel,
}

#[pymethods]
impl PyChannel {
    #[staticmethod]
    #[pyo3(signature = (bandwidth_hz=20e3, slot_s=0.01, snr_db=4.0, bits_per_feature=64.0))]
    fn gaussian(bandwidth_hz: f64, slot_s: f64, snr_db: f64, bits_per_feature: f64) -> PyResult<Self> {
        let inner = ChannelModel::gaussian(bandwidth_hz, slot_s, db_to_linear(snr_db), bits_per_feature)
            .map_err(py_err)?;
        Ok(PyChannel { inner })
    }

    #[staticmethod]
    #[pyo3(signature = (features_per_slot=5, outage_prob=0.1))]
    fn fading(features_per_slot: usize, outage_prob: f64) -> PyResult<Self> {
        let inner = ChannelModel::fading(features_per_slot, outage_prob).map_err(py_err)?;
        Ok(PyChannel { inner })
    }

    #[getter]
    fn features_per_slot(&self) -> PyResult<usize> {
        self.inner.features_per_slot().map_err(py_err)
    }

    #[getter]
    fn outage_prob(&self) -> f64 {
        self.inner.outage_prob()
    }

    #[getter]
    fn is_fading(&self) -> bool {
        self.inner.is_fading()
    }

    fn __repr__(&self) -> String {
        format!("{:?}", self.inner)
    }
}

#[pyclass(name = "StoppingPolicy", module = "progressftx_py", from_py_object)]
#[derive(Clone, Copy)]
struct PyPolicy {
    inner: stopping::StoppingPolicy,
}

#[pymethods]
impl PyPolicy {
    #[new]
    #[pyo3(signature = (c0, horizon=5, target=None, bound_fit="fitted"))]
    fn new(c0: f64, horizon: usize, target: Option<f64>, bound_fit: &str) -> PyResult<Self> {
        let fit: bounds::BoundFit = bound_fit.parse().map_err(PyValueError::new_err)?;
        let inner = stopping::StoppingPolicy::new(c0, horizon)
            .and_then(|p| p.with_target(target))
            .map_err(py_err)?
            .with_bound_fit(fit);
        Ok(PyPolicy { inner })
    }

    #[getter]
    fn c0(&self) -> f64 {
        self.inner.cost_per_slot
    }

    #[getter]
    fn horizon(&self) -> usize {
        self.inner.horizon
    }

    #[getter]
    fn target(&self) -> Option<f64> {
        self.inner.uncertainty_target
    }

    fn __repr__(&self) -> String {
        format!("{:?}", self.inner)
    }
}

/// Aggregate results of a batch of trials.
#[pyclass(name = "Metrics", module = "progressftx_py", get_all)]
struct PyMetrics {
    trials: usize,
    latency_mean: f64,
    latency_stderr: f64,
    accuracy: f64,
    entropy_mean: f64,
    outage_rate: f64,
    tx_prob: Vec<f64>,
}

#[pymethods]
impl PyMetrics {
    fn __repr__(&self) -> String {
        format!(
            "Metrics(trials={}, latency_mean={:.4}, accuracy={:.4}, outage_rate={:.4})",
            self.trials, self.latency_mean, self.accuracy, self.outage_rate
        )
    }
}

impl From<protocol::Metrics> for PyMetrics {
    fn from(m: protocol::Metrics) -> Self {
        PyMetrics {
            trials: m.trials,
            latency_mean: m.latency_mean,
            latency_stderr: m.latency_stderr,
            accuracy: m.accuracy,
            entropy_mean: m.entropy_mean,
            outage_rate: m.outage_rate,
            tx_prob: m.tx_prob,
        }
    }
}

fn scheme_kind(scheme: &str, h0: Option<f64>) -> PyResult<SchemeKind> {
    match (scheme, h0) {
        ("progressftx", None) => Ok(SchemeKind::ProgressFtx),
        ("random", None) => Ok(SchemeKind::RandomFeatureStopping),
        ("oneshot", Some(h0)) => Ok(SchemeKind::OneShot { h0 }),
        ("oneshot", None) => Err(PyValueError::new_err("oneshot needs h0")),
        ("progressftx" | "random", Some(_)) => Err(PyValueError::new_err("h0 only applies to oneshot")),
        (other, _) => Err(PyValueError::new_err(format!(
            "unknown scheme `{other}` (expected progressftx, random or oneshot)"
        ))),
    }
}

/// Runs `trials` seeded trials and returns each trial log as a JSON line.
#[pyfunction]
#[pyo3(signature = (model, channel, policy, scheme="progressftx", trials=1000, seed=1, h0=None))]
fn run_trials(
    py: Python<'_>,
    model: &PyGmModel,
    channel: PyChannel,
    policy: PyPolicy,
    scheme: &str,
    trials: usize,
    seed: u64,
    h0: Option<f64>,
) -> PyResult<Vec<String>> {
    let kind = scheme_kind(scheme, h0)?;
    let model = &model.inner;
    py.detach(|| {
        let table = GainTable::new(model);
        let sim = Simulator::new(model, &table, channel.inner, policy.inner, kind)?;
        let logs = simulate(&sim, model, trials, seed)?;
        Ok(logs.iter().map(|l| l.to_json_line()).collect())
    })
    .map_err(py_err)
}

/// Like `run_trials`, aggregated.
#[pyfunction]
#[pyo3(signature = (model, channel, policy, scheme="progressftx", trials=1000, seed=1, h0=None))]
fn run(
    py: Python<'_>,
    model: &PyGmModel,
    channel: PyChannel,
    policy: PyPolicy,
    scheme: &str,
    trials: usize,
    seed: u64,
    h0: Option<f64>,
) -> PyResult<PyMetrics> {
    let kind = scheme_kind(scheme, h0)?;
    let model = &model.inner;
    py.detach(|| {
        let table = GainTable::new(model);
        let sim = Simulator::new(model, &table, channel.inner, policy.inner, kind)?;
        protocol::metrics(&simulate(&sim, model, trials, seed)?, model)
    })
    .map(PyMetrics::from)
    .map_err(py_err)
}

/// Slots a one-shot transmission plans for target `h0`.
#[pyfunction]
#[pyo3(signature = (model, features_per_slot, h0, policy))]
fn plan_one_shot(model: &PyGmModel, features_per_slot: usize, h0: f64, policy: PyPolicy) -> PyResult<usize> {
    let table = GainTable::new(&model.inner);
    protocol::plan_one_shot(&table, features_per_slot, h0, &policy.inner).map_err(py_err)
}

/// Runs the sweep described by a config file. Returns one dict per row and
/// writes the CSV pair when `out` is given.
#[pyfunction]
#[pyo3(signature = (config, seed=None, out=None, workers=None))]
fn sweep(
    py: Python<'_>,
    config: PathBuf,
    seed: Option<u64>,
    out: Option<PathBuf>,
    workers: Option<usize>,
) -> PyResult<Vec<Py<pyo3::types::PyDict>>> {
    let mut cfg = ExperimentConfig::read(&config).map_err(py_err)?;
    if let Some(s) = seed {
        cfg.seed = s;
    }
    if let Some(w) = workers {
        cfg.workers = w;
    }
    let result = py.detach(|| run_sweep(&cfg)).map_err(py_err)?;
    if let Some(path) = out {
        emit_csv(&result, &path).map_err(py_err)?;
    }
    result
        .rows
        .iter()
        .zip(&result.tx_prob)
        .map(|(row, tx)| {
            let d = pyo3::types::PyDict::new(py);
            d.set_item("scheme", &row.scheme)?;
            d.set_item("c0", row.c0)?;
            d.set_item("H0", row.h0)?;
            d.set_item("H_tgt", row.h_tgt)?;
            d.set_item("trials", row.trials)?;
            d.set_item("latency_mean", row.latency_mean)?;
            d.set_item("latency_stderr", row.latency_stderr)?;
            d.set_item("accuracy", row.accuracy)?;
            d.set_item("entropy_mean", row.entropy_mean)?;
            d.set_item("outage_rate", row.outage_rate)?;
            d.set_item("seed", row.seed)?;
            d.set_item("config_hash", &row.config_hash)?;
            d.set_item("tx_prob", tx.clone())?;
            Ok(d.unbind())
        })
        .collect()
}

#[pyfunction]
fn binary_entropy(delta: f64) -> f64 {
    linclass::binary_entropy(delta)
}

#[pyfunction]
fn h_ub(delta: f64) -> f64 {
    bounds::h_ub(delta)
}

#[pyfunction]
#[pyo3(signature = (delta1, gain, tol=1e-10))]
fn expected_h_ub(delta1: f64, gain: f64, tol: f64) -> PyResult<f64> {
    bounds::expected_h_ub(delta1, gain, tol).map_err(py_err)
}

/// Fits `c1 * exp(-c2 * G)` over `grid`; returns `(c1, c2, expected)`.
#[pyfunction]
#[pyo3(signature = (delta1, grid, fit="fitted", tol=1e-10))]
fn calibrate(delta1: f64, grid: Vec<f64>, fit: &str, tol: f64) -> PyResult<(f64, f64, Vec<f64>)> {
    let fit: bounds::BoundFit = fit.parse().map_err(PyValueError::new_err)?;
    let p = bounds::calibrate(fit, delta1, &grid, tol).map_err(py_err)?;
    Ok((p.c1, p.c2, p.expected))
}

#[pyfunction]
fn default_profile() -> Vec<f64> {
    statmodel::default_profile()
}

#[pymodule]
fn progressftx_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyGmModel>()?;
    m.add_class::<PyChannel>()?;
    m.add_class::<PyPolicy>()?;
    m.add_class::<PyMetrics>()?;
    m.add_function(wrap_pyfunction!(run_trials, m)?)?;
    m.add_function(wrap_pyfunction!(run, m)?)?;
    m.add_function(wrap_pyfunction!(plan_one_shot, m)?)?;
    m.add_function(wrap_pyfunction!(sweep, m)?)?;
    m.add_function(wrap_pyfunction!(binary_entropy, m)?)?;
    m.add_function(wrap_pyfunction!(h_ub, m)?)?;
    m.add_function(wrap_pyfunction!(expected_h_ub, m)?)?;
    m.add_function(wrap_pyfunction!(calibrate, m)?)?;
    m.add_function(wrap_pyfunction!(default_profile, m)?)?;
    Ok(())
}
