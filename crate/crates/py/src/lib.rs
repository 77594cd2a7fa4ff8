//! Python bindings: parameters, event streams, simulation, maximum-likelihood
//! fitting, branching-ratio risk and copula CoVaR.
//!
//! Structured results (fits, risk summaries, CoVaR rows) come back as plain
//! dicts with the same field names as the JSON the command-line tool writes.

use hawkesflock::covar::{
    self, fit_copula as core_fit_copula, CopulaSpec, CovarConfig, Family, MarginalKind,
};
use hawkesflock::estimate::{self, FitOptions, Model};
use hawkesflock::io;
use hawkesflock::model::{self, Event, FlockParams, Mark, PARAM_NAMES};
use hawkesflock::recovery::BENCHMARK;
use hawkesflock::risk;
use hawkesflock::sim::{self, SimConfig, SimError};
use pyo3::exceptions::{PyIndexError, PyKeyError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use serde::Serialize;
use std::path::PathBuf;

fn value_err(e: impl ToString) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn to_py<'py, T: Serialize>(py: Python<'py>, v: &T) -> PyResult<Bound<'py, PyAny>> {
    let s = serde_json::to_string(v).map_err(value_err)?;
    py.import("json")?.call_method1("loads", (s,))
}

#[pyclass(name = "Params", module = "hawkesflock_py", skip_from_py_object)]
#[derive(Clone)]
pub struct Params {
    pub inner: FlockParams,
}

#[pymethods]
impl Params {
    #[new]
    #[pyo3(signature = (mu1, beta1, alpha1s, alpha1c, alpha1n, alpha1w, mu2, beta2, alpha2s, alpha2c, alpha2n, alpha2w))]
    #[allow(clippy::too_many_arguments)]
    fn new(
        mu1: f64,
        beta1: f64,
        alpha1s: f64,
        alpha1c: f64,
        alpha1n: f64,
        alpha1w: f64,
        mu2: f64,
        beta2: f64,
        alpha2s: f64,
        alpha2c: f64,
        alpha2n: f64,
        alpha2w: f64,
    ) -> PyResult<Self> {
        Self::from_list(vec![
            mu1, beta1, alpha1s, alpha1c, alpha1n, alpha1w, mu2, beta2, alpha2s, alpha2c, alpha2n, alpha2w,
        ])
    }

    /// Values in the order of `Params.names()`.
    #[staticmethod]
    fn from_list(values: Vec<f64>) -> PyResult<Self> {
        let inner = FlockParams::from_slice(&values).map_err(value_err)?;
        inner.validated().map_err(value_err)?;
        Ok(Self { inner })
    }

    /// Flat 12-key mapping; unknown or missing keys raise ValueError.
    #[staticmethod]
    fn from_dict(py: Python<'_>, d: Bound<'_, PyAny>) -> PyResult<Self> {
        let text: String = py.import("json")?.call_method1("dumps", (d,))?.extract()?;
        let inner = io::parse_params(&text).map_err(value_err)?;
        inner.validated().map_err(value_err)?;
        Ok(Self { inner })
    }

    /// Reference parameters of benchmark column 1, 2 or 3.
    #[staticmethod]
    fn benchmark(column: usize) -> PyResult<Self> {
        if !(1..=3).contains(&column) {
            return Err(value_err(format!("column must be 1, 2 or 3, got {column}")));
        }
        Ok(Self {
            inner: BENCHMARK[column - 1].params(),
        })
    }

    #[staticmethod]
    fn names() -> Vec<&'static str> {
        PARAM_NAMES.to_vec()
    }

    fn to_list(&self) -> Vec<f64> {
        self.inner.to_array().to_vec()
    }

    fn to_dict<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, &self.inner)
    }

    /// Closed-form spectral radius of the branching matrix.
    fn spectral_radius(&self) -> f64 {
        risk::spectral_radius(&self.inner).rho
    }

    fn __getitem__(&self, name: &str) -> PyResult<f64> {
        PARAM_NAMES
            .iter()
            .position(|&n| n == name)
            .map(|i| self.inner.to_array()[i])
            .ok_or_else(|| PyKeyError::new_err(name.to_string()))
    }

    fn __eq__(&self, other: PyRef<'_, Self>) -> bool {
        self.inner == other.inner
    }

    fn __repr__(&self) -> String {
        let body: Vec<String> = PARAM_NAMES
            .iter()
            .zip(self.inner.to_array())
            .map(|(n, v)| format!("{n}={v}"))
            .collect();
        format!("Params({})", body.join(", "))
    }
}

/// Marked event times. Marks are 0 = 1u, 1 = 1d, 2 = 2u, 3 = 2d.
#[pyclass(name = "EventStream", module = "hawkesflock_py", skip_from_py_object)]
#[derive(Clone)]
pub struct EventStream {
    pub inner: model::EventStream,
}

#[pymethods]
impl EventStream {
    #[new]
    #[pyo3(signature = (times, marks, horizon, init1 = 0.0, init2 = 0.0, tick1 = 1.0, tick2 = 1.0))]
    fn new(
        times: Vec<f64>,
        marks: Vec<usize>,
        horizon: f64,
        init1: f64,
        init2: f64,
        tick1: f64,
        tick2: f64,
    ) -> PyResult<Self> {
        if times.len() != marks.len() {
            return Err(value_err(format!("{} times but {} marks", times.len(), marks.len())));
        }
        let events = times
            .iter()
            .zip(&marks)
            .map(|(&time, &m)| {
                Mark::from_index(m)
                    .map(|mark| Event { time, mark })
                    .ok_or_else(|| PyIndexError::new_err(format!("mark {m} outside 0..4")))
            })
            .collect::<PyResult<Vec<_>>>()?;
        let mut inner = model::EventStream::new(events, horizon, init1, init2).map_err(value_err)?;
        inner.tick1 = tick1;
        inner.tick2 = tick2;
        inner.validate().map_err(value_err)?;
        Ok(Self { inner })
    }

    /// Event CSV plus its JSON sidecar.
    #[staticmethod]
    fn read(path: PathBuf) -> PyResult<Self> {
        let (inner, _) = io::read_stream(&path).map_err(value_err)?;
        Ok(Self { inner })
    }

    fn write(&self, path: PathBuf) -> PyResult<()> {
        io::write_stream(&path, &self.inner, &io::Sidecar::of(&self.inner)).map_err(value_err)?;
        Ok(())
    }

    #[getter]
    fn times(&self) -> Vec<f64> {
        self.inner.events.iter().map(|e| e.time).collect()
    }

    #[getter]
    fn marks(&self) -> Vec<usize> {
        self.inner.events.iter().map(|e| e.mark.index()).collect()
    }

    #[getter]
    fn horizon(&self) -> f64 {
        self.inner.horizon
    }

    /// Events per component in mark order.
    fn counts(&self) -> Vec<usize> {
        self.inner.counts().to_vec()
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn __repr__(&self) -> String {
        format!("EventStream(n={}, horizon={})", self.inner.len(), self.inner.horizon)
    }
}

#[pyfunction]
#[pyo3(signature = (params, horizon, seed, burnin = None, max_events = None))]
fn simulate(
    py: Python<'_>,
    params: PyRef<'_, Params>,
    horizon: f64,
    seed: u64,
    burnin: Option<f64>,
    max_events: Option<usize>,
) -> PyResult<EventStream> {
    let mut cfg = SimConfig::new(params.inner, horizon, seed);
    cfg.burnin = burnin;
    if let Some(m) = max_events {
        cfg.max_events = m;
    }
    let r = py.detach(|| sim::simulate(&cfg));
    match r {
        Ok(inner) => Ok(EventStream { inner }),
        Err(e @ SimError::Explosive { .. }) => Err(PyRuntimeError::new_err(e.to_string())),
        Err(e) => Err(value_err(e)),
    }
}

#[pyfunction]
fn loglik(stream: PyRef<'_, EventStream>, params: PyRef<'_, Params>) -> f64 {
    estimate::loglik(&stream.inner, &params.inner)
}

/// Log-likelihood and its gradient in `Params.names()` order.
#[pyfunction]
fn loglik_grad(stream: PyRef<'_, EventStream>, params: PyRef<'_, Params>) -> (f64, Vec<f64>) {
    let (ll, g) = estimate::loglik_grad(&stream.inner, &params.inner);
    (ll, g.to_vec())
}

#[pyfunction]
#[pyo3(signature = (stream, model = "flocking", init = None, max_iter = None))]
fn fit<'py>(
    py: Python<'py>,
    stream: PyRef<'_, EventStream>,
    model: &str,
    init: Option<PyRef<'_, Params>>,
    max_iter: Option<usize>,
) -> PyResult<Bound<'py, PyAny>> {
    let model: Model = model.parse().map_err(value_err)?;
    let mut opts = FitOptions::default();
    if let Some(m) = max_iter {
        opts.max_iter = m;
    }
    let init = init.map(|p| p.inner);
    let s = stream.inner.clone();
    let r = py
        .detach(|| estimate::fit(&s, model, init.as_ref(), &opts))
        .map_err(value_err)?;
    to_py(py, &r)
}

/// Spectral radius, branching entries and the gap share `p` (empirical when
/// a stream is given, 0.5 otherwise).
#[pyfunction]
#[pyo3(signature = (params, stream = None))]
fn risk_summary<'py>(
    py: Python<'py>,
    params: PyRef<'_, Params>,
    stream: Option<PyRef<'_, EventStream>>,
) -> PyResult<Bound<'py, PyAny>> {
    let path = stream.map(|s| sim::price_path(&s.inner));
    to_py(py, &risk::risk_summary(&params.inner, path.as_ref()))
}

fn spec(family: &str, theta: f64, nu: Option<f64>) -> PyResult<CopulaSpec> {
    let f: Family = family.parse().map_err(value_err)?;
    CopulaSpec::new(f, theta, nu).map_err(value_err)
}

#[pyfunction]
#[pyo3(signature = (family, theta, u, v, nu = None))]
fn copula_cdf(family: &str, theta: f64, u: f64, v: f64, nu: Option<f64>) -> PyResult<f64> {
    Ok(spec(family, theta, nu)?.cdf(u, v))
}

/// `∂C(u, v)/∂v`, the conditional distribution of U given V = v.
#[pyfunction]
#[pyo3(signature = (family, theta, u, v, nu = None))]
fn copula_h(family: &str, theta: f64, u: f64, v: f64, nu: Option<f64>) -> PyResult<f64> {
    Ok(spec(family, theta, nu)?.h(u, v))
}

#[pyfunction]
#[pyo3(signature = (family, theta, w, v, nu = None))]
fn copula_h_inv(family: &str, theta: f64, w: f64, v: f64, nu: Option<f64>) -> PyResult<f64> {
    Ok(spec(family, theta, nu)?.h_inv(w, v))
}

/// Pseudo-likelihood fit of one family to pseudo-observations in (0, 1).
#[pyfunction]
fn fit_copula<'py>(py: Python<'py>, u: Vec<f64>, v: Vec<f64>, family: &str) -> PyResult<Bound<'py, PyAny>> {
    let f: Family = family.parse().map_err(value_err)?;
    to_py(py, &core_fit_copula(&u, &v, f).map_err(value_err)?)
}

/// Log returns of a close series.
#[pyfunction]
fn returns(closes: Vec<f64>) -> PyResult<Vec<f64>> {
    covar::returns(&closes).map_err(value_err)
}

fn covar_config(
    alpha: f64,
    beta: f64,
    window: usize,
    families: Option<Vec<String>>,
    marginal: &str,
) -> PyResult<CovarConfig> {
    let mut cfg = CovarConfig {
        alpha,
        beta,
        window,
        marginal: marginal.parse::<MarginalKind>().map_err(value_err)?,
        ..CovarConfig::default()
    };
    if let Some(fs) = families {
        cfg.families = fs
            .iter()
            .map(|s| s.parse::<Family>().map_err(value_err))
            .collect::<PyResult<_>>()?;
    }
    Ok(cfg)
}

/// CoVaR of one window of paired returns, all families fitted and the best
/// by AIC used.
#[pyfunction]
#[pyo3(signature = (r1, r2, alpha = 0.05, beta = 0.05, families = None, marginal = "empirical"))]
fn covar_window<'py>(
    py: Python<'py>,
    r1: Vec<f64>,
    r2: Vec<f64>,
    alpha: f64,
    beta: f64,
    families: Option<Vec<String>>,
    marginal: &str,
) -> PyResult<Bound<'py, PyAny>> {
    let cfg = covar_config(alpha, beta, r1.len(), families, marginal)?;
    let row = py
        .detach(|| covar::covar_window("", &r1, &r2, &cfg))
        .map_err(value_err)?;
    to_py(py, &row)
}

/// Rolling windows labelled by the date of their last return. Failed windows
/// come back as `{"date": ..., "error": ...}`.
#[pyfunction]
#[pyo3(signature = (dates, r1, r2, window = 250, alpha = 0.05, beta = 0.05, families = None, marginal = "empirical"))]
#[allow(clippy::too_many_arguments)]
fn rolling_covar<'py>(
    py: Python<'py>,
    dates: Vec<String>,
    r1: Vec<f64>,
    r2: Vec<f64>,
    window: usize,
    alpha: f64,
    beta: f64,
    families: Option<Vec<String>>,
    marginal: &str,
) -> PyResult<Bound<'py, PyAny>> {
    let cfg = covar_config(alpha, beta, window, families, marginal)?;
    let rows = py
        .detach(|| covar::rolling_covar(&dates, &r1, &r2, &cfg))
        .map_err(value_err)?;
    let out: Vec<serde_json::Value> = rows
        .into_iter()
        .map(|(date, r)| match r {
            Ok(row) => serde_json::to_value(row).unwrap_or_default(),
            Err(e) => serde_json::json!({ "date": date, "error": e.to_string() }),
        })
        .collect();
    to_py(py, &out)
}

#[pymodule]
fn hawkesflock_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Params>()?;
    m.add_class::<EventStream>()?;
    m.add_function(wrap_pyfunction!(simulate, m)?)?;
    m.add_function(wrap_pyfunction!(loglik, m)?)?;
    m.add_function(wrap_pyfunction!(loglik_grad, m)?)?;
    m.add_function(wrap_pyfunction!(fit, m)?)?;
    m.add_function(wrap_pyfunction!(risk_summary, m)?)?;
    m.add_function(wrap_pyfunction!(copula_cdf, m)?)?;
    m.add_function(wrap_pyfunction!(copula_h, m)?)?;
    m.add_function(wrap_pyfunction!(copula_h_inv, m)?)?;
    m.add_function(wrap_pyfunction!(fit_copula, m)?)?;
    m.add_function(wrap_pyfunction!(returns, m)?)?;
    m.add_function(wrap_pyfunction!(covar_window, m)?)?;
    m.add_function(wrap_pyfunction!(rolling_covar, m)?)?;
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    Ok(())
}
