//! Python bindings for `sinr_moments`.
//!
//! Thresholds are given in dB, results come back as `(value, std_error)`.

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

use sinr_moments::coverage::{coverage_count_distribution, db_to_linear, k_coverage, NetworkScenario};
use sinr_moments::error::Error;
use sinr_moments::figures::{preset, run_figure};
use sinr_moments::icsc::{delta_ic, delta_sc};
use sinr_moments::moments::{factorial_moment_stinr, ChannelParams, MomentQuery};
use sinr_moments::netsim::simulate_tiered;
use sinr_moments::qmc::{Estimate, QmcConfig};
use sinr_moments::scenario::ScenarioFile;

fn py_err(e: Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn pair(e: Estimate) -> (f64, f64) {
    (e.value, e.std_error)
}

fn qmc(points: Option<usize>, seed: Option<u64>) -> PyResult<QmcConfig> {
    let mut q = QmcConfig::default();
    if let Some(n) = points {
        q = q.with_points(n);
    }
    if let Some(s) = seed {
        q = q.with_seed(s);
    }
    q.validate().map_err(py_err)?;
    Ok(q)
}

fn single_tier_channel(beta: f64, noise: f64, gamma: f64) -> PyResult<ChannelParams> {
    let mut s = NetworkScenario::single_tier(beta, 1.0).map_err(py_err)?;
    s.noise = noise;
    s.gamma = gamma;
    s.validate().map_err(py_err)?;
    s.channel().map_err(py_err)
}

/// A network scenario backed by the JSON scenario format.
#[pyclass(name = "Scenario")]
struct PyScenario {
    file: ScenarioFile,
    scenario: NetworkScenario,
}

impl PyScenario {
    fn from_file(file: ScenarioFile) -> PyResult<Self> {
        let scenario = file.scenario().map_err(py_err)?;
        Ok(PyScenario { file, scenario })
    }

    fn qmc(&self, points: Option<usize>) -> PyResult<QmcConfig> {
        let mut q = self.file.qmc_config().map_err(py_err)?;
        if let Some(n) = points {
            q = q.with_points(n);
            q.validate().map_err(py_err)?;
        }
        Ok(q)
    }
}

#[pymethods]
impl PyScenario {
    /// Single tier with `λ = 1`, `K = 1` and unit power.
    #[staticmethod]
    #[pyo3(signature = (beta, tau_db, gamma = 1.0, noise = 0.0))]
    fn single_tier(beta: f64, tau_db: f64, gamma: f64, noise: f64) -> PyResult<Self> {
        let mut s = NetworkScenario::single_tier(beta, db_to_linear(tau_db)).map_err(py_err)?;
        s.gamma = gamma;
        s.noise = noise;
        s.validate().map_err(py_err)?;
        Self::from_file(ScenarioFile::from_scenario(&s))
    }

    #[staticmethod]
    fn template() -> PyResult<Self> {
        Self::from_file(ScenarioFile::template())
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        Self::from_file(ScenarioFile::parse(text).map_err(py_err)?)
    }

    fn to_json(&self) -> String {
        self.file.to_json()
    }

    #[getter]
    fn tiers(&self) -> usize {
        self.scenario.tiers.len()
    }

    /// Probability that at least `k` stations cover the user.
    #[pyo3(signature = (k, points = None))]
    fn k_coverage(&self, k: usize, points: Option<usize>) -> PyResult<(f64, f64)> {
        k_coverage(k, &self.scenario, &self.qmc(points)?).map(pair).map_err(py_err)
    }

    /// `P(N = k)` for `k = 0..=n_max`.
    #[pyo3(signature = (points = None))]
    fn coverage_pmf(&self, points: Option<usize>) -> PyResult<Vec<(f64, f64)>> {
        let d = coverage_count_distribution(&self.scenario, &self.qmc(points)?).map_err(py_err)?;
        Ok(d.pmf.into_iter().map(pair).collect())
    }

    /// Monte Carlo estimate of `k_coverage` with each tier's own threshold.
    #[pyo3(signature = (k, trials = None, seed = None))]
    fn simulated_coverage(&self, k: usize, trials: Option<usize>, seed: Option<u64>) -> PyResult<(f64, f64)> {
        let mut cfg = self.file.sim_config().map_err(py_err)?;
        if let Some(t) = trials {
            cfg.trials = t;
        }
        if let Some(s) = seed {
            cfg.seed = s;
        }
        cfg.top_k = cfg.top_k.max(k);
        let (batch, labels) = simulate_tiered(&self.scenario, &cfg).map_err(py_err)?;
        let taus: Vec<f64> = self.scenario.tiers.iter().map(|t| t.tau).collect();
        batch.empirical_tier_coverage(&labels, k, &taus).map(pair).map_err(py_err)
    }

    fn __repr__(&self) -> String {
        format!(
            "Scenario(beta={}, gamma={}, noise={}, tiers={})",
            self.scenario.path_loss.beta,
            self.scenario.gamma,
            self.scenario.noise,
            self.scenario.tiers.len()
        )
    }
}

/// Factorial moment measure of the STINR process above `thresholds` (linear STINR values).
#[pyfunction]
#[pyo3(signature = (thresholds, beta, noise = 0.0, gamma = 1.0, points = None, seed = None))]
fn factorial_moment(
    thresholds: Vec<f64>,
    beta: f64,
    noise: f64,
    gamma: f64,
    points: Option<usize>,
    seed: Option<u64>,
) -> PyResult<(f64, f64)> {
    let q = MomentQuery::new(thresholds).map_err(py_err)?;
    let p = single_tier_channel(beta, noise, gamma)?;
    factorial_moment_stinr(&q, &p, &qmc(points, seed)?).map(pair).map_err(py_err)
}

/// Coverage gain from cancelling the `k - 1` strongest interferers.
#[pyfunction(name = "delta_ic")]
#[pyo3(signature = (k, tau_db, epsilon_db, beta, gamma = 1.0, points = None, seed = None))]
fn py_delta_ic(
    k: usize,
    tau_db: f64,
    epsilon_db: f64,
    beta: f64,
    gamma: f64,
    points: Option<usize>,
    seed: Option<u64>,
) -> PyResult<(f64, f64)> {
    let p = single_tier_channel(beta, 0.0, gamma)?;
    delta_ic(k, db_to_linear(tau_db), db_to_linear(epsilon_db), &p, &qmc(points, seed)?)
        .map(pair)
        .map_err(py_err)
}

/// Coverage gain from cancelling and combining the `k` strongest signals.
#[pyfunction(name = "delta_sc")]
#[pyo3(signature = (k, tau_db, epsilon_db, beta, gamma = 1.0, points = None, seed = None))]
fn py_delta_sc(
    k: usize,
    tau_db: f64,
    epsilon_db: f64,
    beta: f64,
    gamma: f64,
    points: Option<usize>,
    seed: Option<u64>,
) -> PyResult<(f64, f64)> {
    let p = single_tier_channel(beta, 0.0, gamma)?;
    delta_sc(k, db_to_linear(tau_db), db_to_linear(epsilon_db), &p, &qmc(points, seed)?)
        .map(pair)
        .map_err(py_err)
}

/// Analytic table of a named figure preset as CSV text.
#[pyfunction]
#[pyo3(signature = (name, points = None, seed = None))]
fn figure(name: &str, points: Option<usize>, seed: Option<u64>) -> PyResult<String> {
    let fig = preset(name).map_err(py_err)?;
    let table = run_figure(&fig, &qmc(points, seed)?, None).map_err(py_err)?;
    Ok(table.to_csv_string())
}

#[pymodule]
fn sinr_moments_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyScenario>()?;
    m.add_function(wrap_pyfunction!(factorial_moment, m)?)?;
    m.add_function(wrap_pyfunction!(py_delta_ic, m)?)?;
    m.add_function(wrap_pyfunction!(py_delta_sc, m)?)?;
    m.add_function(wrap_pyfunction!(figure, m)?)?;
    Ok(())
}
