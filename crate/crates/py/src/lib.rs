//! Python bindings for the `wpmec` solver.

use std::path::PathBuf;

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use wpmec::channel::synth_channels;
use wpmec::pipeline::{evaluate_row, row_seed, scheme_config, ResultRow};
use wpmec::scenario::build_scenario;
use wpmec::{Error, Scheme, SystemConfig};

fn to_py(e: Error) -> PyErr {
    match e {
        Error::InvalidConfig(_) | Error::Parse { .. } | Error::Io { .. } | Error::Domain(_) | Error::DimensionMismatch { .. } => {
            PyValueError::new_err(e.to_string())
        }
        _ => PyRuntimeError::new_err(e.to_string()),
    }
}

fn scheme(tag: &str) -> PyResult<Scheme> {
    Scheme::parse(tag).ok_or_else(|| {
        let known: Vec<&str> = Scheme::ALL.iter().map(|s| s.tag()).collect();
        PyValueError::new_err(format!("unknown scheme {tag:?}; expected one of {known:?}"))
    })
}

/// System and algorithm parameters.
#[pyclass(name = "Config", module = "wpmec_py")]
struct PyConfig {
    inner: SystemConfig,
}

#[pymethods]
impl PyConfig {
    /// Desk-scale defaults, optionally overridden by keyword (config-file keys).
    #[new]
    #[pyo3(signature = (**overrides))]
    fn new(overrides: Option<&Bound<'_, PyDict>>) -> PyResult<Self> {
        let mut c = PyConfig {
            inner: SystemConfig::default(),
        };
        if let Some(kw) = overrides {
            for (k, v) in kw.iter() {
                c.set(&k.extract::<String>()?, &v.str()?.to_string())?;
            }
        }
        Ok(c)
    }

    #[staticmethod]
    fn table2() -> Self {
        PyConfig {
            inner: SystemConfig::table2(),
        }
    }

    /// Defaults overridden by a `key = value` file.
    #[staticmethod]
    fn from_file(path: PathBuf) -> PyResult<Self> {
        let inner = wpmec::io::load_config(&path, SystemConfig::default()).map_err(to_py)?;
        Ok(PyConfig { inner })
    }

    fn set(&mut self, key: &str, value: &str) -> PyResult<()> {
        let mut next = self.inner.clone();
        next.set(key, value).map_err(|m| PyValueError::new_err(format!("{key}: {m}")))?;
        next.validate().map_err(to_py)?;
        self.inner = next;
        Ok(())
    }

    fn get(&self, key: &str) -> PyResult<String> {
        self.inner
            .entries()
            .into_iter()
            .find(|(k, _)| *k == key)
            .map(|(_, v)| v)
            .ok_or_else(|| PyValueError::new_err(format!("unknown key {key:?}")))
    }

    fn to_dict<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyDict>> {
        let d = PyDict::new(py);
        for (k, v) in self.inner.entries() {
            d.set_item(k, v)?;
        }
        Ok(d)
    }

    fn render(&self) -> String {
        wpmec::io::render_config(&self.inner)
    }

    fn __repr__(&self) -> String {
        let c = &self.inner;
        format!("Config(k={}, b={}, m={}, i={}, n={}, p_max_w={})", c.k, c.b, c.m, c.i, c.n, c.p_max)
    }
}

/// A solved block: time split, powers, frequencies and reflection phases.
#[pyclass(name = "Allocation", module = "wpmec_py", frozen)]
struct PyAllocation {
    inner: wpmec::Allocation,
    issues: Vec<String>,
}

#[pymethods]
impl PyAllocation {
    #[getter]
    fn tau1(&self) -> f64 {
        self.inner.tau1
    }
    #[getter]
    fn tau2(&self) -> f64 {
        self.inner.tau2
    }
    #[getter]
    fn t1(&self) -> f64 {
        self.inner.t1
    }
    #[getter]
    fn power_w(&self) -> Vec<f64> {
        self.inner.p.clone()
    }
    #[getter]
    fn freq_hz(&self) -> Vec<f64> {
        self.inner.f.clone()
    }
    #[getter]
    fn theta_energy(&self) -> Vec<f64> {
        self.inner.profile_e.theta.clone()
    }
    #[getter]
    fn theta_offload(&self) -> Vec<f64> {
        self.inner.profile_i.theta.clone()
    }
    #[getter]
    fn objective_bits(&self) -> f64 {
        self.inner.objective_bits
    }
    #[getter]
    fn irs(&self) -> bool {
        self.inner.irs
    }
    /// Relative rank residual of the WD charging covariance.
    #[getter]
    fn q_rank_residual(&self) -> f64 {
        wpmec::convex::rank_residual(&self.inner.q)
    }
    /// Constraint violations found by the independent audit (empty if feasible).
    #[getter]
    fn violations(&self) -> Vec<String> {
        self.issues.clone()
    }

    fn __repr__(&self) -> String {
        format!(
            "Allocation(objective_bits={:.6e}, tau1={:.4}, tau2={:.4}, t1={:.4})",
            self.inner.objective_bits, self.inner.tau1, self.inner.tau2, self.inner.t1
        )
    }
}

fn row_dict<'py>(py: Python<'py>, r: &ResultRow) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("sweep_param", &r.sweep_param)?;
    d.set_item("value", r.value)?;
    d.set_item("seed", r.seed)?;
    d.set_item("scheme", r.scheme.tag())?;
    d.set_item("objective_bits", r.objective_bits)?;
    d.set_item("sum_rate_bps", r.sum_rate_bps)?;
    d.set_item("tau1_s", r.tau1_s)?;
    d.set_item("tau2_s", r.tau2_s)?;
    d.set_item("t1_s", r.t1_s)?;
    d.set_item("inner_iters", r.inner_iters)?;
    d.set_item("outer_iters", r.outer_iters)?;
    d.set_item("status", &r.status)?;
    d.set_item("wall_s", r.wall_s)?;
    Ok(d)
}

/// Solves one instance; same seeding as `wpmec solve --seed`.
#[pyfunction]
#[pyo3(signature = (config = None, seed = 0, scheme = "proposed"))]
fn solve<'py>(
    py: Python<'py>,
    config: Option<PyRef<'py, PyConfig>>,
    seed: u64,
    scheme: &str,
) -> PyResult<(PyAllocation, Bound<'py, PyDict>)> {
    let kind = self::scheme(scheme)?;
    let cfg = config.map(|c| c.inner.clone()).unwrap_or_default();
    cfg.validate().map_err(to_py)?;
    let (row, out, issues) = py.detach(|| {
        let (row, out) = evaluate_row("none", 0.0, seed, kind, &cfg, None, seed);
        let issues = out.as_ref().map(|(alloc, _)| {
            let rs = row_seed(seed, seed);
            build_scenario(&cfg, cfg.cluster_x, rs)
                .and_then(|sc| synth_channels(&sc, &cfg, rs))
                .map(|ch| {
                    let ch = if alloc.irs { ch } else { ch.without_irs() };
                    if cfg.csi_delta == 0.0 {
                        wpmec::audit(alloc, &ch, &scheme_config(kind, &cfg), 1e-6)
                    } else {
                        Vec::new()
                    }
                })
        });
        (row, out, issues)
    });
    let Some((alloc, _)) = out else {
        return Err(PyRuntimeError::new_err(format!("{}: {}", kind.tag(), row.status)));
    };
    let issues = match issues {
        Some(Ok(v)) => v,
        Some(Err(e)) => return Err(to_py(e)),
        None => Vec::new(),
    };
    Ok((PyAllocation { inner: alloc, issues }, row_dict(py, &row)?))
}

/// Runs a sweep file and returns its rows as dicts.
#[pyfunction]
#[pyo3(signature = (spec_path, config = None, master_seed = 0))]
fn sweep<'py>(
    py: Python<'py>,
    spec_path: PathBuf,
    config: Option<PyRef<'py, PyConfig>>,
    master_seed: u64,
) -> PyResult<Vec<Bound<'py, PyDict>>> {
    let cfg = config.map(|c| c.inner.clone()).unwrap_or_default();
    let spec = wpmec::io::load_sweep(&spec_path).map_err(to_py)?;
    let rows = py.detach(|| wpmec::run_sweep(&spec, &cfg, master_seed)).map_err(to_py)?;
    rows.iter().map(|r| row_dict(py, r)).collect()
}

/// `C0 (d / d0)^-kappa`.
#[pyfunction]
#[pyo3(signature = (d, kappa, c0 = 1e-3, d0 = 1.0))]
fn path_loss(d: f64, kappa: f64, c0: f64, d0: f64) -> PyResult<f64> {
    wpmec::channel::path_loss(d, kappa, c0, d0).map_err(to_py)
}

/// Reflection amplitude at phase `theta` under the practical model.
#[pyfunction]
#[pyo3(signature = (theta, beta_min = 0.2, phi = 0.43 * std::f64::consts::PI, alpha = 1.6))]
fn amplitude(theta: f64, beta_min: f64, phi: f64, alpha: f64) -> PyResult<f64> {
    let model = wpmec::PhaseModel { beta_min, phi, alpha };
    model.validate().map_err(to_py)?;
    Ok(wpmec::phase::amplitude(theta, &model))
}

#[pymodule]
fn wpmec_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyConfig>()?;
    m.add_class::<PyAllocation>()?;
    m.add_function(wrap_pyfunction!(solve, m)?)?;
    m.add_function(wrap_pyfunction!(sweep, m)?)?;
    m.add_function(wrap_pyfunction!(path_loss, m)?)?;
    m.add_function(wrap_pyfunction!(amplitude, m)?)?;
    m.add("SCHEMES", Scheme::ALL.iter().map(|s| s.tag()).collect::<Vec<_>>())?;
    Ok(())
}
