//! Python bindings for the strip-code demon toolkit: geometry queries,
//! single shots, Monte Carlo point estimates, the energy ledger, and
//! full experiment sweeps driven by a JSON spec.

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyDict;

use topodemon_core::experiments::{self, ExperimentSpec};
use topodemon_core::geometry::{self, CodeGeometry};
use topodemon_core::noise::NoiseParams;
use topodemon_core::protocol::{self, InfoChannel};
use topodemon_core::rngstream::shot_rng;
use topodemon_core::thermo::{self, ThermoParams};

fn err(e: topodemon_core::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

/// The strip geometry: N columns between the agents, code distance L.
#[pyclass(frozen)]
struct Geometry {
    inner: CodeGeometry,
}

#[pymethods]
impl Geometry {
    #[new]
    fn new(n: usize, l: usize) -> PyResult<Self> {
        Ok(Geometry { inner: geometry::build_geometry(n, l).map_err(err)? })
    }

    #[getter]
    fn n(&self) -> usize {
        self.inner.n_cols
    }

    #[getter]
    fn l(&self) -> usize {
        self.inner.distance
    }

    #[getter]
    fn num_edges(&self) -> usize {
        self.inner.n_edges()
    }

    #[getter]
    fn num_vertices(&self) -> usize {
        self.inner.n_vertices()
    }

    #[getter]
    fn num_plaquettes(&self) -> usize {
        self.inner.n_plaquettes()
    }

    /// The strip invariant `|E| - |V| - |P| = -1`.
    #[getter]
    fn euler_characteristic(&self) -> i64 {
        self.inner.n_edges() as i64 - self.inner.n_vertices() as i64
            - self.inner.n_plaquettes() as i64
    }

    /// Edge support of the horizontal logical-Z string along `row`.
    fn logical_z(&self, row: usize) -> PyResult<Vec<usize>> {
        Ok(geometry::logical_z(&self.inner, row).map_err(err)?.support)
    }

    /// Edge support of the vertical logical-X dual path along `col`.
    fn logical_x(&self, col: usize) -> PyResult<Vec<usize>> {
        Ok(geometry::logical_x(&self.inner, col).map_err(err)?.support)
    }

    /// Whether the Z strings on two rows differ by a stabilizer product.
    fn path_independent(&self, row_a: usize, row_b: usize) -> PyResult<bool> {
        geometry::verify_path_independence(&self.inner, row_a, row_b).map_err(err)
    }

    fn __repr__(&self) -> String {
        format!("Geometry(n={}, l={})", self.inner.n_cols, self.inner.distance)
    }
}

/// Run one decoded shot; returns (success, alice_spent, syndromes_available).
#[pyfunction]
#[pyo3(signature = (n, l, p, rounds, seed, meas_factor = 0.1))]
fn run_shot(
    n: usize,
    l: usize,
    p: f64,
    rounds: usize,
    seed: u64,
    meas_factor: f64,
) -> PyResult<(bool, f64, usize)> {
    let geom = geometry::build_geometry(n, l).map_err(err)?;
    let noise = NoiseParams::with_meas_factor(p, meas_factor).map_err(err)?;
    let params = ThermoParams::default();
    let mut rng = shot_rng(seed, 0, 0);
    let outcome = protocol::run_shot(&geom, &noise, rounds, &params, seed, &mut rng).map_err(err)?;
    Ok((outcome.success, outcome.alice_spent, outcome.syndromes_available))
}

/// Monte Carlo decoding success estimate; returns (p_succ, wilson_low, wilson_high).
#[pyfunction]
#[pyo3(signature = (n, l, p, rounds, shots, master_seed, point = 0, meas_factor = 0.1))]
#[allow(clippy::too_many_arguments)]
fn estimate_p_succ(
    py: Python<'_>,
    n: usize,
    l: usize,
    p: f64,
    rounds: usize,
    shots: u32,
    master_seed: u64,
    point: u32,
    meas_factor: f64,
) -> PyResult<(f64, f64, f64)> {
    let geom = geometry::build_geometry(n, l).map_err(err)?;
    let noise = NoiseParams::with_meas_factor(p, meas_factor).map_err(err)?;
    let (p_succ, (low, high)) = py
        .detach(|| experiments::estimate_p_succ(&geom, &noise, rounds, shots, master_seed, point))
        .map_err(err)?;
    Ok((p_succ, low, high))
}

/// Success probability under an information fraction `f` with onset
/// exponent `alpha`: `1/2 + (p_raw - 1/2) f^alpha`, clamped to [1/2, 1].
#[pyfunction]
#[pyo3(signature = (fraction, alpha = 2.7, p_raw_full = 1.0))]
fn effective_success(fraction: f64, alpha: f64, p_raw_full: f64) -> PyResult<f64> {
    protocol::effective_success(&InfoChannel { fraction, alpha, p_raw_full }).map_err(err)
}

fn thermo_params(delta_e: f64, epsilon_m: Option<f64>, r0: f64) -> ThermoParams {
    let mut params = ThermoParams { delta_e, r0, ..ThermoParams::default() };
    if let Some(e) = epsilon_m {
        params.epsilon_m = e;
    }
    params
}

/// Full energy and entropy ledger at one operating point, as a dict.
#[pyfunction]
#[pyo3(signature = (p_succ, p, distance, separation, mi_estimate = 0.0,
                    delta_e = thermo::DEFAULT_DELTA_E, epsilon_m = None, r0 = 1.0))]
#[allow(clippy::too_many_arguments)]
fn ledger<'py>(
    py: Python<'py>,
    p_succ: f64,
    p: f64,
    distance: usize,
    separation: usize,
    mi_estimate: f64,
    delta_e: f64,
    epsilon_m: Option<f64>,
    r0: f64,
) -> PyResult<Bound<'py, PyDict>> {
    let params = thermo_params(delta_e, epsilon_m, r0);
    let lg = thermo::ledger(p_succ, p, &params, distance, separation, mi_estimate).map_err(err)?;
    let d = PyDict::new(py);
    d.set_item("p_succ", lg.p_succ)?;
    d.set_item("kbt", lg.kbt)?;
    d.set_item("e_b", lg.e_b)?;
    d.set_item("w_ops", lg.w_ops)?;
    d.set_item("w_bulk", lg.w_bulk)?;
    d.set_item("w_net", lg.w_net)?;
    d.set_item("q_bath", lg.q_bath)?;
    d.set_item("ds_bob", lg.ds_bob)?;
    d.set_item("ds_total", lg.ds_total)?;
    d.set_item("mi_diag", lg.mi_diag)?;
    d.set_item("su_bound_margin", lg.su_bound_margin)?;
    Ok(d)
}

/// Break-even separation N_max, or None when no separation is profitable.
#[pyfunction]
#[pyo3(signature = (p_succ, p, distance, delta_e = thermo::DEFAULT_DELTA_E,
                    epsilon_m = None, r0 = 1.0))]
fn horizon_n_max(
    p_succ: f64,
    p: f64,
    distance: usize,
    delta_e: f64,
    epsilon_m: Option<f64>,
    r0: f64,
) -> PyResult<Option<f64>> {
    let params = thermo_params(delta_e, epsilon_m, r0);
    let kbt = thermo::temperature_from_p(p).map_err(err)?;
    Ok(thermo::horizon_n_max(p_succ, &params, distance, kbt)
        .map_err(err)?
        .value())
}

/// The `epsilon_m * r0` product placing the break-even separation at
/// `target_n_max`.
#[pyfunction]
#[pyo3(signature = (target_n_max, p_succ = 1.0, distance = thermo::CALIBRATION_DISTANCE,
                    p = thermo::CALIBRATION_P, delta_e = thermo::DEFAULT_DELTA_E))]
fn calibrate_infrastructure(
    target_n_max: f64,
    p_succ: f64,
    distance: usize,
    p: f64,
    delta_e: f64,
) -> PyResult<f64> {
    let params = ThermoParams { delta_e, ..ThermoParams::default() };
    let kbt = thermo::temperature_from_p(p).map_err(err)?;
    thermo::calibrate_infrastructure(target_n_max, p_succ, &params, distance, kbt).map_err(err)
}

/// Effective temperature `k_B T = -4 J / ln p` of a flip rate.
#[pyfunction]
fn temperature_from_p(p: f64) -> PyResult<f64> {
    thermo::temperature_from_p(p).map_err(err)
}

/// Run a full experiment sweep from a JSON `ExperimentSpec`; returns the
/// result (rows, fits, metadata) as a JSON string.
#[pyfunction]
fn run_experiment_json(py: Python<'_>, spec_json: &str) -> PyResult<String> {
    let spec: ExperimentSpec =
        serde_json::from_str(spec_json).map_err(|e| PyValueError::new_err(e.to_string()))?;
    spec.validate().map_err(err)?;
    let result = py.detach(|| experiments::run_experiment(&spec)).map_err(err)?;
    serde_json::to_string(&result).map_err(|e| PyValueError::new_err(e.to_string()))
}

/// Default spec for a named experiment kind, as a JSON string.
#[pyfunction]
fn default_spec_json(kind: &str, master_seed: u64) -> PyResult<String> {
    let spec = match kind {
        "suppression" => ExperimentSpec::suppression(master_seed),
        "threshold" => ExperimentSpec::threshold_scan(master_seed),
        "phasecut" => ExperimentSpec::phasecut(master_seed),
        "horizon" => ExperimentSpec::horizon(master_seed),
        "temporal" => ExperimentSpec::temporal(master_seed),
        "info_fraction" => ExperimentSpec::info_fraction(master_seed),
        "phase_diagram" => ExperimentSpec::phase_diagram(master_seed),
        other => {
            return Err(PyValueError::new_err(format!("unknown experiment kind `{}`", other)))
        }
    };
    serde_json::to_string(&spec).map_err(|e| PyValueError::new_err(e.to_string()))
}

#[pymodule]
fn topodemon(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Geometry>()?;
    m.add_function(wrap_pyfunction!(run_shot, m)?)?;
    m.add_function(wrap_pyfunction!(estimate_p_succ, m)?)?;
    m.add_function(wrap_pyfunction!(effective_success, m)?)?;
    m.add_function(wrap_pyfunction!(ledger, m)?)?;
    m.add_function(wrap_pyfunction!(horizon_n_max, m)?)?;
    m.add_function(wrap_pyfunction!(calibrate_infrastructure, m)?)?;
    m.add_function(wrap_pyfunction!(temperature_from_p, m)?)?;
    m.add_function(wrap_pyfunction!(run_experiment_json, m)?)?;
    m.add_function(wrap_pyfunction!(default_spec_json, m)?)?;
    m.add("DEFAULT_DELTA_E", thermo::DEFAULT_DELTA_E)?;
    m.add("DEFAULT_ALPHA", experiments::DEFAULT_ALPHA)?;
    Ok(())
}
