use std::collections::HashMap;

use num_complex::Complex64;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

use interfero::analysis::{fringe_report_with, sort_events, ConfigFringe};
use interfero::dsl::{self, ElaborationConfig};
use interfero::experiment::{self, CircuitModel, ConfigPolicy, SweepPlan, TimelineParams};
use interfero::mode_algebra as ma;

type CountRow = (String, u32, f64, u64, u64);
type Report = HashMap<String, HashMap<String, f64>>;

fn value_err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn rows(m: &ma::TransferMatrix) -> Vec<Vec<Complex64>> {
    (0..m.dim())
        .map(|r| (0..m.dim()).map(|c| m.entry(r, c)).collect())
        .collect()
}

#[pyclass(name = "BeamSplitter", frozen, from_py_object)]
#[derive(Clone)]
struct PyBeamSplitter(ma::BeamSplitterSpec);

#[pymethods]
impl PyBeamSplitter {
    #[new]
    fn new(r: f64, t: f64, phi_r: f64, phi_t: f64) -> PyResult<Self> {
        ma::make_beam_splitter(r, t, phi_r, phi_t)
            .map(Self)
            .map_err(value_err)
    }

    #[staticmethod]
    fn balanced() -> Self {
        Self(ma::BeamSplitterSpec::balanced())
    }

    #[staticmethod]
    #[pyo3(signature = (reflectance, phi_t = 0.0))]
    fn from_reflectance(reflectance: f64, phi_t: f64) -> PyResult<Self> {
        ma::BeamSplitterSpec::from_reflectance(reflectance, phi_t)
            .map(Self)
            .map_err(value_err)
    }

    #[getter]
    fn reflectance(&self) -> f64 {
        self.0.reflectance()
    }

    #[getter]
    fn transmittance(&self) -> f64 {
        self.0.transmittance()
    }

    #[getter]
    fn r(&self) -> Complex64 {
        self.0.r()
    }

    #[getter]
    fn t(&self) -> Complex64 {
        self.0.t()
    }

    /// 2x2 matrix from (b, v) to (s, f).
    fn matrix(&self) -> Vec<Vec<Complex64>> {
        rows(&ma::bs_transfer(&self.0))
    }

    fn __repr__(&self) -> String {
        format!(
            "BeamSplitter(reflectance={}, phi_r={}, phi_t={})",
            self.0.reflectance(),
            self.0.phi_r(),
            self.0.phi_t()
        )
    }
}

#[pyclass(name = "TransferMatrix", frozen)]
struct PyTransferMatrix(ma::TransferMatrix);

#[pymethods]
impl PyTransferMatrix {
    #[getter]
    fn inputs(&self) -> Vec<String> {
        self.0.input_modes().iter().map(|m| m.to_string()).collect()
    }

    #[getter]
    fn outputs(&self) -> Vec<String> {
        self.0.output_modes().iter().map(|m| m.to_string()).collect()
    }

    /// Rows are output modes, columns input modes.
    fn entries(&self) -> Vec<Vec<Complex64>> {
        rows(&self.0)
    }

    fn unitarity_residual(&self) -> f64 {
        self.0.unitarity_residual()
    }

    /// Output-mode probabilities for one photon entering `source`.
    fn detection_probs(&self, source: &str) -> PyResult<HashMap<String, f64>> {
        let idx = self
            .0
            .input_index(&ma::Mode::from(source))
            .ok_or_else(|| value_err(format!("`{source}` is not an input mode")))?;
        let psi = ma::OpticalState::single_photon(self.0.input_modes().to_vec(), idx)
            .map_err(value_err)?;
        let probs = ma::detection_probs(&ma::apply(&self.0, &psi).map_err(value_err)?)
            .map_err(value_err)?;
        Ok(self.outputs().into_iter().zip(probs).collect())
    }
}

/// `(R_MZ, T_MZ, R'_MZ)` of the closed interferometer.
#[pyfunction]
fn mzi_closed_coeffs(bs: &PyBeamSplitter, phi_e: f64, phi_f: f64) -> (Complex64, Complex64, Complex64) {
    let c = ma::mzi_closed_coeffs(&bs.0, &ma::PhasePair::new(phi_e, phi_f));
    (c.r_mz, c.t_mz, c.r_mz_prime)
}

#[pyfunction]
fn mzi_closed_matrix(bs: &PyBeamSplitter, phi_e: f64, phi_f: f64) -> PyTransferMatrix {
    PyTransferMatrix(ma::mzi_closed_coeffs(&bs.0, &ma::PhasePair::new(phi_e, phi_f)).transfer())
}

#[pyfunction]
fn mzi_open_matrix(bs: &PyBeamSplitter) -> PyTransferMatrix {
    PyTransferMatrix(ma::mzi_open_transfer(&bs.0))
}

/// Detector fractions `(D1, D2)` of the closed interferometer at phase `phi`.
#[pyfunction]
fn closed_fractions(bs: &PyBeamSplitter, phi: f64) -> (f64, f64) {
    (ma::closed_d1_fraction(&bs.0, phi), ma::closed_d2_fraction(&bs.0, phi))
}

#[pyclass(name = "Circuit", frozen)]
struct PyCircuit(dsl::CircuitDescription);

#[pymethods]
impl PyCircuit {
    #[staticmethod]
    fn parse(text: &str) -> PyResult<Self> {
        dsl::parse_circuit(text).map(Self).map_err(value_err)
    }

    /// A shipped circuit by file name, e.g. `mzi_closed.circ`.
    #[staticmethod]
    fn builtin(name: &str) -> PyResult<Self> {
        let text = dsl::builtin::lookup(name)
            .ok_or_else(|| value_err(format!("no shipped circuit `{name}`")))?;
        Self::parse(text)
    }

    #[getter]
    fn modes(&self) -> Vec<String> {
        self.0.modes().iter().map(|m| m.to_string()).collect()
    }

    #[getter]
    fn outputs(&self) -> Vec<String> {
        self.0.outputs().iter().map(|m| m.to_string()).collect()
    }

    #[getter]
    fn removable(&self) -> Vec<String> {
        self.0.removable_elements().into_iter().map(str::to_owned).collect()
    }

    /// Compose the circuit with every removable element `on` and the given parameters.
    #[pyo3(signature = (on = true, params = None))]
    fn elaborate(&self, on: bool, params: Option<HashMap<String, f64>>) -> PyResult<PyTransferMatrix> {
        let mut cfg = ElaborationConfig::all_removable(&self.0, on);
        for (k, v) in params.unwrap_or_default() {
            cfg = cfg.with_param(&k, v);
        }
        dsl::elaborate(&self.0, &cfg)
            .map(PyTransferMatrix)
            .map_err(value_err)
    }

    fn __str__(&self) -> String {
        self.0.to_string()
    }
}

/// `(spacelike, margin_m, choice_complete_ns, in_flight)`.
#[pyfunction]
#[pyo3(signature = (length_m = 48.0, tof_ns = 160.0, delay_ns = 80.0, switch_ns = 40.0))]
fn spacelike_check(length_m: f64, tof_ns: f64, delay_ns: f64, switch_ns: f64) -> PyResult<(bool, f64, f64, bool)> {
    let t = TimelineParams::new(length_m, tof_ns, delay_ns, switch_ns).map_err(value_err)?;
    let r = experiment::spacelike_check(&t);
    Ok((r.spacelike, r.margin_m, r.choice_complete_time_ns(), r.in_flight))
}

fn fringe_dict(f: &ConfigFringe) -> HashMap<String, f64> {
    HashMap::from([
        ("points".to_owned(), f.points as f64),
        ("visibility".to_owned(), f.visibility),
        ("raw_visibility".to_owned(), f.raw_visibility),
        ("analytic_visibility".to_owned(), f.analytic_visibility),
        ("chi_square".to_owned(), f.chi_square),
        ("chi_square_p".to_owned(), f.chi_square_p),
        ("flatness_chi_square".to_owned(), f.flatness_chi_square),
        ("flatness_p".to_owned(), f.flatness_p),
    ])
}

/// Run a seeded sweep of `circuit` and return
/// `(counts, report)`: counts rows are `(config, phase_index, phase, n_d1, n_d2)`,
/// the report maps `closed`/`open` to fringe statistics.
#[pyfunction]
#[pyo3(signature = (circuit, policy = "random", start = 0.0, stop = std::f64::consts::TAU, steps = 17, trials = 10_000, seed = 0, sweep_param = "phi_e", params = None))]
#[allow(clippy::too_many_arguments)]
fn sweep(
    py: Python<'_>,
    circuit: &PyCircuit,
    policy: &str,
    start: f64,
    stop: f64,
    steps: u32,
    trials: u64,
    seed: u64,
    sweep_param: &str,
    params: Option<HashMap<String, f64>>,
) -> PyResult<(Vec<CountRow>, Report)> {
    let policy: ConfigPolicy = policy.parse().map_err(value_err)?;
    let fixed: Vec<(String, f64)> = params.unwrap_or_default().into_iter().collect();
    let model = CircuitModel::new(circuit.0.clone(), &fixed, sweep_param).map_err(value_err)?;
    let plan = SweepPlan {
        phase_start: start,
        phase_stop: stop,
        steps,
        trials_per_point: trials,
        policy,
        master_seed: seed,
    };
    let summary = py
        .detach(|| {
            let records = experiment::run_sweep(&plan, &model, &TimelineParams::default())
                .map_err(|e| e.to_string())?;
            sort_events(records).map_err(|e| e.to_string())
        })
        .map_err(value_err)?;
    let counts = summary
        .iter()
        .map(|(c, i, p)| (c.to_string(), i, p.phase_rad, p.n_d1, p.n_d2))
        .collect();
    let report = fringe_report_with(&summary, &model).map_err(value_err)?;
    let mut out = HashMap::new();
    for f in [&report.closed, &report.open].into_iter().flatten() {
        out.insert(f.config.to_string(), fringe_dict(f));
    }
    Ok((counts, out))
}

#[pymodule]
fn pyinterfero(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyBeamSplitter>()?;
    m.add_class::<PyTransferMatrix>()?;
    m.add_class::<PyCircuit>()?;
    m.add_function(wrap_pyfunction!(mzi_closed_coeffs, m)?)?;
    m.add_function(wrap_pyfunction!(mzi_closed_matrix, m)?)?;
    m.add_function(wrap_pyfunction!(mzi_open_matrix, m)?)?;
    m.add_function(wrap_pyfunction!(closed_fractions, m)?)?;
    m.add_function(wrap_pyfunction!(spacelike_check, m)?)?;
    m.add_function(wrap_pyfunction!(sweep, m)?)?;
    Ok(())
}
