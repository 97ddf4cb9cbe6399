//! Complex linear algebra for passive optical elements.
//!
//! Matrices act on annihilation operators in the Heisenberg picture: rows are
//! indexed by output modes and columns by input modes, so
//! `a_out[i] = sum_j M[i][j] * a_in[j]`. For a single photon the same matrix
//! maps the input amplitude vector to the output amplitude vector.
//!
//! A lossless beam splitter has reflection `R = |R| e^{i phi_R}` and
//! transmission `T = |T| e^{i phi_T}` with `|R|^2 + |T|^2 = 1` and
//! `R T* + T R* = 0`. The canonical convention used throughout is
//! `phi_T = 0`, `phi_R = pi/2`.
//!
//! Closed Mach-Zehnder statistics with `phi = phi_e - phi_f`:
//!
//! ```text
//! |R_MZ|^2 = |R|^4 + |T|^4 - 2 |R|^2 |T|^2 cos(phi)
//! |T_MZ|^2 = 2 |R|^2 |T|^2 (1 + cos(phi))
//! ```
//!
//! The second line is sometimes printed with `(1 - cos(phi))`. That variant does
//! not sum to one with the first line and disagrees with the balanced fringes
//! `N_c2 = N/2 (1 + cos(phi))`, so the `+` sign is used here.

use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2, PI, TAU};
use std::fmt;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Tolerance applied when validating constructors.
pub const CONSTRUCTION_TOLERANCE: f64 = 1e-12;

/// Tolerance on the squared norm of a state handed to the detectors.
pub const NORMALIZATION_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AlgebraError {
    #[error("lossless constraint violated: {0}")]
    LosslessViolation(String),
    #[error("mode mismatch: expected [{expected}], found [{found}]")]
    ModeMismatch { expected: String, found: String },
    #[error("duplicate mode label `{0}`")]
    DuplicateMode(Mode),
    #[error("matrix is not unitary (residual {0:e})")]
    NotUnitary(f64),
    #[error("state is not normalized (squared norm {0})")]
    NotNormalized(f64),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
}

fn mismatch(expected: &[Mode], found: &[Mode]) -> AlgebraError {
    AlgebraError::ModeMismatch {
        expected: join_modes(expected),
        found: join_modes(found),
    }
}

pub(crate) fn join_modes(modes: &[Mode]) -> String {
    modes.iter().map(Mode::as_str).collect::<Vec<_>>().join(", ")
}

/// Label of a single optical mode (a spatial path).
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Mode(String);

impl Mode {
    pub fn new(label: impl Into<String>) -> Self {
        Mode(label.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for Mode {
    fn from(s: &str) -> Self {
        Mode(s.to_owned())
    }
}

/// Build a list of modes from string labels.
pub fn modes(labels: &[&str]) -> Vec<Mode> {
    labels.iter().map(|l| Mode::from(*l)).collect()
}

fn check_unique(modes: &[Mode]) -> Result<(), AlgebraError> {
    for (i, m) in modes.iter().enumerate() {
        if modes[..i].contains(m) {
            return Err(AlgebraError::DuplicateMode(m.clone()));
        }
    }
    Ok(())
}

/// Reflection and transmission of a lossless beam splitter.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BeamSplitterSpec {
    r_mag: f64,
    t_mag: f64,
    phi_r: f64,
    phi_t: f64,
}

impl BeamSplitterSpec {
    /// `|R| = |T| = 1/sqrt(2)` with the canonical phases.
    pub fn balanced() -> Self {
        BeamSplitterSpec {
            r_mag: FRAC_1_SQRT_2,
            t_mag: FRAC_1_SQRT_2,
            phi_r: FRAC_PI_2,
            phi_t: 0.0,
        }
    }

    /// Splitter with power reflectance `|R|^2` and `phi_R = phi_t + pi/2`.
    pub fn from_reflectance(reflectance: f64, phi_t: f64) -> Result<Self, AlgebraError> {
        if !(0.0..=1.0).contains(&reflectance) {
            return Err(AlgebraError::LosslessViolation(format!(
                "reflectance {reflectance} outside [0, 1]"
            )));
        }
        make_beam_splitter(
            reflectance.sqrt(),
            (1.0 - reflectance).sqrt(),
            phi_t + FRAC_PI_2,
            phi_t,
        )
    }

    pub fn r_mag(&self) -> f64 {
        self.r_mag
    }

    pub fn t_mag(&self) -> f64 {
        self.t_mag
    }

    pub fn phi_r(&self) -> f64 {
        self.phi_r
    }

    pub fn phi_t(&self) -> f64 {
        self.phi_t
    }

    pub fn reflectance(&self) -> f64 {
        self.r_mag * self.r_mag
    }

    pub fn transmittance(&self) -> f64 {
        self.t_mag * self.t_mag
    }

    /// Complex reflection coefficient `R`.
    pub fn r(&self) -> Complex64 {
        Complex64::from_polar(self.r_mag, self.phi_r)
    }

    /// Complex transmission coefficient `T`.
    pub fn t(&self) -> Complex64 {
        Complex64::from_polar(self.t_mag, self.phi_t)
    }
}

/// Validate a beam splitter against both lossless constraints.
pub fn make_beam_splitter(
    r_mag: f64,
    t_mag: f64,
    phi_r: f64,
    phi_t: f64,
) -> Result<BeamSplitterSpec, AlgebraError> {
    for (name, v) in [("|R|", r_mag), ("|T|", t_mag)] {
        if !(0.0..=1.0).contains(&v) {
            return Err(AlgebraError::LosslessViolation(format!(
                "{name} = {v} outside [0, 1]"
            )));
        }
    }
    if !phi_r.is_finite() || !phi_t.is_finite() {
        return Err(AlgebraError::LosslessViolation(
            "phases must be finite".into(),
        ));
    }
    let power = r_mag * r_mag + t_mag * t_mag;
    if (power - 1.0).abs() > CONSTRUCTION_TOLERANCE {
        return Err(AlgebraError::LosslessViolation(format!(
            "|R|^2 + |T|^2 = {power}"
        )));
    }
    let spec = BeamSplitterSpec {
        r_mag,
        t_mag,
        phi_r,
        phi_t,
    };
    let (r, t) = (spec.r(), spec.t());
    let cross = r * t.conj() + t * r.conj();
    if cross.norm() > CONSTRUCTION_TOLERANCE {
        return Err(AlgebraError::LosslessViolation(format!(
            "R T* + T R* = {cross}"
        )));
    }
    Ok(spec)
}

/// Phases picked up in the two interferometer arms.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct PhasePair {
    pub phi_e: f64,
    pub phi_f: f64,
}

impl PhasePair {
    pub fn new(phi_e: f64, phi_f: f64) -> Self {
        PhasePair { phi_e, phi_f }
    }

    /// `phi_e - phi_f` reduced to `(-pi, pi]`.
    pub fn derived_phase(&self) -> f64 {
        reduce_phase(self.phi_e - self.phi_f)
    }
}

/// Reduce an angle to `(-pi, pi]`.
pub fn reduce_phase(phi: f64) -> f64 {
    let r = phi.rem_euclid(TAU);
    if r > PI {
        r - TAU
    } else {
        r
    }
}

/// Unitary map between labeled input and output modes.
#[derive(Debug, Clone, PartialEq)]
pub struct TransferMatrix {
    entries: DMatrix<Complex64>,
    inputs: Vec<Mode>,
    outputs: Vec<Mode>,
}

impl TransferMatrix {
    /// Validated constructor: square, labels unique, unitary within 1e-12.
    pub fn new(
        entries: DMatrix<Complex64>,
        inputs: Vec<Mode>,
        outputs: Vec<Mode>,
    ) -> Result<Self, AlgebraError> {
        let dim = entries.nrows();
        if dim == 0 || entries.ncols() != dim || inputs.len() != dim || outputs.len() != dim {
            return Err(AlgebraError::Dimension(format!(
                "{}x{} matrix with {} inputs and {} outputs",
                entries.nrows(),
                entries.ncols(),
                inputs.len(),
                outputs.len()
            )));
        }
        check_unique(&inputs)?;
        check_unique(&outputs)?;
        let m = TransferMatrix {
            entries,
            inputs,
            outputs,
        };
        let residual = m.unitarity_residual();
        if residual > CONSTRUCTION_TOLERANCE {
            return Err(AlgebraError::NotUnitary(residual));
        }
        Ok(m)
    }

    /// Row-major construction from nested rows.
    pub fn from_rows(
        rows: &[Vec<Complex64>],
        inputs: Vec<Mode>,
        outputs: Vec<Mode>,
    ) -> Result<Self, AlgebraError> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(AlgebraError::Dimension("rows of unequal length".into()));
        }
        let entries = DMatrix::from_fn(n, n, |i, j| rows[i][j]);
        Self::new(entries, inputs, outputs)
    }

    pub fn identity(modes: &[Mode]) -> Result<Self, AlgebraError> {
        Self::new(
            DMatrix::identity(modes.len(), modes.len()),
            modes.to_vec(),
            modes.to_vec(),
        )
    }

    pub fn dim(&self) -> usize {
        self.inputs.len()
    }

    pub fn entries(&self) -> &DMatrix<Complex64> {
        &self.entries
    }

    /// Coefficient of input mode `col` in output mode `row`.
    pub fn entry(&self, row: usize, col: usize) -> Complex64 {
        self.entries[(row, col)]
    }

    pub fn input_modes(&self) -> &[Mode] {
        &self.inputs
    }

    pub fn output_modes(&self) -> &[Mode] {
        &self.outputs
    }

    pub fn input_index(&self, mode: &Mode) -> Option<usize> {
        self.inputs.iter().position(|m| m == mode)
    }

    pub fn output_index(&self, mode: &Mode) -> Option<usize> {
        self.outputs.iter().position(|m| m == mode)
    }

    /// Largest entry of `M^dagger M - I` in absolute value.
    pub fn unitarity_residual(&self) -> f64 {
        let gram = self.entries.adjoint() * &self.entries;
        let n = gram.nrows();
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in 0..n {
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((gram[(i, j)] - target).norm());
            }
        }
        worst
    }

    /// Same entries under new labels.
    pub fn with_modes(self, inputs: Vec<Mode>, outputs: Vec<Mode>) -> Result<Self, AlgebraError> {
        Self::new(self.entries, inputs, outputs)
    }

    /// Largest entrywise distance, ignoring labels.
    pub fn max_abs_diff(&self, other: &TransferMatrix) -> f64 {
        if self.dim() != other.dim() {
            return f64::INFINITY;
        }
        self.entries
            .iter()
            .zip(other.entries.iter())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// Lift an element acting on a few modes to the full list of live modes.
    ///
    /// Each local input keeps its slot in `live` and is renamed to the local
    /// output at the same position; modes outside the element pass through.
    pub fn embed(&self, live: &[Mode]) -> Result<TransferMatrix, AlgebraError> {
        let slots: Vec<usize> = self
            .inputs
            .iter()
            .map(|m| live.iter().position(|l| l == m))
            .collect::<Option<_>>()
            .ok_or_else(|| mismatch(&self.inputs, live))?;
        let n = live.len();
        let mut entries = DMatrix::<Complex64>::identity(n, n);
        for &s in &slots {
            entries[(s, s)] = Complex64::new(0.0, 0.0);
        }
        for (i, &si) in slots.iter().enumerate() {
            for (j, &sj) in slots.iter().enumerate() {
                entries[(si, sj)] = self.entries[(i, j)];
            }
        }
        let mut outputs = live.to_vec();
        for (k, &s) in slots.iter().enumerate() {
            outputs[s] = self.outputs[k].clone();
        }
        check_unique(&outputs)?;
        Ok(TransferMatrix {
            entries,
            inputs: live.to_vec(),
            outputs,
        })
    }
}

/// `[[R, T], [T, R]]` from `(b, v)` to `(s, f)`.
pub fn bs_transfer(spec: &BeamSplitterSpec) -> TransferMatrix {
    bs_transfer_between(spec, modes(&["b", "v"]), modes(&["s", "f"]))
        .expect("fixed labels are distinct")
}

/// Beam splitter with caller-chosen labels; row 0 is `R a_in0 + T a_in1`.
pub fn bs_transfer_between(
    spec: &BeamSplitterSpec,
    inputs: Vec<Mode>,
    outputs: Vec<Mode>,
) -> Result<TransferMatrix, AlgebraError> {
    let (r, t) = (spec.r(), spec.t());
    let entries = DMatrix::from_row_slice(2, 2, &[r, t, t, r]);
    TransferMatrix::new(entries, inputs, outputs)
}

/// `diag(e^{i phi_e}, e^{i phi_f})` on `(e, f)`.
pub fn phase_transfer(phases: &PhasePair) -> TransferMatrix {
    let m = modes(&["e", "f"]);
    let entries = DMatrix::from_diagonal(&DVector::from_vec(vec![
        Complex64::from_polar(1.0, phases.phi_e),
        Complex64::from_polar(1.0, phases.phi_f),
    ]));
    TransferMatrix::new(entries, m.clone(), m).expect("diagonal phases are unitary")
}

/// Single-mode phase shifter.
pub fn phase_shift(mode: Mode, phi: f64) -> TransferMatrix {
    let entries = DMatrix::from_element(1, 1, Complex64::from_polar(1.0, phi));
    TransferMatrix::new(entries, vec![mode.clone()], vec![mode]).expect("unit phase is unitary")
}

/// Matrix product `second * first`; `first` runs first.
pub fn compose(second: &TransferMatrix, first: &TransferMatrix) -> Result<TransferMatrix, AlgebraError> {
    if first.outputs != second.inputs {
        return Err(mismatch(&second.inputs, &first.outputs));
    }
    Ok(TransferMatrix {
        entries: &second.entries * &first.entries,
        inputs: first.inputs.clone(),
        outputs: second.outputs.clone(),
    })
}

/// Closed Mach-Zehnder coefficients.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MziCoefficients {
    pub r_mz: Complex64,
    pub t_mz: Complex64,
    pub r_mz_prime: Complex64,
}

impl MziCoefficients {
    /// `[[R_MZ, T_MZ], [T_MZ, R'_MZ]]` from `(b, v)` to `(c1, c2)`.
    pub fn transfer(&self) -> TransferMatrix {
        let entries =
            DMatrix::from_row_slice(2, 2, &[self.r_mz, self.t_mz, self.t_mz, self.r_mz_prime]);
        TransferMatrix {
            entries,
            inputs: modes(&["b", "v"]),
            outputs: modes(&["c1", "c2"]),
        }
    }
}

/// Both splitters share `spec`; the arm phases sit between them.
pub fn mzi_closed_coeffs(spec: &BeamSplitterSpec, phases: &PhasePair) -> MziCoefficients {
    let (r, t) = (spec.r(), spec.t());
    let pe = Complex64::from_polar(1.0, phases.phi_e);
    let pf = Complex64::from_polar(1.0, phases.phi_f);
    MziCoefficients {
        r_mz: r * r * pe + t * t * pf,
        r_mz_prime: r * r * pf + t * t * pe,
        t_mz: r * t * (pe + pf),
    }
}

/// Output splitter removed: `[[T, R], [R, T]]` from `(b, v)` to `(o1, o2)`.
pub fn mzi_open_transfer(spec: &BeamSplitterSpec) -> TransferMatrix {
    let (r, t) = (spec.r(), spec.t());
    TransferMatrix::new(
        DMatrix::from_row_slice(2, 2, &[t, r, r, t]),
        modes(&["b", "v"]),
        modes(&["o1", "o2"]),
    )
    .expect("lossless spec gives a unitary matrix")
}

/// `|R|^4 + |T|^4 - 2|R|^2|T|^2 cos(phi)`: closed detector-1 fraction.
pub fn closed_d1_fraction(spec: &BeamSplitterSpec, phi: f64) -> f64 {
    let (r2, t2) = (spec.reflectance(), spec.transmittance());
    r2 * r2 + t2 * t2 - 2.0 * r2 * t2 * phi.cos()
}

/// `2|R|^2|T|^2 (1 + cos(phi))`: closed detector-2 fraction.
pub fn closed_d2_fraction(spec: &BeamSplitterSpec, phi: f64) -> f64 {
    2.0 * spec.reflectance() * spec.transmittance() * (1.0 + phi.cos())
}

/// Single-photon amplitudes over labeled modes.
#[derive(Debug, Clone, PartialEq)]
pub struct OpticalState {
    amplitudes: DVector<Complex64>,
    modes: Vec<Mode>,
}

impl OpticalState {
    pub fn new(modes: Vec<Mode>, amplitudes: Vec<Complex64>) -> Result<Self, AlgebraError> {
        if modes.len() != amplitudes.len() || modes.is_empty() {
            return Err(AlgebraError::Dimension(format!(
                "{} modes for {} amplitudes",
                modes.len(),
                amplitudes.len()
            )));
        }
        check_unique(&modes)?;
        let state = OpticalState {
            amplitudes: DVector::from_vec(amplitudes),
            modes,
        };
        state.check_norm()?;
        Ok(state)
    }

    /// One photon in `modes[index]`, vacuum elsewhere.
    pub fn single_photon(modes: Vec<Mode>, index: usize) -> Result<Self, AlgebraError> {
        if index >= modes.len() {
            return Err(AlgebraError::Dimension(format!(
                "photon index {index} out of {} modes",
                modes.len()
            )));
        }
        let mut amps = vec![Complex64::new(0.0, 0.0); modes.len()];
        amps[index] = Complex64::new(1.0, 0.0);
        Self::new(modes, amps)
    }

    pub fn modes(&self) -> &[Mode] {
        &self.modes
    }

    pub fn amplitudes(&self) -> &DVector<Complex64> {
        &self.amplitudes
    }

    pub fn amplitude(&self, mode: &Mode) -> Option<Complex64> {
        self.modes
            .iter()
            .position(|m| m == mode)
            .map(|i| self.amplitudes[i])
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }

    fn check_norm(&self) -> Result<(), AlgebraError> {
        let n = self.norm_sqr();
        if (n - 1.0).abs() > NORMALIZATION_TOLERANCE {
            return Err(AlgebraError::NotNormalized(n));
        }
        Ok(())
    }
}

/// Propagate a single-photon state through `matrix`.
pub fn apply(matrix: &TransferMatrix, state: &OpticalState) -> Result<OpticalState, AlgebraError> {
    if matrix.inputs != state.modes {
        return Err(mismatch(&matrix.inputs, &state.modes));
    }
    let out = OpticalState {
        amplitudes: &matrix.entries * &state.amplitudes,
        modes: matrix.outputs.clone(),
    };
    out.check_norm()?;
    Ok(out)
}

/// `|amplitude|^2` per mode, in the state's mode order.
pub fn detection_probs(state: &OpticalState) -> Result<Vec<f64>, AlgebraError> {
    state.check_norm()?;
    Ok(state.amplitudes.iter().map(|a| a.norm_sqr()).collect())
}
