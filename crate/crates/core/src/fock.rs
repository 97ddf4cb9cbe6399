//! Truncated Fock-space simulation of passive linear optics.
//!
//! This is a brute-force cross-check for the single-photon amplitudes of
//! [`crate::mode_algebra`]. A mode map `a_out = M a_in` sends each input
//! creation operator to `a_k^dagger -> sum_j M[j][k] a_j^dagger`; the lift
//! expands products of those sums on the vacuum instead of exponentiating a
//! generator, so the two routes share no numerics beyond the entries of `M`.
//!
//! Basis ordering: states are grouped by total photon number `n = 0..=n_max`;
//! inside a block occupations are sorted in descending lexicographic order
//! over the circuit's mode order. The `n = 1` block is therefore
//! `|1,0,..>, |0,1,..>, ...` and coincides with the mode matrix itself.

use std::collections::HashMap;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use thiserror::Error;

use crate::mode_algebra::{join_modes, Mode, TransferMatrix};

/// Photon levels kept by default: one more than the single-photon sector.
pub const DEFAULT_N_MAX: usize = 2;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FockError {
    #[error("truncation n_max = {0} is too small (need at least 1)")]
    TruncationTooSmall(usize),
    #[error("mode mismatch: expected [{expected}], found [{found}]")]
    ModeMismatch { expected: String, found: String },
    #[error("unknown mode `{0}`")]
    UnknownMode(Mode),
    #[error("occupation {0:?} outside the truncated basis")]
    OutsideBasis(Vec<usize>),
    #[error("Fock state is not normalized (squared norm {0})")]
    NotNormalized(f64),
}

/// Ordered occupation-number basis with total photon number at most `n_max`.
#[derive(Debug, Clone, PartialEq)]
pub struct FockBasis {
    modes: Vec<Mode>,
    n_max: usize,
    states: Vec<Vec<usize>>,
    index: HashMap<Vec<usize>, usize>,
}

impl FockBasis {
    pub fn new(modes: Vec<Mode>, n_max: usize) -> Self {
        let mut states = Vec::new();
        for n in 0..=n_max {
            let mut current = Vec::with_capacity(modes.len());
            compositions(n, modes.len(), &mut current, &mut states);
        }
        let index = states
            .iter()
            .enumerate()
            .map(|(i, s)| (s.clone(), i))
            .collect();
        FockBasis {
            modes,
            n_max,
            states,
            index,
        }
    }

    pub fn modes(&self) -> &[Mode] {
        &self.modes
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn states(&self) -> &[Vec<usize>] {
        &self.states
    }

    pub fn index_of(&self, occupations: &[usize]) -> Option<usize> {
        self.index.get(occupations).copied()
    }

    /// Index range of the fixed-photon-number block `n`.
    pub fn block(&self, n: usize) -> std::ops::Range<usize> {
        let start = self.states.iter().position(|s| total(s) == n);
        match start {
            Some(start) => {
                let len = self.states[start..]
                    .iter()
                    .take_while(|s| total(s) == n)
                    .count();
                start..start + len
            }
            None => 0..0,
        }
    }
}

fn total(occ: &[usize]) -> usize {
    occ.iter().sum()
}

// Descending lexicographic enumeration of `n` photons over `slots` modes.
fn compositions(n: usize, slots: usize, current: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
    if slots == 0 {
        if n == 0 {
            out.push(current.clone());
        }
        return;
    }
    if slots == 1 {
        current.push(n);
        out.push(current.clone());
        current.pop();
        return;
    }
    for k in (0..=n).rev() {
        current.push(k);
        compositions(n - k, slots - 1, current, out);
        current.pop();
    }
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

/// Lifted mode map acting on the truncated Fock space.
#[derive(Debug, Clone, PartialEq)]
pub struct FockUnitary {
    input_basis: FockBasis,
    output_basis: FockBasis,
    entries: DMatrix<Complex64>,
}

impl FockUnitary {
    pub fn input_basis(&self) -> &FockBasis {
        &self.input_basis
    }

    pub fn output_basis(&self) -> &FockBasis {
        &self.output_basis
    }

    pub fn entries(&self) -> &DMatrix<Complex64> {
        &self.entries
    }

    /// Square sub-matrix on the `n`-photon block.
    pub fn block(&self, n: usize) -> DMatrix<Complex64> {
        let rows = self.output_basis.block(n);
        let cols = self.input_basis.block(n);
        self.entries
            .view((rows.start, cols.start), (rows.len(), cols.len()))
            .into_owned()
    }

    /// Worst `|U^dagger U - I|` entry over all photon-number blocks.
    pub fn block_unitarity_residual(&self) -> f64 {
        (0..=self.input_basis.n_max)
            .map(|n| {
                let b = self.block(n);
                let gram = b.adjoint() * &b;
                let id = DMatrix::<Complex64>::identity(gram.nrows(), gram.ncols());
                (gram - id).iter().map(|z| z.norm()).fold(0.0, f64::max)
            })
            .fold(0.0, f64::max)
    }

    /// Largest amplitude connecting different photon numbers.
    pub fn number_mixing(&self) -> f64 {
        let mut worst = 0.0f64;
        for (i, out) in self.output_basis.states.iter().enumerate() {
            for (j, inp) in self.input_basis.states.iter().enumerate() {
                if total(out) != total(inp) {
                    worst = worst.max(self.entries[(i, j)].norm());
                }
            }
        }
        worst
    }

    pub fn apply(&self, state: &FockState) -> Result<FockState, FockError> {
        if state.basis.modes != self.input_basis.modes || state.basis.n_max != self.input_basis.n_max {
            return Err(FockError::ModeMismatch {
                expected: join_modes(&self.input_basis.modes),
                found: join_modes(&state.basis.modes),
            });
        }
        Ok(FockState {
            basis: self.output_basis.clone(),
            amplitudes: &self.entries * &state.amplitudes,
        })
    }
}

/// Lift a mode transfer matrix to the Fock space truncated at `n_max` photons.
pub fn lift_to_fock(matrix: &TransferMatrix, n_max: usize) -> Result<FockUnitary, FockError> {
    if n_max < 1 {
        return Err(FockError::TruncationTooSmall(n_max));
    }
    let input_basis = FockBasis::new(matrix.input_modes().to_vec(), n_max);
    let output_basis = FockBasis::new(matrix.output_modes().to_vec(), n_max);
    let dim = matrix.dim();
    let mut entries = DMatrix::<Complex64>::zeros(output_basis.len(), input_basis.len());

    for (col, occ) in input_basis.states.iter().enumerate() {
        // product over input modes of (sum_j M[j][k] x_j)^{n_k}, as a polynomial in x
        let mut poly: HashMap<Vec<usize>, Complex64> = HashMap::new();
        poly.insert(vec![0; dim], Complex64::new(1.0, 0.0));
        for (k, &nk) in occ.iter().enumerate() {
            for _ in 0..nk {
                let mut next: HashMap<Vec<usize>, Complex64> = HashMap::new();
                for (mono, coeff) in &poly {
                    for j in 0..dim {
                        let m = matrix.entry(j, k);
                        if m == Complex64::new(0.0, 0.0) {
                            continue;
                        }
                        let mut key = mono.clone();
                        key[j] += 1;
                        *next.entry(key).or_insert(Complex64::new(0.0, 0.0)) += coeff * m;
                    }
                }
                poly = next;
            }
        }
        let input_norm: f64 = occ.iter().map(|&n| factorial(n)).product::<f64>().sqrt();
        for (mono, coeff) in poly {
            let out_norm: f64 = mono.iter().map(|&n| factorial(n)).product::<f64>().sqrt();
            let row = output_basis
                .index_of(&mono)
                .expect("passive maps conserve photon number");
            entries[(row, col)] += coeff * out_norm / input_norm;
        }
    }

    Ok(FockUnitary {
        input_basis,
        output_basis,
        entries,
    })
}

/// State vector over a truncated Fock basis.
#[derive(Debug, Clone, PartialEq)]
pub struct FockState {
    basis: FockBasis,
    amplitudes: DVector<Complex64>,
}

impl FockState {
    pub fn vacuum(modes: Vec<Mode>, n_max: usize) -> Self {
        let occ = vec![0; modes.len()];
        Self::number_state(modes, &occ, n_max).expect("vacuum is always in the basis")
    }

    /// `|n_1, n_2, ...>` for the given occupations.
    pub fn number_state(modes: Vec<Mode>, occupations: &[usize], n_max: usize) -> Result<Self, FockError> {
        let basis = FockBasis::new(modes, n_max);
        let idx = basis
            .index_of(occupations)
            .ok_or_else(|| FockError::OutsideBasis(occupations.to_vec()))?;
        let mut amplitudes = DVector::zeros(basis.len());
        amplitudes[idx] = Complex64::new(1.0, 0.0);
        Ok(FockState { basis, amplitudes })
    }

    /// One photon in `mode`, vacuum elsewhere.
    pub fn single_photon(modes: Vec<Mode>, mode: &Mode, n_max: usize) -> Result<Self, FockError> {
        let k = modes
            .iter()
            .position(|m| m == mode)
            .ok_or_else(|| FockError::UnknownMode(mode.clone()))?;
        let mut occ = vec![0; modes.len()];
        occ[k] = 1;
        Self::number_state(modes, &occ, n_max)
    }

    pub fn from_amplitudes(basis: FockBasis, amplitudes: Vec<Complex64>) -> Result<Self, FockError> {
        if amplitudes.len() != basis.len() {
            return Err(FockError::OutsideBasis(vec![amplitudes.len()]));
        }
        let state = FockState {
            basis,
            amplitudes: DVector::from_vec(amplitudes),
        };
        let n = state.norm_sqr();
        if (n - 1.0).abs() > crate::mode_algebra::NORMALIZATION_TOLERANCE {
            return Err(FockError::NotNormalized(n));
        }
        Ok(state)
    }

    pub fn basis(&self) -> &FockBasis {
        &self.basis
    }

    pub fn amplitudes(&self) -> &DVector<Complex64> {
        &self.amplitudes
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }

    /// `<n>` summed over all modes.
    pub fn mean_total_photons(&self) -> f64 {
        self.basis
            .states
            .iter()
            .zip(self.amplitudes.iter())
            .map(|(occ, a)| a.norm_sqr() * total(occ) as f64)
            .sum()
    }
}

/// `<psi| a_mode^dagger a_mode |psi>`.
pub fn expected_photon_number(state: &FockState, mode: &Mode) -> Result<f64, FockError> {
    let k = state
        .basis
        .modes
        .iter()
        .position(|m| m == mode)
        .ok_or_else(|| FockError::UnknownMode(mode.clone()))?;
    Ok(state
        .basis
        .states
        .iter()
        .zip(state.amplitudes.iter())
        .map(|(occ, a)| a.norm_sqr() * occ[k] as f64)
        .sum())
}
