//! Single-photon Mach-Zehnder interferometry with a removable output beam
//! splitter.
//!
//! - [`mode_algebra`]: beam splitters, phase shifters and their composition.
//! - [`fock`]: truncated Fock-space lift, used to cross-check the fast path.
//! - [`dsl`]: a small text format for passive circuits.
//! - [`experiment`]: seeded Monte Carlo of the delayed-choice protocol.
//! - [`analysis`]: event sorting, fringe visibility and chi-square tests.
//! - [`cli`]: the `interfero` command-line front end.

pub mod analysis;
pub mod cli;
pub mod dsl;
pub mod experiment;
pub mod fock;
pub mod mode_algebra;

pub use mode_algebra::{
    apply, bs_transfer, compose, detection_probs, make_beam_splitter, mzi_closed_coeffs,
    mzi_open_transfer, phase_transfer, AlgebraError, BeamSplitterSpec, Mode, MziCoefficients,
    OpticalState, PhasePair, TransferMatrix,
};
