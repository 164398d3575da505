//! Simulation of pulse-based dynamic nuclear polarisation from an NV-type
//! electron spin into a small register of 13C nuclei.
//!
//! Units throughout: angles in rad, times in us, angular frequencies in rad/us.
//!
//! - [`linalg`]: dense complex matrices, Hermitian and unitary eigensolvers.
//! - [`spin`]: register description, spin operators and the static Hamiltonian.
//! - [`pulses`]: PulsePol and CPMG sequences, period unitaries, average Hamiltonians.
//! - [`analytic`]: closed-form rates, resonance shapes, dips, dark states and blockade shifts.
//! - [`floquet`]: eigenphase spectra against period and avoided-crossing detection.
//! - [`engine`]: density-matrix simulation of the repetition protocol.
//! - [`peaks`]: extremum location on sampled traces.

pub mod analytic;
pub mod engine;
pub mod floquet;
pub mod linalg;
pub mod peaks;
pub mod pulses;
pub mod spin;

pub use num_complex::Complex64 as C64;

use thiserror::Error;

/// Any error raised by this crate.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error(transparent)]
    Linalg(#[from] linalg::LinalgError),
    #[error(transparent)]
    Spin(#[from] spin::SpinError),
    #[error(transparent)]
    Pulse(#[from] pulses::PulseError),
    #[error(transparent)]
    Analytic(#[from] analytic::AnalyticError),
    #[error(transparent)]
    Floquet(#[from] floquet::FloquetError),
    #[error(transparent)]
    Engine(#[from] engine::EngineError),
}

impl Error {
    /// True for failures of the numerics rather than of the inputs.
    pub fn is_numerical(&self) -> bool {
        match self {
            Error::Linalg(_) => true,
            Error::Pulse(pulses::PulseError::Linalg(_)) => true,
            Error::Floquet(floquet::FloquetError::Linalg(_)) => true,
            Error::Floquet(floquet::FloquetError::Pulse(pulses::PulseError::Linalg(_))) => true,
            Error::Engine(engine::EngineError::Linalg(_)) => true,
            Error::Engine(engine::EngineError::InvalidState(_)) => true,
            Error::Engine(engine::EngineError::Pulse(pulses::PulseError::Linalg(_))) => true,
            _ => false,
        }
    }
}
