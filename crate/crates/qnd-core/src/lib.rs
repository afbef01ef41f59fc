//! Simulation library for dispersive atom-light interaction with collective
//! dephasing noise and the photocount POVM it induces on an atomic ensemble.
//!
//! The library models an ensemble of two-level atoms, described in the Dicke
//! basis |J, m⟩, coupled to a coherent probe mode through a J_z-conditioned
//! phase shift. Spontaneous emission enters as a collective dephasing channel
//! of strength R. The pieces fit together as follows:
//!
//! * [`spin`]: Dicke sectors, collective spin operators, spin coherent and
//!   thermal input states, Clebsch-Gordan coefficients.
//! * [`dynamics`]: closed-form joint evolution of atoms + probe, reduced
//!   atomic and probe states, photon statistics.
//! * [`measurement`]: the conditional state update after counting (n_c, n_d)
//!   photons on the two output ports of a balanced interferometer, its
//!   Gaussian summary, and the projective large-count limit.
//! * [`quasiprob`]: Q and Wigner distributions on the sphere.
//! * [`oracle`]: brute-force integrators (truncated Fock space Lindblad RK4,
//!   per-element ODEs, two-level adiabatic elimination) used to validate the
//!   closed forms.

pub mod dynamics;
pub mod linalg;
pub mod measurement;
pub mod num;
pub mod oracle;
pub mod quasiprob;
pub mod spin;

use thiserror::Error;

/// Errors shared across the library.
#[derive(Debug, Error)]
pub enum QndError {
    /// Parameters outside the domain of an operation (negative rates,
    /// non-half-integer spins, inconsistent quantum numbers, ...).
    #[error("invalid input: {0}")]
    InvalidInput(String),
    /// Matrix or state dimensions do not match.
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    /// A detection record is so improbable that its conditional state cannot
    /// be normalized in double precision.
    #[error("record probability underflow: {0}")]
    UnderflowOutcome(String),
    /// The Gaussian summary of a record has no stationary point (arcsine
    /// argument outside [-1, 1]).
    #[error("no peak: {0}")]
    NoPeak(String),
    /// A closed-form approximation is outside its regime of validity.
    #[error("approximation invalid: {0}")]
    ApproximationInvalid(String),
    /// The operation is defined only for a restricted input class.
    #[error("unsupported input: {0}")]
    UnsupportedInput(String),
    /// Probability leaked past the Fock-space cutoff of a truncated
    /// integration.
    #[error("cutoff leakage: {0}")]
    CutoffLeakage(String),
    /// A fixed-step integration became unstable even after one retry at a
    /// smaller step.
    #[error("integration unstable: {0}")]
    IntegrationUnstable(String),
}

pub type Result<T> = std::result::Result<T, QndError>;
