//! Simulation of a driven-dissipative optomechanical cavity: two optical
//! modes and one mechanical (wall) mode coupled through the full nonlinear
//! interaction, with dissipation written in the dressed eigenbasis of the
//! system Hamiltonian.
//!
//! Units: ħ = k_B = 1, every frequency, temperature, rate and time is
//! expressed in units of the second optical mode frequency ω₂.
//!
//! The pipeline is
//! [`hamiltonian`] → [`dressed`] → [`lindblad`] → [`observables`],
//! orchestrated by [`scenarios`]. [`analytic`] holds closed-form
//! coherence-transfer estimates together with a brute-force unitary oracle.

pub mod analytic;
pub mod dressed;
pub mod error;
pub mod fockspace;
pub mod hamiltonian;
pub mod lindblad;
pub mod observables;
pub mod scenarios;

pub use error::{Error, Result};

/// Dense real matrix. Bosonic ladder operators, the system Hamiltonian and
/// every transition amplitude are real in the Fock basis.
pub type Matrix = nalgebra::DMatrix<f64>;

/// Dense complex matrix, used for density matrices and the drive.
pub type CMatrix = nalgebra::DMatrix<num_complex::Complex64>;

pub use num_complex::Complex64 as C64;
