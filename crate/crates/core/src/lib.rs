//! Exact quantum steady states of a trapped ion dispersively coupled to a
//! pumped optical cavity, together with the semiclassical bistability
//! analysis they are compared against.
//!
//! Code units: ħ = m = ω = 1, so lengths are measured in the trap length
//! x_ω = √(ħ/mω) and energies in ħω. The composite Hilbert space is always
//! ordered cavity ⊗ motion.
//!
//! Module map:
//! - [`hilbert`]: truncated bases and elementary operators.
//! - [`model`]: physical parameters, Hamiltonian and Lindblad generator.
//! - [`semiclassical`]: effective potential, equilibria and critical pumping.
//! - [`steady`]: dynamical map, Arnoldi spectra, dense oracle, Krylov
//!   null-space solver and displaced-basis refinement.
//! - [`observables`]: moments, Husimi functions, entropies, entanglement and
//!   non-Gaussianity.
//! - [`cli`]: configuration parsing and the scan driver.

pub mod cli;
pub mod error;
pub mod hilbert;
pub mod linalg;
pub mod model;
pub mod observables;
pub mod semiclassical;
pub mod steady;

pub use error::{Error, Result};

/// Complex scalar used throughout (identical to `faer::c64`).
pub type C64 = num_complex::Complex64;
