//! Numerical laboratory for the kinetic, Lindblad and modular characterizations
//! of thermal (KMS) states of lattice fermions.
//!
//! Modules, bottom up:
//! - [`operator_core`]: Jordan-Wigner Fock space, Hamiltonians, Gibbs states.
//! - [`kinetic`]: the fermionic Boltzmann equation for momentum occupations.
//! - [`lindblad`]: jump operators, Lindblad evolution, Pauli rates, entropy.
//! - [`kms`]: GNS vectors, modular operator and KMS line tests.
//! - [`commuting`]: the `gamma K + V/gamma` family of commuting dynamics.
//! - [`clustering`]: spatial/temporal clustering and Lieb-Robinson fits.
//! - [`scaling`]: interaction-picture weak-coupling comparisons.

extern crate blas_src;

pub mod clustering;
pub mod commuting;
pub mod error;
pub mod kinetic;
pub mod kms;
pub mod lindblad;
pub mod linalg;
pub mod operator_core;
pub mod par;
pub mod rng;
pub mod scaling;
pub mod superop;

pub use error::{Error, Result};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
