//! Finite fermionic lattice algebra: Jordan-Wigner operators, Hamiltonians,
//! Gibbs states, Heisenberg dynamics and translations.

pub mod density;
pub mod dynamics;
pub mod fock;
pub mod hamiltonian;
pub mod lattice;
pub mod two_point;

pub use density::DensityMatrix;
pub use dynamics::{gibbs_state, heisenberg_evolve, translate, Dynamics};
pub use fock::{FockOperator, Ladder};
pub use hamiltonian::{build_hamiltonian, HamiltonianParts, HamiltonianSpec, Perturbation};
pub use lattice::{Boundary, Geometry, LatticeSpec, MAX_SITES};
pub use two_point::{momentum_correlations, occupation, two_point};
