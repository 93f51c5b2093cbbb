//! Fermionic Boltzmann equation for translation-invariant momentum occupations.

mod equilibrium;
mod grid;
mod integrate;
mod kernel;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use equilibrium::{
    conserved_charges, entropy_density, fermi_dirac, fit_fermi_dirac, solve_beta_mu, solve_beta_mu_with,
    ChargeSolution, FermiDiracFit, SolveMethod, SolverOptions,
};
pub use grid::{Dispersion, MomentumGrid, MAX_GRID_POINTS};
pub use integrate::{evolve_to_stationary, step, Checkpoint, KineticState, StationaryOptions, StationaryRun};
pub use kernel::{
    collision_operator, CollisionForm, CollisionKernel, CollisionTable, ConstantVertex, ShellMode, Vertex,
};

/// Below this magnitude an excursion outside `[0, 1]` is rounding and gets clamped.
pub const PAULI_CLAMP: f64 = 1e-12;

/// Momentum occupation `rho(p)`, each value in `[0, 1]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct OccupationFunction(Vec<f64>);

impl OccupationFunction {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if let Some((k, v)) = values.iter().enumerate().find(|(_, v)| !(v.is_finite() && (0.0..=1.0).contains(*v))) {
            return Err(Error::InvalidState(format!("occupation {v} at momentum {k} outside [0, 1]")));
        }
        Ok(OccupationFunction(values))
    }

    pub fn constant(len: usize, c: f64) -> Result<Self> {
        Self::new(vec![c; len])
    }

    /// Accept values that leave `[0, 1]` by at most [`PAULI_CLAMP`], clamping them.
    pub fn clamped(mut values: Vec<f64>) -> Result<Self> {
        let mut worst = 0.0f64;
        for v in values.iter_mut() {
            if !v.is_finite() {
                return Err(Error::InvalidState("non-finite occupation".into()));
            }
            let excursion = (-*v).max(*v - 1.0);
            if excursion > 0.0 {
                worst = worst.max(excursion);
                *v = v.clamp(0.0, 1.0);
            }
        }
        if worst > PAULI_CLAMP {
            return Err(Error::InvalidState(format!("occupation leaves [0, 1] by {worst:e}")));
        }
        Ok(OccupationFunction(values))
    }

    pub fn random(len: usize, rng: &mut crate::rng::LabRng) -> Self {
        OccupationFunction(crate::rng::occupations(rng, len))
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn into_values(self) -> Vec<f64> {
        self.0
    }

    pub fn max_abs_diff(&self, other: &OccupationFunction) -> f64 {
        self.0.iter().zip(&other.0).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()))
    }
}
