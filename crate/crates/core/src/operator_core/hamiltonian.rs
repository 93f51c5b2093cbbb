use serde::{Deserialize, Serialize};

use super::fock::{FockOperator, Ladder, Monomial};
use super::lattice::LatticeSpec;
use crate::error::{Error, Result};
use crate::linalg::c;

/// Template for the perturbation `H'`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum Perturbation {
    /// No perturbation, `H' = 0`.
    None,
    /// Quasifree: next-nearest-neighbour hopping `sum (a_i^* a_j + h.c.)` over
    /// pairs two steps apart along each axis.
    QuasifreeHopping,
    /// Quartic: density-assisted hopping `sum_i n_i (a_{i+1}^* a_{i+2} + h.c.)`
    /// along each axis.
    QuarticLocal,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HamiltonianSpec {
    pub hopping: f64,
    pub interaction: f64,
    pub chemical_potential: f64,
    pub perturbation: Perturbation,
    pub perturbation_strength: f64,
    pub coupling: f64,
}

impl Default for HamiltonianSpec {
    fn default() -> Self {
        HamiltonianSpec {
            hopping: 1.0,
            interaction: 1.0,
            chemical_potential: 0.0,
            perturbation: Perturbation::QuasifreeHopping,
            perturbation_strength: 1.0,
            coupling: 0.0,
        }
    }
}

impl HamiltonianSpec {
    pub fn validate(&self) -> Result<()> {
        let vals = [
            self.hopping,
            self.interaction,
            self.chemical_potential,
            self.perturbation_strength,
            self.coupling,
        ];
        if vals.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("Hamiltonian parameters must be finite".into()));
        }
        if self.coupling < 0.0 {
            return Err(Error::InvalidParameter(format!(
                "coupling must be >= 0, got {}",
                self.coupling
            )));
        }
        Ok(())
    }
}

/// `K`, `V` and `H'` of `H_lambda = K + V + lambda H'`.
#[derive(Clone, Debug)]
pub struct HamiltonianParts {
    pub kinetic: FockOperator,
    pub interaction: FockOperator,
    pub perturbation: FockOperator,
    pub coupling: f64,
}

impl HamiltonianParts {
    /// `H_0 = K + V`.
    pub fn unperturbed(&self) -> FockOperator {
        &self.kinetic + &self.interaction
    }

    pub fn full(&self) -> FockOperator {
        self.with_coupling(self.coupling)
    }

    pub fn with_coupling(&self, lambda: f64) -> FockOperator {
        &self.unperturbed() + &(&self.perturbation * lambda)
    }
}

fn hop(i: usize, j: usize) -> [Monomial; 2] {
    [
        vec![(i, Ladder::Create), (j, Ladder::Annihilate)],
        vec![(j, Ladder::Create), (i, Ladder::Annihilate)],
    ]
}

/// `K = -J sum_<ij> (a_i^* a_j + h.c.) - mu sum_i n_i`.
pub fn kinetic(lattice: LatticeSpec, hopping: f64, chemical_potential: f64) -> Result<FockOperator> {
    let mut terms = Vec::new();
    if hopping != 0.0 {
        for (i, j) in lattice.bonds() {
            for m in hop(i, j) {
                terms.push((c(-hopping), m));
            }
        }
    }
    let hop_part = FockOperator::from_terms(lattice, &terms)?;
    let mu_part = FockOperator::diagonal(lattice, |b| -chemical_potential * b.count_ones() as f64);
    Ok(&hop_part + &mu_part)
}

/// `V = U sum_<ij> n_i n_j`.
pub fn interaction(lattice: LatticeSpec, u: f64) -> FockOperator {
    let bonds = lattice.bonds();
    FockOperator::diagonal(lattice, |b| {
        let pairs = bonds
            .iter()
            .filter(|&&(i, j)| (b >> i) & 1 == 1 && (b >> j) & 1 == 1)
            .count();
        u * pairs as f64
    })
}

pub fn perturbation(lattice: LatticeSpec, kind: Perturbation, strength: f64) -> Result<FockOperator> {
    let mut terms = Vec::new();
    match kind {
        Perturbation::None => {}
        Perturbation::QuasifreeHopping => {
            for (i, j) in lattice.pairs_at_distance(2) {
                for m in hop(i, j) {
                    terms.push((c(strength), m));
                }
            }
        }
        Perturbation::QuarticLocal => {
            let mut seen = Vec::new();
            for axis in 0..lattice.extents().len() {
                for i in 0..lattice.sites() {
                    let (Some(j), Some(k)) = (lattice.shifted(i, axis, 1), lattice.shifted(i, axis, 2))
                    else {
                        continue;
                    };
                    if i == j || j == k || i == k || seen.contains(&(i, j, k)) {
                        continue;
                    }
                    seen.push((i, j, k));
                    for m in hop(j, k) {
                        let mut mono = vec![(i, Ladder::Create), (i, Ladder::Annihilate)];
                        mono.extend(m);
                        terms.push((c(strength), mono));
                    }
                }
            }
        }
    }
    FockOperator::from_terms(lattice, &terms)
}

pub fn build_hamiltonian(lattice: LatticeSpec, spec: &HamiltonianSpec) -> Result<HamiltonianParts> {
    spec.validate()?;
    Ok(HamiltonianParts {
        kinetic: kinetic(lattice, spec.hopping, spec.chemical_potential)?,
        interaction: interaction(lattice, spec.interaction),
        perturbation: perturbation(lattice, spec.perturbation, spec.perturbation_strength)?,
        coupling: spec.coupling,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::eigvalsh;
    use crate::operator_core::lattice::Boundary;

    #[test]
    fn parts_are_hermitian_and_gauge_invariant() {
        let l = LatticeSpec::chain(6, Boundary::Periodic).unwrap();
        for kind in [Perturbation::QuasifreeHopping, Perturbation::QuarticLocal] {
            let spec = HamiltonianSpec { perturbation: kind, chemical_potential: 0.3, ..Default::default() };
            let p = build_hamiltonian(l, &spec).unwrap();
            let n = FockOperator::total_number(l);
            for op in [&p.kinetic, &p.interaction, &p.perturbation] {
                assert!(op.is_hermitian(0.0));
                assert!(op.commutator(&n).max_abs() < 1e-13);
            }
            assert!(p.perturbation.max_abs() > 0.0);
        }
    }

    #[test]
    fn zero_interaction_gives_zero_matrix() {
        let l = LatticeSpec::chain(4, Boundary::Open).unwrap();
        let spec = HamiltonianSpec { interaction: 0.0, ..Default::default() };
        assert_eq!(build_hamiltonian(l, &spec).unwrap().interaction.max_abs(), 0.0);
    }

    #[test]
    fn two_site_one_particle_spectrum() {
        // Hopping matrix [[0,-1],[-1,0]] has eigenvalues -1 and +1; V vanishes
        // with a single particle.
        let l = LatticeSpec::chain(2, Boundary::Open).unwrap();
        let p = build_hamiltonian(l, &HamiltonianSpec::default()).unwrap();
        let h = p.unperturbed();
        let one = [0b01usize, 0b10];
        let sub = ndarray::Array2::from_shape_fn((2, 2), |(a, b)| h.matrix()[[one[a], one[b]]]);
        let ev = eigvalsh(&sub).unwrap();
        assert!((ev[0] + 1.0).abs() < 1e-14 && (ev[1] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn negative_coupling_rejected() {
        let l = LatticeSpec::chain(2, Boundary::Open).unwrap();
        let spec = HamiltonianSpec { coupling: -0.1, ..Default::default() };
        assert!(build_hamiltonian(l, &spec).is_err());
    }
}
