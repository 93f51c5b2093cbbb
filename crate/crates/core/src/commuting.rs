//! The family `H_gamma = gamma K + V / gamma` and the commutator defect
//! `[[H, H_gamma], a] = (1/gamma - gamma) [[K, V], a]` of its derivation with
//! the physical one, plus the Gibbs states of the family and how far they are
//! from being invariant under `K + V`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, C64};
use crate::operator_core::{gibbs_state, DensityMatrix, FockOperator, Ladder, LatticeSpec};

/// `gamma K + V / gamma`.
pub fn scaled_generator(k: &FockOperator, v: &FockOperator, gamma: f64) -> Result<FockOperator> {
    if !(gamma.is_finite() && gamma > 0.0) {
        return Err(Error::InvalidParameter(format!("gamma must be positive, got {gamma}")));
    }
    if k.dim() != v.dim() {
        return Err(Error::DimensionMismatch { expected: k.dim(), got: v.dim() });
    }
    Ok(&(k * gamma) + &(v * (1.0 / gamma)))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DerivationDefect {
    /// `||[[H1, H2], a]||`.
    pub commutator_defect: f64,
    /// `||[H1, [H2, a]] - [H2, [H1, a]]||`, equal to the above by the Jacobi identity.
    pub nested_defect: f64,
    /// `min_c ||[H1, H2] - c 1||`: zero exactly when the commutator is central.
    pub centrality_defect: f64,
}

/// How far the derivations of `h1` and `h2` are from commuting on the probe `a`.
pub fn derivation_commutator_defect(h1: &FockOperator, h2: &FockOperator, a: &FockOperator) -> Result<DerivationDefect> {
    for op in [h1, h2] {
        if !op.is_hermitian(1e-12 * op.max_abs().max(1.0)) {
            return Err(Error::Precondition("generators must be Hermitian".into()));
        }
    }
    let (m1, m2, am) = (h1.matrix(), h2.matrix(), a.matrix());
    let c12 = linalg::commutator(m1, m2);
    let commutator_defect = linalg::op_norm(&linalg::commutator(&c12, am))?;
    let nested = linalg::commutator(m1, &linalg::commutator(m2, am)) - linalg::commutator(m2, &linalg::commutator(m1, am));
    let nested_defect = linalg::op_norm(&nested)?;
    // [H1, H2] = i X with X Hermitian; the closest multiple of the identity
    // sits at the midpoint of the spectrum of X.
    let x = c12.mapv(|z| z * C64::new(0.0, -1.0));
    let x = (&x + &linalg::adjoint(&x)).mapv(|z| z * 0.5);
    let vals = linalg::eigvalsh(&x)?;
    let centrality_defect = match (vals.first(), vals.last()) {
        (Some(lo), Some(hi)) => 0.5 * (hi - lo),
        _ => 0.0,
    };
    Ok(DerivationDefect { commutator_defect, nested_defect, centrality_defect })
}

#[derive(Clone, Debug)]
pub struct InvariantState {
    pub rho: DensityMatrix,
    /// `||[rho, K + V]||_1`.
    pub invariance_defect: f64,
}

/// Gibbs state of `gamma K + V / gamma` at inverse temperature `beta`, with
/// its failure to commute with `K + V`.
pub fn invariant_state_family(k: &FockOperator, v: &FockOperator, gamma: f64, beta: f64) -> Result<InvariantState> {
    let rho = gibbs_state(&scaled_generator(k, v, gamma)?, beta)?;
    let h = k + v;
    let invariance_defect = linalg::trace_norm(&linalg::commutator(rho.matrix(), h.matrix()))?;
    Ok(InvariantState { rho, invariance_defect })
}

/// Probe monomials `a_0*`, `a_0* a_1*` and `n_0`.
pub fn default_probes(lattice: LatticeSpec) -> Result<Vec<(String, FockOperator)>> {
    let mut out = vec![("a0*".to_string(), FockOperator::creation(lattice, 0)?)];
    if lattice.sites() > 1 {
        let pair = FockOperator::from_terms(
            lattice,
            &[(linalg::c(1.0), vec![(0, Ladder::Create), (1, Ladder::Create)])],
        )?;
        out.push(("a0*a1*".to_string(), pair));
    }
    out.push(("n0".to_string(), FockOperator::number(lattice, 0)?));
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DefectRow {
    pub sites: usize,
    pub probe: String,
    pub gamma: f64,
    pub beta: f64,
    pub commutator_defect: f64,
    pub nested_defect: f64,
    /// `||[[K, V], a]||`, the gamma-independent constant.
    pub base_defect: f64,
    pub centrality_defect: f64,
    pub invariance_defect: f64,
}

/// Defect table for `H1 = K + V`, `H2 = gamma K + V / gamma` over a grid.
pub fn defect_table(k: &FockOperator, v: &FockOperator, gammas: &[f64], betas: &[f64]) -> Result<Vec<DefectRow>> {
    let lattice = k.lattice();
    let h = k + v;
    let probes = default_probes(lattice)?;
    let mut rows = Vec::new();
    for (name, a) in &probes {
        let base = derivation_commutator_defect(k, v, a)?;
        for &gamma in gammas {
            let hg = scaled_generator(k, v, gamma)?;
            let d = derivation_commutator_defect(&h, &hg, a)?;
            for &beta in betas {
                let inv = invariant_state_family(k, v, gamma, beta)?;
                rows.push(DefectRow {
                    sites: lattice.sites(),
                    probe: name.clone(),
                    gamma,
                    beta,
                    commutator_defect: d.commutator_defect,
                    nested_defect: d.nested_defect,
                    base_defect: base.commutator_defect,
                    centrality_defect: d.centrality_defect,
                    invariance_defect: inv.invariance_defect,
                });
            }
        }
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operator_core::{build_hamiltonian, Boundary, HamiltonianParts, HamiltonianSpec};

    fn parts(n: usize, boundary: Boundary) -> HamiltonianParts {
        let lattice = LatticeSpec::chain(n, boundary).unwrap();
        build_hamiltonian(lattice, &HamiltonianSpec::default()).unwrap()
    }

    #[test]
    fn scaled_generator_identities() {
        let p = parts(4, Boundary::Periodic);
        let (k, v) = (&p.kinetic, &p.interaction);
        assert_eq!(scaled_generator(k, v, 1.0).unwrap().max_abs_diff(&p.unperturbed()), 0.0);
        let a = scaled_generator(k, v, 2.0).unwrap();
        let b = scaled_generator(v, k, 0.5).unwrap();
        assert!(a.max_abs_diff(&b) < 1e-15);
        assert!(scaled_generator(k, v, 0.0).is_err());
    }

    #[test]
    fn scaled_generator_spectrum_fixture() {
        // Traces from counting: Tr K = 0, Tr V = 16, Tr K^2 = 32, Tr V^2 = 36, Tr KV = 0.
        let p = parts(4, Boundary::Periodic);
        let g = scaled_generator(&p.kinetic, &p.interaction, 2.0).unwrap();
        let vals = linalg::eigvalsh(g.matrix()).unwrap();
        let sum: f64 = vals.iter().sum();
        let sq: f64 = vals.iter().map(|x| x * x).sum();
        assert!((sum - 8.0).abs() < 1e-12 && (sq - 137.0).abs() < 1e-11);
        // Ground: one particle at k = 0, 2 * (-2). Top: three particles, where
        // 2K has band energies 2 + 0 + 0 and V counts two occupied bonds.
        assert!((vals[0] + 4.0).abs() < 1e-12, "{:.16}", vals[0]);
        assert!((vals[15] - 5.0).abs() < 1e-12, "{:.16}", vals[15]);
    }

    #[test]
    fn trivial_defects_vanish() {
        let p = parts(4, Boundary::Periodic);
        let h = p.unperturbed();
        let a = FockOperator::creation(h.lattice(), 0).unwrap();
        let same = derivation_commutator_defect(&h, &h, &a).unwrap();
        assert_eq!(same.commutator_defect, 0.0);
        let zero = FockOperator::zeros(h.lattice());
        let free = derivation_commutator_defect(&p.kinetic, &zero, &a).unwrap();
        assert_eq!(free.commutator_defect, 0.0);
        assert_eq!(free.centrality_defect, 0.0);
    }

    #[test]
    fn defect_scales_with_gamma() {
        let p = parts(4, Boundary::Periodic);
        let (k, v) = (&p.kinetic, &p.interaction);
        let h = p.unperturbed();
        let a = FockOperator::creation(h.lattice(), 0).unwrap();
        let base = derivation_commutator_defect(k, v, &a).unwrap().commutator_defect;
        assert!(base > 0.1);
        for gamma in [0.5, 1.0, 2.0, 4.0] {
            let d = derivation_commutator_defect(&h, &scaled_generator(k, v, gamma).unwrap(), &a).unwrap();
            let expect = (1.0 / gamma - gamma).abs() * base;
            assert!((d.commutator_defect - expect).abs() < 1e-12 * expect.max(1.0));
            assert!((d.nested_defect - d.commutator_defect).abs() < 1e-12 * expect.max(1.0));
            if gamma == 1.0 {
                assert_eq!(d.commutator_defect, 0.0);
            }
        }
    }

    #[test]
    fn invariant_family() {
        let p = parts(4, Boundary::Periodic);
        let (k, v) = (&p.kinetic, &p.interaction);
        assert!(invariant_state_family(k, v, 1.0, 1.0).unwrap().invariance_defect < 1e-12);
        assert!(invariant_state_family(k, v, 2.0, 1.0).unwrap().invariance_defect > 1e-3);
        // A diagonal K commutes with the diagonal V for every gamma.
        let diag_k = FockOperator::total_number(k.lattice());
        for gamma in [0.5, 2.0, 4.0] {
            assert!(invariant_state_family(&diag_k, v, gamma, 1.3).unwrap().invariance_defect < 1e-12);
        }
    }
}
