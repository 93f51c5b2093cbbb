//! Two-point functions in position and momentum space.
//!
//! Momentum modes are `a(p) = N^{-1/2} sum_x e^{-i p.x} a_x` with
//! `p_axis = 2 pi k_axis / L_axis`; momentum index `k = k_0 + L_0 k_1`
//! (axis 0 fastest), matching the kinetic grid.

use ndarray::Array2;

use super::density::DensityMatrix;
use super::fock::{apply_monomial, Ladder};
use super::lattice::LatticeSpec;
use crate::error::{Error, Result};
use crate::linalg::C64;

fn check_dim(rho: &DensityMatrix, lattice: LatticeSpec) -> Result<()> {
    if rho.dim() != lattice.dim() {
        return Err(Error::DimensionMismatch { expected: lattice.dim(), got: rho.dim() });
    }
    Ok(())
}

/// `C[x, y] = Tr(rho a_x^* a_y)`.
pub fn position_correlations(rho: &DensityMatrix, lattice: LatticeSpec) -> Result<Array2<C64>> {
    check_dim(rho, lattice)?;
    let n = lattice.sites();
    let m = rho.matrix();
    let mut out = Array2::zeros((n, n));
    for x in 0..n {
        for y in 0..n {
            let mono = [(x, Ladder::Create), (y, Ladder::Annihilate)];
            let mut acc = C64::new(0.0, 0.0);
            for b in 0..lattice.dim() {
                if let Some((b2, s)) = apply_monomial(&mono, b) {
                    acc += m[[b, b2]] * s;
                }
            }
            out[[x, y]] = acc;
        }
    }
    Ok(out)
}

/// Momenta of every grid point, one component per axis.
pub fn momenta(lattice: LatticeSpec) -> Vec<Vec<f64>> {
    let ext = lattice.extents();
    (0..lattice.sites())
        .map(|k| {
            let mut rest = k;
            ext.iter()
                .map(|&l| {
                    let kk = rest % l;
                    rest /= l;
                    2.0 * std::f64::consts::PI * kk as f64 / l as f64
                })
                .collect()
        })
        .collect()
}

/// `G[p, q] = <a^*(p) a(q)>`.
pub fn momentum_correlations(rho: &DensityMatrix, lattice: LatticeSpec) -> Result<Array2<C64>> {
    let cxy = position_correlations(rho, lattice)?;
    let n = lattice.sites();
    let moms = momenta(lattice);
    let pos: Vec<Vec<f64>> = (0..n)
        .map(|x| lattice.coords(x).into_iter().map(|v| v as f64).collect())
        .collect();
    let phase = |p: &[f64], x: &[f64]| -> C64 {
        let arg: f64 = p.iter().zip(x).map(|(a, b)| a * b).sum();
        C64::from_polar(1.0, arg)
    };
    // F[p, x] = e^{i p.x} / sqrt(N); G = F C F^*.
    let f = Array2::from_shape_fn((n, n), |(p, x)| phase(&moms[p], &pos[x]) / (n as f64).sqrt());
    let f_adj = f.t().mapv(|z| z.conj());
    Ok(f.dot(&cxy).dot(&f_adj))
}

/// Diagonal of the momentum correlations, the occupation `rho(p)`.
pub fn occupation(rho: &DensityMatrix, lattice: LatticeSpec) -> Result<Vec<f64>> {
    let g = momentum_correlations(rho, lattice)?;
    Ok((0..lattice.sites()).map(|p| g[[p, p]].re).collect())
}

/// `omega(a^*(f) a(g)) = sum_{p,q} f(p) conj(g(q)) G[p, q]`.
pub fn two_point(rho: &DensityMatrix, lattice: LatticeSpec, f: &[C64], g: &[C64]) -> Result<C64> {
    let n = lattice.sites();
    if f.len() != n || g.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: f.len().min(g.len()) });
    }
    let gm = momentum_correlations(rho, lattice)?;
    let mut acc = C64::new(0.0, 0.0);
    for p in 0..n {
        for q in 0..n {
            acc += f[p] * g[q].conj() * gm[[p, q]];
        }
    }
    Ok(acc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operator_core::dynamics::gibbs_state;
    use crate::operator_core::fock::FockOperator;
    use crate::operator_core::hamiltonian::{build_hamiltonian, HamiltonianSpec};
    use crate::operator_core::lattice::Boundary;

    #[test]
    fn tracial_state_is_half_filled() {
        let l = LatticeSpec::chain(4, Boundary::Periodic).unwrap();
        let occ = occupation(&DensityMatrix::maximally_mixed(16), l).unwrap();
        assert!(occ.iter().all(|&x| (x - 0.5).abs() < 1e-15));
    }

    #[test]
    fn free_gibbs_occupation_is_fermi_dirac() {
        let l = LatticeSpec::chain(6, Boundary::Periodic).unwrap();
        let spec = HamiltonianSpec { interaction: 0.0, ..Default::default() };
        let k = build_hamiltonian(l, &spec).unwrap().kinetic;
        let beta = 1.3;
        let rho = gibbs_state(&k, beta).unwrap();
        let g = momentum_correlations(&rho, l).unwrap();
        for (p, mom) in momenta(l).iter().enumerate() {
            let eps = -2.0 * mom[0].cos();
            let fd = 1.0 / (1.0 + (beta * eps).exp());
            assert!((g[[p, p]].re - fd).abs() < 1e-10);
            for q in 0..6 {
                if q != p {
                    assert!(g[[p, q]].norm() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn two_point_of_delta_amplitudes_is_the_occupation() {
        let l = LatticeSpec::grid(2, 2, Boundary::Periodic).unwrap();
        let h = build_hamiltonian(l, &HamiltonianSpec::default()).unwrap().unperturbed();
        let rho = gibbs_state(&h, 0.8).unwrap();
        let occ = occupation(&rho, l).unwrap();
        for p in 0..4 {
            let mut f = vec![C64::new(0.0, 0.0); 4];
            f[p] = C64::new(1.0, 0.0);
            let v = two_point(&rho, l, &f, &f).unwrap();
            assert!((v.re - occ[p]).abs() < 1e-14 && v.im.abs() < 1e-14);
        }
        // Real-space correlations agree with explicit operator expectations.
        let c = position_correlations(&rho, l).unwrap();
        let op = FockOperator::creation(l, 1).unwrap().dot(&FockOperator::annihilation(l, 3).unwrap());
        assert!((rho.expectation(&op) - c[[1, 3]]).norm() < 1e-15);
        assert!(two_point(&rho, l, &[C64::new(1.0, 0.0)], &[C64::new(1.0, 0.0)]).is_err());
    }
}
