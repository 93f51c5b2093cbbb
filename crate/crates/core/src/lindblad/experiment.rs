use ndarray::Array2;
use serde::{Deserialize, Serialize};

use super::generator::{EvolveMethod, LindbladForm, LindbladGenerator, Propagator};
use super::jump::JumpOperator;
use crate::error::{Error, Result};
use crate::linalg::{c, C64};
use crate::operator_core::{Boundary, DensityMatrix, FockOperator, Geometry, LatticeSpec};
use crate::rng;

pub const EXPERIMENT_MAX_SITES: usize = 10;
pub const EXPERIMENT_MAX_REGION: usize = 6;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EntropyPoint {
    pub tau: f64,
    /// Entropy of the globally evolved state restricted to the region.
    pub restricted: f64,
    /// Entropy of the restricted initial state evolved by the localized jump.
    pub localized: f64,
    pub difference: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EntropyExperiment {
    pub region: Vec<usize>,
    pub region_size: usize,
    /// Lattice bonds with exactly one end in the region.
    pub boundary_size: usize,
    pub initial_entropy: f64,
    pub points: Vec<EntropyPoint>,
}

fn spread(bits: usize, positions: &[usize]) -> usize {
    positions.iter().enumerate().fold(0usize, |acc, (a, &p)| acc | (((bits >> a) & 1) << p))
}

/// Conditional expectation of `w` onto the region with respect to the state
/// `rest` of the complement: `Tr_{X^c}[(rest (x) 1) W]`.
fn localize(w: &Array2<C64>, rest: &DensityMatrix, region: &[usize], others: &[usize]) -> Array2<C64> {
    let dx = 1usize << region.len();
    let dc = 1usize << others.len();
    let lift_x: Vec<usize> = (0..dx).map(|a| spread(a, region)).collect();
    let lift_c: Vec<usize> = (0..dc).map(|a| spread(a, others)).collect();
    let r = rest.matrix();
    let mut out = Array2::<C64>::zeros((dx, dx));
    for cc in 0..dc {
        for cp in 0..dc {
            let rho = r[[cc, cp]];
            if rho.norm() == 0.0 {
                continue;
            }
            for a in 0..dx {
                for b in 0..dx {
                    out[[a, b]] += rho * w[[lift_c[cp] | lift_x[a], lift_c[cc] | lift_x[b]]];
                }
            }
        }
    }
    out
}

fn parity_defect(m: &Array2<C64>) -> f64 {
    m.indexed_iter()
        .filter(|((i, j), _)| (i.count_ones() + j.count_ones()) % 2 == 1)
        .fold(0.0f64, |acc, (_, z)| acc.max(z.norm()))
}

/// Compare the entropy of a region under the global evolution with the
/// evolution generated by the jump operator localized to the region.
///
/// Both evolutions use the literal generator, so `w` must be selfadjoint.
/// Restrictions are Jordan-Wigner partial traces, which match the fermionic
/// ones for even states and even `w` on an open chain (no term of `w` then
/// carries a string across the region).
pub fn localized_entropy_experiment(
    omega: &DensityMatrix,
    region: &[usize],
    w: &JumpOperator,
    taus: &[f64],
) -> Result<EntropyExperiment> {
    let lattice = w.operator().lattice();
    let sites = lattice.sites();
    if sites > EXPERIMENT_MAX_SITES {
        return Err(Error::TooManySites(sites, EXPERIMENT_MAX_SITES));
    }
    if omega.dim() != lattice.dim() {
        return Err(Error::DimensionMismatch { expected: lattice.dim(), got: omega.dim() });
    }
    if region.is_empty() || region.windows(2).any(|p| p[1] != p[0] + 1) || region[region.len() - 1] >= sites {
        return Err(Error::InvalidParameter(format!("region {region:?} is not a contiguous run of sites")));
    }
    if region.len() > EXPERIMENT_MAX_REGION {
        return Err(Error::InvalidParameter(format!("region larger than {EXPERIMENT_MAX_REGION} sites")));
    }
    let whole = region.len() == sites;
    if !whole && !(matches!(lattice.geometry(), Geometry::Chain) && lattice.boundary() == Boundary::Open) {
        return Err(Error::Unsupported("proper sub-regions need an open chain".into()));
    }
    if !w.is_selfadjoint() || !w.operator().is_even() {
        return Err(Error::Precondition("jump operator must be selfadjoint and even".into()));
    }
    if parity_defect(omega.matrix()) > 1e-12 {
        return Err(Error::Precondition("state must be even".into()));
    }
    let others: Vec<usize> = (0..sites).filter(|s| !region.contains(s)).collect();

    let omega_x = omega.reduced(region)?;
    let w_x = if whole {
        w.operator().matrix().clone()
    } else {
        localize(w.operator().matrix(), &omega.reduced(&others)?, region, &others)
    };
    let sub = LatticeSpec::chain(region.len(), Boundary::Open)?;
    let w_x = JumpOperator::selfadjoint(FockOperator::from_matrix(sub, w_x)?)?;

    let global = LindbladGenerator::new(w.clone(), LindbladForm::Literal)?;
    let local = LindbladGenerator::new(w_x, LindbladForm::Literal)?;
    let mut points = Vec::with_capacity(taus.len());
    for &tau in taus {
        let rho = Propagator::new(&global, tau, EvolveMethod::Dephasing)?.apply(omega)?;
        let restricted = rho.reduced(region)?.entropy()?;
        let localized = Propagator::new(&local, tau, EvolveMethod::Dephasing)?.apply(&omega_x)?.entropy()?;
        points.push(EntropyPoint { tau, restricted, localized, difference: restricted - localized });
    }
    let boundary_size =
        lattice.bonds().iter().filter(|(i, j)| region.contains(i) != region.contains(j)).count();
    Ok(EntropyExperiment {
        region: region.to_vec(),
        region_size: region.len(),
        boundary_size,
        initial_entropy: omega_x.entropy()?,
        points,
    })
}

/// Product of single-site diagonal states with occupations drawn uniformly
/// from `[0.1, 0.9]`.
pub fn random_product_state(sites: usize, seed: u64) -> DensityMatrix {
    use rand::Rng;
    let mut r = rng::seeded(seed);
    let p: Vec<f64> = (0..sites).map(|_| r.random_range(0.1..0.9)).collect();
    let d = 1usize << sites;
    let diag: Vec<C64> = (0..d)
        .map(|s| c((0..sites).map(|i| if s >> i & 1 == 1 { p[i] } else { 1.0 - p[i] }).product()))
        .collect();
    DensityMatrix::from_rounded(Array2::from_diag(&ndarray::Array1::from(diag)))
}

/// Nearest-neighbour hopping `sum (a_i* a_{i+1} + h.c.)` on the lattice.
pub fn hopping_jump(lattice: LatticeSpec) -> Result<JumpOperator> {
    let mut w = FockOperator::zeros(lattice);
    for (i, j) in lattice.bonds() {
        w = &w + &FockOperator::hopping(lattice, i, j)?;
    }
    JumpOperator::selfadjoint(w)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalingRow {
    pub region_size: usize,
    pub boundary_size: usize,
    /// `S_restricted(tau) - S(0)`.
    pub restricted_change: f64,
    /// `S_localized(tau) - S(0)`.
    pub localized_change: f64,
    pub abs_difference: f64,
}

/// Centered regions of each size on an open chain with hopping jump operator
/// and a seeded product initial state.
pub fn surface_scaling_sweep(sites: usize, sizes: &[usize], tau: f64, seed: u64) -> Result<Vec<ScalingRow>> {
    let lattice = LatticeSpec::chain(sites, Boundary::Open)?;
    let w = hopping_jump(lattice)?;
    let omega = random_product_state(sites, seed);
    sizes
        .iter()
        .map(|&size| {
            if size == 0 || size > sites {
                return Err(Error::InvalidParameter(format!("region size {size} out of range")));
            }
            let start = (sites - size) / 2;
            let region: Vec<usize> = (start..start + size).collect();
            let exp = localized_entropy_experiment(&omega, &region, &w, &[tau])?;
            let p = exp.points[0];
            Ok(ScalingRow {
                region_size: size,
                boundary_size: exp.boundary_size,
                restricted_change: p.restricted - exp.initial_entropy,
                localized_change: p.localized - exp.initial_entropy,
                abs_difference: p.difference.abs(),
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn whole_lattice_gives_no_difference() {
        let l = LatticeSpec::chain(4, Boundary::Open).unwrap();
        let w = hopping_jump(l).unwrap();
        let omega = random_product_state(4, 1);
        let exp = localized_entropy_experiment(&omega, &[0, 1, 2, 3], &w, &[0.0, 0.5, 1.0]).unwrap();
        assert!(exp.points.iter().all(|p| p.difference == 0.0));
        assert!(exp.points[2].restricted > exp.points[0].restricted);
    }

    #[test]
    fn jump_inside_region_gives_no_difference() {
        let l = LatticeSpec::chain(6, Boundary::Open).unwrap();
        let w = &FockOperator::hopping(l, 2, 3).unwrap() + &FockOperator::hopping(l, 3, 4).unwrap();
        let w = JumpOperator::selfadjoint(w).unwrap();
        let omega = random_product_state(6, 2);
        let exp = localized_entropy_experiment(&omega, &[1, 2, 3, 4], &w, &[0.3, 1.0, 2.0]).unwrap();
        assert!(exp.points.iter().all(|p| p.difference.abs() < 1e-10), "{exp:?}");
        assert_eq!(exp.boundary_size, 2);
    }

    #[test]
    fn rejects_bad_regions() {
        let l = LatticeSpec::chain(4, Boundary::Open).unwrap();
        let w = hopping_jump(l).unwrap();
        let omega = random_product_state(4, 3);
        assert!(localized_entropy_experiment(&omega, &[0, 2], &w, &[1.0]).is_err());
        assert!(localized_entropy_experiment(&omega, &[], &w, &[1.0]).is_err());
        let lp = LatticeSpec::chain(4, Boundary::Periodic).unwrap();
        assert!(localized_entropy_experiment(&omega, &[1, 2], &hopping_jump(lp).unwrap(), &[1.0]).is_err());
    }
}
