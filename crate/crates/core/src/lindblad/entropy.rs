//! Entropy along Lindblad trajectories and the finite-difference check of the
//! eigenvalue-rate formula.

use ndarray::Array2;
use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::generator::{EvolveMethod, LindbladGenerator, Propagator};
use super::jump::JumpOperator;
use super::rates::{entropy_derivative, pauli_rates};
use crate::error::{Error, Result};
use crate::linalg::{self, C64};
use crate::operator_core::{DensityMatrix, FockOperator, LatticeSpec};
use crate::rng;

/// Selfadjoint jump that pairs basis states at random, with equal diagonal
/// entries inside each pair. Under the literal generator it maps diagonal
/// states to diagonal states, so populations follow the Pauli flow exactly.
pub fn pairing_jump<R: Rng + ?Sized>(rng: &mut R, lattice: LatticeSpec) -> Result<JumpOperator> {
    let d = lattice.dim();
    let mut order: Vec<usize> = (0..d).collect();
    order.shuffle(rng);
    let mut w = Array2::<C64>::zeros((d, d));
    for pair in order.chunks(2) {
        let diag = rng::normal(rng);
        for &j in pair {
            w[[j, j]] = C64::new(diag, 0.0);
        }
        if let [j, k] = *pair {
            let z = C64::new(rng::normal(rng), rng::normal(rng));
            w[[j, k]] = z;
            w[[k, j]] = z.conj();
        }
    }
    JumpOperator::selfadjoint(FockOperator::from_matrix(lattice, w)?)
}

/// Von Neumann entropy at `tau = 0, dtau, ..., steps * dtau` under a fixed-step propagator.
pub fn entropy_trajectory(rho0: &DensityMatrix, step: &Propagator, steps: usize) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(steps + 1);
    let mut rho = rho0.clone();
    out.push(rho.entropy()?);
    for _ in 0..steps {
        rho = step.apply(&rho)?;
        out.push(rho.entropy()?);
    }
    Ok(out)
}

/// Smallest entropy increment along a trajectory (positive when strictly increasing).
pub fn min_increment(entropies: &[f64]) -> f64 {
    entropies.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EntropyRateCheck {
    /// Eigenvalue-rate formula at `tau`.
    pub formula: f64,
    /// `(S(tau + h) - S(tau - h)) / 2h` along the exact evolution.
    pub finite_difference: f64,
    pub relative_error: f64,
}

/// Compare the eigenvalue-rate formula with a central difference of the
/// entropy at `tau >= h`, for a diagonal initial state and a jump that keeps
/// it diagonal.
pub fn entropy_rate_check(jump: &JumpOperator, populations: &[f64], tau: f64, h: f64) -> Result<EntropyRateCheck> {
    if !(h > 0.0 && tau >= h) {
        return Err(Error::InvalidParameter("need 0 < h <= tau".into()));
    }
    let d = jump.operator().dim();
    if populations.len() != d {
        return Err(Error::DimensionMismatch { expected: d, got: populations.len() });
    }
    let rho0 = DensityMatrix::new(Array2::from_diag(&ndarray::Array1::from_iter(populations.iter().map(|&p| C64::new(p, 0.0)))))?;
    let generator = LindbladGenerator::new(jump.clone(), super::generator::LindbladForm::Literal)?;
    let at = |t: f64| -> Result<Array2<C64>> {
        Ok(Propagator::new(&generator, t, EvolveMethod::Dephasing)?.apply_matrix(rho0.matrix()))
    };
    let mid = at(tau)?;
    let off = mid.indexed_iter().filter(|((j, k), _)| j != k).fold(0.0f64, |m, (_, z)| m.max(z.norm()));
    if off > 1e-12 {
        return Err(Error::Precondition(format!("jump does not preserve diagonal states (off-diagonal {off:e})")));
    }
    let r: Vec<f64> = mid.diag().iter().map(|z| z.re).collect();
    let s = r.iter().sum::<f64>();
    let r: Vec<f64> = r.iter().map(|x| x / s).collect();
    let rates = pauli_rates(jump.operator().matrix(), &linalg::identity(d))?;
    let formula = entropy_derivative(&r, &rates)?.value;
    let sp = linalg::von_neumann_entropy(&at(tau + h)?)?;
    let sm = linalg::von_neumann_entropy(&at(tau - h)?)?;
    let finite_difference = (sp - sm) / (2.0 * h);
    let relative_error = (formula - finite_difference).abs() / formula.abs().max(f64::MIN_POSITIVE);
    Ok(EntropyRateCheck { formula, finite_difference, relative_error })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operator_core::Boundary;

    #[test]
    fn pairing_jump_keeps_diagonal_states_diagonal() {
        let mut r = rng::seeded(4);
        let l = LatticeSpec::chain(3, Boundary::Open).unwrap();
        let w = pairing_jump(&mut r, l).unwrap();
        let p = rng::probability_vector(&mut r, 8);
        let rho = Array2::from_diag(&ndarray::Array1::from_iter(p.iter().map(|&x| C64::new(x, 0.0))));
        let g = LindbladGenerator::new(w, super::super::generator::LindbladForm::Literal).unwrap();
        let drho = g.apply(&rho);
        assert!(!linalg::is_diagonal(&drho) || linalg::max_abs(&drho) > 0.0);
        let off = drho.indexed_iter().filter(|((j, k), _)| j != k).fold(0.0f64, |m, (_, z)| m.max(z.norm()));
        assert!(off < 1e-15);
    }

    #[test]
    fn rate_formula_matches_central_difference() {
        for (n, seed) in [(2, 1u64), (3, 2), (4, 3)] {
            let mut r = rng::seeded(seed);
            let l = LatticeSpec::chain(n, Boundary::Open).unwrap();
            let w = pairing_jump(&mut r, l).unwrap();
            let p = rng::probability_vector(&mut r, l.dim());
            let c = entropy_rate_check(&w, &p, 0.05, 1e-5).unwrap();
            assert!(c.formula > 0.0 && c.relative_error < 1e-6, "{c:?}");
        }
    }

    #[test]
    fn general_jump_is_rejected_by_the_rate_check() {
        let mut r = rng::seeded(8);
        let l = LatticeSpec::chain(2, Boundary::Open).unwrap();
        let w = JumpOperator::selfadjoint(FockOperator::from_matrix(l, rng::hermitian(&mut r, 4)).unwrap()).unwrap();
        assert!(matches!(entropy_rate_check(&w, &[0.1, 0.2, 0.3, 0.4], 0.1, 1e-5), Err(Error::Precondition(_))));
    }

    #[test]
    fn entropy_rises_along_random_trajectories() {
        let mut r = rng::seeded(12);
        let l = LatticeSpec::chain(3, Boundary::Open).unwrap();
        let w = JumpOperator::selfadjoint(FockOperator::from_matrix(l, rng::hermitian(&mut r, 8)).unwrap()).unwrap();
        let g = LindbladGenerator::new(w, super::super::generator::LindbladForm::Literal).unwrap();
        let step = Propagator::new(&g, 0.01, EvolveMethod::Dephasing).unwrap();
        let rho0 = DensityMatrix::new(rng::density_matrix(&mut r, 8)).unwrap();
        let s = entropy_trajectory(&rho0, &step, 100).unwrap();
        assert!(min_increment(&s) >= -1e-10);
        assert!(s[100] > s[0]);
    }
}
