use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{Spectrum, C64};
use crate::operator_core::FockOperator;

/// Which sign the Bohr frequency enters the regularized time integral with.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum GapSign {
    /// `W_jk = H'_jk / (eps - i mu_jk)`.
    #[default]
    Standard,
    /// `W_jk = H'_jk / (eps + i mu_jk)`, for sensitivity checks.
    Reversed,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum Provenance {
    /// Built from a perturbation with damping `epsilon`.
    Perturbation { epsilon: f64, sign: GapSign },
    Supplied,
}

/// Jump operator of a Lindblad generator.
#[derive(Clone, Debug)]
pub struct JumpOperator {
    w: FockOperator,
    provenance: Provenance,
    selfadjoint: bool,
}

impl JumpOperator {
    pub const SELFADJOINT_TOL: f64 = 1e-12;

    /// Wrap a user operator; the selfadjoint flag is read off the matrix.
    pub fn supplied(w: FockOperator) -> Self {
        let selfadjoint = w.hermitian_defect() < Self::SELFADJOINT_TOL;
        JumpOperator { w, provenance: Provenance::Supplied, selfadjoint }
    }

    /// Wrap an operator that must be selfadjoint; the stored matrix is the
    /// exact Hermitian part so later algebra sees `W = W*` bit for bit.
    pub fn selfadjoint(w: FockOperator) -> Result<Self> {
        let defect = w.hermitian_defect();
        if defect >= Self::SELFADJOINT_TOL {
            return Err(Error::Precondition(format!("jump operator is not selfadjoint (defect {defect:e})")));
        }
        let sym = &(&w + &w.adjoint()) * 0.5;
        Ok(JumpOperator { w: sym, provenance: Provenance::Supplied, selfadjoint: true })
    }

    pub fn operator(&self) -> &FockOperator {
        &self.w
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }

    pub fn is_selfadjoint(&self) -> bool {
        self.selfadjoint
    }
}

/// `W = int_0^inf e^{-eps t} H'_t dt` in the eigenbasis of `h0`:
/// `W_jk = H'_jk / (eps - i (E_j - E_k))`.
pub fn build_w(h_prime: &FockOperator, h0: &FockOperator, epsilon: f64) -> Result<JumpOperator> {
    build_w_with_sign(h_prime, h0, epsilon, GapSign::Standard)
}

pub fn build_w_with_sign(h_prime: &FockOperator, h0: &FockOperator, epsilon: f64, sign: GapSign) -> Result<JumpOperator> {
    if !(epsilon.is_finite() && epsilon > 0.0) {
        return Err(Error::InvalidParameter(format!("regularization must be positive, got {epsilon}")));
    }
    for (name, op) in [("H'", h_prime), ("H0", h0)] {
        if !op.is_hermitian(1e-12) {
            return Err(Error::Precondition(format!("{name} is not Hermitian")));
        }
    }
    if h_prime.dim() != h0.dim() {
        return Err(Error::DimensionMismatch { expected: h0.dim(), got: h_prime.dim() });
    }
    let spec = Spectrum::of(h0.matrix())?;
    let e = spec.values();
    let s = match sign {
        GapSign::Standard => -1.0,
        GapSign::Reversed => 1.0,
    };
    let mut m = spec.to_eigenbasis(h_prime.matrix());
    for ((j, k), z) in m.indexed_iter_mut() {
        *z /= C64::new(epsilon, s * (e[j] - e[k]));
    }
    let w = h_prime.with_matrix(spec.from_eigenbasis(&m));
    let selfadjoint = w.hermitian_defect() < JumpOperator::SELFADJOINT_TOL;
    Ok(JumpOperator { w, provenance: Provenance::Perturbation { epsilon, sign }, selfadjoint })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{self, c};
    use crate::operator_core::{Boundary, LatticeSpec};
    use crate::rng;

    fn chain(n: usize) -> LatticeSpec {
        LatticeSpec::chain(n, Boundary::Open).unwrap()
    }

    #[test]
    fn two_site_closed_form() {
        let l = chain(2);
        let h0 = &FockOperator::number(l, 0).unwrap() + &(&FockOperator::number(l, 1).unwrap() * 2.0);
        let hp = FockOperator::hopping(l, 0, 1).unwrap();
        let w = build_w(&hp, &h0, 0.5).unwrap();
        // Basis state 1 has site 0 occupied, state 2 site 1; their gap is -1.
        let mut expect = ndarray::Array2::<C64>::zeros((4, 4));
        expect[[1, 2]] = C64::new(0.4, -0.8);
        expect[[2, 1]] = C64::new(0.4, 0.8);
        assert!(linalg::max_abs_diff(w.operator().matrix(), &expect) < 1e-15);
        assert!(w.is_selfadjoint());
        let rev = build_w_with_sign(&hp, &h0, 0.5, GapSign::Reversed).unwrap();
        assert!(linalg::max_abs_diff(rev.operator().matrix(), &expect.mapv(|z| z.conj())) < 1e-15);
    }

    #[test]
    fn commuting_perturbation_is_amplified() {
        let l = chain(3);
        let h0 = FockOperator::total_number(l);
        let hp = &FockOperator::hopping(l, 0, 1).unwrap() + &FockOperator::hopping(l, 1, 2).unwrap();
        let w = build_w(&hp, &h0, 0.25).unwrap();
        assert!(w.operator().max_abs_diff(&(&hp * 4.0)) < 1e-14);
        assert!(w.is_selfadjoint());
    }

    #[test]
    fn selfadjoint_with_lorentzian_symmetrization() {
        // Every H'_t is Hermitian, so the damped integral is too. Adding the
        // reversed-sign integral gives the two-sided Lorentzian weights.
        let l = chain(3);
        let mut r = rng::seeded(4);
        let h0 = FockOperator::from_matrix(l, rng::hermitian(&mut r, 8)).unwrap();
        let hp = FockOperator::from_matrix(l, rng::hermitian(&mut r, 8)).unwrap();
        let eps = 0.3;
        let w = build_w(&hp, &h0, eps).unwrap();
        assert!(w.is_selfadjoint());
        let rev = build_w_with_sign(&hp, &h0, eps, GapSign::Reversed).unwrap();
        let spec = Spectrum::of(h0.matrix()).unwrap();
        let e = spec.values();
        let sum = spec.to_eigenbasis(&(w.operator() + rev.operator()).into_matrix());
        let hp_e = spec.to_eigenbasis(hp.matrix());
        for ((j, k), z) in sum.indexed_iter() {
            let mu = e[j] - e[k];
            let expect = hp_e[[j, k]] * c(2.0 * eps / (eps * eps + mu * mu));
            assert!((z - expect).norm() < 1e-12);
        }
        assert!(build_w(&hp, &h0, 0.0).is_err());
    }
}
