//! Modular machinery for faithful finite-dimensional states: the GNS vector
//! `Omega = rho^{1/2}` in Hilbert-Schmidt space, the modular operator
//! `Delta X = rho X rho^{-1}`, the invariance residual of a jump operator, and
//! KMS tests along the line `lambda = beta mu` of the joint spectrum.
//!
//! Conventions: `Delta` has eigenvalue `r_i / r_j` on `|i><j|`; a joint
//! spectrum point of the pair `(i, j)` has `mu = E_i - E_j` and
//! `lambda = log(r_j / r_i)`, so a Gibbs state gives `lambda = beta mu`.

mod line;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, c, Spectrum, C64};
use crate::operator_core::{DensityMatrix, FockOperator};
use crate::superop::Superoperator;

pub use line::{
    fit_beta, joint_eigenbasis, kms_line_test, kms_line_test_regularized, kms_two_point_check, BetaFit, JointBasis,
    JointSpectrumPoint, LineTest, TwoPointCheck,
};

/// Smallest eigenvalue a state may have and still count as faithful.
pub const FAITHFUL_FLOOR: f64 = 1e-12;
/// Default mixing weight for the optional regularization.
pub const DEFAULT_REGULARIZATION: f64 = 1e-10;

/// Coefficient of `W* Delta W Omega` in the invariance vector that follows
/// from requiring `omega(W W A + A W* W* - 2 W A W*) = 0` for all `A`.
pub const SANDWICH_COEFFICIENT: f64 = -2.0;

/// Matrix viewed as a vector of Hilbert-Schmidt space, `<X, Y> = Tr(X* Y)`.
#[derive(Clone, Debug, PartialEq)]
pub struct HsVector(Array2<C64>);

impl HsVector {
    pub fn new(x: Array2<C64>) -> Result<Self> {
        if x.nrows() != x.ncols() {
            return Err(Error::DimensionMismatch { expected: x.nrows(), got: x.ncols() });
        }
        if !linalg::is_finite(&x) {
            return Err(Error::InvalidParameter("non-finite Hilbert-Schmidt vector".into()));
        }
        Ok(HsVector(x))
    }

    pub fn matrix(&self) -> &Array2<C64> {
        &self.0
    }

    pub fn inner(&self, other: &HsVector) -> C64 {
        self.0.iter().zip(other.0.iter()).map(|(x, y)| x.conj() * y).sum()
    }

    pub fn norm(&self) -> f64 {
        linalg::hs_norm(&self.0)
    }

    /// The GNS action of an operator: left multiplication.
    pub fn act(&self, a: &Array2<C64>) -> HsVector {
        HsVector(a.dot(&self.0))
    }

    pub fn to_vector(&self) -> ndarray::Array1<C64> {
        linalg::vectorize(&self.0)
    }
}

/// Faithful state with its eigendecomposition and the derived modular objects.
#[derive(Clone, Debug)]
pub struct ModularData {
    rho: DensityMatrix,
    spectrum: Spectrum,
    regularization: Option<f64>,
}

impl ModularData {
    pub fn new(rho: &DensityMatrix) -> Result<Self> {
        let spectrum = Spectrum::of(rho.matrix())?;
        let min = spectrum.min_value();
        if min <= FAITHFUL_FLOOR {
            return Err(Error::NotFaithful(min));
        }
        Ok(ModularData { rho: rho.clone(), spectrum, regularization: None })
    }

    /// Use `(1 - delta) rho + delta 1/d`; the mixing weight is recorded.
    pub fn regularized(rho: &DensityMatrix, delta: f64) -> Result<Self> {
        if !(delta > 0.0 && delta < 1.0) {
            return Err(Error::InvalidParameter(format!("regularization weight must be in (0, 1), got {delta}")));
        }
        let d = rho.dim();
        let mixed = rho.matrix().mapv(|z| z * (1.0 - delta)) + linalg::identity(d).mapv(|z| z * (delta / d as f64));
        let mut data = Self::new(&DensityMatrix::new(mixed)?)?;
        data.regularization = Some(delta);
        Ok(data)
    }

    pub fn state(&self) -> &DensityMatrix {
        &self.rho
    }

    pub fn spectrum(&self) -> &Spectrum {
        &self.spectrum
    }

    pub fn regularization(&self) -> Option<f64> {
        self.regularization
    }

    pub fn populations(&self) -> Vec<f64> {
        self.spectrum.values()
    }

    /// `rho^s` for real `s`.
    pub fn power(&self, s: f64) -> Array2<C64> {
        self.spectrum.apply_fn(|r| c(r.powf(s)))
    }

    pub fn omega(&self) -> HsVector {
        HsVector(self.power(0.5))
    }

    /// `Delta X = rho X rho^{-1}`.
    pub fn delta(&self, x: &Array2<C64>) -> Array2<C64> {
        self.rho.matrix().dot(x).dot(&self.power(-1.0))
    }

    /// Modular flow `Delta^{it} X = rho^{it} X rho^{-it}`.
    pub fn modular_flow(&self, x: &Array2<C64>, t: f64) -> Array2<C64> {
        let u = self.spectrum.apply_fn(|r| C64::from_polar(1.0, t * r.ln()));
        u.dot(x).dot(&linalg::adjoint(&u))
    }

    /// `Delta` as an explicit superoperator.
    pub fn modular_operator(&self) -> Superoperator {
        Superoperator::sandwich(self.rho.matrix(), &self.power(-1.0))
    }
}

/// GNS vector and modular data of a faithful state. Checks `Delta Omega = Omega`.
pub fn gns_embed(rho: &DensityMatrix) -> Result<(HsVector, ModularData)> {
    let data = ModularData::new(rho)?;
    let omega = data.omega();
    let defect = linalg::max_abs_diff(&data.delta(omega.matrix()), omega.matrix());
    if defect > 1e-10 {
        return Err(Error::Linalg(format!("modular operator does not fix Omega (defect {defect:e})")));
    }
    Ok((omega, data))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct InvarianceResidual {
    /// `||v||` for `v = W* W* Omega + Delta W W Omega + k W* Delta W Omega`.
    pub norm: f64,
    /// `max_ab |Tr(rho (W W E_ab + E_ab W* W* + k W E_ab W*))|` over matrix units.
    pub dual_sup: f64,
    pub coefficient: f64,
}

/// Invariance residual with the coefficient [`SANDWICH_COEFFICIENT`].
pub fn invariance_residual(rho: &DensityMatrix, w: &FockOperator) -> Result<InvarianceResidual> {
    invariance_residual_with(&ModularData::new(rho)?, w.matrix(), SANDWICH_COEFFICIENT)
}

/// Invariance residual with an arbitrary sandwich coefficient `k`; `k = 1`
/// gives the all-plus combination `W*W* + Delta W W + W* Delta W`.
pub fn invariance_residual_with(data: &ModularData, w: &Array2<C64>, k: f64) -> Result<InvarianceResidual> {
    let rho = data.state().matrix();
    if w.nrows() != rho.nrows() || w.ncols() != rho.ncols() {
        return Err(Error::DimensionMismatch { expected: rho.nrows(), got: w.nrows() });
    }
    let omega = data.omega();
    let wa = linalg::adjoint(w);
    let ww = w.dot(w);
    let wawa = wa.dot(&wa);
    let v = omega.act(&wawa).matrix() + &data.delta(omega.act(&ww).matrix())
        + wa.dot(&data.delta(omega.act(w).matrix())).mapv(|z| z * k);
    // Tr(rho X E_ab) = (rho X)_ba etc., so the dual functional is a matrix.
    let dual = rho.dot(&ww) + wawa.dot(rho) + wa.dot(rho).dot(w).mapv(|z| z * k);
    Ok(InvarianceResidual { norm: linalg::hs_norm(&v), dual_sup: linalg::max_abs(&dual), coefficient: k })
}
