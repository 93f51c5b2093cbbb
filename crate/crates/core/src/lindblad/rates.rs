use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, C64};

/// Factor between the bare eigenvalue-rate sum and `dS/dtau` under the
/// literal generator with selfadjoint `W`: each transition `j <-> k` enters
/// twice, once from `-W W rho - rho W W` and once from `2 W rho W`.
pub const ENTROPY_RATE_NORMALIZATION: f64 = 2.0;

/// Transition weights `T_jk = |<j|W|k>|^2` in a fixed orthonormal basis.
#[derive(Clone, Debug, PartialEq)]
pub struct RateMatrix {
    t: Array2<f64>,
    doubly_balanced: bool,
}

impl RateMatrix {
    pub fn from_weights(t: Array2<f64>) -> Result<Self> {
        if t.nrows() != t.ncols() {
            return Err(Error::DimensionMismatch { expected: t.nrows(), got: t.ncols() });
        }
        if t.iter().any(|x| !(x.is_finite() && *x >= 0.0)) {
            return Err(Error::InvalidParameter("rates must be finite and nonnegative".into()));
        }
        let n = t.nrows();
        let doubly_balanced =
            (0..n).all(|j| (0..n).all(|k| (t[[j, k]].sqrt() - t[[k, j]].sqrt()).abs() <= 1e-12));
        Ok(RateMatrix { t, doubly_balanced })
    }

    pub fn weights(&self) -> &Array2<f64> {
        &self.t
    }

    /// `|w_jk| = |w_kj|` for all pairs, to `1e-12`.
    pub fn is_doubly_balanced(&self) -> bool {
        self.doubly_balanced
    }

    pub fn dim(&self) -> usize {
        self.t.nrows()
    }
}

/// Rates of `w` in the basis given by the columns of `basis`.
pub fn pauli_rates(w: &Array2<C64>, basis: &Array2<C64>) -> Result<RateMatrix> {
    let n = w.nrows();
    if basis.nrows() != n || basis.ncols() != n {
        return Err(Error::DimensionMismatch { expected: n, got: basis.ncols() });
    }
    let gram = linalg::adjoint(basis).dot(basis);
    let defect = linalg::max_abs_diff(&gram, &linalg::identity(n));
    if defect > 1e-10 {
        return Err(Error::Precondition(format!("basis is not orthonormal (defect {defect:e})")));
    }
    let m = linalg::adjoint(basis).dot(w).dot(basis);
    RateMatrix::from_weights(m.mapv(|z| z.norm_sqr()))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EntropyRate {
    pub value: f64,
    /// The constant in front of the bare sum, [`ENTROPY_RATE_NORMALIZATION`].
    pub normalization: f64,
    /// A transition out of a populated level into an empty one: the rate is
    /// `+inf` (the log of the empty level diverges).
    pub divergent: bool,
}

/// `dS/dtau = c sum_jk (|w_kj|^2 r_j log r_j - |w_jk|^2 r_j log r_k)` for
/// eigenvalues `r` of a state diagonal in the rate basis.
pub fn entropy_derivative(r: &[f64], rates: &RateMatrix) -> Result<EntropyRate> {
    let n = rates.dim();
    if r.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: r.len() });
    }
    if r.iter().any(|x| !(x.is_finite() && *x >= 0.0)) || (r.iter().sum::<f64>() - 1.0).abs() > 1e-10 {
        return Err(Error::InvalidParameter("r must be a probability vector".into()));
    }
    let t = rates.weights();
    let mut sum = 0.0;
    let mut divergent = false;
    for j in 0..n {
        if r[j] == 0.0 {
            continue;
        }
        let lj = r[j].ln();
        for k in 0..n {
            sum += t[[k, j]] * r[j] * lj;
            if t[[j, k]] == 0.0 {
                continue;
            }
            if r[k] == 0.0 {
                divergent = true;
            } else {
                sum -= t[[j, k]] * r[j] * r[k].ln();
            }
        }
    }
    let value = if divergent { f64::INFINITY } else { ENTROPY_RATE_NORMALIZATION * sum };
    Ok(EntropyRate { value, normalization: ENTROPY_RATE_NORMALIZATION, divergent })
}
