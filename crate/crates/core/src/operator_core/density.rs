use ndarray::Array2;

use super::fock::FockOperator;
use crate::error::{Error, Result};
use crate::linalg::{self, c, C64};

/// Hermitian, positive semidefinite, unit-trace matrix.
#[derive(Clone, Debug)]
pub struct DensityMatrix {
    mat: Array2<C64>,
}

impl DensityMatrix {
    pub const HERMITIAN_TOL: f64 = 1e-12;
    pub const EIGENVALUE_FLOOR: f64 = -1e-12;
    pub const TRACE_TOL: f64 = 1e-12;

    pub fn new(mat: Array2<C64>) -> Result<Self> {
        if mat.nrows() != mat.ncols() {
            return Err(Error::DimensionMismatch { expected: mat.nrows(), got: mat.ncols() });
        }
        if !linalg::is_finite(&mat) {
            return Err(Error::InvalidState("non-finite entries".into()));
        }
        let herm = linalg::hermitian_defect(&mat);
        if herm > Self::HERMITIAN_TOL {
            return Err(Error::InvalidState(format!("Hermitian defect {herm:e}")));
        }
        let tr = linalg::trace(&mat);
        if (tr - c(1.0)).norm() > Self::TRACE_TOL {
            return Err(Error::InvalidState(format!("trace {tr}")));
        }
        let min = linalg::eigvalsh(&mat)?.first().copied().unwrap_or(0.0);
        if min < Self::EIGENVALUE_FLOOR {
            return Err(Error::InvalidState(format!("negative eigenvalue {min:e}")));
        }
        Ok(DensityMatrix { mat })
    }

    /// Symmetrizes and renormalizes a matrix that is a state up to rounding.
    pub(crate) fn from_rounded(mut mat: Array2<C64>) -> Self {
        let adj = linalg::adjoint(&mat);
        mat = (&mat + &adj).mapv(|z| z * 0.5);
        let tr = linalg::trace(&mat).re;
        DensityMatrix { mat: mat.mapv(|z| z / tr) }
    }

    /// Accept the output of an approximate evolution. Eigenvalues down to
    /// `floor` are tolerated as they are; below that the negative part is cut
    /// off, the trace restored and a warning logged.
    pub fn from_evolved(mat: Array2<C64>, floor: f64) -> Result<Self> {
        if !linalg::is_finite(&mat) {
            return Err(Error::InvalidState("non-finite entries after evolution".into()));
        }
        let tr = linalg::trace(&mat);
        if (tr - c(1.0)).norm() > 1e-8 {
            return Err(Error::InvalidState(format!("evolution lost trace: {tr}")));
        }
        let rho = Self::from_rounded(mat);
        let spec = linalg::Spectrum::of(&rho.mat)?;
        let min = spec.min_value();
        if min >= floor {
            return Ok(rho);
        }
        log::warn!("evolved state has eigenvalue {min:e}; clipping and renormalizing");
        Ok(Self::from_rounded(spec.apply_fn(|x| c(x.max(0.0)))))
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        DensityMatrix { mat: Array2::from_diag_elem(dim, c(1.0 / dim as f64)) }
    }

    /// Pure state `|v><v|` for a normalized vector.
    pub fn pure(v: &[C64]) -> Result<Self> {
        let n2: f64 = v.iter().map(|z| z.norm_sqr()).sum();
        if (n2 - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidState(format!("vector norm^2 {n2}")));
        }
        let d = v.len();
        Ok(DensityMatrix {
            mat: Array2::from_shape_fn((d, d), |(i, j)| v[i] * v[j].conj()),
        })
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    pub fn matrix(&self) -> &Array2<C64> {
        &self.mat
    }

    pub fn into_matrix(self) -> Array2<C64> {
        self.mat
    }

    /// `Tr(rho A)`.
    pub fn expect(&self, a: &Array2<C64>) -> C64 {
        linalg::trace_of_product(&self.mat, a)
    }

    pub fn expectation(&self, a: &FockOperator) -> C64 {
        self.expect(a.matrix())
    }

    pub fn eigenvalues(&self) -> Result<Vec<f64>> {
        linalg::eigvalsh(&self.mat)
    }

    pub fn entropy(&self) -> Result<f64> {
        linalg::von_neumann_entropy(&self.mat)
    }

    /// Restriction to the sites in `keep` (strictly increasing), as a state on
    /// `2^keep.len()` levels with bit `a` holding site `keep[a]`.
    ///
    /// This is the partial trace over the other qubits of the Jordan-Wigner
    /// encoding. It agrees with the fermionic restriction whenever the state is
    /// even, which every state reachable from even data is.
    pub fn reduced(&self, keep: &[usize]) -> Result<DensityMatrix> {
        let sites = self.dim().trailing_zeros() as usize;
        if 1usize << sites != self.dim() {
            return Err(Error::InvalidState("dimension is not a power of two".into()));
        }
        if keep.windows(2).any(|w| w[0] >= w[1]) || keep.last().is_some_and(|&k| k >= sites) {
            return Err(Error::InvalidParameter(format!("kept sites {keep:?} must be increasing and below {sites}")));
        }
        let rest: Vec<usize> = (0..sites).filter(|s| !keep.contains(s)).collect();
        let spread = |bits: usize, positions: &[usize]| {
            positions.iter().enumerate().fold(0usize, |acc, (a, &p)| acc | (((bits >> a) & 1) << p))
        };
        let dk = 1usize << keep.len();
        let lift: Vec<usize> = (0..dk).map(|a| spread(a, keep)).collect();
        let mut out = Array2::<C64>::zeros((dk, dk));
        for r in 0..(1usize << rest.len()) {
            let base = spread(r, &rest);
            for a in 0..dk {
                for b in 0..dk {
                    out[[a, b]] += self.mat[[base | lift[a], base | lift[b]]];
                }
            }
        }
        Ok(DensityMatrix { mat: out })
    }

    pub fn trace_distance(&self, other: &DensityMatrix) -> Result<f64> {
        Ok(0.5 * linalg::trace_norm(&(&self.mat - &other.mat))?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validation_rejects_non_states() {
        let mut m = Array2::from_diag_elem(2, c(0.5));
        assert!(DensityMatrix::new(m.clone()).is_ok());
        m[[0, 0]] = c(1.5);
        m[[1, 1]] = c(-0.5);
        assert!(DensityMatrix::new(m.clone()).is_err());
        m[[0, 0]] = c(0.6);
        m[[1, 1]] = c(0.6);
        assert!(DensityMatrix::new(m).is_err());
        let mut h = Array2::from_diag_elem(2, c(0.5));
        h[[0, 1]] = C64::new(0.0, 0.1);
        assert!(DensityMatrix::new(h).is_err());
    }

    #[test]
    fn maximally_mixed_entropy() {
        let r = DensityMatrix::maximally_mixed(8);
        assert!((r.entropy().unwrap() - 8f64.ln()).abs() < 1e-14);
    }

    #[test]
    fn reduced_state_of_product() {
        let p = |x: f64| Array2::from_diag(&ndarray::arr1(&[c(1.0 - x), c(x)]));
        let rho = linalg::kron(&linalg::kron(&p(0.1), &p(0.2)), &p(0.3));
        // Site 0 is the last, least significant, Kronecker factor.
        let full = DensityMatrix::new(rho).unwrap();
        let r = full.reduced(&[0, 2]).unwrap();
        let expect = linalg::kron(&p(0.1), &p(0.3));
        assert!(linalg::max_abs_diff(r.matrix(), &expect) < 1e-15);
        assert!(full.reduced(&[2, 0]).is_err());
    }
}
