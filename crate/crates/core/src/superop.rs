//! Linear maps on `n x n` matrices, stored as `n^2 x n^2` matrices acting on
//! row-major vectorizations.

use std::ops::{Add, Sub};

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::linalg::{self, c, C64};

#[derive(Clone, Debug)]
pub struct Superoperator {
    n: usize,
    mat: Array2<C64>,
}

impl Superoperator {
    pub fn zeros(n: usize) -> Self {
        Superoperator { n, mat: Array2::zeros((n * n, n * n)) }
    }

    pub fn identity(n: usize) -> Self {
        Superoperator { n, mat: linalg::identity(n * n) }
    }

    pub fn from_matrix(n: usize, mat: Array2<C64>) -> Result<Self> {
        if mat.nrows() != n * n || mat.ncols() != n * n {
            return Err(Error::DimensionMismatch { expected: n * n, got: mat.nrows() });
        }
        Ok(Superoperator { n, mat })
    }

    /// `X -> A X B`.
    pub fn sandwich(a: &Array2<C64>, b: &Array2<C64>) -> Self {
        Superoperator { n: a.nrows(), mat: linalg::sandwich_superop(a, b) }
    }

    /// `X -> A X`.
    pub fn left(a: &Array2<C64>) -> Self {
        Self::sandwich(a, &linalg::identity(a.nrows()))
    }

    /// `X -> X B`.
    pub fn right(b: &Array2<C64>) -> Self {
        Self::sandwich(&linalg::identity(b.nrows()), b)
    }

    /// `X -> [H, X]`.
    pub fn commutator(h: &Array2<C64>) -> Self {
        &Self::left(h) - &Self::right(h)
    }

    /// Side of the matrices acted on.
    pub fn side(&self) -> usize {
        self.n
    }

    pub fn matrix(&self) -> &Array2<C64> {
        &self.mat
    }

    pub fn scaled(&self, z: C64) -> Self {
        Superoperator { n: self.n, mat: self.mat.mapv(|x| x * z) }
    }

    pub fn apply(&self, x: &Array2<C64>) -> Array2<C64> {
        linalg::unvectorize(&self.mat.dot(&linalg::vectorize(x)), self.n)
    }

    pub fn compose(&self, other: &Superoperator) -> Self {
        Superoperator { n: self.n, mat: self.mat.dot(&other.mat) }
    }

    /// `e^{t L}`; the Hermitian eigensolver is used when `L` is self-adjoint in
    /// the Hilbert-Schmidt product, Pade otherwise.
    pub fn exp(&self, t: f64) -> Result<Superoperator> {
        let mat = if linalg::hermitian_defect(&self.mat) < 1e-14 * linalg::max_abs(&self.mat).max(1.0) {
            linalg::Spectrum::of(&self.mat)?.apply_fn(|x| c((t * x).exp()))
        } else {
            linalg::expm(&self.mat.mapv(|z| z * t))?
        };
        Ok(Superoperator { n: self.n, mat })
    }
}

impl Add for &Superoperator {
    type Output = Superoperator;
    fn add(self, rhs: &Superoperator) -> Superoperator {
        Superoperator { n: self.n, mat: &self.mat + &rhs.mat }
    }
}

impl Sub for &Superoperator {
    type Output = Superoperator;
    fn sub(self, rhs: &Superoperator) -> Superoperator {
        Superoperator { n: self.n, mat: &self.mat - &rhs.mat }
    }
}
