//! Jordan-Wigner realization of the lattice CAR algebra.
//!
//! Basis state `b` has site `i` occupied iff bit `i` of `b` is set. The
//! creation operator carries the string over all lower-indexed sites:
//! `a_i^* = Z_0 ... Z_{i-1} s^+_i`, so `a_{i1}^* ... a_{ik}^* |0>` with
//! `i1 < ... < ik` is `+|b>`. Operators are built by acting with fermionic
//! monomials on basis states directly, never by multiplying dense matrices.

use std::ops::{Add, Mul, Neg, Sub};

use ndarray::Array2;

use super::lattice::LatticeSpec;
use crate::error::{Error, Result};
use crate::linalg::{self, c, C64};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Ladder {
    Create,
    Annihilate,
}

/// Product of ladder operators, applied right to left.
pub type Monomial = Vec<(usize, Ladder)>;

#[derive(Clone, Debug)]
pub struct FockOperator {
    lattice: LatticeSpec,
    mat: Array2<C64>,
}

/// Apply a monomial to a basis state; `None` if it annihilates it.
pub fn apply_monomial(mono: &[(usize, Ladder)], state: usize) -> Option<(usize, f64)> {
    let mut b = state;
    let mut sign = 1.0;
    for &(site, kind) in mono.iter().rev() {
        let bit = 1usize << site;
        let occupied = b & bit != 0;
        match kind {
            Ladder::Create if occupied => return None,
            Ladder::Annihilate if !occupied => return None,
            _ => {}
        }
        if (b & (bit - 1)).count_ones() % 2 == 1 {
            sign = -sign;
        }
        b ^= bit;
    }
    Some((b, sign))
}

impl FockOperator {
    pub fn zeros(lattice: LatticeSpec) -> Self {
        let d = lattice.dim();
        FockOperator { lattice, mat: Array2::zeros((d, d)) }
    }

    pub fn identity(lattice: LatticeSpec) -> Self {
        FockOperator { lattice, mat: linalg::identity(lattice.dim()) }
    }

    pub fn from_matrix(lattice: LatticeSpec, mat: Array2<C64>) -> Result<Self> {
        let d = lattice.dim();
        if mat.nrows() != d || mat.ncols() != d {
            return Err(Error::DimensionMismatch { expected: d, got: mat.nrows() });
        }
        if !linalg::is_finite(&mat) {
            return Err(Error::InvalidParameter("operator has non-finite entries".into()));
        }
        Ok(FockOperator { lattice, mat })
    }

    /// Sum of `coeff * monomial` terms.
    pub fn from_terms(lattice: LatticeSpec, terms: &[(C64, Monomial)]) -> Result<Self> {
        for (_, mono) in terms {
            for &(site, _) in mono {
                lattice.check_site(site)?;
            }
        }
        let d = lattice.dim();
        let mut mat = Array2::zeros((d, d));
        for (coeff, mono) in terms {
            for b in 0..d {
                if let Some((out, sign)) = apply_monomial(mono, b) {
                    mat[[out, b]] += coeff * sign;
                }
            }
        }
        Ok(FockOperator { lattice, mat })
    }

    pub fn diagonal(lattice: LatticeSpec, f: impl Fn(usize) -> f64) -> Self {
        let d = lattice.dim();
        let mut mat = Array2::zeros((d, d));
        for b in 0..d {
            mat[[b, b]] = c(f(b));
        }
        FockOperator { lattice, mat }
    }

    /// `a_site^*`.
    pub fn creation(lattice: LatticeSpec, site: usize) -> Result<Self> {
        Self::from_terms(lattice, &[(c(1.0), vec![(site, Ladder::Create)])])
    }

    pub fn annihilation(lattice: LatticeSpec, site: usize) -> Result<Self> {
        Self::from_terms(lattice, &[(c(1.0), vec![(site, Ladder::Annihilate)])])
    }

    /// `n_site = a_site^* a_site`.
    pub fn number(lattice: LatticeSpec, site: usize) -> Result<Self> {
        lattice.check_site(site)?;
        Ok(Self::diagonal(lattice, |b| ((b >> site) & 1) as f64))
    }

    pub fn total_number(lattice: LatticeSpec) -> Self {
        Self::diagonal(lattice, |b| b.count_ones() as f64)
    }

    /// `a_i^* a_j + a_j^* a_i`.
    pub fn hopping(lattice: LatticeSpec, i: usize, j: usize) -> Result<Self> {
        Self::from_terms(
            lattice,
            &[
                (c(1.0), vec![(i, Ladder::Create), (j, Ladder::Annihilate)]),
                (c(1.0), vec![(j, Ladder::Create), (i, Ladder::Annihilate)]),
            ],
        )
    }

    pub fn lattice(&self) -> LatticeSpec {
        self.lattice
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

    pub(crate) fn with_matrix(&self, mat: Array2<C64>) -> Self {
        FockOperator { lattice: self.lattice, mat }
    }

    pub fn adjoint(&self) -> Self {
        self.with_matrix(linalg::adjoint(&self.mat))
    }

    pub fn dot(&self, other: &Self) -> Self {
        self.with_matrix(self.mat.dot(&other.mat))
    }

    pub fn commutator(&self, other: &Self) -> Self {
        self.with_matrix(linalg::commutator(&self.mat, &other.mat))
    }

    pub fn anticommutator(&self, other: &Self) -> Self {
        self.with_matrix(linalg::anticommutator(&self.mat, &other.mat))
    }

    pub fn scaled(&self, z: C64) -> Self {
        self.with_matrix(self.mat.mapv(|x| x * z))
    }

    pub fn op_norm(&self) -> Result<f64> {
        linalg::op_norm(&self.mat)
    }

    pub fn hermitian_defect(&self) -> f64 {
        linalg::hermitian_defect(&self.mat)
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.hermitian_defect() <= tol
    }

    pub fn trace(&self) -> C64 {
        linalg::trace(&self.mat)
    }

    pub fn max_abs(&self) -> f64 {
        linalg::max_abs(&self.mat)
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        linalg::max_abs_diff(&self.mat, &other.mat)
    }

    pub fn is_diagonal(&self) -> bool {
        linalg::is_diagonal(&self.mat)
    }

    /// Even under fermion parity (no matrix element changes the parity of the
    /// occupation number).
    pub fn is_even(&self) -> bool {
        self.mat.indexed_iter().all(|((i, j), z)| {
            (i.count_ones() + j.count_ones()) % 2 == 0 || (z.re == 0.0 && z.im == 0.0)
        })
    }

    /// Commutes with the total number operator.
    pub fn is_number_conserving(&self) -> bool {
        self.mat
            .indexed_iter()
            .all(|((i, j), z)| i.count_ones() == j.count_ones() || (z.re == 0.0 && z.im == 0.0))
    }

    fn check_same(&self, other: &Self) {
        assert_eq!(self.lattice, other.lattice, "operators live on different lattices");
    }
}

impl Add for &FockOperator {
    type Output = FockOperator;
    fn add(self, rhs: &FockOperator) -> FockOperator {
        self.check_same(rhs);
        self.with_matrix(&self.mat + &rhs.mat)
    }
}

impl Sub for &FockOperator {
    type Output = FockOperator;
    fn sub(self, rhs: &FockOperator) -> FockOperator {
        self.check_same(rhs);
        self.with_matrix(&self.mat - &rhs.mat)
    }
}

impl Mul<f64> for &FockOperator {
    type Output = FockOperator;
    fn mul(self, rhs: f64) -> FockOperator {
        self.with_matrix(self.mat.mapv(|z| z * rhs))
    }
}

impl Neg for &FockOperator {
    type Output = FockOperator;
    fn neg(self) -> FockOperator {
        self * -1.0
    }
}
