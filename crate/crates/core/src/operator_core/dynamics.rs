//! Gibbs states, Heisenberg dynamics and lattice translations.

use ndarray::Array2;

use super::density::DensityMatrix;
use super::fock::FockOperator;
use super::lattice::LatticeSpec;
use crate::error::{Error, Result};
use crate::linalg::{c, Spectrum, C64};

fn check_hermitian(h: &FockOperator) -> Result<()> {
    let scale = h.max_abs().max(1.0);
    let d = h.hermitian_defect();
    if d > 1e-12 * scale {
        return Err(Error::Precondition(format!("Hamiltonian not Hermitian (defect {d:e})")));
    }
    Ok(())
}

/// `e^{-beta H} / Tr e^{-beta H}` from a precomputed spectrum, weights shifted
/// by the extreme eigenvalue so no exponent is positive.
pub fn gibbs_from_spectrum(spec: &Spectrum, beta: f64) -> Result<DensityMatrix> {
    if !beta.is_finite() {
        return Err(Error::InvalidParameter(format!("beta must be finite, got {beta}")));
    }
    let vals = spec.values();
    let shift = vals.iter().map(|&e| beta * e).fold(f64::INFINITY, f64::min);
    let z: f64 = vals.iter().map(|&e| (-(beta * e - shift)).exp()).sum();
    let rho = spec.apply_fn(|e| c((-(beta * e - shift)).exp() / z));
    Ok(DensityMatrix::from_rounded(rho))
}

pub fn gibbs_state(h: &FockOperator, beta: f64) -> Result<DensityMatrix> {
    if beta < 0.0 {
        return Err(Error::InvalidParameter(format!("beta must be >= 0, got {beta}")));
    }
    check_hermitian(h)?;
    gibbs_from_spectrum(&Spectrum::of(h.matrix())?, beta)
}

/// Cached eigendecomposition of a Hamiltonian for repeated evolutions.
#[derive(Clone, Debug)]
pub struct Dynamics {
    lattice: LatticeSpec,
    spectrum: Spectrum,
}

impl Dynamics {
    pub fn new(h: &FockOperator) -> Result<Self> {
        check_hermitian(h)?;
        Ok(Dynamics { lattice: h.lattice(), spectrum: Spectrum::of(h.matrix())? })
    }

    pub fn spectrum(&self) -> &Spectrum {
        &self.spectrum
    }

    /// `alpha_t(A) = e^{iHt} A e^{-iHt}`.
    pub fn evolve_at(&self, a: &FockOperator, t: f64) -> FockOperator {
        a.with_matrix(self.spectrum.heisenberg(a.matrix(), t))
    }

    pub fn gibbs(&self, beta: f64) -> Result<DensityMatrix> {
        gibbs_from_spectrum(&self.spectrum, beta)
    }

    /// `e^{-iHt}` as a dense matrix.
    pub fn propagator(&self, t: f64) -> Array2<C64> {
        self.spectrum.apply_fn(|e| C64::from_polar(1.0, -e * t))
    }

    pub fn lattice(&self) -> LatticeSpec {
        self.lattice
    }
}

pub fn heisenberg_evolve(a: &FockOperator, h: &FockOperator, t: f64) -> Result<FockOperator> {
    Ok(Dynamics::new(h)?.evolve_at(a, t))
}

/// Basis permutation and signs of the Fock-space unitary implementing a site
/// permutation: `U |b> = sign[b] |image[b]>`, with `U a_i^* U^* = a_{perm[i]}^*`.
pub fn fock_permutation(perm: &[usize]) -> (Vec<usize>, Vec<f64>) {
    let n = perm.len();
    let d = 1usize << n;
    let mut image = vec![0usize; d];
    let mut sign = vec![1.0; d];
    let mut targets = Vec::with_capacity(n);
    for b in 0..d {
        targets.clear();
        for (i, &p) in perm.iter().enumerate() {
            if (b >> i) & 1 == 1 {
                targets.push(p);
            }
        }
        let mut inversions = 0usize;
        for x in 0..targets.len() {
            for y in x + 1..targets.len() {
                if targets[x] > targets[y] {
                    inversions += 1;
                }
            }
        }
        image[b] = targets.iter().fold(0, |acc, &t| acc | (1 << t));
        sign[b] = if inversions.is_multiple_of(2) { 1.0 } else { -1.0 };
    }
    (image, sign)
}

/// Conjugate a dense operator by a site permutation.
pub fn permute_operator(a: &Array2<C64>, perm: &[usize]) -> Array2<C64> {
    let (image, sign) = fock_permutation(perm);
    let d = a.nrows();
    let mut out = Array2::zeros((d, d));
    for ((i, j), &z) in a.indexed_iter() {
        if z.re != 0.0 || z.im != 0.0 {
            out[[image[i], image[j]]] = z * (sign[i] * sign[j]);
        }
    }
    out
}

/// Diagonal of `sigma(A)` for diagonal `A`: translations only relabel basis states.
pub fn permute_diagonal(diag: &[f64], perm: &[usize]) -> Vec<f64> {
    let (image, _) = fock_permutation(perm);
    let mut out = vec![0.0; diag.len()];
    for (b, &x) in diag.iter().enumerate() {
        out[image[b]] = x;
    }
    out
}

/// Lattice translation `sigma_shift(A)`; one displacement per lattice axis.
pub fn translate(a: &FockOperator, shift: &[isize]) -> Result<FockOperator> {
    let perm = a.lattice().translation(shift)?;
    Ok(a.with_matrix(permute_operator(a.matrix(), &perm)))
}
