use ndarray::{Array1, Array2};
use ndarray_linalg::SVD;

use super::generator::LindbladGenerator;
use crate::error::{Error, Result};
use crate::linalg::{self, c, Spectrum, C64, I};
use crate::operator_core::DensityMatrix;

/// Singular values below this fraction of the largest span the kernel.
pub const KERNEL_THRESHOLD: f64 = 1e-10;

#[derive(Clone, Debug)]
pub struct StationarySet {
    /// Density matrices spanning the kernel of the generator.
    pub states: Vec<DensityMatrix>,
    /// Dimension of the kernel (the multiplicity of the eigenvalue zero).
    pub kernel_dimension: usize,
    /// Every state is stationary (the generator vanishes).
    pub degenerate: bool,
    /// Largest `||L(rho)||_max` over the returned states.
    pub residual: f64,
}

impl StationarySet {
    pub fn is_unique(&self) -> bool {
        self.kernel_dimension == 1
    }
}

/// Kernel of the generator, returned as a basis of density matrices.
///
/// The kernel of a trace-preserving positive semigroup generator is closed
/// under adjoints and under taking positive and negative parts, so splitting a
/// Hermitian kernel basis into Jordan parts yields states that span it.
pub fn stationary_states(generator: &LindbladGenerator) -> Result<StationarySet> {
    let sup = generator.superoperator()?;
    let n = generator.dim();
    let (_, s, vt) = sup.matrix().svd(false, true)?;
    let vt = vt.ok_or_else(|| Error::Linalg("SVD returned no right singular vectors".into()))?;
    let smax = s.iter().fold(0.0f64, |m, x| m.max(*x));
    let kernel: Vec<Array2<C64>> = if smax == 0.0 {
        (0..n * n)
            .map(|i| {
                let mut e = Array2::zeros((n, n));
                e[[i / n, i % n]] = c(1.0);
                e
            })
            .collect()
    } else {
        (0..n * n)
            .filter(|&i| s[i] <= KERNEL_THRESHOLD * smax)
            .map(|i| linalg::unvectorize(&vt.row(i).mapv(|z| z.conj()), n))
            .collect()
    };
    let dim = kernel.len();
    let degenerate = dim == n * n;

    let mut hermitian = Vec::with_capacity(2 * dim);
    for x in &kernel {
        let xa = linalg::adjoint(x);
        hermitian.push(x + &xa);
        hermitian.push((x - &xa).mapv(|z| z * I));
    }
    let mut candidates = Vec::new();
    for h in &hermitian {
        if linalg::max_abs(h) < 1e-12 {
            continue;
        }
        let spec = Spectrum::of(&(&linalg::adjoint(h).mapv(|z| z * 0.5) + &h.mapv(|z| z * 0.5)))?;
        for sign in [1.0, -1.0] {
            let part = spec.apply_fn(|x| c((sign * x).max(0.0)));
            let tr = linalg::trace(&part).re;
            if tr > 1e-10 * linalg::max_abs(h) {
                candidates.push(part.mapv(|z| z / tr));
            }
        }
    }

    let mut basis: Vec<Array1<C64>> = Vec::new();
    let mut states = Vec::new();
    for cand in candidates {
        if states.len() == dim {
            break;
        }
        let mut v = linalg::vectorize(&cand);
        let norm0 = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        for b in &basis {
            let proj: C64 = b.iter().zip(v.iter()).map(|(x, y)| x.conj() * y).sum();
            v = &v - &b.mapv(|z| z * proj);
        }
        let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm > 1e-8 * norm0 {
            basis.push(v.mapv(|z| z / norm));
            states.push(DensityMatrix::from_evolved(cand, -1e-10)?);
        }
    }
    if states.len() < dim {
        log::warn!("only {} of {dim} kernel directions recovered as states", states.len());
    }
    let residual = states.iter().fold(0.0f64, |m, r| m.max(linalg::max_abs(&generator.apply(r.matrix()))));
    Ok(StationarySet { states, kernel_dimension: dim, degenerate, residual })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lindblad::{JumpOperator, LindbladForm};
    use crate::operator_core::{Boundary, FockOperator, LatticeSpec};
    use crate::rng;

    fn lattice(n: usize) -> LatticeSpec {
        LatticeSpec::chain(n, Boundary::Open).unwrap()
    }

    #[test]
    fn irreducible_selfadjoint_jump_has_trace_state_only() {
        // A generic Hermitian matrix has simple spectrum, so its commutant is
        // the diagonal algebra in its eigenbasis. Two of them together leave
        // only multiples of the identity.
        let mut r = rng::seeded(1);
        let a = rng::hermitian(&mut r, 4);
        let b = rng::hermitian(&mut r, 4);
        let w = FockOperator::from_matrix(lattice(2), a).unwrap();
        let g = LindbladGenerator::new(JumpOperator::selfadjoint(w).unwrap(), LindbladForm::Literal)
            .unwrap()
            .with_hamiltonian(FockOperator::from_matrix(lattice(2), b).unwrap())
            .unwrap();
        let set = stationary_states(&g).unwrap();
        assert!(set.is_unique() && !set.degenerate);
        let mixed = DensityMatrix::maximally_mixed(4);
        assert!(linalg::max_abs_diff(set.states[0].matrix(), mixed.matrix()) < 1e-10);
    }

    #[test]
    fn zero_jump_is_degenerate() {
        let w = FockOperator::zeros(lattice(2));
        let g = LindbladGenerator::new(JumpOperator::selfadjoint(w).unwrap(), LindbladForm::Literal).unwrap();
        let set = stationary_states(&g).unwrap();
        assert!(set.degenerate && set.kernel_dimension == 16 && set.states.len() == 16);
    }

    #[test]
    fn dephasing_keeps_the_eigenbasis_diagonal() {
        let mut r = rng::seeded(2);
        let w = FockOperator::from_matrix(lattice(2), rng::hermitian(&mut r, 4)).unwrap();
        let g = LindbladGenerator::new(JumpOperator::selfadjoint(w).unwrap(), LindbladForm::Literal).unwrap();
        let set = stationary_states(&g).unwrap();
        assert_eq!(set.kernel_dimension, 4);
        assert_eq!(set.states.len(), 4);
        assert!(set.residual < 1e-12);
    }
}
