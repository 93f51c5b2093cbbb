//! Seeded random fixtures.
//!
//! All randomness goes through ChaCha8 (`rand_chacha::ChaCha8Rng`) seeded with
//! `seed_from_u64`, so a seed pins every generated state, operator and
//! occupation across runs and platforms.

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::linalg::{adjoint, C64};

pub type LabRng = ChaCha8Rng;

pub fn seeded(seed: u64) -> LabRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Standard normal via Box-Muller.
pub fn normal<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    let u1: f64 = 1.0 - rng.random::<f64>();
    let u2: f64 = rng.random::<f64>();
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

pub fn complex_gaussian_matrix<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> Array2<C64> {
    Array2::from_shape_simple_fn((dim, dim), || C64::new(normal(rng), normal(rng)))
}

/// GUE-like Hermitian matrix `(G + G^*)/2`.
pub fn hermitian<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> Array2<C64> {
    let g = complex_gaussian_matrix(rng, dim);
    (&g + &adjoint(&g)).mapv(|z| z * 0.5)
}

/// Full-rank density matrix `G G^* / Tr(G G^*)` (Ginibre ensemble).
pub fn density_matrix<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> Array2<C64> {
    let g = complex_gaussian_matrix(rng, dim);
    let rho = g.dot(&adjoint(&g));
    let tr: f64 = (0..dim).map(|i| rho[[i, i]].re).sum();
    let mut rho = rho.mapv(|z| z / tr);
    for i in 0..dim {
        rho[[i, i]].im = 0.0;
    }
    rho
}

/// Occupations drawn uniformly from the open interval (0, 1).
pub fn occupations<R: Rng + ?Sized>(rng: &mut R, len: usize) -> Vec<f64> {
    (0..len)
        .map(|_| loop {
            let x: f64 = rng.random();
            if x > 0.0 {
                break x;
            }
        })
        .collect()
}

/// Probability vector with strictly positive entries.
pub fn probability_vector<R: Rng + ?Sized>(rng: &mut R, len: usize) -> Vec<f64> {
    let raw: Vec<f64> = (0..len).map(|_| -(1.0 - rng.random::<f64>()).ln() + 1e-3).collect();
    let s: f64 = raw.iter().sum();
    raw.into_iter().map(|x| x / s).collect()
}
