use ndarray::{s, Array2};
use serde::{Deserialize, Serialize};

use super::{ModularData, DEFAULT_REGULARIZATION, FAITHFUL_FLOOR};
use crate::error::{Error, Result};
use crate::linalg::{self, eigh_dense, Spectrum, C64};
use crate::operator_core::{DensityMatrix, FockOperator};

/// Largest `[rho, H]` entry accepted as time invariance.
pub const INVARIANCE_TOL: f64 = 1e-10;
/// Probe matrix elements below this weight do not contribute points.
pub const WEIGHT_FLOOR: f64 = 1e-14;

fn degeneracy_tol(e: f64) -> f64 {
    1e-9 * e.abs().max(1.0)
}

/// Orthonormal basis diagonalizing both a state and a Hamiltonian it commutes with.
#[derive(Clone, Debug)]
pub struct JointBasis {
    pub energies: Vec<f64>,
    pub populations: Vec<f64>,
    /// Columns are the basis vectors.
    pub vectors: Array2<C64>,
    /// Index ranges of the degenerate energy eigenspaces.
    pub eigenspaces: Vec<(usize, usize)>,
}

impl JointBasis {
    pub fn to_basis(&self, a: &Array2<C64>) -> Array2<C64> {
        linalg::adjoint(&self.vectors).dot(a).dot(&self.vectors)
    }
}

/// Diagonalize `h`, then `rho` inside each degenerate eigenspace of `h`.
pub fn joint_eigenbasis(rho: &Array2<C64>, h: &Array2<C64>) -> Result<JointBasis> {
    let d = h.nrows();
    if rho.nrows() != d {
        return Err(Error::DimensionMismatch { expected: d, got: rho.nrows() });
    }
    let comm = linalg::max_abs(&linalg::commutator(rho, h));
    if comm > INVARIANCE_TOL {
        return Err(Error::Precondition(format!("state is not time invariant: max |[rho, H]| = {comm:e}")));
    }
    let spec = Spectrum::of(h)?;
    let vals = spec.values();
    let vecs = spec.eigenvectors();
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| vals[a].total_cmp(&vals[b]));

    let mut energies = Vec::with_capacity(d);
    let mut populations = Vec::with_capacity(d);
    let mut vectors = Array2::<C64>::zeros((d, d));
    let mut eigenspaces = Vec::new();
    let mut start = 0;
    while start < d {
        let mut end = start + 1;
        while end < d && vals[order[end]] - vals[order[start]] <= degeneracy_tol(vals[order[start]]) {
            end += 1;
        }
        let cols: Vec<usize> = order[start..end].to_vec();
        let v = vecs.select(ndarray::Axis(1), &cols);
        let block = linalg::adjoint(&v).dot(rho).dot(&v);
        let block = (&block + &linalg::adjoint(&block)).mapv(|z| z * 0.5);
        let (r, u) = eigh_dense(&block)?;
        let rotated = v.dot(&u);
        vectors.slice_mut(s![.., start..end]).assign(&rotated);
        let e_mean = cols.iter().map(|&i| vals[i]).sum::<f64>() / cols.len() as f64;
        energies.extend(std::iter::repeat_n(e_mean, cols.len()));
        populations.extend(r);
        eigenspaces.push((start, end));
        start = end;
    }
    Ok(JointBasis { energies, populations, vectors, eigenspaces })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct JointSpectrumPoint {
    /// `E_i - E_j`.
    pub mu: f64,
    /// `log(r_j / r_i)`.
    pub lambda: f64,
    /// `|<i|probe|j>|^2`.
    pub weight: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LineTest {
    pub beta: f64,
    /// `max |lambda - beta mu|` over the probe's support.
    pub line_residual: f64,
    /// No supported point has `mu != 0`, so the slope is undetermined (reported as 0).
    pub beta_indeterminate: bool,
    pub regularization: Option<f64>,
    pub points: Vec<JointSpectrumPoint>,
}

impl LineTest {
    pub fn is_kms(&self, tol: f64) -> bool {
        self.line_residual < tol
    }
}

/// Fit the joint spectrum seen by `probe` to a line through the origin.
pub fn kms_line_test(rho: &DensityMatrix, h: &FockOperator, probe: &FockOperator) -> Result<LineTest> {
    line_test(&ModularData::new(rho)?, h, probe)
}

/// As [`kms_line_test`] on `(1 - delta) rho + delta 1/d`; the weight is
/// reported in the result.
pub fn kms_line_test_regularized(
    rho: &DensityMatrix,
    h: &FockOperator,
    probe: &FockOperator,
    delta: Option<f64>,
) -> Result<LineTest> {
    line_test(&ModularData::regularized(rho, delta.unwrap_or(DEFAULT_REGULARIZATION))?, h, probe)
}

fn line_test(data: &ModularData, h: &FockOperator, probe: &FockOperator) -> Result<LineTest> {
    let basis = joint_eigenbasis(data.state().matrix(), h.matrix())?;
    if basis.populations.iter().any(|&r| r <= FAITHFUL_FLOOR) {
        let min = basis.populations.iter().copied().fold(f64::INFINITY, f64::min);
        return Err(Error::NotFaithful(min));
    }
    let p = basis.to_basis(probe.matrix());
    let d = p.nrows();
    let logr: Vec<f64> = basis.populations.iter().map(|r| r.ln()).collect();
    let mut points = Vec::new();
    for i in 0..d {
        for j in 0..d {
            let weight = p[[i, j]].norm_sqr();
            if weight > WEIGHT_FLOOR {
                points.push(JointSpectrumPoint {
                    mu: basis.energies[i] - basis.energies[j],
                    lambda: logr[j] - logr[i],
                    weight,
                });
            }
        }
    }
    let sxx: f64 = points.iter().map(|q| q.weight * q.mu * q.mu).sum();
    let sxy: f64 = points.iter().map(|q| q.weight * q.mu * q.lambda).sum();
    let beta_indeterminate = sxx <= 0.0;
    let beta = if beta_indeterminate { 0.0 } else { sxy / sxx };
    let line_residual = points.iter().fold(0.0f64, |m, q| m.max((q.lambda - beta * q.mu).abs()));
    Ok(LineTest { beta, line_residual, beta_indeterminate, regularization: data.regularization(), points })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TwoPointCheck {
    /// `Tr(rho A e^{-beta H} B e^{beta H}) - Tr(rho B A)`.
    pub residual: C64,
    /// Trace norm of `rho B A`.
    pub scale: f64,
    /// `|residual| / scale` (the absolute value when the scale vanishes).
    pub relative: f64,
}

/// The KMS boundary identity `omega(A alpha_{i beta}(B)) = omega(B A)`,
/// evaluated in the joint eigenbasis with exponents combined in log space.
pub fn kms_two_point_check(
    rho: &DensityMatrix,
    h: &FockOperator,
    a: &FockOperator,
    b: &FockOperator,
    beta: f64,
) -> Result<TwoPointCheck> {
    if !(beta.is_finite() && beta >= 0.0) {
        return Err(Error::InvalidParameter(format!("beta must be finite and nonnegative, got {beta}")));
    }
    let basis = joint_eigenbasis(rho.matrix(), h.matrix())?;
    let am = basis.to_basis(a.matrix());
    let bm = basis.to_basis(b.matrix());
    let d = am.nrows();
    let mut lhs = C64::new(0.0, 0.0);
    for i in 0..d {
        let r = basis.populations[i].max(0.0);
        if r == 0.0 {
            continue;
        }
        let lr = r.ln();
        for j in 0..d {
            let ab = am[[i, j]] * bm[[j, i]];
            if ab.norm() == 0.0 {
                continue;
            }
            let exponent = lr + beta * (basis.energies[i] - basis.energies[j]);
            if exponent > f64::MAX_EXP as f64 * std::f64::consts::LN_2 {
                return Err(Error::Overflow(format!("weight e^{exponent} is not representable")));
            }
            lhs += ab * exponent.exp();
        }
    }
    let ba = rho.matrix().dot(b.matrix()).dot(a.matrix());
    let rhs = linalg::trace(&ba);
    let residual = lhs - rhs;
    let scale = linalg::trace_norm(&ba)?;
    let relative = if scale > 0.0 { residual.norm() / scale } else { residual.norm() };
    Ok(TwoPointCheck { residual, scale, relative })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BetaFit {
    pub beta: f64,
    /// Offset `c` in `-log r = beta E + c`, the log partition function.
    pub offset: f64,
    /// Largest deviation of any eigenpair from the fitted line.
    pub affine_residual: f64,
}

/// Least-squares fit `-log r_i = beta E_i + c` over eigenpairs, with `r`
/// averaged within degenerate energy eigenspaces.
pub fn fit_beta(rho: &DensityMatrix, h: &FockOperator) -> Result<BetaFit> {
    let basis = joint_eigenbasis(rho.matrix(), h.matrix())?;
    if let Some(&r) = basis.populations.iter().find(|&&r| r <= FAITHFUL_FLOOR) {
        return Err(Error::NotFaithful(r));
    }
    let y: Vec<f64> = basis.populations.iter().map(|r| -r.ln()).collect();
    let mut ybar_space = vec![0.0; y.len()];
    for &(a, b) in &basis.eigenspaces {
        let m = y[a..b].iter().sum::<f64>() / (b - a) as f64;
        ybar_space[a..b].iter_mut().for_each(|v| *v = m);
    }
    let e = &basis.energies;
    let n = y.len() as f64;
    let emean = e.iter().sum::<f64>() / n;
    let ymean = ybar_space.iter().sum::<f64>() / n;
    let sxx: f64 = e.iter().map(|x| (x - emean).powi(2)).sum();
    let sxy: f64 = e.iter().zip(&ybar_space).map(|(x, v)| (x - emean) * (v - ymean)).sum();
    let beta = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let offset = ymean - beta * emean;
    let affine_residual = e.iter().zip(&y).fold(0.0f64, |m, (x, v)| m.max((v - beta * x - offset).abs()));
    Ok(BetaFit { beta, offset, affine_residual })
}
