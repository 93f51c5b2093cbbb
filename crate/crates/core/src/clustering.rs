//! Spatial and temporal clustering of correlations and the Lieb-Robinson
//! light cone, measured on exact states of small periodic lattices.
//!
//! Translations act along the first lattice axis. Products of diagonal
//! operators (number-operator polynomials) are formed entrywise, which keeps
//! twelve-site chains cheap.

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, c, C64};
use crate::operator_core::{translate, Boundary, DensityMatrix, Dynamics, FockOperator, LatticeSpec};
use crate::par;

/// Values at or below this are treated as numerically zero by the fits.
pub const VALUE_FLOOR: f64 = 1e-15;
/// Floor for commutator norms entering the cone fit.
pub const CONE_FLOOR: f64 = 1e-14;
/// Largest `||[rho, H]||` entry accepted as invariance.
pub const INVARIANCE_TOL: f64 = 1e-10;

/// `n_site - 1/2`.
pub fn centered_number(lattice: LatticeSpec, site: usize) -> Result<FockOperator> {
    let n = FockOperator::number(lattice, site)?;
    Ok(&n - &(&FockOperator::identity(lattice) * 0.5))
}

fn axis_length(lattice: LatticeSpec) -> usize {
    lattice.extents()[0]
}

fn check_separation(lattice: LatticeSpec, j: usize) -> Result<()> {
    if lattice.boundary() != Boundary::Periodic {
        return Err(Error::Precondition("translations need a periodic lattice".into()));
    }
    let len = axis_length(lattice);
    if 2 * j > len {
        return Err(Error::InvalidParameter(format!(
            "separation {j} exceeds half the period {len}; the torus would wrap"
        )));
    }
    Ok(())
}

/// `sigma_j` along the first axis.
pub fn shift(a: &FockOperator, j: usize) -> Result<FockOperator> {
    let mut s = vec![0isize; a.lattice().extents().len()];
    s[0] = j as isize;
    translate(a, &s)
}

fn diagonal_of(a: &Array2<C64>) -> Option<Vec<C64>> {
    linalg::is_diagonal(a).then(|| a.diag().to_vec())
}

/// `Tr(rho A_1 A_2 ... A_n) / Tr(rho)`, entrywise when every factor is
/// diagonal. Dividing by the computed trace makes `omega(1) = 1` exact.
fn expect_product(rho: &DensityMatrix, ops: &[&Array2<C64>]) -> C64 {
    let diags: Option<Vec<Vec<C64>>> = ops.iter().map(|a| diagonal_of(a)).collect();
    let r = rho.matrix();
    let tr = linalg::trace(r);
    let raw = match diags {
        Some(ds) => (0..r.nrows())
            .map(|b| ds.iter().fold(r[[b, b]], |acc, d| acc * d[b]))
            .sum(),
        None => {
            let mut m = ops[0].clone();
            for a in &ops[1..] {
                m = m.dot(*a);
            }
            linalg::trace_of_product(r, &m)
        }
    };
    raw / tr
}

fn check_dims(rho: &DensityMatrix, ops: &[&FockOperator]) -> Result<()> {
    for a in ops {
        if a.dim() != rho.dim() {
            return Err(Error::DimensionMismatch { expected: rho.dim(), got: a.dim() });
        }
    }
    Ok(())
}

/// `omega(Q1 sigma_j Q2) - omega(Q1) omega(Q2)` before taking the modulus.
pub fn connected_correlator_complex(rho: &DensityMatrix, q1: &FockOperator, q2: &FockOperator, j: usize) -> Result<C64> {
    check_dims(rho, &[q1, q2])?;
    check_separation(q1.lattice(), j)?;
    let q2j = shift(q2, j)?;
    let joint = expect_product(rho, &[q1.matrix(), q2j.matrix()]);
    let m1 = expect_product(rho, &[q1.matrix()]);
    let m2 = expect_product(rho, &[q2.matrix()]);
    Ok(joint - m1 * m2)
}

pub fn connected_correlator(rho: &DensityMatrix, q1: &FockOperator, q2: &FockOperator, j: usize) -> Result<f64> {
    Ok(connected_correlator_complex(rho, q1, q2, j)?.norm())
}

/// `|omega(Q1 sigma_j(Q2 sigma_j(Q3 ...))) - prod omega(Q_l)|`, the `l`-th
/// observable sitting `(l - 1) j` sites along.
///
/// The outermost placement must stay within half the period: `(n - 1) j <= N/2`.
pub fn multi_cluster_defect(rho: &DensityMatrix, observables: &[FockOperator], j: usize) -> Result<f64> {
    if observables.is_empty() {
        return Err(Error::InvalidParameter("no observables".into()));
    }
    let refs: Vec<&FockOperator> = observables.iter().collect();
    check_dims(rho, &refs)?;
    let lattice = observables[0].lattice();
    let n = observables.len();
    if lattice.boundary() != Boundary::Periodic {
        return Err(Error::Precondition("translations need a periodic lattice".into()));
    }
    let reach = (n - 1) * j;
    if 2 * reach > axis_length(lattice) {
        return Err(Error::InvalidParameter(format!(
            "chain of {} sites too short for {n} observables at spacing {j}",
            axis_length(lattice)
        )));
    }
    let placed = observables
        .iter()
        .enumerate()
        .map(|(l, q)| shift(q, l * j))
        .collect::<Result<Vec<_>>>()?;
    let mats: Vec<&Array2<C64>> = placed.iter().map(|q| q.matrix()).collect();
    let joint = expect_product(rho, &mats);
    let product = observables
        .iter()
        .fold(c(1.0), |acc, q| acc * expect_product(rho, &[q.matrix()]));
    Ok((joint - product).norm())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorrelatorSample {
    /// Spatial separation in sites.
    pub x: f64,
    pub t: f64,
    /// Modulus of a connected correlator or commutator norm.
    pub value: f64,
    pub observables: Vec<String>,
}

impl CorrelatorSample {
    pub fn spatial(j: usize, value: f64, observables: &[&str]) -> Self {
        CorrelatorSample { x: j as f64, t: 0.0, value, observables: observables.iter().map(|s| s.to_string()).collect() }
    }
}

/// Connected correlators at separations `0..=N/2`.
pub fn correlator_profile(
    rho: &DensityMatrix,
    q1: &FockOperator,
    q2: &FockOperator,
    names: [&str; 2],
) -> Result<Vec<CorrelatorSample>> {
    let half = axis_length(q1.lattice()) / 2;
    (0..=half)
        .map(|j| Ok(CorrelatorSample::spatial(j, connected_correlator(rho, q1, q2, j)?, &names)))
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    /// `K` in `K e^{-M x}`.
    pub prefactor: f64,
    pub rate: f64,
    /// Coefficient of determination of the log-linear fit.
    pub goodness: f64,
    /// Smallest and largest separation used.
    pub window: (f64, f64),
    pub points: usize,
    /// Samples dropped as floor-limited.
    pub excluded: usize,
    /// `rate <= 0`.
    pub non_decaying: bool,
}

/// `(slope, intercept, r^2)` of an ordinary least-squares line.
fn line_fit(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    let n = x.len() as f64;
    let xm = x.iter().sum::<f64>() / n;
    let ym = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|v| (v - xm).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - xm) * (b - ym)).sum();
    let syy: f64 = y.iter().map(|v| (v - ym).powi(2)).sum();
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let intercept = ym - slope * xm;
    let sse: f64 = x.iter().zip(y).map(|(a, b)| (b - intercept - slope * a).powi(2)).sum();
    let r2 = if syy > 0.0 { 1.0 - sse / syy } else { 1.0 };
    (slope, intercept, r2)
}

/// Least squares on `log value` against separation, requiring at least
/// four samples above [`VALUE_FLOOR`].
pub fn fit_decay(samples: &[CorrelatorSample]) -> Result<DecayFit> {
    fit_decay_min(samples, 4)
}

/// As [`fit_decay`] with an explicit minimum number of usable samples (at least 2).
pub fn fit_decay_min(samples: &[CorrelatorSample], min_points: usize) -> Result<DecayFit> {
    let min_points = min_points.max(2);
    let used: Vec<&CorrelatorSample> = samples.iter().filter(|s| s.value > VALUE_FLOOR).collect();
    let excluded = samples.len() - used.len();
    if used.len() < min_points {
        return Err(Error::Precondition(format!(
            "{} samples above the floor, need {min_points} ({excluded} floor-limited)",
            used.len()
        )));
    }
    let x: Vec<f64> = used.iter().map(|s| s.x).collect();
    let y: Vec<f64> = used.iter().map(|s| s.value.ln()).collect();
    if x.iter().all(|&v| v == x[0]) {
        return Err(Error::Precondition("all samples at one separation".into()));
    }
    let (slope, intercept, goodness) = line_fit(&x, &y);
    let rate = -slope;
    let lo = x.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = x.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok(DecayFit {
        prefactor: intercept.exp(),
        rate,
        goodness,
        window: (lo, hi),
        points: used.len(),
        excluded,
        non_decaying: rate <= 0.0,
    })
}

/// `n K e^{-M j}`.
pub fn multi_cluster_bound(fit: &DecayFit, n: usize, j: usize) -> f64 {
    n as f64 * fit.prefactor * (-fit.rate * j as f64).exp()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimeClusterSample {
    /// Smallest gap between consecutive times.
    pub gap: f64,
    pub value: f64,
}

/// `|omega(alpha(t_1) A_1 ... alpha(t_n) A_n) - prod omega(A_l)|`.
pub fn time_multicluster_defect(
    rho: &DensityMatrix,
    dynamics: &Dynamics,
    observables: &[FockOperator],
    times: &[f64],
) -> Result<TimeClusterSample> {
    if observables.len() != times.len() || observables.is_empty() {
        return Err(Error::InvalidParameter("need one time per observable".into()));
    }
    if times.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidParameter("times must be strictly increasing".into()));
    }
    let refs: Vec<&FockOperator> = observables.iter().collect();
    check_dims(rho, &refs)?;
    let hmat = dynamics.spectrum().apply_fn(c);
    let defect = linalg::max_abs(&linalg::commutator(rho.matrix(), &hmat));
    if defect > INVARIANCE_TOL {
        return Err(Error::Precondition(format!(
            "state is not invariant (max |[rho, H]| = {defect:e}); the defect would mix relaxation with clustering"
        )));
    }
    let evolved: Vec<FockOperator> = observables.iter().zip(times).map(|(a, &t)| dynamics.evolve_at(a, t)).collect();
    let mats: Vec<&Array2<C64>> = evolved.iter().map(|a| a.matrix()).collect();
    let joint = expect_product(rho, &mats);
    let product = observables.iter().fold(c(1.0), |acc, a| acc * rho.expectation(a));
    let gap = times.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min);
    Ok(TimeClusterSample { gap: if gap.is_finite() { gap } else { 0.0 }, value: (joint - product).norm() })
}

/// Two-time defect of `(A, A)` at times `(0, T)` for each gap `T > 0`.
pub fn time_cluster_curve(
    rho: &DensityMatrix,
    dynamics: &Dynamics,
    a: &FockOperator,
    gaps: &[f64],
) -> Result<Vec<TimeClusterSample>> {
    let ops = [a.clone(), a.clone()];
    par::map_slice(gaps, |&g| time_multicluster_defect(rho, dynamics, &ops, &[0.0, g]))
        .into_iter()
        .collect()
}

/// `||[sigma_x(alpha_t(A)), B]||`.
pub fn lr_commutator(a: &FockOperator, b: &FockOperator, x: usize, t: f64, dynamics: &Dynamics) -> Result<f64> {
    check_separation(a.lattice(), x)?;
    let evolved = shift(&dynamics.evolve_at(a, t), x)?;
    linalg::op_norm(&linalg::commutator(evolved.matrix(), b.matrix()))
}

/// Commutator norms over the grid `xs` by `ts`, ordered by time then separation.
pub fn lr_sweep(a: &FockOperator, b: &FockOperator, xs: &[usize], ts: &[f64], dynamics: &Dynamics) -> Result<Vec<CorrelatorSample>> {
    for &x in xs {
        check_separation(a.lattice(), x)?;
    }
    let per_t: Vec<Result<Vec<CorrelatorSample>>> = par::map_slice(ts, |&t| {
        let evolved = dynamics.evolve_at(a, t);
        xs.iter()
            .map(|&x| {
                let moved = shift(&evolved, x)?;
                let value = linalg::op_norm(&linalg::commutator(moved.matrix(), b.matrix()))?;
                Ok(CorrelatorSample { x: x as f64, t, value, observables: vec!["A".into(), "B".into()] })
            })
            .collect()
    });
    let mut out = Vec::with_capacity(xs.len() * ts.len());
    for r in per_t {
        out.extend(r?);
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConeFit {
    /// `mu` in `log ||[.,.]|| ~ log K - mu |x| + c |t|`.
    pub mu: f64,
    pub c: f64,
    /// Fitted `log K`.
    pub log_prefactor: f64,
    /// Smallest `log K` putting every fitted sample under the plane.
    pub adjusted_log_prefactor: f64,
    pub goodness: f64,
    /// Fraction of fitted samples above the fitted plane.
    pub violation_fraction: f64,
    pub points: usize,
    pub excluded: usize,
    /// Too few samples above [`CONE_FLOOR`] to fit: nothing propagates.
    pub indeterminate: bool,
}

impl ConeFit {
    /// Separation beyond which the bound drops below `e^{-3}` at time `t`.
    pub fn causal_edge(&self, t: f64) -> f64 {
        (self.c / self.mu) * t.abs() + 3.0 / self.mu
    }

    /// Samples outside [`ConeFit::causal_edge`] exceeding `e^{-3} norm_ab`.
    pub fn causality_violations(&self, samples: &[CorrelatorSample], norm_ab: f64) -> usize {
        if self.indeterminate || self.mu <= 0.0 {
            return 0;
        }
        let cap = (-3.0f64).exp() * norm_ab;
        samples.iter().filter(|s| s.x > self.causal_edge(s.t) && s.value > cap).count()
    }
}

fn solve3(m: [[f64; 3]; 3], r: [f64; 3]) -> Option<[f64; 3]> {
    let det = |a: [[f64; 3]; 3]| {
        a[0][0] * (a[1][1] * a[2][2] - a[1][2] * a[2][1]) - a[0][1] * (a[1][0] * a[2][2] - a[1][2] * a[2][0])
            + a[0][2] * (a[1][0] * a[2][1] - a[1][1] * a[2][0])
    };
    let d = det(m);
    let scale = m.iter().flatten().fold(0.0f64, |s, v| s.max(v.abs()));
    if d.abs() <= 1e-12 * scale.powi(3) {
        return None;
    }
    let mut out = [0.0; 3];
    for (k, o) in out.iter_mut().enumerate() {
        let mut mk = m;
        for i in 0..3 {
            mk[i][k] = r[i];
        }
        *o = det(mk) / d;
    }
    Some(out)
}

/// Plane fit of `log value` against `(|x|, |t|)`.
pub fn fit_lr_cone(samples: &[CorrelatorSample]) -> Result<ConeFit> {
    let distinct = |f: fn(&CorrelatorSample) -> f64| {
        let mut v: Vec<f64> = samples.iter().map(f).collect();
        v.sort_by(f64::total_cmp);
        v.dedup();
        v.len()
    };
    if samples.len() < 8 || distinct(|s| s.x.abs()) < 3 || distinct(|s| s.t.abs()) < 3 {
        return Err(Error::Precondition(
            "cone fit needs at least 8 samples over 3 separations and 3 times".into(),
        ));
    }
    let used: Vec<&CorrelatorSample> = samples.iter().filter(|s| s.value > CONE_FLOOR).collect();
    let excluded = samples.len() - used.len();
    let empty = ConeFit {
        mu: 0.0,
        c: 0.0,
        log_prefactor: f64::NEG_INFINITY,
        adjusted_log_prefactor: f64::NEG_INFINITY,
        goodness: 0.0,
        violation_fraction: 0.0,
        points: used.len(),
        excluded,
        indeterminate: true,
    };
    if used.len() < 3 {
        return Ok(empty);
    }
    let rows: Vec<[f64; 3]> = used.iter().map(|s| [1.0, s.x.abs(), s.t.abs()]).collect();
    let y: Vec<f64> = used.iter().map(|s| s.value.ln()).collect();
    let mut m = [[0.0; 3]; 3];
    let mut r = [0.0; 3];
    for (row, &v) in rows.iter().zip(&y) {
        for i in 0..3 {
            r[i] += row[i] * v;
            for k in 0..3 {
                m[i][k] += row[i] * row[k];
            }
        }
    }
    let Some([b0, bx, bt]) = solve3(m, r) else {
        return Ok(empty);
    };
    let resid: Vec<f64> = rows.iter().zip(&y).map(|(row, v)| v - (b0 + bx * row[1] + bt * row[2])).collect();
    let ym = y.iter().sum::<f64>() / y.len() as f64;
    let syy: f64 = y.iter().map(|v| (v - ym).powi(2)).sum();
    let sse: f64 = resid.iter().map(|e| e * e).sum();
    let above = resid.iter().filter(|&&e| e > 1e-12).count();
    let worst = resid.iter().copied().fold(0.0f64, f64::max);
    Ok(ConeFit {
        mu: -bx,
        c: bt,
        log_prefactor: b0,
        adjusted_log_prefactor: b0 + worst,
        goodness: if syy > 0.0 { 1.0 - sse / syy } else { 1.0 },
        violation_fraction: above as f64 / used.len() as f64,
        points: used.len(),
        excluded,
        indeterminate: false,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operator_core::{build_hamiltonian, gibbs_state, HamiltonianParts, HamiltonianSpec};

    fn ring(n: usize, u: f64) -> HamiltonianParts {
        let lattice = LatticeSpec::chain(n, Boundary::Periodic).unwrap();
        build_hamiltonian(lattice, &HamiltonianSpec { interaction: u, ..Default::default() }).unwrap()
    }

    /// `(e^{beta h} + 1)^{-1}` for the single-particle ring hopping `h`.
    fn free_correlation_matrix(n: usize, beta: f64) -> Array2<C64> {
        let mut h = Array2::<C64>::zeros((n, n));
        for i in 0..n {
            let k = (i + 1) % n;
            h[[i, k]] = c(-1.0);
            h[[k, i]] = c(-1.0);
        }
        let spec = linalg::Spectrum::of(&h).unwrap();
        spec.apply_fn(|e| c(1.0 / ((beta * e).exp() + 1.0)))
    }

    #[test]
    fn free_fermion_correlators_follow_wick() {
        let n = 8;
        let p = ring(n, 0.0);
        let rho = gibbs_state(&p.unperturbed(), 0.7).unwrap();
        let g = free_correlation_matrix(n, 0.7);
        let q = centered_number(p.kinetic.lattice(), 0).unwrap();
        for j in 1..=4 {
            let val = connected_correlator_complex(&rho, &q, &q, j).unwrap();
            let wick = -g[[0, j]].norm_sqr();
            assert!((val - c(wick)).norm() < 1e-13, "j={j}: {val} vs {wick}");
        }
        // j = 0: <n0 n0> - <n0>^2 = g00 (1 - g00).
        let g00 = g[[0, 0]].re;
        let v0 = connected_correlator(&rho, &q, &q, 0).unwrap();
        assert!((v0 - g00 * (1.0 - g00)).abs() < 1e-13);
    }

    #[test]
    fn diagonal_shortcut_matches_dense_products() {
        let p = ring(6, 1.0);
        let rho = gibbs_state(&p.unperturbed(), 1.0).unwrap();
        let q = centered_number(p.kinetic.lattice(), 0).unwrap();
        let q2 = shift(&q, 2).unwrap();
        let fast = expect_product(&rho, &[q.matrix(), q2.matrix()]);
        let dense = linalg::trace_of_product(rho.matrix(), &q.matrix().dot(q2.matrix()));
        let dense = dense / linalg::trace(rho.matrix());
        assert!((fast - dense).norm() < 1e-15);
        let hop = FockOperator::hopping(p.kinetic.lattice(), 0, 1).unwrap();
        let h2 = shift(&hop, 2).unwrap();
        let dense = linalg::trace_of_product(rho.matrix(), &hop.matrix().dot(h2.matrix())) / linalg::trace(rho.matrix());
        assert!((expect_product(&rho, &[hop.matrix(), h2.matrix()]) - dense).norm() < 1e-15);
    }

    #[test]
    fn trivial_correlators() {
        let p = ring(6, 1.0);
        let l = p.kinetic.lattice();
        let q = centered_number(l, 0).unwrap();
        let id = FockOperator::identity(l);
        let rho = gibbs_state(&p.unperturbed(), 1.0).unwrap();
        assert_eq!(connected_correlator(&rho, &q, &id, 2).unwrap(), 0.0);
        let mixed = DensityMatrix::maximally_mixed(64);
        for j in 1..=3 {
            assert!(connected_correlator(&mixed, &q, &q, j).unwrap() < 1e-14);
        }
        assert!(matches!(connected_correlator(&rho, &q, &q, 4), Err(Error::InvalidParameter(_))));
        let open = LatticeSpec::chain(6, Boundary::Open).unwrap();
        let qo = centered_number(open, 0).unwrap();
        assert!(connected_correlator(&mixed, &qo, &qo, 1).is_err());
    }

    #[test]
    fn hermiticity_relation() {
        // conj omega(X Y) = omega(Y* X*) with X = Q1, Y = sigma_j Q2.
        let p = ring(6, 1.0);
        let l = p.kinetic.lattice();
        let rho = gibbs_state(&p.unperturbed(), 0.8).unwrap();
        let a = FockOperator::from_terms(
            l,
            &[(C64::new(0.3, 0.7), vec![(0, crate::operator_core::Ladder::Create), (1, crate::operator_core::Ladder::Annihilate)])],
        )
        .unwrap();
        let b = &FockOperator::number(l, 0).unwrap() + &FockOperator::hopping(l, 0, 1).unwrap();
        let x = connected_correlator_complex(&rho, &a, &b, 2).unwrap();
        let y_adj = shift(&b, 2).unwrap().adjoint();
        let joint = rho.expectation(&y_adj.dot(&a.adjoint()));
        let reversed = joint - rho.expectation(&b.adjoint()) * rho.expectation(&a.adjoint());
        assert!((x.conj() - reversed).norm() < 1e-14);
    }

    #[test]
    fn correlations_switch_on_continuously_in_beta() {
        let p = ring(6, 1.0);
        let q = centered_number(p.kinetic.lattice(), 0).unwrap();
        let h = p.unperturbed();
        let v0 = connected_correlator(&gibbs_state(&h, 0.0).unwrap(), &q, &q, 2).unwrap();
        let v1 = connected_correlator(&gibbs_state(&h, 0.01).unwrap(), &q, &q, 2).unwrap();
        let v2 = connected_correlator(&gibbs_state(&h, 0.02).unwrap(), &q, &q, 2).unwrap();
        assert!(v0 < 1e-15);
        assert!(v1 > 0.0 && v1 < 1e-3 && v2 > v1);
    }

    #[test]
    fn fit_decay_recovers_exact_exponentials() {
        let samples: Vec<_> = (1..=6).map(|j| CorrelatorSample::spatial(j, 3.0 * (-0.7 * j as f64).exp(), &["q", "q"])).collect();
        let f = fit_decay(&samples).unwrap();
        assert!((f.prefactor - 3.0).abs() < 1e-10 && (f.rate - 0.7).abs() < 1e-10);
        assert!((f.goodness - 1.0).abs() < 1e-12 && f.window == (1.0, 6.0));
        let flat: Vec<_> = (1..=5).map(|j| CorrelatorSample::spatial(j, 0.2, &["q", "q"])).collect();
        let f = fit_decay(&flat).unwrap();
        assert!(f.non_decaying && f.rate.abs() < 1e-14);
        let mut floor = samples.clone();
        floor.iter_mut().skip(3).for_each(|s| s.value = 1e-17);
        assert!(fit_decay(&floor).is_err());
        let f = fit_decay_min(&floor, 3).unwrap();
        assert_eq!((f.points, f.excluded), (3, 3));
    }

    #[test]
    fn multi_cluster_reductions() {
        let p = ring(8, 1.0);
        let l = p.kinetic.lattice();
        let rho = gibbs_state(&p.unperturbed(), 1.0).unwrap();
        let q = centered_number(l, 0).unwrap();
        let two = multi_cluster_defect(&rho, &[q.clone(), q.clone()], 3).unwrap();
        assert!((two - connected_correlator(&rho, &q, &q, 3).unwrap()).abs() < 1e-15);
        let id = FockOperator::identity(l);
        assert!(multi_cluster_defect(&rho, &[id.clone(), id.clone(), id], 2).unwrap() < 1e-15);
        assert!(multi_cluster_defect(&rho, &[q.clone(), q.clone(), q], 3).is_err());
    }

    #[test]
    fn time_cluster_trivial_cases() {
        let p = ring(6, 1.0);
        let h = p.unperturbed();
        let dynamics = Dynamics::new(&h).unwrap();
        let rho = dynamics.gibbs(1.0).unwrap();
        let q = centered_number(h.lattice(), 0).unwrap();
        let id = FockOperator::identity(h.lattice());
        let s = time_multicluster_defect(&rho, &dynamics, &[id.clone(), id], &[0.0, 3.0]).unwrap();
        assert!(s.value < 1e-15 && s.gap == 3.0);
        let s = time_multicluster_defect(&rho, &dynamics, std::slice::from_ref(&q), &[2.5]).unwrap();
        assert!(s.value < 1e-13);
        let kinetic_gibbs = gibbs_state(&p.kinetic, 1.0).unwrap();
        assert!(matches!(
            time_multicluster_defect(&kinetic_gibbs, &dynamics, &[q.clone(), q.clone()], &[0.0, 1.0]),
            Err(Error::Precondition(_))
        ));
        assert!(time_multicluster_defect(&rho, &dynamics, &[q.clone(), q], &[1.0, 1.0]).is_err());
    }

    #[test]
    fn lr_trivial_cases() {
        let p = ring(6, 1.0);
        let l = p.kinetic.lattice();
        let dynamics = Dynamics::new(&p.unperturbed()).unwrap();
        let q = centered_number(l, 0).unwrap();
        let pair = FockOperator::hopping(l, 0, 1).unwrap();
        assert!(lr_commutator(&pair, &q, 2, 0.0, &dynamics).unwrap() < 1e-14);
        assert_eq!(lr_commutator(&q, &q, 0, 0.0, &dynamics).unwrap(), 0.0);
        assert!(lr_commutator(&q, &q, 1, 0.5, &dynamics).unwrap() > 1e-3);
    }

    #[test]
    fn cone_fit_recovers_a_plane() {
        let mut samples = Vec::new();
        for x in 1..=4 {
            for k in 1..=4 {
                let t = 0.5 * k as f64;
                let value = (0.2 - 1.3 * x as f64 + 0.9 * t).exp();
                samples.push(CorrelatorSample { x: x as f64, t, value, observables: vec![] });
            }
        }
        let f = fit_lr_cone(&samples).unwrap();
        assert!((f.mu - 1.3).abs() < 1e-10 && (f.c - 0.9).abs() < 1e-10 && (f.log_prefactor - 0.2).abs() < 1e-10);
        assert!(!f.indeterminate && f.goodness > 1.0 - 1e-12);
        assert!((f.adjusted_log_prefactor - f.log_prefactor).abs() < 1e-9);
        assert!(fit_lr_cone(&samples[..4]).is_err());
    }

    #[test]
    fn commuting_model_has_no_cone() {
        // J = 0 leaves only the diagonal interaction, which commutes with n_0.
        let lattice = LatticeSpec::chain(6, Boundary::Periodic).unwrap();
        let spec = HamiltonianSpec { hopping: 0.0, interaction: 1.0, ..Default::default() };
        let h = build_hamiltonian(lattice, &spec).unwrap().unperturbed();
        let dynamics = Dynamics::new(&h).unwrap();
        let q = centered_number(lattice, 0).unwrap();
        let samples = lr_sweep(&q, &q, &[1, 2, 3], &[0.5, 1.0, 1.5], &dynamics).unwrap();
        assert!(samples.iter().all(|s| s.value == 0.0));
        assert!(fit_lr_cone(&samples).unwrap().indeterminate);
    }

    #[test]
    fn sweep_matches_single_evaluations() {
        let p = ring(6, 1.0);
        let l = p.kinetic.lattice();
        let dynamics = Dynamics::new(&p.unperturbed()).unwrap();
        let q = centered_number(l, 0).unwrap();
        let samples = lr_sweep(&q, &q, &[1, 3], &[0.5, 1.0], &dynamics).unwrap();
        assert_eq!(samples.len(), 4);
        for s in &samples {
            let direct = lr_commutator(&q, &q, s.x as usize, s.t, &dynamics).unwrap();
            assert_eq!(direct, s.value);
        }
    }
}
