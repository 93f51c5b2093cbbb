use serde::{Deserialize, Serialize};

use super::OccupationFunction;
use crate::error::{Error, Result};

fn logistic(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// `ln(1 + e^x)` without overflow.
fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

/// `rho(p) = 1 / (1 + e^{beta (eps(p) - mu)})`. Negative `beta` is allowed.
pub fn fermi_dirac(beta: f64, mu: f64, energies: &[f64]) -> OccupationFunction {
    if beta < 0.0 {
        log::info!("Fermi-Dirac occupation at negative beta {beta}");
    }
    OccupationFunction(energies.iter().map(|e| logistic(-beta * (e - mu))).collect())
}

/// `(beta, beta mu)` form, finite even where `mu` is not.
fn fermi_dirac_log(beta: f64, beta_mu: f64, energies: &[f64]) -> Vec<f64> {
    energies.iter().map(|e| logistic(beta_mu - beta * e)).collect()
}

/// `-sum_p [rho ln rho + (1-rho) ln(1-rho)]`, with `0 ln 0 = 0`.
pub fn entropy_density(rho: &OccupationFunction) -> f64 {
    let h = |x: f64| if x > 0.0 { -x * x.ln() } else { 0.0 };
    rho.values().iter().map(|&r| h(r) + h(1.0 - r)).sum()
}

/// Particle number and kinetic energy `(sum rho, sum eps rho)`.
pub fn conserved_charges(rho: &OccupationFunction, energies: &[f64]) -> Result<(f64, f64)> {
    if rho.len() != energies.len() {
        return Err(Error::DimensionMismatch { expected: energies.len(), got: rho.len() });
    }
    let n = rho.values().iter().sum();
    let e = rho.values().iter().zip(energies).map(|(r, e)| r * e).sum();
    Ok((n, e))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum SolveMethod {
    Newton,
    Bisection,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChargeSolution {
    pub beta: f64,
    /// `beta / beta_mu`; zero by convention when both vanish.
    pub mu: f64,
    pub beta_mu: f64,
    /// `max(|N - N_target|, |E - E_target|)` at the solution.
    pub residual: f64,
    pub method: SolveMethod,
    pub iterations: usize,
}

#[derive(Clone, Copy, Debug)]
pub struct SolverOptions {
    pub max_newton_iterations: usize,
    pub tolerance: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions { max_newton_iterations: 100, tolerance: 1e-12 }
    }
}

/// Find the Fermi-Dirac occupation with the given particle number and energy.
pub fn solve_beta_mu(n_target: f64, e_target: f64, energies: &[f64]) -> Result<ChargeSolution> {
    solve_beta_mu_with(n_target, e_target, energies, SolverOptions::default())
}

/// Fermi-Dirac occupations with fractional filling `n` have energies strictly
/// between the two fillings returned here (lowest levels first, highest first).
fn energy_range(n: f64, energies: &[f64]) -> (f64, f64) {
    let mut sorted = energies.to_vec();
    sorted.sort_by(f64::total_cmp);
    let fill = |levels: &mut dyn Iterator<Item = &f64>| {
        let mut left = n;
        let mut acc = 0.0;
        for e in levels {
            let take = left.min(1.0);
            if take <= 0.0 {
                break;
            }
            acc += take * e;
            left -= take;
        }
        acc
    };
    (fill(&mut sorted.iter()), fill(&mut sorted.iter().rev()))
}

struct Charges {
    n: f64,
    e: f64,
    // Hessian of the log-partition function in (beta mu, beta).
    haa: f64,
    hab: f64,
    hbb: f64,
    potential: f64,
}

fn charges(beta: f64, a: f64, energies: &[f64], n_t: f64, e_t: f64) -> Charges {
    let mut c = Charges { n: 0.0, e: 0.0, haa: 0.0, hab: 0.0, hbb: 0.0, potential: 0.0 };
    for &eps in energies {
        let x = a - beta * eps;
        let r = logistic(x);
        let v = r * (1.0 - r);
        c.n += r;
        c.e += eps * r;
        c.haa += v;
        c.hab -= eps * v;
        c.hbb += eps * eps * v;
        c.potential += softplus(x);
    }
    c.potential += beta * e_t - a * n_t;
    c
}

/// As [`solve_beta_mu`] with explicit solver settings. Newton runs on the
/// convex potential `sum ln(1 + e^{a - beta eps}) - a N + beta E`, `a = beta mu`,
/// with backtracking; if it stalls, nested bisection takes over.
pub fn solve_beta_mu_with(n_target: f64, e_target: f64, energies: &[f64], opts: SolverOptions) -> Result<ChargeSolution> {
    let m = energies.len() as f64;
    if !(n_target.is_finite() && e_target.is_finite()) {
        return Err(Error::InvalidParameter("charge targets must be finite".into()));
    }
    if !(n_target > 0.0 && n_target < m) {
        return Err(Error::Unattainable(format!("particle number {n_target} outside the open range (0, {m})")));
    }
    let (e_lo, e_hi) = energy_range(n_target, energies);
    let slack = 1e-12 * (e_lo.abs() + e_hi.abs()).max(1.0);
    if !(e_target > e_lo + slack && e_target < e_hi - slack) {
        return Err(Error::Unattainable(format!(
            "energy {e_target} outside the open range ({e_lo}, {e_hi}) attainable at particle number {n_target}"
        )));
    }
    let scale = energies.iter().fold(0.0f64, |s, e| s.max(e.abs())).max(1.0);
    let tol = opts.tolerance;
    let finish = |beta: f64, a: f64, method, iterations| {
        let c = charges(beta, a, energies, n_target, e_target);
        let mu = if a == 0.0 && beta == 0.0 { 0.0 } else { a / beta };
        ChargeSolution {
            beta,
            mu,
            beta_mu: a,
            residual: (c.n - n_target).abs().max((c.e - e_target).abs()),
            method,
            iterations,
        }
    };

    let (mut beta, mut a) = (0.0, (n_target / (m - n_target)).ln());
    for it in 0..opts.max_newton_iterations {
        let c = charges(beta, a, energies, n_target, e_target);
        let (ga, gb) = (c.n - n_target, e_target - c.e);
        if ga.abs().max(gb.abs()) <= tol {
            return Ok(finish(beta, a, SolveMethod::Newton, it));
        }
        let det = c.haa * c.hbb - c.hab * c.hab;
        if !(det.is_finite() && det > 0.0) {
            break;
        }
        let da = -(c.hbb * ga - c.hab * gb) / det;
        let db = -(c.haa * gb - c.hab * ga) / det;
        let slope = ga * da + gb * db;
        let mut t = 1.0;
        let mut accepted = false;
        while t > 1e-12 {
            let (na, nb) = (a + t * da, beta + t * db);
            let f = charges(nb, na, energies, n_target, e_target).potential;
            if f <= c.potential + 1e-4 * t * slope || (f - c.potential).abs() <= 1e-15 * c.potential.abs() {
                a = na;
                beta = nb;
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    log::warn!("Newton stalled on (N, E) = ({n_target}, {e_target}); falling back to bisection");
    let (beta, a, iterations) = bisect(n_target, e_target, energies, scale)?;
    let sol = finish(beta, a, SolveMethod::Bisection, iterations);
    if sol.residual > tol.max(1e-10) {
        return Err(Error::Unattainable(format!("bisection residual {:e} for (N, E) = ({n_target}, {e_target})", sol.residual)));
    }
    Ok(sol)
}

/// `a(beta)` solving `N(beta, a) = N` by bisection, then `beta` solving
/// `E(beta, a(beta)) = E`, which is decreasing in `beta`.
fn bisect(n_t: f64, e_t: f64, energies: &[f64], scale: f64) -> Result<(f64, f64, usize)> {
    let number = |beta: f64, a: f64| fermi_dirac_log(beta, a, energies).iter().sum::<f64>();
    let a_of = |beta: f64| {
        let span = beta.abs() * scale + 50.0;
        let (mut lo, mut hi) = (-span, span);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if number(beta, mid) < n_t {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    };
    let energy = |beta: f64| {
        let a = a_of(beta);
        fermi_dirac_log(beta, a, energies).iter().zip(energies).map(|(r, e)| r * e).sum::<f64>()
    };
    let (mut lo, mut hi) = (-1.0, 1.0);
    let mut iterations = 0;
    while energy(lo) < e_t || energy(hi) > e_t {
        lo *= 2.0;
        hi *= 2.0;
        iterations += 1;
        if hi > 1e8 {
            return Err(Error::Unattainable(format!("no finite beta reaches energy {e_t}")));
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if energy(mid) > e_t {
            lo = mid;
        } else {
            hi = mid;
        }
        iterations += 1;
    }
    let beta = 0.5 * (lo + hi);
    Ok((beta, a_of(beta), iterations))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FermiDiracFit {
    pub beta: f64,
    pub mu: f64,
    pub beta_mu: f64,
    /// Largest absolute logit residual.
    pub max_residual: f64,
    /// Set when `mu` is not determined by the data (flat band or `beta = 0`);
    /// `mu` is then reported as zero.
    pub mu_indeterminate: bool,
}

/// Least-squares fit of `logit rho = beta mu - beta eps`.
pub fn fit_fermi_dirac(rho: &OccupationFunction, energies: &[f64]) -> Result<FermiDiracFit> {
    if rho.len() != energies.len() {
        return Err(Error::DimensionMismatch { expected: energies.len(), got: rho.len() });
    }
    if let Some(r) = rho.values().iter().find(|r| !(**r > 0.0 && **r < 1.0)) {
        return Err(Error::Precondition(format!("fit needs occupations strictly inside (0, 1), found {r}")));
    }
    let y: Vec<f64> = rho.values().iter().map(|r| (r / (1.0 - r)).ln()).collect();
    let m = y.len() as f64;
    let ebar = energies.iter().sum::<f64>() / m;
    let ybar = y.iter().sum::<f64>() / m;
    let sxx: f64 = energies.iter().map(|e| (e - ebar).powi(2)).sum();
    let sxy: f64 = energies.iter().zip(&y).map(|(e, v)| (e - ebar) * (v - ybar)).sum();
    let flat = sxx <= 1e-24 * m * ebar.abs().max(1.0).powi(2);
    let slope = if flat { 0.0 } else { sxy / sxx };
    let beta = -slope;
    let beta_mu = ybar - slope * ebar;
    let max_residual = energies.iter().zip(&y).fold(0.0f64, |mx, (e, v)| mx.max((v - beta_mu + beta * e).abs()));
    let mu_indeterminate = flat || beta.abs() < 1e-12;
    let mu = if mu_indeterminate { 0.0 } else { beta_mu / beta };
    Ok(FermiDiracFit { beta, mu, beta_mu, max_residual, mu_indeterminate })
}
