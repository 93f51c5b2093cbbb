use serde::{Deserialize, Serialize};

use super::equilibrium::{conserved_charges, entropy_density, fit_fermi_dirac};
use super::kernel::CollisionKernel;
use super::OccupationFunction;
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KineticState {
    pub rho: OccupationFunction,
    /// Kinetic time, in units of `lambda^2 t`.
    pub tau: f64,
}

impl KineticState {
    pub fn new(rho: OccupationFunction) -> Self {
        KineticState { rho, tau: 0.0 }
    }
}

fn sup(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

fn axpy(x: &[f64], h: f64, k: &[f64]) -> Vec<f64> {
    x.iter().zip(k).map(|(a, b)| a + h * b).collect()
}

/// One RK4 step from `rho` given `k1 = C[rho]`.
fn rk4(kernel: &CollisionKernel, rho: &[f64], k1: &[f64], h: f64) -> Result<OccupationFunction> {
    let k2 = kernel.apply(&axpy(rho, 0.5 * h, k1));
    let k3 = kernel.apply(&axpy(rho, 0.5 * h, &k2));
    let k4 = kernel.apply(&axpy(rho, h, &k3));
    let next: Vec<f64> = (0..rho.len())
        .map(|i| rho[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
        .collect();
    let excursion = next.iter().fold(0.0f64, |m, v| m.max(-v).max(v - 1.0));
    OccupationFunction::clamped(next).map_err(|_| Error::StepTooLarge { dtau: h, excursion })
}

/// Advance by one fixed RK4 step of size `dtau`.
pub fn step(state: &KineticState, dtau: f64, kernel: &CollisionKernel) -> Result<KineticState> {
    if !(dtau.is_finite() && dtau > 0.0) {
        return Err(Error::InvalidParameter(format!("step size must be positive, got {dtau}")));
    }
    if state.rho.len() != kernel.grid().len() {
        return Err(Error::DimensionMismatch { expected: kernel.grid().len(), got: state.rho.len() });
    }
    let k1 = kernel.apply(state.rho.values());
    let rho = rk4(kernel, state.rho.values(), &k1, dtau)?;
    Ok(KineticState { rho, tau: state.tau + dtau })
}

#[derive(Clone, Copy, Debug)]
pub struct StationaryOptions {
    /// Stop once `||C[rho]||_inf` drops below this.
    pub tol: f64,
    pub tau_max: f64,
    pub dtau: f64,
    /// Record a checkpoint every this many steps (0: only first and last).
    pub checkpoint_every: usize,
    /// Retries with a halved step when a step leaves `[0, 1]`.
    pub max_halvings: u32,
}

impl Default for StationaryOptions {
    fn default() -> Self {
        StationaryOptions { tol: 1e-10, tau_max: 50.0, dtau: 0.01, checkpoint_every: 10, max_halvings: 20 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub tau: f64,
    pub entropy: f64,
    pub number: f64,
    pub energy: f64,
    pub residual: f64,
    pub beta: Option<f64>,
    pub mu: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StationaryRun {
    pub rho: OccupationFunction,
    pub tau: f64,
    pub converged: bool,
    /// `||C[rho]||_inf` at the returned occupation.
    pub residual: f64,
    pub steps: usize,
    pub halvings: usize,
    /// Smallest per-step entropy change seen (negative values break the H-theorem).
    pub min_entropy_increment: f64,
    /// Largest `|N - N0| / N0` over the trajectory.
    pub number_drift: f64,
    /// Largest `|E - E0| / sum |eps| rho0` over the trajectory.
    pub energy_drift: f64,
    pub trajectory: Vec<Checkpoint>,
}

fn checkpoint(rho: &OccupationFunction, tau: f64, residual: f64, energies: &[f64]) -> Result<Checkpoint> {
    let (number, energy) = conserved_charges(rho, energies)?;
    let fit = fit_fermi_dirac(rho, energies).ok();
    Ok(Checkpoint {
        tau,
        entropy: entropy_density(rho),
        number,
        energy,
        residual,
        beta: fit.map(|f| f.beta),
        mu: fit.map(|f| f.mu),
    })
}

/// Integrate the kinetic flow until the collision term falls below `tol` or
/// `tau_max` is reached. Non-convergence is reported in the result, not as an error.
pub fn evolve_to_stationary(rho0: &OccupationFunction, kernel: &CollisionKernel, opts: StationaryOptions) -> Result<StationaryRun> {
    if opts.tol.is_nan() || opts.tol <= 0.0 {
        return Err(Error::InvalidParameter(format!("tolerance must be positive, got {}", opts.tol)));
    }
    if !(opts.dtau > 0.0 && opts.tau_max >= 0.0) {
        return Err(Error::InvalidParameter("step size must be positive and tau_max nonnegative".into()));
    }
    if rho0.len() != kernel.grid().len() {
        return Err(Error::DimensionMismatch { expected: kernel.grid().len(), got: rho0.len() });
    }
    let energies = kernel.energies();
    let (n0, e0) = conserved_charges(rho0, energies)?;
    let e_scale = rho0.values().iter().zip(energies).map(|(r, e)| r * e.abs()).sum::<f64>().max(f64::MIN_POSITIVE);
    let n_scale = n0.max(f64::MIN_POSITIVE);

    let mut rho = rho0.clone();
    let mut tau = 0.0;
    let mut entropy = entropy_density(&rho);
    let mut k1 = kernel.apply(rho.values());
    let mut residual = sup(&k1);
    let mut run = StationaryRun {
        rho: rho0.clone(),
        tau: 0.0,
        converged: false,
        residual,
        steps: 0,
        halvings: 0,
        min_entropy_increment: f64::INFINITY,
        number_drift: 0.0,
        energy_drift: 0.0,
        trajectory: vec![checkpoint(&rho, 0.0, residual, energies)?],
    };

    while residual >= opts.tol && tau < opts.tau_max {
        let mut h = opts.dtau.min(opts.tau_max - tau);
        let mut halvings = 0;
        let next = loop {
            match rk4(kernel, rho.values(), &k1, h) {
                Ok(next) => break next,
                Err(e @ Error::StepTooLarge { .. }) => {
                    if halvings == opts.max_halvings {
                        return Err(e);
                    }
                    halvings += 1;
                    h *= 0.5;
                }
                Err(e) => return Err(e),
            }
        };
        run.halvings += halvings as usize;
        rho = next;
        tau += h;
        run.steps += 1;

        let s = entropy_density(&rho);
        run.min_entropy_increment = run.min_entropy_increment.min(s - entropy);
        entropy = s;
        let (n, e) = conserved_charges(&rho, energies)?;
        run.number_drift = run.number_drift.max((n - n0).abs() / n_scale);
        run.energy_drift = run.energy_drift.max((e - e0).abs() / e_scale);

        k1 = kernel.apply(rho.values());
        residual = sup(&k1);
        if opts.checkpoint_every > 0 && run.steps.is_multiple_of(opts.checkpoint_every) {
            run.trajectory.push(checkpoint(&rho, tau, residual, energies)?);
        }
    }
    if run.trajectory.last().map(|c| c.tau) != Some(tau) {
        run.trajectory.push(checkpoint(&rho, tau, residual, energies)?);
    }
    run.converged = residual < opts.tol;
    if !run.converged {
        log::warn!("kinetic flow not stationary at tau = {tau}: ||C|| = {residual:e}");
    }
    run.rho = rho;
    run.tau = tau;
    run.residual = residual;
    Ok(run)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kinetic::{fermi_dirac, solve_beta_mu, Dispersion, MomentumGrid, ShellMode};
    use crate::rng;

    fn kernel(side: usize) -> CollisionKernel {
        let grid = MomentumGrid::new(2, side).unwrap();
        CollisionKernel::new(grid, Dispersion::Quadratic { hopping: 1.0 }, ShellMode::Exact).unwrap()
    }

    #[test]
    fn step_matches_collision_term_to_first_order() {
        let k = kernel(4);
        let rho = OccupationFunction::random(16, &mut rng::seeded(1));
        let c = k.apply(rho.values());
        let state = KineticState::new(rho.clone());
        let err = |h: f64| {
            let next = step(&state, h, &k).unwrap();
            next.rho.values().iter().zip(rho.values()).zip(&c).fold(0.0f64, |m, ((a, b), c)| m.max(((a - b) / h - c).abs()))
        };
        let (e3, e4) = (err(1e-3), err(1e-4));
        assert!(e3 < 1e-1 && e4 < e3 / 5.0, "{e3:e} {e4:e}");
    }

    #[test]
    fn fourth_order_convergence() {
        let k = kernel(4);
        let rho0 = OccupationFunction::random(16, &mut rng::seeded(2));
        let run = |h: f64| {
            let mut s = KineticState::new(rho0.clone());
            for _ in 0..(0.2 / h).round() as usize {
                s = step(&s, h, &k).unwrap();
            }
            s.rho
        };
        let (a, b, c) = (run(0.01), run(0.005), run(0.0025));
        let ratio = a.max_abs_diff(&b) / b.max_abs_diff(&c);
        assert!((ratio - 16.0).abs() < 2.0, "Richardson ratio {ratio}");
    }

    #[test]
    fn stationary_input_is_fixed() {
        let k = kernel(6);
        let fd = fermi_dirac(0.5, 2.0, k.energies());
        let next = step(&KineticState::new(fd.clone()), 0.01, &k).unwrap();
        assert!(next.rho.max_abs_diff(&fd) < 1e-13);
        let run = evolve_to_stationary(&fd, &k, StationaryOptions::default()).unwrap();
        assert!(run.converged && run.tau == 0.0 && run.steps == 0);
    }

    #[test]
    fn step_conserves_number() {
        let k = kernel(6);
        let rho = OccupationFunction::random(36, &mut rng::seeded(4));
        let next = step(&KineticState::new(rho.clone()), 0.01, &k).unwrap();
        let (n0, _) = conserved_charges(&rho, k.energies()).unwrap();
        let (n1, _) = conserved_charges(&next.rho, k.energies()).unwrap();
        assert!((n1 - n0).abs() < 1e-12 * n0);
    }

    #[test]
    fn oversized_step_is_rejected() {
        let k = kernel(6);
        let rho = OccupationFunction::random(36, &mut rng::seeded(4));
        assert!(matches!(step(&KineticState::new(rho), 5.0, &k), Err(Error::StepTooLarge { .. })));
    }

    #[test]
    fn random_start_relaxes_to_fermi_dirac() {
        let k = kernel(6);
        let rho0 = OccupationFunction::random(36, &mut rng::seeded(8));
        let run = evolve_to_stationary(&rho0, &k, StationaryOptions::default()).unwrap();
        assert!(run.converged, "{run:?}");
        assert!(run.min_entropy_increment >= -1e-12);
        let fit = fit_fermi_dirac(&run.rho, k.energies()).unwrap();
        assert!(fit.max_residual < 1e-6);
        let (n, e) = conserved_charges(&rho0, k.energies()).unwrap();
        let sol = solve_beta_mu(n, e, k.energies()).unwrap();
        assert!((sol.beta - fit.beta).abs() < 1e-5 * sol.beta.abs().max(1.0));
        assert!((sol.beta_mu - fit.beta_mu).abs() < 1e-5 * sol.beta_mu.abs().max(1.0));
    }
}
