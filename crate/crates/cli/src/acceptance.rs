//! The acceptance suite: nine property checks at fixed sizes and tolerances.
//! Each criterion returns a [`CriterionResult`]; errors count as failures.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::time::Instant;

use kmslab_core::clustering::{
    centered_number, correlator_profile, fit_decay_min, fit_lr_cone, lr_sweep, multi_cluster_bound,
    multi_cluster_defect,
};
use kmslab_core::commuting::defect_table;
use kmslab_core::kinetic::{
    collision_operator, conserved_charges, evolve_to_stationary, fit_fermi_dirac, solve_beta_mu, CollisionKernel,
    Dispersion, MomentumGrid, OccupationFunction, ShellMode, StationaryOptions, StationaryRun,
};
use kmslab_core::kms::{kms_line_test, kms_two_point_check};
use kmslab_core::lindblad::{
    entropy_rate_check, entropy_trajectory, min_increment, pairing_jump, EvolveMethod, JumpOperator, LindbladForm,
    LindbladGenerator, Propagator,
};
use kmslab_core::linalg;
use kmslab_core::operator_core::{
    build_hamiltonian, gibbs_state, Boundary, DensityMatrix, Dynamics, FockOperator, HamiltonianParts,
    HamiltonianSpec, LatticeSpec,
};
use kmslab_core::par;
use kmslab_core::rng;
use kmslab_core::scaling::{
    invariant_mean, invariant_mean_quadrature, time_averaged_operator, vanhove_compare, MeanHorizon, ScalingPlan,
};
use kmslab_core::Result;
use serde::Serialize;

pub const KINETIC_RUNS: usize = 100;
pub const KINETIC_SIDE: usize = 8;
pub const KINETIC_DTAU: f64 = 0.01;
pub const KINETIC_TAU_MAX: f64 = 50.0;
pub const KINETIC_BUDGET_SECONDS: f64 = 300.0;
pub const LINDBLAD_RUNS: usize = 200;
pub const LR_BUDGET_SECONDS: f64 = 900.0;

#[derive(Clone, Debug, Serialize)]
pub struct CriterionResult {
    pub id: u8,
    pub name: String,
    pub passed: bool,
    pub detail: String,
    pub metrics: BTreeMap<String, f64>,
    /// Wall time; the only field that differs between identical runs.
    pub seconds: f64,
}

impl CriterionResult {
    pub fn line(&self) -> String {
        format!(
            "criterion {} [{}]: {} ({}; {:.1} s)",
            self.id,
            self.name,
            if self.passed { "PASS" } else { "FAIL" },
            self.detail,
            self.seconds
        )
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Verdict {
    pub all_passed: bool,
    pub passed: usize,
    pub criteria: Vec<CriterionResult>,
}

impl Verdict {
    pub fn new(criteria: Vec<CriterionResult>) -> Self {
        let passed = criteria.iter().filter(|c| c.passed).count();
        Verdict { all_passed: passed == criteria.len(), passed, criteria }
    }
}

struct Checked {
    passed: bool,
    detail: String,
    metrics: BTreeMap<String, f64>,
}

fn metrics<const N: usize>(pairs: [(&str, f64); N]) -> BTreeMap<String, f64> {
    pairs.into_iter().map(|(k, v)| (k.to_string(), v)).collect()
}

fn timed(id: u8, name: &str, f: impl FnOnce() -> Result<Checked>) -> CriterionResult {
    let start = Instant::now();
    let out = f();
    let seconds = start.elapsed().as_secs_f64();
    match out {
        Ok(c) => CriterionResult { id, name: name.into(), passed: c.passed, detail: c.detail, metrics: c.metrics, seconds },
        Err(e) => CriterionResult {
            id,
            name: name.into(),
            passed: false,
            detail: format!("error: {e}"),
            metrics: BTreeMap::new(),
            seconds,
        },
    }
}

fn ring(n: usize) -> Result<(LatticeSpec, HamiltonianParts)> {
    let l = LatticeSpec::chain(n, Boundary::Periodic)?;
    Ok((l, build_hamiltonian(l, &HamiltonianSpec::default())?))
}

pub fn kinetic_kernel() -> Result<CollisionKernel> {
    let grid = MomentumGrid::new(2, KINETIC_SIDE)?;
    CollisionKernel::new(grid, Dispersion::Quadratic { hopping: 1.0 }, ShellMode::Exact)
}

/// The 100 random relaxations shared by criteria 1 and 2, with the
/// initial occupation of each run.
pub fn kinetic_batch(seed: u64, kernel: &CollisionKernel) -> Result<Vec<(OccupationFunction, StationaryRun)>> {
    let opts = StationaryOptions { tau_max: KINETIC_TAU_MAX, dtau: KINETIC_DTAU, checkpoint_every: 0, ..Default::default() };
    par::map_range(KINETIC_RUNS, |i| {
        let rho0 = OccupationFunction::random(kernel.grid().len(), &mut rng::seeded(seed.wrapping_add(i as u64)));
        let run = evolve_to_stationary(&rho0, kernel, opts)?;
        Ok((rho0, run))
    })
    .into_iter()
    .collect()
}

pub fn criterion_1(seed: u64) -> CriterionResult {
    timed(1, "kinetic H-theorem", || {
        let start = Instant::now();
        let kernel = kinetic_kernel()?;
        let runs = kinetic_batch(seed, &kernel)?;
        let elapsed = start.elapsed().as_secs_f64();
        let worst = runs.iter().map(|(_, r)| r.min_entropy_increment).fold(f64::INFINITY, f64::min);
        let steps: usize = runs.iter().map(|(_, r)| r.steps).sum();
        let passed = worst >= -1e-12 && elapsed < KINETIC_BUDGET_SECONDS;
        Ok(Checked {
            passed,
            detail: format!("{} runs on 8x8, worst entropy step {worst:e} (>= -1e-12), {elapsed:.1} s (< 300 s)", runs.len()),
            metrics: metrics([("worst_entropy_step", worst), ("runtime_seconds", elapsed), ("total_steps", steps as f64)]),
        })
    })
}

pub fn criterion_2(seed: u64) -> CriterionResult {
    timed(2, "kinetic KMS fixed point", || {
        let kernel = kinetic_kernel()?;
        let runs = kinetic_batch(seed, &kernel)?;
        let e = kernel.energies();
        let (mut residual, mut logit, mut beta_err, mut mu_err, mut drift) = (0.0f64, 0.0f64, 0.0f64, 0.0f64, 0.0f64);
        let mut unconverged = 0;
        for (rho0, run) in &runs {
            if !run.converged {
                unconverged += 1;
            }
            residual = residual.max(run.residual);
            let fit = fit_fermi_dirac(&run.rho, e)?;
            let (n, en) = conserved_charges(rho0, e)?;
            let want = solve_beta_mu(n, en, e)?;
            logit = logit.max(fit.max_residual);
            beta_err = beta_err.max((fit.beta - want.beta).abs());
            mu_err = mu_err.max((fit.mu - want.mu).abs());
            drift = drift.max(run.number_drift).max(run.energy_drift);
        }
        let passed = unconverged == 0 && residual < 1e-10 && logit < 1e-6 && beta_err < 1e-5 && mu_err < 1e-5 && drift < 1e-9;
        Ok(Checked {
            passed,
            detail: format!(
                "{unconverged} unconverged, max ||C|| {residual:e}, logit residual {logit:e}, |beta err| {beta_err:e}, |mu err| {mu_err:e}, drift {drift:e}"
            ),
            metrics: metrics([
                ("unconverged", unconverged as f64),
                ("max_residual", residual),
                ("max_logit_residual", logit),
                ("max_beta_error", beta_err),
                ("max_mu_error", mu_err),
                ("max_charge_drift", drift),
            ]),
        })
    })
}

pub const LINDBLAD_DTAU: f64 = 0.02;
pub const LINDBLAD_STEPS: usize = 50;

pub fn criterion_3(seed: u64) -> CriterionResult {
    timed(3, "Lindblad entropy monotonicity", || {
        let worst: Vec<Result<f64>> = par::map_range(LINDBLAD_RUNS, |i| {
            let n = 2 + i % 3;
            let mut r = rng::seeded(seed.wrapping_add(i as u64));
            let l = LatticeSpec::chain(n, Boundary::Open)?;
            let w = JumpOperator::selfadjoint(FockOperator::from_matrix(l, rng::hermitian(&mut r, l.dim()))?)?;
            let g = LindbladGenerator::new(w, LindbladForm::Literal)?;
            let step = Propagator::new(&g, LINDBLAD_DTAU, EvolveMethod::Dephasing)?;
            let rho0 = DensityMatrix::new(rng::density_matrix(&mut r, l.dim()))?;
            Ok(min_increment(&entropy_trajectory(&rho0, &step, LINDBLAD_STEPS)?))
        });
        let worst = worst.into_iter().collect::<Result<Vec<_>>>()?.into_iter().fold(f64::INFINITY, f64::min);
        let mut fd = 0.0f64;
        let mut min_rate = f64::INFINITY;
        for n in 2..=4 {
            for k in 0..10u64 {
                let mut r = rng::seeded(seed.wrapping_mul(31).wrapping_add(100 * n as u64 + k));
                let l = LatticeSpec::chain(n, Boundary::Open)?;
                let w = pairing_jump(&mut r, l)?;
                let p = rng::probability_vector(&mut r, l.dim());
                let c = entropy_rate_check(&w, &p, 0.05, 1e-5)?;
                fd = fd.max(c.relative_error);
                min_rate = min_rate.min(c.formula);
            }
        }
        let passed = worst >= -1e-10 && fd < 1e-6 && min_rate >= 0.0;
        Ok(Checked {
            passed,
            detail: format!(
                "{LINDBLAD_RUNS} runs, worst entropy step {worst:e} (>= -1e-10); rate formula vs central difference {fd:e} (< 1e-6)"
            ),
            metrics: metrics([("worst_entropy_step", worst), ("max_fd_relative_error", fd), ("min_rate", min_rate)]),
        })
    })
}

/// `a_0 + a_0^*`, the probe used for the line test.
fn line_probe(l: LatticeSpec) -> Result<FockOperator> {
    let a = FockOperator::annihilation(l, 0)?;
    Ok(&a + &a.adjoint())
}

pub fn criterion_4(_seed: u64) -> CriterionResult {
    timed(4, "KMS line test", || {
        let (l, p) = ring(6)?;
        let h = p.unperturbed();
        let probe = line_probe(l)?;
        let gibbs = gibbs_state(&h, 1.0)?;
        let t = kms_line_test(&gibbs, &h, &probe)?;
        let kinetic = gibbs_state(&p.kinetic, 1.0)?;
        let pinched = DensityMatrix::new(
            time_averaged_operator(&h, &FockOperator::from_matrix(l, kinetic.into_matrix())?)?.into_matrix(),
        )?;
        let off = kms_line_test(&pinched, &h, &probe)?;
        let a0 = FockOperator::annihilation(l, 0)?;
        let right = kms_two_point_check(&gibbs, &h, &a0, &a0.adjoint(), 1.0)?;
        let wrong = kms_two_point_check(&gibbs, &h, &a0, &a0.adjoint(), 0.5)?;
        let beta_err = (t.beta - 1.0).abs();
        let passed = beta_err < 1e-10
            && t.line_residual < 1e-10
            && off.line_residual > 1e-2
            && right.relative < 1e-10
            && wrong.relative > 1e-3;
        Ok(Checked {
            passed,
            detail: format!(
                "Gibbs: |beta_hat - 1| {beta_err:e}, residual {:e}; pinched Gibbs(K): residual {:.4}; two-point {:e} at beta 1, {:.4} at 0.5",
                t.line_residual, off.line_residual, right.relative, wrong.relative
            ),
            metrics: metrics([
                ("beta_error", beta_err),
                ("gibbs_line_residual", t.line_residual),
                ("pinched_line_residual", off.line_residual),
                ("two_point_matched", right.relative),
                ("two_point_mismatched", wrong.relative),
            ]),
        })
    })
}

pub fn criterion_5(_seed: u64) -> CriterionResult {
    timed(5, "commuting-derivation identity", || {
        let gammas = [0.5, 1.0, 2.0, 4.0];
        let (_, p) = ring(4)?;
        let rows = defect_table(&p.kinetic, &p.interaction, &gammas, &[1.0])?;
        let mut scaling_err = 0.0f64;
        let mut order_err = 0.0f64;
        let mut at_one = 0.0f64;
        for r in &rows {
            let scale = r.base_defect.max(1.0);
            scaling_err = scaling_err.max((r.commutator_defect - (1.0 / r.gamma - r.gamma).abs() * r.base_defect).abs() / scale);
            order_err = order_err.max((r.commutator_defect - r.nested_defect).abs() / scale);
            if r.gamma == 1.0 {
                at_one = at_one.max(r.commutator_defect);
            }
        }
        let mut m = metrics([("scaling_error", scaling_err), ("order_error", order_err), ("defect_at_one", at_one)]);
        let mut trend = Vec::new();
        for n in [4, 6, 8] {
            let (_, p) = ring(n)?;
            let row = defect_table(&p.kinetic, &p.interaction, &[2.0], &[1.0])?.into_iter().next().expect("one row per probe");
            m.insert(format!("centrality_n{n}"), row.centrality_defect);
            m.insert(format!("invariance_n{n}"), row.invariance_defect);
            trend.push(format!("N={n}: {:.4}/{:.4}", row.centrality_defect, row.invariance_defect));
        }
        let passed = scaling_err < 1e-12 && order_err < 1e-12 && at_one == 0.0;
        Ok(Checked {
            passed,
            detail: format!(
                "|defect - |1/g - g| base| {scaling_err:e}, nested vs direct {order_err:e}, defect(1) = {at_one}; centrality/invariance {}",
                trend.join(", ")
            ),
            metrics: m,
        })
    })
}

pub fn criterion_6(_seed: u64) -> CriterionResult {
    timed(6, "spatial clustering", || {
        let (l, p) = ring(12)?;
        let rho = gibbs_state(&p.unperturbed(), 1.0)?;
        let q = centered_number(l, 0)?;
        let profile = correlator_profile(&rho, &q, &q, ["n-1/2", "n-1/2"])?;
        let fit = fit_decay_min(&profile[1..4], 3)?;
        let three = multi_cluster_defect(&rho, &[q.clone(), q.clone(), q.clone()], 3)?;
        let bound = multi_cluster_bound(&fit, 3, 3);
        let passed = fit.rate > 0.0 && fit.goodness > 0.95 && three <= 3.0 * bound;
        Ok(Checked {
            passed,
            detail: format!(
                "M = {:.6}, K = {:.6}, goodness {:.5} (> 0.95); three-point defect {three:e} vs 3 x bound {:e}",
                fit.rate,
                fit.prefactor,
                fit.goodness,
                3.0 * bound
            ),
            metrics: metrics([
                ("rate", fit.rate),
                ("prefactor", fit.prefactor),
                ("goodness", fit.goodness),
                ("three_point_defect", three),
                ("three_point_bound", bound),
            ]),
        })
    })
}

pub fn criterion_7(_seed: u64) -> CriterionResult {
    timed(7, "Lieb-Robinson cone", || {
        let start = Instant::now();
        let (l, p) = ring(10)?;
        let dynamics = Dynamics::new(&p.unperturbed())?;
        let q = centered_number(l, 0)?;
        let ts: Vec<f64> = (1..=8).map(|k| 0.25 * k as f64).collect();
        let samples = lr_sweep(&q, &q, &[1, 2, 3, 4, 5], &ts, &dynamics)?;
        let fit = fit_lr_cone(&samples)?;
        let norm = q.op_norm()?;
        let violations = fit.causality_violations(&samples, norm * norm);
        let elapsed = start.elapsed().as_secs_f64();
        let passed = !fit.indeterminate && fit.mu > 0.0 && violations == 0 && elapsed < LR_BUDGET_SECONDS;
        Ok(Checked {
            passed,
            detail: format!(
                "mu = {:.6} (> 0), c = {:.6}, {violations} samples outside the cone above e^-3 ||A|| ||B||, {elapsed:.1} s (< 900 s)",
                fit.mu, fit.c
            ),
            metrics: metrics([
                ("mu", fit.mu),
                ("c", fit.c),
                ("violations", violations as f64),
                ("runtime_seconds", elapsed),
            ]),
        })
    })
}

pub fn criterion_8(_seed: u64) -> CriterionResult {
    timed(8, "scaling-limit trend", || {
        let report = vanhove_compare(&ScalingPlan::default())?;
        let mut m = metrics([("max_dual_gap", report.max_dual_gap)]);
        let mut parts = Vec::new();
        for (name, deltas) in report.reference_deltas() {
            for (lambda, d) in report.plan.lambdas.iter().zip(&deltas) {
                m.insert(format!("delta_{name}_lambda{lambda}"), *d);
            }
            let list: Vec<String> = deltas.iter().map(|d| format!("{d:.3e}")).collect();
            parts.push(format!("{name}: [{}]", list.join(", ")));
        }
        let passed = report.trend_holds && report.max_dual_gap < 1e-11;
        Ok(Checked {
            passed,
            detail: format!(
                "Delta over lambda = 0.4, 0.2, 0.1: {}; strictly decreasing: {}; dual gap {:e}",
                parts.join("; "),
                report.trend_holds,
                report.max_dual_gap
            ),
            metrics: m,
        })
    })
}

/// Collision term straight from the definition: a quadruple loop over
/// momenta on a 2D grid with row-major layout `k = x + side * y`.
pub fn brute_force_collision(side: usize, eps: &[f64], rho: &[f64], mode: ShellMode) -> Vec<f64> {
    let m = side * side;
    let comp = |k: usize| (k % side, k / side);
    let mut out = vec![0.0; m];
    for p1 in 0..m {
        for p2 in 0..m {
            for p3 in 0..m {
                for p4 in 0..m {
                    let (a, b, c, d) = (comp(p1), comp(p2), comp(p3), comp(p4));
                    if !(a.0 + b.0 + 2 * side - c.0 - d.0).is_multiple_of(side) || !(a.1 + b.1 + 2 * side - c.1 - d.1).is_multiple_of(side) {
                        continue;
                    }
                    let de = eps[p1] + eps[p2] - eps[p3] - eps[p4];
                    let shell = match mode {
                        ShellMode::Exact => {
                            if de.abs() < 1e-9 {
                                1.0
                            } else {
                                0.0
                            }
                        }
                        ShellMode::Broadened { eta } => (-de * de / (2.0 * eta * eta)).exp() / (eta * (2.0 * PI).sqrt()),
                    };
                    let (r1, r2, r3, r4) = (rho[p1], rho[p2], rho[p3], rho[p4]);
                    out[p1] += shell * (r3 * r4 * (1.0 - r1) * (1.0 - r2) - r1 * r2 * (1.0 - r3) * (1.0 - r4));
                }
            }
        }
    }
    out
}

fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()))
}

pub fn criterion_9(seed: u64) -> CriterionResult {
    timed(9, "oracle equivalence", || {
        let mut collision = 0.0f64;
        let mut r = rng::seeded(seed);
        for side in 2..=4 {
            for band in [Dispersion::Quadratic { hopping: 1.0 }, Dispersion::Cosine { hopping: 1.0 }] {
                for mode in [ShellMode::Exact, ShellMode::Broadened { eta: 0.3 }] {
                    let kernel = CollisionKernel::new(MomentumGrid::new(2, side)?, band.clone(), mode)?;
                    let rho = OccupationFunction::random(side * side, &mut r);
                    let fast = collision_operator(&rho, &kernel)?;
                    let slow = brute_force_collision(side, kernel.energies(), rho.values(), mode);
                    collision = collision.max(max_diff(&fast, &slow));
                }
            }
        }

        let l = LatticeSpec::chain(3, Boundary::Open)?;
        let mut rk4 = 0.0f64;
        let w = FockOperator::from_matrix(l, rng::hermitian(&mut r, 8))?;
        let h = FockOperator::from_matrix(l, rng::hermitian(&mut r, 8))?;
        let general = FockOperator::from_matrix(l, rng::complex_gaussian_matrix(&mut r, 8))?;
        let generators = [
            LindbladGenerator::new(JumpOperator::selfadjoint(w)?, LindbladForm::Literal)?.with_hamiltonian(h)?,
            LindbladGenerator::new(JumpOperator::supplied(general), LindbladForm::Gksl)?,
        ];
        for g in &generators {
            let rho = rng::density_matrix(&mut r, 8);
            let exact = Propagator::new(g, 0.5, EvolveMethod::ExactExponential)?.apply_matrix(&rho);
            let stepped = Propagator::new(g, 0.5, EvolveMethod::Rk4 { dtau: 1e-3 })?.apply_matrix(&rho);
            rk4 = rk4.max(linalg::max_abs_diff(&exact, &stepped));
        }

        let (l4, p) = ring(4)?;
        let h0 = p.unperturbed();
        let n0 = FockOperator::number(l4, 0)?;
        let rho0 = DensityMatrix::new(rng::density_matrix(&mut r, 16))?;
        let closed = invariant_mean(&rho0, &h0, &n0, MeanHorizon::Finite(50.0))?;
        let quad = invariant_mean_quadrature(&rho0, &h0, &n0, 50.0, 200, 16)?;
        let mean = (closed - quad).norm();

        let passed = collision < 1e-13 && rk4 < 1e-8 && mean < 1e-9;
        Ok(Checked {
            passed,
            detail: format!(
                "collision vs brute force {collision:e} (< 1e-13), rk4 vs exponential {rk4:e} (< 1e-8), quadrature vs closed form {mean:e} (< 1e-9)"
            ),
            metrics: metrics([("collision", collision), ("rk4", rk4), ("invariant_mean", mean)]),
        })
    })
}

pub type Criterion = fn(u64) -> CriterionResult;

pub const CRITERIA: [Criterion; 9] =
    [criterion_1, criterion_2, criterion_3, criterion_4, criterion_5, criterion_6, criterion_7, criterion_8, criterion_9];

pub fn run_all(seed: u64) -> Vec<CriterionResult> {
    CRITERIA.iter().map(|c| c(seed)).collect()
}
