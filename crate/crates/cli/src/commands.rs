//! One function per subcommand. Each writes its artifacts through an
//! [`Emitter`] and returns the exit status it earned.

use kmslab_core::clustering::{
    centered_number, correlator_profile, fit_decay_min, fit_lr_cone, lr_sweep, multi_cluster_bound,
    multi_cluster_defect, ConeFit, DecayFit,
};
use kmslab_core::commuting::{defect_table, invariant_state_family, DefectRow};
use kmslab_core::kinetic::{
    conserved_charges, evolve_to_stationary, fit_fermi_dirac, solve_beta_mu, CollisionKernel, Dispersion,
    FermiDiracFit, MomentumGrid, OccupationFunction, ShellMode, StationaryOptions,
};
use kmslab_core::kms::{fit_beta, kms_line_test, kms_two_point_check, BetaFit, TwoPointCheck};
use kmslab_core::linalg::Spectrum;
use kmslab_core::lindblad::{
    build_w, stationary_states, EvolveMethod, LindbladForm, LindbladGenerator, Propagator,
};
use kmslab_core::operator_core::dynamics::gibbs_from_spectrum;
use kmslab_core::operator_core::{
    build_hamiltonian, gibbs_state, Boundary, DensityMatrix, Dynamics, FockOperator, HamiltonianParts, LatticeSpec,
};
use kmslab_core::rng;
use kmslab_core::scaling::{time_averaged_operator, vanhove_compare, vanhove_trace, Observable, ScalingPlan};
use ndarray::Array2;
use num_complex::Complex64;
use serde::Serialize;

use crate::acceptance;
use crate::config::{Band, RunConfig, StateKind};
use crate::exit;
use crate::output::{cell, Emitter};
use crate::CliError;

/// Largest chain for which stationary states are extracted (the superoperator has side `4^N`).
pub const STATIONARY_MAX_SITES: usize = 4;

pub struct Outcome {
    pub status: u8,
    pub summary: String,
}

fn ok(summary: String) -> Outcome {
    Outcome { status: exit::PASS, summary }
}

pub fn run(subcommand: &str, config: &RunConfig) -> Result<Outcome, CliError> {
    match subcommand {
        "kinetic" => kinetic(config),
        "lindblad" => lindblad(config),
        "kms-check" => kms_check(config),
        "commute" => commute(config),
        "cluster" => cluster(config),
        "lr" => lr(config),
        "scaling" => scaling(config),
        "accept" => accept(config),
        other => Err(CliError::Config(format!("unknown subcommand `{other}`"))),
    }
}

fn model(config: &RunConfig) -> Result<(LatticeSpec, HamiltonianParts), CliError> {
    let lattice = LatticeSpec::chain(config.sites, config.boundary)?;
    Ok((lattice, build_hamiltonian(lattice, &config.hamiltonian)?))
}

fn ring(config: &RunConfig) -> Result<(LatticeSpec, HamiltonianParts), CliError> {
    if config.boundary != Boundary::Periodic {
        return Err(CliError::Config("clustering needs boundary = periodic".into()));
    }
    model(config)
}

fn opt(x: Option<f64>) -> String {
    x.map(cell).unwrap_or_default()
}

#[derive(Serialize)]
struct Charges {
    beta: f64,
    mu: f64,
}

#[derive(Serialize)]
struct KineticRunSummary {
    run: usize,
    seed: u64,
    converged: bool,
    tau: f64,
    residual: f64,
    steps: usize,
    halvings: usize,
    min_entropy_increment: f64,
    number_drift: f64,
    energy_drift: f64,
    fit: Option<FermiDiracFit>,
    predicted: Option<Charges>,
}

fn kinetic(config: &RunConfig) -> Result<Outcome, CliError> {
    let grid = MomentumGrid::new(config.grid_dims, config.grid_side)?;
    let band = match config.band {
        Band::Quadratic => Dispersion::Quadratic { hopping: config.hamiltonian.hopping },
        Band::Cosine => Dispersion::Cosine { hopping: config.hamiltonian.hopping },
    };
    let mode = if config.eta > 0.0 { ShellMode::Broadened { eta: config.eta } } else { ShellMode::Exact };
    let kernel = CollisionKernel::new(grid, band, mode)?;
    let opts = StationaryOptions {
        tol: config.tolerances.kinetic,
        tau_max: config.tau_max,
        dtau: config.dtau,
        checkpoint_every: 1,
        ..Default::default()
    };
    let mut rows = Vec::new();
    let mut summaries = Vec::new();
    for run in 0..config.runs.max(1) {
        let seed = config.seed.wrapping_add(run as u64);
        let rho0 = OccupationFunction::random(grid.len(), &mut rng::seeded(seed));
        let result = evolve_to_stationary(&rho0, &kernel, opts)?;
        for c in &result.trajectory {
            rows.push(vec![
                run.to_string(),
                cell(c.tau),
                cell(c.entropy),
                cell(c.number),
                cell(c.energy),
                cell(c.residual),
                opt(c.beta),
                opt(c.mu),
            ]);
        }
        let (n, e) = conserved_charges(&rho0, kernel.energies())?;
        summaries.push(KineticRunSummary {
            run,
            seed,
            converged: result.converged,
            tau: result.tau,
            residual: result.residual,
            steps: result.steps,
            halvings: result.halvings,
            min_entropy_increment: result.min_entropy_increment,
            number_drift: result.number_drift,
            energy_drift: result.energy_drift,
            fit: fit_fermi_dirac(&result.rho, kernel.energies()).ok(),
            predicted: solve_beta_mu(n, e, kernel.energies()).ok().map(|s| Charges { beta: s.beta, mu: s.mu }),
        });
    }
    let mut out = Emitter::new("kinetic", config)?;
    let cols = ["run", "tau", "entropy", "number", "energy", "residual", "beta", "mu"];
    out.csv("kinetic_trajectory.csv", &cols, &rows)?;
    out.json("kinetic.json", &summaries)?;
    out.plot(
        "kinetic_entropy",
        &cols,
        &rows,
        "set xlabel 'tau'\nset ylabel 'entropy density'\nplot '{data}' using 2:3 with lines title 'S(tau)'",
    )?;
    let failed = summaries.iter().filter(|s| !s.converged).count();
    let summary = format!("kinetic: {} run(s), {} not stationary by tau_max = {}", summaries.len(), failed, config.tau_max);
    Ok(Outcome { status: if failed > 0 { exit::NUMERICAL } else { exit::PASS }, summary })
}

/// Trace distance to the nearest Gibbs state of `h` over `beta` in `[-20, 20]`:
/// a coarse scan followed by golden-section refinement.
pub fn nearest_gibbs(rho: &DensityMatrix, spec: &Spectrum) -> Result<(f64, f64), CliError> {
    let dist = |b: f64| -> Result<f64, CliError> { Ok(rho.trace_distance(&gibbs_from_spectrum(spec, b)?)?) };
    let mut best = (f64::INFINITY, 0.0);
    for k in -40..=40 {
        let b = 0.5 * k as f64;
        let d = dist(b)?;
        if d < best.0 {
            best = (d, b);
        }
    }
    let (mut lo, mut hi) = (best.1 - 0.5, best.1 + 0.5);
    let g = 0.5 * (5f64.sqrt() - 1.0);
    for _ in 0..60 {
        let (x1, x2) = (hi - g * (hi - lo), lo + g * (hi - lo));
        if dist(x1)? < dist(x2)? {
            hi = x2;
        } else {
            lo = x1;
        }
    }
    let b = 0.5 * (lo + hi);
    let d = dist(b)?;
    Ok(if d < best.0 { (d, b) } else { best })
}

#[derive(Serialize)]
struct MatrixEntries {
    re: Vec<Vec<f64>>,
    im: Vec<Vec<f64>>,
}

fn entries(m: &Array2<Complex64>) -> MatrixEntries {
    MatrixEntries {
        re: m.rows().into_iter().map(|r| r.iter().map(|z| z.re).collect()).collect(),
        im: m.rows().into_iter().map(|r| r.iter().map(|z| z.im).collect()).collect(),
    }
}

#[derive(Serialize)]
struct LindbladSummary {
    sites: usize,
    epsilon: f64,
    dtau: f64,
    steps: usize,
    entropy_start: f64,
    entropy_end: f64,
    min_entropy_increment: f64,
    max_trace_defect: f64,
    min_eigenvalue: f64,
    stationary_kernel_dimension: Option<usize>,
    stationary_states: Vec<MatrixEntries>,
}

fn lindblad(config: &RunConfig) -> Result<Outcome, CliError> {
    let (lattice, parts) = model(config)?;
    let h0 = parts.unperturbed();
    let spec = Spectrum::of(h0.matrix()).map_err(CliError::from)?;
    let w = build_w(&parts.perturbation, &h0, config.epsilon)?;
    let generator = LindbladGenerator::new(w, LindbladForm::Literal)?;
    let step = Propagator::new(&generator, config.dtau, EvolveMethod::Dephasing)?;
    let mut rho = DensityMatrix::new(rng::density_matrix(&mut rng::seeded(config.seed), lattice.dim()))?;
    let mut rows = Vec::new();
    let mut entropies = Vec::new();
    let mut max_trace_defect = 0.0f64;
    let mut min_eigenvalue = f64::INFINITY;
    for k in 0..=config.steps {
        if k > 0 {
            rho = step.apply(&rho)?;
        }
        let s = rho.entropy()?;
        let ev = rho.eigenvalues()?;
        let lo = ev.iter().copied().fold(f64::INFINITY, f64::min);
        let defect = (kmslab_core::linalg::trace(rho.matrix()).re - 1.0).abs();
        let (dist, beta) = nearest_gibbs(&rho, &spec)?;
        max_trace_defect = max_trace_defect.max(defect);
        min_eigenvalue = min_eigenvalue.min(lo);
        entropies.push(s);
        rows.push(vec![cell(k as f64 * config.dtau), cell(s), cell(defect), cell(lo), cell(dist), cell(beta)]);
    }
    let (kernel_dim, states) = if config.sites <= STATIONARY_MAX_SITES {
        let set = stationary_states(&generator)?;
        (Some(set.kernel_dimension), set.states.iter().map(|s| entries(s.matrix())).collect())
    } else {
        (None, Vec::new())
    };
    let summary = LindbladSummary {
        sites: config.sites,
        epsilon: config.epsilon,
        dtau: config.dtau,
        steps: config.steps,
        entropy_start: entropies[0],
        entropy_end: *entropies.last().unwrap_or(&entropies[0]),
        min_entropy_increment: kmslab_core::lindblad::min_increment(&entropies),
        max_trace_defect,
        min_eigenvalue,
        stationary_kernel_dimension: kernel_dim,
        stationary_states: states,
    };
    let mut out = Emitter::new("lindblad", config)?;
    let cols = ["tau", "entropy", "trace_defect", "min_eigenvalue", "gibbs_distance", "gibbs_beta"];
    out.csv("lindblad_trace.csv", &cols, &rows)?;
    out.json("lindblad.json", &summary)?;
    out.plot(
        "lindblad_entropy",
        &cols,
        &rows,
        "set xlabel 'tau'\nplot '{data}' using 1:2 with lines title 'S', '' using 1:5 with lines title 'distance to Gibbs'",
    )?;
    let line = format!(
        "lindblad: S {:.6} -> {:.6}, min step {:e}, stationary kernel {}",
        summary.entropy_start,
        summary.entropy_end,
        summary.min_entropy_increment,
        kernel_dim.map_or("not computed".into(), |d| d.to_string())
    );
    Ok(ok(line))
}

fn invariant_state(config: &RunConfig, parts: &HamiltonianParts) -> Result<DensityMatrix, CliError> {
    let h0 = parts.unperturbed();
    Ok(match config.state {
        StateKind::Gibbs => gibbs_state(&h0, config.beta)?,
        StateKind::Pinched => {
            let g = gibbs_state(&parts.kinetic, config.beta)?;
            let op = FockOperator::from_matrix(h0.lattice(), g.into_matrix())?;
            DensityMatrix::new(time_averaged_operator(&h0, &op)?.into_matrix())?
        }
        StateKind::Commuting => {
            invariant_state_family(&parts.kinetic, &parts.interaction, config.gammas[0], config.beta)?.rho
        }
    })
}

/// `a_0 + a_0^*`: couples sectors differing by one particle.
pub fn line_probe(lattice: LatticeSpec) -> Result<FockOperator, CliError> {
    let a = FockOperator::annihilation(lattice, 0)?;
    Ok(&a + &a.adjoint())
}

#[derive(Serialize)]
struct KmsVerdict {
    state: StateKind,
    beta_hat: f64,
    line_residual: f64,
    beta_indeterminate: bool,
    regularization: Option<f64>,
    two_point: TwoPointCheck,
    fit: BetaFit,
    kms: bool,
}

fn kms_check(config: &RunConfig) -> Result<Outcome, CliError> {
    let (lattice, parts) = model(config)?;
    let h0 = parts.unperturbed();
    let rho = invariant_state(config, &parts)?;
    let line = kms_line_test(&rho, &h0, &line_probe(lattice)?)?;
    let a0 = FockOperator::annihilation(lattice, 0)?;
    let two_point = kms_two_point_check(&rho, &h0, &a0, &a0.adjoint(), config.beta)?;
    let fit = fit_beta(&rho, &h0)?;
    let tol = config.tolerances.kms;
    let verdict = KmsVerdict {
        state: config.state,
        beta_hat: line.beta,
        line_residual: line.line_residual,
        beta_indeterminate: line.beta_indeterminate,
        regularization: line.regularization,
        two_point,
        fit,
        kms: line.line_residual < tol && two_point.relative < tol,
    };
    let rows: Vec<Vec<String>> =
        line.points.iter().map(|p| vec![cell(p.mu), cell(p.lambda), cell(p.weight)]).collect();
    let mut out = Emitter::new("kms-check", config)?;
    out.csv("kms_points.csv", &["mu", "lambda", "weight"], &rows)?;
    out.json("kms.json", &verdict)?;
    out.plot(
        "kms_points",
        &["mu", "lambda", "weight"],
        &rows,
        &format!(
            "set xlabel 'mu'\nset ylabel 'lambda'\nplot '{{data}}' using 1:2 with points title 'joint spectrum', {} * x title 'beta_hat mu'",
            line.beta
        ),
    )?;
    Ok(ok(format!(
        "kms-check: beta_hat {:.12} line residual {:e} two-point {:e} -> {}",
        verdict.beta_hat,
        verdict.line_residual,
        verdict.two_point.relative,
        if verdict.kms { "KMS" } else { "not KMS" }
    )))
}

fn commute(config: &RunConfig) -> Result<Outcome, CliError> {
    let (_, parts) = model(config)?;
    let rows: Vec<DefectRow> = defect_table(&parts.kinetic, &parts.interaction, &config.gammas, &[config.beta])?;
    let cols = [
        "sites",
        "probe",
        "gamma",
        "beta",
        "commutator_defect",
        "nested_defect",
        "base_defect",
        "centrality_defect",
        "invariance_defect",
    ];
    let table: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            vec![
                r.sites.to_string(),
                r.probe.clone(),
                cell(r.gamma),
                cell(r.beta),
                cell(r.commutator_defect),
                cell(r.nested_defect),
                cell(r.base_defect),
                cell(r.centrality_defect),
                cell(r.invariance_defect),
            ]
        })
        .collect();
    let mut out = Emitter::new("commute", config)?;
    out.csv("commute_defects.csv", &cols, &table)?;
    out.json("commute.json", &rows)?;
    let worst = rows
        .iter()
        .map(|r| (r.commutator_defect - (1.0 / r.gamma - r.gamma).abs() * r.base_defect).abs())
        .fold(0.0f64, f64::max);
    Ok(ok(format!("commute: {} rows, largest deviation from |1/gamma - gamma| scaling {worst:e}", rows.len())))
}

#[derive(Serialize)]
struct ClusterSummary {
    sites: usize,
    beta: f64,
    window: (usize, usize),
    fit: DecayFit,
    three_point_separation: Option<usize>,
    three_point_defect: Option<f64>,
    three_point_bound: Option<f64>,
}

fn cluster(config: &RunConfig) -> Result<Outcome, CliError> {
    let (lattice, parts) = ring(config)?;
    let rho = gibbs_state(&parts.unperturbed(), config.beta)?;
    let q = centered_number(lattice, 0)?;
    let profile = correlator_profile(&rho, &q, &q, ["n-1/2", "n-1/2"])?;
    let hi = (config.sites / 4).max(1);
    let window: Vec<_> = profile.iter().filter(|s| s.x >= 1.0 && s.x <= hi as f64).cloned().collect();
    let fit = fit_decay_min(&window, 3.min(window.len()).max(2))?;
    let (rate, prefactor, goodness) = (fit.rate, fit.prefactor, fit.goodness);
    let (sep, defect, bound) = if 2 * hi <= config.sites / 2 {
        let d = multi_cluster_defect(&rho, &[q.clone(), q.clone(), q.clone()], hi)?;
        (Some(hi), Some(d), Some(multi_cluster_bound(&fit, 3, hi)))
    } else {
        (None, None, None)
    };
    let summary = ClusterSummary {
        sites: config.sites,
        beta: config.beta,
        window: (1, hi),
        fit,
        three_point_separation: sep,
        three_point_defect: defect,
        three_point_bound: bound,
    };
    let rows: Vec<Vec<String>> = profile.iter().map(|s| vec![cell(s.x), cell(s.value)]).collect();
    let mut out = Emitter::new("cluster", config)?;
    out.csv("cluster_profile.csv", &["j", "value"], &rows)?;
    out.json("cluster.json", &summary)?;
    out.plot(
        "cluster_profile",
        &["j", "value"],
        &rows,
        &format!(
            "set logscale y\nset xlabel 'j'\nplot '{{data}}' using 1:2 with linespoints title 'connected', {} * exp(-{} * x) title 'fit'",
            prefactor, rate
        ),
    )?;
    Ok(ok(format!("cluster: M = {rate:.6}, K = {prefactor:.6}, goodness {goodness:.5}")))
}

#[derive(Serialize)]
struct ConeSummary {
    sites: usize,
    xs: Vec<usize>,
    ts: Vec<f64>,
    norm_ab: f64,
    fit: ConeFit,
    violations: usize,
}

/// Distances `1..=N/2` and times `t_max k / t_steps` for the light-cone sweep.
pub fn lr_grid(sites: usize, t_max: f64, t_steps: usize) -> (Vec<usize>, Vec<f64>) {
    let xs = (1..=sites / 2).collect();
    let ts = (1..=t_steps).map(|k| t_max * k as f64 / t_steps as f64).collect();
    (xs, ts)
}

fn lr(config: &RunConfig) -> Result<Outcome, CliError> {
    let (lattice, parts) = ring(config)?;
    let dynamics = Dynamics::new(&parts.unperturbed())?;
    let q = centered_number(lattice, 0)?;
    let (xs, ts) = lr_grid(config.sites, config.t_max, config.t_steps);
    let samples = lr_sweep(&q, &q, &xs, &ts, &dynamics)?;
    let fit = fit_lr_cone(&samples)?;
    let norm = q.op_norm()?;
    let norm_ab = norm * norm;
    let violations = fit.causality_violations(&samples, norm_ab);
    let (mu, c) = (fit.mu, fit.c);
    let rows: Vec<Vec<String>> = samples.iter().map(|s| vec![cell(s.x), cell(s.t), cell(s.value)]).collect();
    let mut out = Emitter::new("lr", config)?;
    out.csv("lr_samples.csv", &["x", "t", "value"], &rows)?;
    let summary = ConeSummary { sites: config.sites, xs, ts, norm_ab, fit, violations };
    out.json("lr.json", &summary)?;
    out.plot(
        "lr_cone",
        &["x", "t", "value"],
        &rows,
        &format!(
            "set xlabel 'x'\nset ylabel 't'\nset logscale cb\nplot '{{data}}' using 1:2:3 with points palette pt 5 title '||[alpha_t(A), B_x]||', (x - 3/{mu}) * {mu} / {c} title 'cone edge'",
        ),
    )?;
    Ok(ok(format!("lr: mu = {mu:.6}, c = {c:.6}, {violations} causality violations")))
}

pub fn scaling_plan(config: &RunConfig) -> Result<ScalingPlan, CliError> {
    let observables = config.observables.iter().map(|s| Observable::parse(s)).collect::<Result<Vec<_>, _>>()?;
    let plan = ScalingPlan {
        sites: config.sites,
        hamiltonian: config.hamiltonian,
        beta: config.beta,
        tau: config.tau,
        lambdas: config.lambdas.clone(),
        epsilons: config.epsilons.clone(),
        reference_epsilon: config.epsilon,
        observables,
    };
    plan.validate()?;
    Ok(plan)
}

fn scaling(config: &RunConfig) -> Result<Outcome, CliError> {
    let plan = scaling_plan(config)?;
    let report = vanhove_compare(&plan)?;
    let trace = vanhove_trace(&plan, config.steps)?;
    let rows: Vec<Vec<String>> =
        trace.iter().map(|p| vec![cell(p.lambda), cell(p.t), p.observable.clone(), cell(p.value)]).collect();
    let mut out = Emitter::new("scaling", config)?;
    out.json("scaling.json", &report)?;
    out.csv("scaling_trace.csv", &["lambda", "t", "observable", "value"], &rows)?;
    Ok(ok(format!(
        "scaling: trend {} (max dual gap {:e})",
        if report.trend_holds { "decreasing" } else { "not monotone" },
        report.max_dual_gap
    )))
}

fn accept(config: &RunConfig) -> Result<Outcome, CliError> {
    let results = acceptance::run_all(config.seed);
    let mut out = Emitter::new("accept", config)?;
    let verdict = acceptance::Verdict::new(results);
    out.json("acceptance.json", &verdict)?;
    let mut lines: Vec<String> = verdict.criteria.iter().map(|r| r.line()).collect();
    lines.push(format!("{}/{} criteria passed", verdict.passed, verdict.criteria.len()));
    let status = if verdict.all_passed { exit::PASS } else { exit::CRITERION_FAILED };
    Ok(Outcome { status, summary: lines.join("\n") })
}
