//! Weak-coupling scaling harness: exact interaction-picture dynamics at
//! `lambda^2 t = tau` fixed, invariant time means, and the comparison with the
//! dissipative dynamics generated by the regularized jump operator.

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, Spectrum, C64};
use crate::lindblad::{build_w, EvolveMethod, LindbladForm, LindbladGenerator, Propagator};
use crate::operator_core::{
    build_hamiltonian, gibbs_state, Boundary, DensityMatrix, FockOperator, HamiltonianSpec, LatticeSpec,
};
use crate::par;

/// Largest lattice the harness accepts.
pub const MAX_SCALING_SITES: usize = 8;
/// Cap on `t ||H_lambda||`; beyond it eigenbasis phases lose accuracy.
pub const PHASE_BUDGET: f64 = 1e4;
/// Kinetic-time prefactor of the reference generator: the double time
/// integral carries a 1/2 relative to the literal dissipator.
pub const REFERENCE_NORMALIZATION: f64 = 0.5;

fn degenerate(mu: f64, scale: f64) -> bool {
    mu.abs() <= 1e-9 * scale.max(1.0)
}

fn hermitian_spectrum(h: &FockOperator) -> Result<Spectrum> {
    if !h.is_hermitian(1e-12 * h.max_abs().max(1.0)) {
        return Err(Error::Precondition("Hamiltonian not Hermitian".into()));
    }
    Spectrum::of(h.matrix())
}

fn spectral_radius(spec: &Spectrum) -> f64 {
    spec.min_value().abs().max(spec.max_value().abs())
}

/// `alpha_0(-t) alpha_lambda(t)` for `H_0 = K + V` and `H_lambda = H_0 + lambda H'`.
#[derive(Clone, Debug)]
pub struct InteractionPicture {
    free: Spectrum,
    coupled: Spectrum,
    lambda: f64,
}

impl InteractionPicture {
    pub fn new(k: &FockOperator, v: &FockOperator, h_prime: &FockOperator, lambda: f64) -> Result<Self> {
        if k.lattice().sites() > MAX_SCALING_SITES {
            return Err(Error::TooManySites(k.lattice().sites(), MAX_SCALING_SITES));
        }
        if !lambda.is_finite() {
            return Err(Error::InvalidParameter(format!("coupling must be finite, got {lambda}")));
        }
        let h0 = k + v;
        let hl = &h0 + &(h_prime * lambda);
        Ok(InteractionPicture { free: hermitian_spectrum(&h0)?, coupled: hermitian_spectrum(&hl)?, lambda })
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    fn check_budget(&self, t: f64) -> Result<()> {
        let cost = t.abs() * spectral_radius(&self.coupled).max(spectral_radius(&self.free));
        if cost > PHASE_BUDGET {
            return Err(Error::Budget(format!("t ||H|| = {cost:.3e} exceeds {PHASE_BUDGET:e}")));
        }
        Ok(())
    }

    /// `alpha_0(-t)(alpha_lambda(t)(A))`.
    pub fn heisenberg(&self, a: &Array2<C64>, t: f64) -> Result<Array2<C64>> {
        self.check_budget(t)?;
        Ok(self.free.heisenberg(&self.coupled.heisenberg(a, t), -t))
    }

    /// The state `rho` carried forward: `alpha_lambda(-t)(alpha_0(t)(rho))`.
    pub fn schrodinger(&self, rho: &Array2<C64>, t: f64) -> Result<Array2<C64>> {
        self.check_budget(t)?;
        Ok(self.coupled.heisenberg(&self.free.heisenberg(rho, t), -t))
    }

    pub fn expectation(&self, rho: &DensityMatrix, a: &FockOperator, t: f64) -> Result<f64> {
        Ok(rho.expect(&self.heisenberg(a.matrix(), t)?).re)
    }

    pub fn expectation_schrodinger(&self, rho: &DensityMatrix, a: &FockOperator, t: f64) -> Result<f64> {
        Ok(linalg::trace_of_product(&self.schrodinger(rho.matrix(), t)?, a.matrix()).re)
    }
}

/// `omega(alpha_0(-t) alpha_lambda(t) A)` in the Heisenberg picture.
pub fn interaction_picture_expectation(
    rho0: &DensityMatrix,
    k: &FockOperator,
    v: &FockOperator,
    h_prime: &FockOperator,
    lambda: f64,
    t: f64,
    a: &FockOperator,
) -> Result<f64> {
    InteractionPicture::new(k, v, h_prime, lambda)?.expectation(rho0, a, t)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum MeanHorizon {
    Finite(f64),
    /// `T -> infinity`: only terms with vanishing Bohr frequency survive.
    Infinite,
}

/// `(1/T) int_0^T Tr(rho0 alpha(t)(A)) dt`, exactly in the eigenbasis of `h`.
pub fn invariant_mean(rho0: &DensityMatrix, h: &FockOperator, a: &FockOperator, horizon: MeanHorizon) -> Result<C64> {
    let spec = hermitian_spectrum(h)?;
    invariant_mean_in(rho0, &spec, a, horizon)
}

pub fn invariant_mean_in(rho0: &DensityMatrix, spec: &Spectrum, a: &FockOperator, horizon: MeanHorizon) -> Result<C64> {
    if let MeanHorizon::Finite(t) = horizon {
        if !(t.is_finite() && t > 0.0) {
            return Err(Error::InvalidParameter(format!("averaging time must be positive, got {t}")));
        }
    }
    let e = spec.values();
    let scale = spectral_radius(spec);
    let r = spec.to_eigenbasis(rho0.matrix());
    let am = spec.to_eigenbasis(a.matrix());
    let mut sum = C64::new(0.0, 0.0);
    for ((j, k), &x) in am.indexed_iter() {
        let mu = e[j] - e[k];
        let weight = if degenerate(mu, scale) {
            C64::new(1.0, 0.0)
        } else {
            match horizon {
                MeanHorizon::Infinite => continue,
                MeanHorizon::Finite(t) => {
                    let z = C64::new(0.0, mu * t);
                    (z.exp() - 1.0) / z
                }
            }
        };
        sum += r[[k, j]] * x * weight;
    }
    Ok(sum)
}

/// Gauss-Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(order: usize) -> Vec<(f64, f64)> {
    let n = order.max(1);
    (0..n)
        .map(|i| {
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 1.0;
            for _ in 0..100 {
                let (mut p0, mut p1) = (1.0, x);
                for k in 2..=n {
                    let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                    p0 = p1;
                    p1 = p2;
                }
                let p = if n == 1 { x } else { p1 };
                let prev = if n == 1 { 1.0 } else { p0 };
                dp = n as f64 * (x * p - prev) / (x * x - 1.0);
                let dx = p / dp;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            (x, 2.0 / ((1.0 - x * x) * dp * dp))
        })
        .collect()
}

/// The same mean by composite Gauss-Legendre quadrature of the Heisenberg
/// trajectory, `panels` panels of `order` nodes.
pub fn invariant_mean_quadrature(
    rho0: &DensityMatrix,
    h: &FockOperator,
    a: &FockOperator,
    t: f64,
    panels: usize,
    order: usize,
) -> Result<C64> {
    if !(t.is_finite() && t > 0.0) || panels == 0 {
        return Err(Error::InvalidParameter("quadrature needs T > 0 and at least one panel".into()));
    }
    let spec = hermitian_spectrum(h)?;
    let rule = gauss_legendre(order);
    let width = t / panels as f64;
    let parts = par::map_range(panels, |p| {
        let mid = (p as f64 + 0.5) * width;
        rule.iter().fold(C64::new(0.0, 0.0), |acc, &(x, w)| {
            let s = mid + 0.5 * width * x;
            acc + rho0.expect(&spec.heisenberg(a.matrix(), s)) * (0.5 * width * w)
        })
    });
    Ok(parts.into_iter().sum::<C64>() / t)
}

/// `T -> infinity` mean of `alpha(t)(A)` as an operator: `A` pinched onto
/// the eigenspaces of `h`.
pub fn time_averaged_operator(h: &FockOperator, a: &FockOperator) -> Result<FockOperator> {
    let spec = hermitian_spectrum(h)?;
    let e = spec.values();
    let scale = spectral_radius(&spec);
    let mut m = spec.to_eigenbasis(a.matrix());
    for ((j, k), z) in m.indexed_iter_mut() {
        if !degenerate(e[j] - e[k], scale) {
            *z = C64::new(0.0, 0.0);
        }
    }
    Ok(a.with_matrix(spec.from_eigenbasis(&m)))
}

/// A named lattice observable.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Observable {
    /// `n_i`, written `n:i`.
    Number(usize),
    /// `n_i n_j`, written `nn:i,j`.
    DensityPair(usize, usize),
    /// `a_i* a_j + a_j* a_i`, written `hop:i,j`.
    Hopping(usize, usize),
}

impl Observable {
    pub fn parse(s: &str) -> Result<Self> {
        let bad = || Error::InvalidParameter(format!("unknown observable {s:?} (expected n:i, nn:i,j or hop:i,j)"));
        let (kind, args) = s.trim().split_once(':').ok_or_else(bad)?;
        let idx: Vec<usize> = args
            .split(',')
            .map(|x| x.trim().parse::<usize>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| bad())?;
        match (kind.trim(), idx.as_slice()) {
            ("n", [i]) => Ok(Observable::Number(*i)),
            ("nn", [i, j]) => Ok(Observable::DensityPair(*i, *j)),
            ("hop", [i, j]) if i != j => Ok(Observable::Hopping(*i, *j)),
            _ => Err(bad()),
        }
    }

    pub fn name(&self) -> String {
        match self {
            Observable::Number(i) => format!("n:{i}"),
            Observable::DensityPair(i, j) => format!("nn:{i},{j}"),
            Observable::Hopping(i, j) => format!("hop:{i},{j}"),
        }
    }

    pub fn build(&self, lattice: LatticeSpec) -> Result<FockOperator> {
        match *self {
            Observable::Number(i) => FockOperator::number(lattice, i),
            Observable::DensityPair(i, j) => Ok(FockOperator::number(lattice, i)?.dot(&FockOperator::number(lattice, j)?)),
            Observable::Hopping(i, j) => FockOperator::hopping(lattice, i, j),
        }
    }
}

/// `n_0 n_1` and the bond current partner `a_0* a_1 + h.c.`. A single `n_0`
/// is left out: on a translation-invariant ring its expectation is fixed by
/// the conserved particle number and never moves.
pub fn default_observables() -> Vec<Observable> {
    vec![Observable::DensityPair(0, 1), Observable::Hopping(0, 1)]
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalingPlan {
    pub sites: usize,
    pub hamiltonian: HamiltonianSpec,
    /// Inverse temperature of the initial Gibbs state of `K + V`.
    pub beta: f64,
    pub tau: f64,
    /// Strictly decreasing, positive.
    pub lambdas: Vec<f64>,
    /// Regularizations of the reference jump operator.
    pub epsilons: Vec<f64>,
    /// The regularization whose trend decides the verdict.
    pub reference_epsilon: f64,
    pub observables: Vec<Observable>,
}

impl Default for ScalingPlan {
    fn default() -> Self {
        ScalingPlan {
            sites: 6,
            hamiltonian: HamiltonianSpec::default(),
            beta: 1.0,
            tau: 0.5,
            lambdas: vec![0.4, 0.2, 0.1],
            epsilons: vec![0.5, 0.25, 0.1],
            reference_epsilon: 0.1,
            observables: default_observables(),
        }
    }
}

impl ScalingPlan {
    pub fn lattice(&self) -> Result<LatticeSpec> {
        LatticeSpec::chain(self.sites, Boundary::Periodic)
    }

    /// Physical time `tau / lambda^2`.
    pub fn time_for(&self, lambda: f64) -> f64 {
        self.tau / (lambda * lambda)
    }

    pub fn validate(&self) -> Result<()> {
        if self.sites > MAX_SCALING_SITES {
            return Err(Error::TooManySites(self.sites, MAX_SCALING_SITES));
        }
        self.hamiltonian.validate()?;
        if !(self.tau.is_finite() && self.tau >= 0.0) {
            return Err(Error::InvalidParameter(format!("tau must be nonnegative, got {}", self.tau)));
        }
        if !(self.beta.is_finite() && self.beta >= 0.0) {
            return Err(Error::InvalidParameter(format!("beta must be nonnegative, got {}", self.beta)));
        }
        if self.lambdas.is_empty() || self.lambdas.iter().any(|&l| !(l.is_finite() && l > 0.0)) {
            return Err(Error::InvalidParameter("lambda values must be positive".into()));
        }
        if self.lambdas.windows(2).any(|w| w[1] >= w[0]) {
            return Err(Error::InvalidParameter("lambda values must be strictly decreasing".into()));
        }
        if self.epsilons.iter().any(|&e| !(e.is_finite() && e > 0.0)) {
            return Err(Error::InvalidParameter("regularizations must be positive".into()));
        }
        if !self.epsilons.contains(&self.reference_epsilon) {
            return Err(Error::InvalidParameter("reference_epsilon must be one of epsilons".into()));
        }
        if self.observables.is_empty() {
            return Err(Error::InvalidParameter("no observables".into()));
        }
        let lattice = self.lattice()?;
        for o in &self.observables {
            o.build(lattice)?;
        }
        let parts = build_hamiltonian(lattice, &self.hamiltonian)?;
        let h0 = parts.unperturbed();
        let smallest = self.lambdas[self.lambdas.len() - 1];
        let hl = &h0 + &(&parts.perturbation * self.lambdas[0]);
        let radius = linalg::op_norm(hl.matrix())?.max(linalg::op_norm(h0.matrix())?);
        let cost = self.time_for(smallest) * radius;
        if cost > PHASE_BUDGET {
            return Err(Error::Budget(format!(
                "t ||H|| = {cost:.3e} at lambda = {smallest} exceeds {PHASE_BUDGET:e}"
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReferenceValue {
    pub epsilon: f64,
    pub value: f64,
    /// `|value - lambda-independent value from the dual map on A|`.
    pub dual_gap: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ObservableTrend {
    pub observable: String,
    pub initial: f64,
    /// Dissipative prediction per regularization.
    pub references: Vec<ReferenceValue>,
    /// Exact interaction-picture value per lambda.
    pub exact: Vec<f64>,
    /// `|exact - schrodinger evaluation|` per lambda.
    pub exact_dual_gap: Vec<f64>,
    /// `delta[e][l]`: distance at `epsilons[e]`, `lambdas[l]`.
    pub delta: Vec<Vec<f64>>,
    /// Strictly decreasing as lambda decreases, per regularization.
    pub decreasing: Vec<bool>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VanHoveReport {
    pub plan: ScalingPlan,
    pub times: Vec<f64>,
    pub normalization: f64,
    pub trends: Vec<ObservableTrend>,
    pub max_dual_gap: f64,
    /// Every observable decreasing at the reference regularization.
    pub trend_holds: bool,
}

impl VanHoveReport {
    /// `delta` at the reference regularization, per observable.
    pub fn reference_deltas(&self) -> Vec<(String, Vec<f64>)> {
        let e = self.plan.epsilons.iter().position(|&x| x == self.plan.reference_epsilon).unwrap_or(0);
        self.trends.iter().map(|t| (t.observable.clone(), t.delta[e].clone())).collect()
    }
}

fn strictly_decreasing(v: &[f64]) -> bool {
    v.windows(2).all(|w| w[1] < w[0])
}

/// Exact interaction-picture values against the dissipative prediction for
/// each coupling, observable and regularization.
pub fn vanhove_compare(plan: &ScalingPlan) -> Result<VanHoveReport> {
    plan.validate()?;
    let lattice = plan.lattice()?;
    let parts = build_hamiltonian(lattice, &plan.hamiltonian)?;
    let (k, v, hp) = (&parts.kinetic, &parts.interaction, &parts.perturbation);
    let h0 = parts.unperturbed();
    let rho0 = gibbs_state(&h0, plan.beta)?;
    let ops = plan.observables.iter().map(|o| o.build(lattice)).collect::<Result<Vec<_>>>()?;
    let times: Vec<f64> = plan.lambdas.iter().map(|&l| plan.time_for(l)).collect();

    let pictures: Vec<Result<InteractionPicture>> =
        par::map_slice(&plan.lambdas, |&l| InteractionPicture::new(k, v, hp, l));
    let pictures = pictures.into_iter().collect::<Result<Vec<_>>>()?;

    let refs: Vec<Result<Propagator>> = par::map_slice(&plan.epsilons, |&eps| {
        let generator = LindbladGenerator::new(build_w(hp, &h0, eps)?, LindbladForm::Literal)?;
        Propagator::new(&generator, REFERENCE_NORMALIZATION * plan.tau, EvolveMethod::Dephasing)
    });
    let refs = refs.into_iter().collect::<Result<Vec<_>>>()?;
    let evolved: Vec<Array2<C64>> = refs.iter().map(|p| p.apply_matrix(rho0.matrix())).collect();

    let mut trends = Vec::with_capacity(ops.len());
    let mut max_dual_gap = 0.0f64;
    for (obs, a) in plan.observables.iter().zip(&ops) {
        let initial = rho0.expectation(a).re;
        let references: Vec<ReferenceValue> = plan
            .epsilons
            .iter()
            .zip(refs.iter().zip(&evolved))
            .map(|(&epsilon, (prop, rho_t))| {
                let value = linalg::trace_of_product(rho_t, a.matrix()).re;
                // The dephasing map is its own dual.
                let dual = rho0.expect(&prop.apply_matrix(a.matrix())).re;
                ReferenceValue { epsilon, value, dual_gap: (value - dual).abs() }
            })
            .collect();
        let mut exact = Vec::with_capacity(times.len());
        let mut exact_dual_gap = Vec::with_capacity(times.len());
        for (pic, &t) in pictures.iter().zip(&times) {
            let h = pic.expectation(&rho0, a, t)?;
            let s = pic.expectation_schrodinger(&rho0, a, t)?;
            exact.push(h);
            exact_dual_gap.push((h - s).abs());
        }
        let delta: Vec<Vec<f64>> =
            references.iter().map(|r| exact.iter().map(|x| (x - r.value).abs()).collect()).collect();
        let decreasing = delta.iter().map(|d| strictly_decreasing(d)).collect();
        max_dual_gap = references
            .iter()
            .map(|r| r.dual_gap)
            .chain(exact_dual_gap.iter().copied())
            .fold(max_dual_gap, f64::max);
        trends.push(ObservableTrend {
            observable: obs.name(),
            initial,
            references,
            exact,
            exact_dual_gap,
            delta,
            decreasing,
        });
    }
    let e_ref = plan.epsilons.iter().position(|&x| x == plan.reference_epsilon).unwrap_or(0);
    let trend_holds = trends.iter().all(|t| t.decreasing[e_ref]);
    Ok(VanHoveReport {
        plan: plan.clone(),
        times,
        normalization: REFERENCE_NORMALIZATION,
        trends,
        max_dual_gap,
        trend_holds,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TracePoint {
    pub lambda: f64,
    pub t: f64,
    pub observable: String,
    pub value: f64,
}

/// `omega(alpha_0(-t) alpha_lambda(t) A)` on `samples + 1` evenly spaced
/// times up to `tau / lambda^2`, for each lambda and observable.
pub fn vanhove_trace(plan: &ScalingPlan, samples: usize) -> Result<Vec<TracePoint>> {
    plan.validate()?;
    let lattice = plan.lattice()?;
    let parts = build_hamiltonian(lattice, &plan.hamiltonian)?;
    let rho0 = gibbs_state(&parts.unperturbed(), plan.beta)?;
    let ops = plan.observables.iter().map(|o| o.build(lattice)).collect::<Result<Vec<_>>>()?;
    let mut out = Vec::new();
    for &lambda in &plan.lambdas {
        let pic = InteractionPicture::new(&parts.kinetic, &parts.interaction, &parts.perturbation, lambda)?;
        let t_end = plan.time_for(lambda);
        let steps = samples.max(1);
        let rows: Vec<Result<Vec<TracePoint>>> = par::map_range(steps + 1, |i| {
            let t = t_end * i as f64 / steps as f64;
            plan.observables
                .iter()
                .zip(&ops)
                .map(|(o, a)| Ok(TracePoint { lambda, t, observable: o.name(), value: pic.expectation(&rho0, a, t)? }))
                .collect()
        });
        for r in rows {
            out.extend(r?);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operator_core::HamiltonianParts;
    use crate::rng;

    fn ring(n: usize) -> HamiltonianParts {
        let lattice = LatticeSpec::chain(n, Boundary::Periodic).unwrap();
        build_hamiltonian(lattice, &HamiltonianSpec::default()).unwrap()
    }

    fn random_state(dim: usize, seed: u64) -> DensityMatrix {
        let mut r = rng::seeded(seed);
        DensityMatrix::new(rng::density_matrix(&mut r, dim)).unwrap()
    }

    #[test]
    fn picture_cancellations() {
        let p = ring(4);
        let h0 = p.unperturbed();
        let rho = gibbs_state(&h0, 0.7).unwrap();
        let a = FockOperator::number(h0.lattice(), 0).unwrap();
        let base = rho.expectation(&a).re;
        let free = InteractionPicture::new(&p.kinetic, &p.interaction, &p.perturbation, 0.0).unwrap();
        for t in [0.3, 4.0, 17.0] {
            assert!((free.expectation(&rho, &a, t).unwrap() - base).abs() < 1e-13);
        }
        let coupled = InteractionPicture::new(&p.kinetic, &p.interaction, &p.perturbation, 0.5).unwrap();
        let any = random_state(16, 2);
        assert_eq!(coupled.expectation(&any, &a, 0.0).unwrap(), any.expectation(&a).re);
    }

    #[test]
    fn dual_pictures_agree() {
        let p = ring(6);
        let h0 = p.unperturbed();
        let rho = gibbs_state(&h0, 1.0).unwrap();
        let a = FockOperator::number(h0.lattice(), 0).unwrap();
        let pic = InteractionPicture::new(&p.kinetic, &p.interaction, &p.perturbation, 0.3).unwrap();
        let h = pic.expectation(&rho, &a, 5.0).unwrap();
        let s = pic.expectation_schrodinger(&rho, &a, 5.0).unwrap();
        assert!((h - s).abs() < 1e-11, "{h} {s}");
        let direct = interaction_picture_expectation(&rho, &p.kinetic, &p.interaction, &p.perturbation, 0.3, 5.0, &a).unwrap();
        assert_eq!(direct, h);
    }

    #[test]
    fn budget_is_enforced() {
        let p = ring(4);
        let rho = gibbs_state(&p.unperturbed(), 1.0).unwrap();
        let a = FockOperator::number(p.kinetic.lattice(), 0).unwrap();
        let pic = InteractionPicture::new(&p.kinetic, &p.interaction, &p.perturbation, 0.1).unwrap();
        assert!(matches!(pic.expectation(&rho, &a, 1e5), Err(Error::Budget(_))));
        let plan = ScalingPlan { lambdas: vec![0.4, 0.01], ..Default::default() };
        assert!(matches!(plan.validate(), Err(Error::Budget(_))));
    }

    #[test]
    fn invariant_mean_cases() {
        let p = ring(4);
        let h = p.unperturbed();
        let a = FockOperator::number(h.lattice(), 0).unwrap();
        let gibbs = gibbs_state(&h, 0.6).unwrap();
        let direct = gibbs.expectation(&a);
        for horizon in [MeanHorizon::Finite(0.7), MeanHorizon::Finite(31.0), MeanHorizon::Infinite] {
            assert!((invariant_mean(&gibbs, &h, &a, horizon).unwrap() - direct).norm() < 1e-13);
        }
        // T -> infinity pairs the state with A pinched onto eigenspaces.
        let rho = random_state(16, 9);
        let pinched = time_averaged_operator(&h, &a).unwrap();
        let inf = invariant_mean(&rho, &h, &a, MeanHorizon::Infinite).unwrap();
        assert!((inf - rho.expectation(&pinched)).norm() < 1e-13);
        // A further shift leaves the infinite mean unchanged.
        let shifted = crate::operator_core::heisenberg_evolve(&pinched, &h, 2.3).unwrap();
        assert!(shifted.max_abs_diff(&pinched) < 1e-12);
        assert!(invariant_mean(&rho, &h, &a, MeanHorizon::Finite(0.0)).is_err());
    }

    #[test]
    fn gauss_legendre_rules() {
        let rule = gauss_legendre(5);
        let sum: f64 = rule.iter().map(|r| r.1).sum();
        assert!((sum - 2.0).abs() < 1e-14);
        // Exact through degree 9.
        let m8: f64 = rule.iter().map(|(x, w)| w * x.powi(8)).sum();
        assert!((m8 - 2.0 / 9.0).abs() < 1e-14);
        let (x, _) = gauss_legendre(2)[0];
        assert!((x.abs() - 1.0 / 3f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn quadrature_matches_closed_form() {
        let p = ring(4);
        let h = p.unperturbed();
        let a = FockOperator::number(h.lattice(), 0).unwrap();
        let rho = random_state(16, 21);
        let exact = invariant_mean(&rho, &h, &a, MeanHorizon::Finite(50.0)).unwrap();
        let quad = invariant_mean_quadrature(&rho, &h, &a, 50.0, 200, 16).unwrap();
        assert!((exact - quad).norm() < 1e-9, "{exact} {quad}");
    }

    #[test]
    fn first_order_response_vanishes_for_averaged_perturbation() {
        let p = ring(6);
        let h0 = p.unperturbed();
        let rho = gibbs_state(&h0, 1.0).unwrap();
        let averaged = time_averaged_operator(&h0, &p.perturbation).unwrap();
        let a = FockOperator::hopping(h0.lattice(), 0, 1).unwrap();
        let t = 1.7;
        let at = |l: f64| interaction_picture_expectation(&rho, &p.kinetic, &p.interaction, &averaged, l, t, &a).unwrap();
        let h = 1e-3;
        let slope = (at(h) - at(-h)) / (2.0 * h);
        assert!(slope.abs() < 1e-9, "{slope}");
        // The raw perturbation does respond at first order.
        let raw = |l: f64| interaction_picture_expectation(&rho, &p.kinetic, &p.interaction, &p.perturbation, l, t, &a).unwrap();
        let slope = (raw(h) - raw(-h)) / (2.0 * h);
        let second = (raw(h) + raw(-h) - 2.0 * raw(0.0)) / (h * h);
        assert!(slope.abs() > 1e-6 || second.abs() > 1e-6);
    }

    #[test]
    fn observable_names_round_trip() {
        for o in [Observable::Number(2), Observable::DensityPair(0, 1), Observable::Hopping(1, 3)] {
            assert_eq!(Observable::parse(&o.name()).unwrap(), o);
        }
        assert!(Observable::parse("hop:1,1").is_err());
        assert!(Observable::parse("x:1").is_err());
        assert!(Observable::parse("nn:1").is_err());
    }

    #[test]
    fn plan_validation() {
        assert!(ScalingPlan::default().validate().is_ok());
        let bad = ScalingPlan { lambdas: vec![0.1, 0.2], ..Default::default() };
        assert!(bad.validate().is_err());
        let bad = ScalingPlan { reference_epsilon: 0.3, ..Default::default() };
        assert!(bad.validate().is_err());
        let bad = ScalingPlan { sites: 9, ..Default::default() };
        assert!(matches!(bad.validate(), Err(Error::TooManySites(9, 8))));
    }

    #[test]
    fn trivial_comparisons() {
        let plan = ScalingPlan {
            sites: 4,
            hamiltonian: HamiltonianSpec { perturbation_strength: 0.0, ..Default::default() },
            ..Default::default()
        };
        let r = vanhove_compare(&plan).unwrap();
        for t in &r.trends {
            assert!(t.delta.iter().flatten().all(|&d| d < 1e-13), "{t:?}");
        }
        let plan = ScalingPlan { sites: 4, tau: 0.0, ..Default::default() };
        let r = vanhove_compare(&plan).unwrap();
        for t in &r.trends {
            assert!(t.delta.iter().flatten().all(|&d| d < 1e-13));
        }
        assert!(r.max_dual_gap < 1e-11);
    }

    #[test]
    fn number_on_a_ring_never_moves() {
        let plan = ScalingPlan { sites: 4, observables: vec![Observable::Number(0)], ..Default::default() };
        let r = vanhove_compare(&plan).unwrap();
        assert!(r.trends[0].delta.iter().flatten().all(|&d| d < 1e-13));
    }
}
