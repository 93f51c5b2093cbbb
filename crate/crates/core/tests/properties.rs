//! Property tests for invariants that hold for every input in a family.

use kmslab_core::commuting::scaled_generator;
use kmslab_core::kinetic::{
    conserved_charges, fermi_dirac, fit_fermi_dirac, solve_beta_mu, CollisionKernel, Dispersion, MomentumGrid,
    OccupationFunction, ShellMode,
};
use kmslab_core::kms::{fit_beta, kms_line_test};
use kmslab_core::linalg;
use kmslab_core::lindblad::{EvolveMethod, JumpOperator, LindbladForm, LindbladGenerator, Propagator};
use kmslab_core::operator_core::{build_hamiltonian, gibbs_state, Boundary, DensityMatrix, FockOperator, HamiltonianSpec, LatticeSpec};
use kmslab_core::rng;
use proptest::prelude::*;

fn kernel() -> CollisionKernel {
    CollisionKernel::new(MomentumGrid::new(2, 4).unwrap(), Dispersion::Quadratic { hopping: 1.0 }, ShellMode::Exact).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn collisions_conserve_number_and_energy(seed in any::<u64>()) {
        let k = kernel();
        let rho = OccupationFunction::random(16, &mut rng::seeded(seed));
        let c = k.apply(rho.values());
        let dn: f64 = c.iter().sum();
        let de: f64 = c.iter().zip(k.energies()).map(|(x, e)| x * e).sum();
        prop_assert!(dn.abs() < 1e-12 && de.abs() < 1e-11, "{dn:e} {de:e}");
    }

    // Kept to |beta (eps - mu)| <= 12: closer to saturation the logit of
    // rho loses digits to the rounding of 1 - rho.
    #[test]
    fn fermi_dirac_fit_round_trips(beta in 0.05f64..1.0, mu in 2.0f64..12.0) {
        let e = kernel().energies().to_vec();
        let fd = fermi_dirac(beta, mu, &e);
        let fit = fit_fermi_dirac(&fd, &e).unwrap();
        prop_assert!((fit.beta - beta).abs() < 1e-9 && (fit.mu - mu).abs() < 1e-8 * mu.max(1.0));
        let (n, en) = conserved_charges(&fd, &e).unwrap();
        let s = solve_beta_mu(n, en, &e).unwrap();
        prop_assert!((s.beta - beta).abs() < 1e-8 && (s.mu - mu).abs() < 1e-7 * mu.max(1.0), "{s:?}");
    }

    #[test]
    fn selfadjoint_flow_is_unital_trace_preserving_and_entropy_increasing(seed in any::<u64>(), tau in 0.001f64..0.5) {
        let mut r = rng::seeded(seed);
        let l = LatticeSpec::chain(2, Boundary::Open).unwrap();
        let w = JumpOperator::selfadjoint(FockOperator::from_matrix(l, rng::hermitian(&mut r, 4)).unwrap()).unwrap();
        let g = LindbladGenerator::new(w, LindbladForm::Literal).unwrap();
        let p = Propagator::new(&g, tau, EvolveMethod::ExactExponential).unwrap();
        let mixed = DensityMatrix::maximally_mixed(4);
        prop_assert!(linalg::max_abs_diff(&p.apply_matrix(mixed.matrix()), mixed.matrix()) < 1e-12);
        let rho = DensityMatrix::new(rng::density_matrix(&mut r, 4)).unwrap();
        let out = p.apply(&rho).unwrap();
        prop_assert!((linalg::trace(out.matrix()).re - 1.0).abs() < 1e-10);
        prop_assert!(out.eigenvalues().unwrap().iter().all(|&x| x >= -1e-10));
        prop_assert!(out.entropy().unwrap() >= rho.entropy().unwrap() - 1e-10);
    }

    #[test]
    fn scaled_generator_swaps_roles_under_inversion(gamma in 0.1f64..10.0) {
        let l = LatticeSpec::chain(4, Boundary::Periodic).unwrap();
        let p = build_hamiltonian(l, &HamiltonianSpec::default()).unwrap();
        let a = scaled_generator(&p.kinetic, &p.interaction, gamma).unwrap();
        let b = scaled_generator(&p.interaction, &p.kinetic, 1.0 / gamma).unwrap();
        prop_assert!(a.max_abs_diff(&b) < 1e-12 * gamma.max(1.0 / gamma));
    }

    #[test]
    fn gibbs_states_recover_their_temperature(beta in 0.0f64..3.0) {
        let l = LatticeSpec::chain(3, Boundary::Open).unwrap();
        let h = build_hamiltonian(l, &HamiltonianSpec::default()).unwrap().unperturbed();
        let rho = gibbs_state(&h, beta).unwrap();
        let a = FockOperator::annihilation(l, 0).unwrap();
        let t = kms_line_test(&rho, &h, &(&a + &a.adjoint())).unwrap();
        prop_assert!((t.beta - beta).abs() < 1e-10 && t.line_residual < 1e-10, "{} {}", t.beta, t.line_residual);
        let f = fit_beta(&rho, &h).unwrap();
        prop_assert!((f.beta - beta).abs() < 1e-10 && f.affine_residual < 1e-9);
    }
}
