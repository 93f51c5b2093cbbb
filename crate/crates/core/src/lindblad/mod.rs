//! Lindblad engine: jump operators built from a perturbation, evolution of
//! density matrices, eigenvalue transition rates, entropy production,
//! stationary states and the localized-entropy experiment.

mod entropy;
mod experiment;
mod generator;
mod jump;
mod rates;
mod stationary;

pub use entropy::{entropy_rate_check, entropy_trajectory, min_increment, pairing_jump, EntropyRateCheck};
pub use experiment::{
    hopping_jump, localized_entropy_experiment, random_product_state, surface_scaling_sweep, EntropyExperiment,
    EntropyPoint, ScalingRow,
};
pub use generator::{
    evolve, lindblad_rhs, EvolveMethod, LindbladForm, LindbladGenerator, Propagator, EVOLVED_FLOOR,
    SUPEROP_MAX_SITES,
};
pub use jump::{build_w, build_w_with_sign, GapSign, JumpOperator, Provenance};
pub use rates::{entropy_derivative, pauli_rates, EntropyRate, RateMatrix, ENTROPY_RATE_NORMALIZATION};
pub use stationary::{stationary_states, StationarySet, KERNEL_THRESHOLD};
