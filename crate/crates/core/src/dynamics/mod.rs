//! Collective-mode rate equations of the butterfly scheme.
//!
//! Variables: the ground and drive-excited populations `N₁`, `N₂` with their
//! coherence `ρ₂₁`, and for every collective mode `k` the recoiled
//! populations `N_k3`, `N_k4` with coherence `ρ_k43`. All `Σ_k` sums run over
//! rings with their degeneracy weights.

mod model;
mod observables;
mod params;
mod state;
mod steady;
mod trajectory;

pub use model::{rhs, LossChannel, Parallelism, RateModel};
pub use observables::{
    closure_ratio, emission_rates, kappa, kappa_sphere_estimate, loss_rate, pair_rate, pairing_ratio,
};
pub use params::ButterflyParams;
pub use state::SystemState;
pub use steady::{mode_averages, solve as solve_steady, steady_state, STEADY_TOLERANCE};
pub use trajectory::{integrate, integrate_model, IntegrationControl, LinearFit, Trajectory};
