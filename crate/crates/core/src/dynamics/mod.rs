//! Sample-level and mean-level dynamics: discrete updates, the SDE, the
//! ODE, closed-form solutions and a toy softmax trainer.

mod closed_form;
mod ensemble;
mod simulate;
mod toy;
mod trials;

pub use closed_form::{
    binary_closed_form, binary_closed_form_at, fit_lmodel_coefficients, imodel_closed_form, imodel_decompose,
    lmodel_basis, lmodel_closed_form, lmodel_xi, LModelBasis, LModelCoefficients,
};
pub use ensemble::{FeatureEnsemble, InitSpec, MeanTrajectory, NoiseSampler, NoiseSpec, TrialEnsemble};
pub use simulate::{
    integrate_ode, simulate_discrete, simulate_sde, step_discrete, step_discrete_forced, Integrator, TimeGrid,
    BLOW_UP_LIMIT,
};
pub use toy::{toy_trainer, ToyConfig, ToyRun};
pub use trials::{run_indexed, trial_rng, THREADS_ENV};
