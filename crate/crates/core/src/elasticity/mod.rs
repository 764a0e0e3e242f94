//! Elasticity schedules, effect matrices, H-kernels and the drift matrix.

mod drift;
mod kernel;
mod schedule;
mod spectrum;

pub use drift::{build_drift, schur_bounds, schur_product, DriftSpec};
pub use kernel::{margin_direction, margin_projection, stacked_margins, EffectMatrix, HKernel};
pub use schedule::{ElasticitySchedule, IntegratedStrengths, ScheduleKind};
pub use spectrum::{closed_form_spectrum, numeric_spectrum, KernelModel, Spectrum};
pub(crate) use kernel::check_psd;
