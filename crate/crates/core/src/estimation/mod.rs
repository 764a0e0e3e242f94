//! Recovering integrated and instantaneous strengths, and their tail
//! indices, from mean trajectories.

mod ab;
mod savgol;
mod strengths;

pub use ab::{
    average_trials, estimate_ab_imodel, estimate_ab_lmodel, lmodel_projections, ABSeries, EstimatorModel,
};
pub use savgol::{savgol, savgol_weights, Smoothing};
pub use strengths::{
    differentiate_strengths, tail_index, tail_report, uniform_spacing, StrengthSeries, TailIndexReport, TailVariant,
};
