//! Separability tests, separation directions, collapse geometry and the
//! relative-difference imitation metric.

mod collapse;
mod probability;
mod separation;
mod simplex;

pub use collapse::{collapse_report, means_at, relative_difference, CollapseReport, RdSeries};
pub use probability::{all_pairs_separable, separation_probability, SeparationCheck, SeparationConfig, SeparationProbability};
pub use separation::{
    check_direction, is_linearly_separable, min_pair_objective, select_direction, DirectionMode, SeparationVerdict,
    Witness,
};
pub use simplex::PIVOT_CAP;
