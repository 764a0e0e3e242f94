//! End-to-end pipelines: each takes a config and returns a report plus
//! the series tables it refers to.

mod corruption;
mod imitation;
mod phase;
mod report;
mod roundtrip;

use serde::{Deserialize, Serialize};

pub use corruption::{first_crossing, run_label_corruption, CorruptionCondition, LabelCorruptionConfig, LabelCorruptionSummary};
pub use imitation::{
    run_imitation, ImitationConfig, ImitationInit, ImitationResult, ImitationSource, ImitationSummary,
    PathAggregate,
};
pub use phase::{run_phase_sweep, steepest_drop, PhaseSweepConfig, PhaseSweepSummary};
pub use report::{config_hash, ExperimentOutput, ExperimentReport, Provenance, SeriesTable, Summary};
pub use roundtrip::{run_roundtrip, RoundTripConfig, RoundTripSummary, TailCheck, TailRecovery};

use crate::error::Result;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum ExperimentConfig {
    PhaseSweep(PhaseSweepConfig),
    Imitation(ImitationConfig),
    RoundTrip(RoundTripConfig),
    LabelCorruption(LabelCorruptionConfig),
}

impl ExperimentConfig {
    pub fn seed(&self) -> u64 {
        match self {
            ExperimentConfig::PhaseSweep(c) => c.seed,
            ExperimentConfig::Imitation(c) => c.seed,
            ExperimentConfig::RoundTrip(c) => c.seed,
            ExperimentConfig::LabelCorruption(c) => c.seed,
        }
    }

    pub fn set_seed(&mut self, seed: u64) {
        match self {
            ExperimentConfig::PhaseSweep(c) => c.seed = seed,
            ExperimentConfig::Imitation(c) => c.seed = seed,
            ExperimentConfig::RoundTrip(c) => c.seed = seed,
            ExperimentConfig::LabelCorruption(c) => c.seed = seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            ExperimentConfig::PhaseSweep(c) => c.validate(),
            ExperimentConfig::Imitation(c) => c.validate(),
            ExperimentConfig::RoundTrip(c) => c.validate(),
            ExperimentConfig::LabelCorruption(c) => c.validate(),
        }
    }

    pub fn run(&self) -> Result<ExperimentOutput> {
        match self {
            ExperimentConfig::PhaseSweep(c) => run_phase_sweep(c),
            ExperimentConfig::Imitation(c) => run_imitation(c),
            ExperimentConfig::RoundTrip(c) => run_roundtrip(c),
            ExperimentConfig::LabelCorruption(c) => run_label_corruption(c),
        }
    }
}
