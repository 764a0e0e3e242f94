use std::fs;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::dynamics::{InitSpec, NoiseSpec, TimeGrid, ToyConfig};
use crate::elasticity::{DriftSpec, ElasticitySchedule};
use crate::error::{Error, Result};
use crate::experiments::{
    ExperimentConfig, ImitationConfig, LabelCorruptionConfig, PhaseSweepConfig, RoundTripConfig,
};
use crate::geometry::SeparationConfig;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum SimulationMode {
    #[default]
    Sde,
    Discrete,
    /// Class-mean ODE from the mean of `init`.
    Ode,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateConfig {
    #[serde(default)]
    pub mode: SimulationMode,
    pub drift: DriftSpec,
    pub schedule: ElasticitySchedule,
    #[serde(default = "NoiseSpec::none")]
    pub noise: NoiseSpec,
    pub init: InitSpec,
    pub grid: TimeGrid,
    #[serde(default = "one")]
    pub trials: usize,
    #[serde(default)]
    pub seed: u64,
}

fn one() -> usize {
    1
}

impl SimulateConfig {
    pub fn validate(&self) -> Result<()> {
        self.drift.validate()?;
        self.schedule.validate()?;
        self.init.validate(self.drift.k(), self.drift.p())?;
        self.noise.prepare(self.drift.dim())?;
        self.grid.steps()?;
        if self.trials == 0 {
            return Err(Error::Config("trials must be >= 1".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainToyConfig {
    pub toy: ToyConfig,
    #[serde(default)]
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SeparateConfig {
    pub separation: SeparationConfig,
    #[serde(default)]
    pub seed: u64,
}

impl SeparateConfig {
    pub fn validate(&self) -> Result<()> {
        let s = &self.separation;
        s.drift.validate()?;
        s.schedule.validate()?;
        s.init.validate(s.drift.k(), s.drift.p())?;
        s.noise.prepare(s.drift.dim())?;
        s.grid.steps()?;
        if s.trials == 0 {
            return Err(Error::Config("trials must be >= 1".into()));
        }
        Ok(())
    }
}

/// Any config file the command line accepts, tagged by `kind`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum RunConfig {
    Simulate(SimulateConfig),
    TrainToy(TrainToyConfig),
    Separate(SeparateConfig),
    PhaseSweep(PhaseSweepConfig),
    Imitation(ImitationConfig),
    RoundTrip(RoundTripConfig),
    LabelCorruption(LabelCorruptionConfig),
}

impl RunConfig {
    pub fn kind(&self) -> &'static str {
        match self {
            RunConfig::Simulate(_) => "Simulate",
            RunConfig::TrainToy(_) => "TrainToy",
            RunConfig::Separate(_) => "Separate",
            RunConfig::PhaseSweep(_) => "PhaseSweep",
            RunConfig::Imitation(_) => "Imitation",
            RunConfig::RoundTrip(_) => "RoundTrip",
            RunConfig::LabelCorruption(_) => "LabelCorruption",
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            RunConfig::Simulate(c) => c.validate(),
            RunConfig::TrainToy(c) => c.toy.validate(),
            RunConfig::Separate(c) => c.validate(),
            RunConfig::PhaseSweep(c) => c.validate(),
            RunConfig::Imitation(c) => c.validate(),
            RunConfig::RoundTrip(c) => c.validate(),
            RunConfig::LabelCorruption(c) => c.validate(),
        }
    }

    pub fn set_seed(&mut self, seed: u64) {
        match self {
            RunConfig::Simulate(c) => c.seed = seed,
            RunConfig::TrainToy(c) => c.seed = seed,
            RunConfig::Separate(c) => c.seed = seed,
            RunConfig::PhaseSweep(c) => c.seed = seed,
            RunConfig::Imitation(c) => c.seed = seed,
            RunConfig::RoundTrip(c) => c.seed = seed,
            RunConfig::LabelCorruption(c) => c.seed = seed,
        }
    }

    /// The experiment-pipeline configs; `None` for the primitive commands.
    pub fn experiment(&self) -> Option<ExperimentConfig> {
        match self {
            RunConfig::PhaseSweep(c) => Some(ExperimentConfig::PhaseSweep(c.clone())),
            RunConfig::Imitation(c) => Some(ExperimentConfig::Imitation(c.clone())),
            RunConfig::RoundTrip(c) => Some(ExperimentConfig::RoundTrip(c.clone())),
            RunConfig::LabelCorruption(c) => Some(ExperimentConfig::LabelCorruption(c.clone())),
            _ => None,
        }
    }
}

fn json_error(e: serde_json::Error) -> Error {
    use serde_json::error::Category;
    match e.classify() {
        Category::Io => Error::Io(e.to_string()),
        Category::Syntax | Category::Eof => Error::Parse { line: e.line(), msg: e.to_string() },
        // Tagged enums are buffered before decoding, which loses the position (line 0).
        Category::Data => Error::Schema { line: (e.line() > 0).then_some(e.line()), msg: e.to_string() },
    }
}

/// Strict JSON decoding: syntax problems are `Parse`, unknown fields,
/// wrong types and missing fields are `Schema`.
pub fn parse_json<T: DeserializeOwned>(text: &str) -> Result<T> {
    serde_json::from_str(text).map_err(json_error)
}

pub fn load_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    parse_json(&text)
}

/// Parse and semantically validate a config file.
pub fn load_config(path: &Path) -> Result<RunConfig> {
    let cfg: RunConfig = load_json(path)?;
    cfg.validate().map_err(|e| match e {
        e @ (Error::Io(_) | Error::Parse { .. }) => e,
        e => Error::Config(e.to_string()),
    })?;
    Ok(cfg)
}
