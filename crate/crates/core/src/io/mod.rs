//! Trajectory CSV, config loading and result writers.

mod config;
mod output;
mod trajectory;

pub use config::{
    load_config, load_json, parse_json, RunConfig, SeparateConfig, SimulateConfig, SimulationMode, TrainToyConfig,
};
pub use output::{run_dir, write_json, write_run, write_table};
pub use trajectory::{
    fmt_f64, read_trajectory, read_trajectory_file, write_trajectory, write_trajectory_file, TrajectoryFile,
    TrajectoryHeader, TRAJECTORY_FORMAT,
};
