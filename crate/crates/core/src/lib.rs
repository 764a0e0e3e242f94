//! Simulation and inference for locally elastic stochastic dynamics of
//! class-structured feature ensembles.

pub mod error;
pub mod linalg;

pub use error::{Error, Result};
pub mod dynamics;
pub mod elasticity;
pub mod estimation;
pub mod experiments;
pub mod geometry;
pub mod io;
