//! Decoupled standard random walks: exact lattice evaluation, Monte Carlo
//! simulation, hole-probability asymptotics and the Gaussian limit process.

pub mod asymptotics;
pub mod decoupled;
pub mod dist;
pub mod error;
pub mod experiments;
pub mod gaussianlimit;
pub mod lattice;
pub mod quad;
pub mod special;

pub use error::{Error, Result};
