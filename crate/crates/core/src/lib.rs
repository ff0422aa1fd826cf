//! Simulation and analysis library for a phase-encoding QKD transmitter built
//! around an injection-locked gain-switched laser.

pub mod error;
pub mod harness;
pub mod linkmodel;
pub mod optics;
pub mod protocols;
pub mod randomness;
pub mod rng;

pub use error::{Error, Result};
