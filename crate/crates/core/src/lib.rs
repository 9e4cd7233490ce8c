//! Biased four-state discrete-time quantum walk on the square lattice:
//! direct simulation, momentum-space spectral analysis, stationary-phase
//! audits and recurrence measurements.

pub mod cli;
pub mod coin;
pub mod config;
pub mod error;
pub mod evolution;
pub mod linalg;
pub mod recurrence;
pub mod spectral;
pub mod stationary;

pub use error::{Result, WalkError};
