//! Simulation and verification of measurement-based state reductions.
//!
//! Resource states are matrix product states (or small PEPS in two
//! dimensions). Protocols rewrite them with local measurements, sampled
//! with Born probabilities, and every run is checked against brute-force
//! state vectors.

pub mod error;
pub mod io;
pub mod linalg;
pub mod measurement;
pub mod mps;
pub mod oracle;
pub mod peps;
pub mod protocols;
pub mod rng;
pub mod syncwalk;
pub mod tabular;

pub use error::{Error, Result};
