//! Reconstruction of the Boolean topology of sparse linear dynamic networks
//! from multi-experiment time series.

pub mod bench;
pub mod error;
pub mod io;
pub mod lti;
pub mod netgen;
pub mod metrics;
pub mod network;
pub mod reconstruct;
pub mod regression;
pub mod solver;

pub use error::{Error, Result};
