//! Robust transmit beamforming and artificial-noise design for a
//! full-duplex base station under bounded channel uncertainty.

pub mod baseline;
pub mod channel;
pub mod design;
pub mod error;
pub mod experiment;
pub mod linalg;
pub mod oracle;
pub mod secrecy;
pub mod solver;

pub use error::{Error, Result};

#[cfg(test)]
mod test_support;
