//! Simulation toolkit for quantum state certification with nonadaptive,
//! unentangled measurements.

pub mod certify;
pub mod experiments;
pub mod classical;
pub mod error;
pub mod instances;
pub mod linalg;
pub mod oracle;
pub mod measurement;
pub mod random;
pub mod spectrum;

pub use error::{Error, Result};
