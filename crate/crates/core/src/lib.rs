//! Numerical renormalization group for a phase qubit coupled to an Ohmic
//! transmission-line bath.

pub mod bath;
pub mod circuit;
pub mod criticality;
pub mod error;
pub mod nrg;
pub mod numerics;
pub mod oracle;

pub use circuit::SpinBosonParams;
pub use error::{Error, Result};
