//! Statistical randomness tests with original and corrected p-value
//! approximations, plus the three-level meta-test used to audit them.

pub mod bitstream;
pub mod descriptor;
pub mod error;
pub mod harness;
pub mod nist;
pub mod numerics;
pub mod suite;
pub mod tu01;

pub use error::{Error, Result};
