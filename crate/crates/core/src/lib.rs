pub mod cli;
pub mod curve;
pub mod cutoff;
pub mod error;
pub mod numerics;
pub mod removability;
pub mod singular_set;
pub mod singular_solution;

pub use error::{Error, Result};
