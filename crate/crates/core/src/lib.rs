#[cfg(feature = "cli")]
pub mod cli_io;
pub mod differences;
pub mod error;
pub mod grid;
pub mod identities;
pub mod norms;
pub mod parallel;
pub mod quadrature;
pub mod rhs;
pub mod simulation;

pub use error::{Error, Result};
