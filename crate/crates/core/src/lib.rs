pub mod depmeasures;
pub mod error;
pub mod gp;
pub mod harness;
pub mod kernels;
pub mod policies;
pub mod problems;

pub use error::{Error, Result};
