//! Formal generalized power series solutions of polynomial ODEs, Newton
//! polygon analysis, the change of unknown that isolates the tail of a
//! solution, and Gevrey growth diagnostics on the Borel side.

pub mod error;
pub mod gps;
pub mod ode;
pub mod analysis;
pub mod solver;
pub mod borel;
pub mod cli;

pub use error::{Error, Result};
