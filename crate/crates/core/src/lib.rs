//! Adaptive convolution-type denoisers for signals close to shift-invariant
//! subspaces.
//!
//! Filters are fitted by least squares with an `ℓ1` constraint or penalty on
//! their unitary DFT, then applied by convolution. The crate also builds the
//! oracle filters these estimators compete with and a seeded Monte Carlo
//! harness for measuring risk.

pub mod conv;
pub mod error;
pub mod estimators;
pub mod fourier;
pub mod harness;
pub mod io;
pub mod oracles;
pub mod par;
pub mod signal;
pub mod solvers;

pub use error::{Error, Result};
pub use signal::{Domain, Signal, Space, C64};
