//! Stochastic pseudo-spectral Navier-Stokes on the periodic box, with
//! estimators for third-order structure functions and exact
//! Karman-Howarth-Monin balance checks.

pub mod cli;
pub mod error;
pub mod forcing;
pub mod integrator;
pub mod io;
pub mod khm;
pub mod special;
pub mod spectral;
pub mod stats;

pub use error::{Error, Result};
