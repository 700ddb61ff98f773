//! Polyanalytic Ginibre ensembles.
//!
//! Reproducing kernels of the full and pure polyanalytic polynomial spaces,
//! exact sampling of the associated determinantal point processes, linear
//! statistics with their cumulants, and the limiting-variance predictions
//! (bulk Dirichlet term plus boundary `H^{1/2}` term).

pub mod error;
pub mod kernels;
pub mod polyalg;
pub mod sampler;
pub mod special;
pub mod statistics;
pub mod theory;
pub mod verify;

pub use error::{Error, Result};
