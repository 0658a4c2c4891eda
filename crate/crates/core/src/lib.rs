//! Pseudo-spectral simulator for the 2D barotropic compressible
//! Navier-Stokes equations on the unit torus with density-dependent bulk
//! viscosity (lambda = rho^beta, P = rho^gamma), together with a diagnostics
//! and verification harness for the functional quantities the model's
//! analysis monitors: energy balance, effective viscous flux, Riesz
//! commutators, density bounds, and large-time decay.

pub mod config;
pub mod diagnostics;
pub mod dynamics;
pub mod error;
pub mod field;
pub mod grid;
pub mod ineq;
pub mod output;
pub mod random;
pub mod spectral;
pub mod state;
pub mod verify;

pub use error::{Error, Result, TerminalStatus};
pub use field::{RealField, SpectralField, VectorField};
pub use grid::Grid;
pub use spectral::Axis;
pub use state::{FluidState, InitConfig, Params};

/// Crate version string recorded in manifests and checkpoints.
pub fn artifact_version() -> &'static str {
    env!("CARGO_PKG_VERSION")
}
