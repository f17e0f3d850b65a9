//! Pseudospectral solver for the 3D nonhomogeneous incompressible
//! Navier-Stokes equations in a flat-walled channel with slip boundary
//! conditions, together with a vanishing-viscosity laboratory that
//! measures the convergence rate toward the inviscid solution.
//!
//! Organization:
//!
//! - [`spectral`] — grid, parity-aware transforms, differentiation,
//!   dealiasing, constant-coefficient inverse Laplacian.
//! - [`elliptic`] — variable-coefficient pressure solve and the Leray
//!   projector.
//! - [`solver`] — SSP Runge-Kutta time integration of the coupled
//!   density + momentum system; initial-condition presets.
//! - [`diagnostics`] — Sobolev norms, vorticity, boundary-trace
//!   residuals, energy budget.
//! - [`sweep`] — the vanishing-viscosity experiment: viscosity sweeps,
//!   rate fitting, report emission.
//! - [`snapshot`] — field snapshot file format.
//! - [`config`] — strict-schema run configuration.

pub mod config;
pub mod diagnostics;
pub mod elliptic;
pub mod snapshot;
pub mod solver;
pub mod spectral;
pub mod sweep;

/// Version string embedded in reports.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
