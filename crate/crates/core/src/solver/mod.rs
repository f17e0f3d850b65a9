//! Time integration of the density-transport + momentum system under the
//! structurally-enforced slip boundary conditions.

mod forcing;
mod params;
mod presets;
mod state;
mod stepper;

pub use forcing::Forcing;
pub use params::{DtPolicy, SolverParams};
pub use presets::IcPreset;
pub use state::{
    validate_initial_data, DensityBounds, FlowState, ValidationReport, DIV_TOL, TRACE_TOL,
    VALIDATION_TOL,
};
pub use stepper::{
    advect_density, density_rhs, eval_rhs, momentum_rhs, run, RhsEval, RunFailure, RunLogEntry,
    SolverError, Stepper, Trajectory,
};
