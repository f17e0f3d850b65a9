//! Time-integration parameters and the CFL policy.

use serde::{Deserialize, Serialize};

use crate::elliptic::PressureSolveParams;

/// Time-step selection policy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "policy", rename_all = "snake_case", deny_unknown_fields)]
pub enum DtPolicy {
    /// Fixed step, still shortened to land exactly on snapshot times.
    Fixed { dt: f64 },
    /// Step chosen each iteration as `safety * min(advective cap, viscous
    /// caps)`.
    CflAdaptive {
        #[serde(default = "default_safety")]
        safety: f64,
    },
}

fn default_safety() -> f64 {
    0.9
}

impl Default for DtPolicy {
    fn default() -> Self {
        DtPolicy::CflAdaptive { safety: default_safety() }
    }
}

/// Everything the stepper needs besides the state itself. `nu = 0` selects
/// the Euler path: identical code, viscous term skipped.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverParams {
    /// Viscosity, >= 0.
    pub nu: f64,
    pub dt_policy: DtPolicy,
    /// Advective CFL number: dt <= cfl_adv * h / |u|_inf.
    pub cfl_adv: f64,
    /// Viscous CFL number: dt <= cfl_visc * h^2 / nu.
    pub cfl_visc: f64,
    pub pressure: PressureSolveParams,
    /// Apply 2/3-rule truncation to products.
    pub dealias: bool,
    pub t_end: f64,
    /// The run is flagged (not aborted) when ||rho||_3 + ||u||_3 grows past
    /// this multiple of its initial value.
    pub norm_growth_limit: f64,
}

impl Default for SolverParams {
    fn default() -> Self {
        SolverParams {
            nu: 0.0,
            dt_policy: DtPolicy::default(),
            cfl_adv: 0.5,
            cfl_visc: 0.4,
            pressure: PressureSolveParams::default(),
            dealias: true,
            t_end: 1.0,
            norm_growth_limit: 10.0,
        }
    }
}

impl SolverParams {
    pub fn validate(&self) -> Result<(), String> {
        if self.nu < 0.0 {
            return Err(format!("viscosity must be >= 0, got {}", self.nu));
        }
        if self.t_end < 0.0 {
            return Err(format!("t_end must be >= 0, got {}", self.t_end));
        }
        if self.cfl_adv <= 0.0 || self.cfl_visc <= 0.0 {
            return Err("CFL numbers must be positive".into());
        }
        if self.norm_growth_limit <= 1.0 {
            return Err("norm_growth_limit must exceed 1".into());
        }
        match self.dt_policy {
            DtPolicy::Fixed { dt } => {
                if dt <= 0.0 {
                    return Err(format!("fixed dt must be positive, got {dt}"));
                }
            }
            DtPolicy::CflAdaptive { safety } => {
                if !(safety > 0.0 && safety <= 1.0) {
                    return Err(format!("CFL safety factor must lie in (0, 1], got {safety}"));
                }
            }
        }
        self.pressure.validate()
    }
}
