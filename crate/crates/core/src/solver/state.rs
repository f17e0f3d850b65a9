//! Flow state, initial-data validation and per-step invariants.

use serde::{Deserialize, Serialize};

use crate::spectral::{ScalarField, VectorField};

/// Density bounds recorded from the initial datum; pure transport must
/// preserve them up to truncation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DensityBounds {
    pub rho_min: f64,
    pub rho_max: f64,
}

impl DensityBounds {
    pub fn from_field(rho: &ScalarField) -> Self {
        let (rho_min, rho_max) = rho.min_max();
        DensityBounds { rho_min, rho_max }
    }

    pub fn is_valid(&self) -> bool {
        self.rho_min > 0.0 && self.rho_min <= self.rho_max
    }
}

/// The evolving solution: time plus (rho, u).
#[derive(Debug, Clone)]
pub struct FlowState {
    pub t: f64,
    pub rho: ScalarField,
    pub u: VectorField,
}

/// Residual tolerance for the structural traces and the divergence after
/// an accepted step.
pub const TRACE_TOL: f64 = 1e-12;
pub const DIV_TOL: f64 = 1e-10;

impl FlowState {
    pub fn new(t: f64, rho: ScalarField, u: VectorField) -> Self {
        FlowState { t, rho, u }
    }

    /// Check the per-step invariants: divergence within tolerance, density
    /// strictly positive, boundary traces structurally exact.
    pub fn check_invariants(&self) -> Result<(), String> {
        let div = self.u.divergence().norm_l2();
        if div > DIV_TOL {
            return Err(format!("divergence {div:.3e} exceeds {DIV_TOL:.1e}"));
        }
        let (rho_min, _) = self.rho.min_max();
        if rho_min <= 0.0 {
            return Err(format!("density positivity lost, min rho = {rho_min:.3e}"));
        }
        let traces = [
            ("u3", self.u.u3.value_trace_max()),
            ("du1/dz", self.u.u1.dz_trace_max()),
            ("du2/dz", self.u.u2.dz_trace_max()),
            ("drho/dz", self.rho.dz_trace_max()),
        ];
        for (name, v) in traces {
            if v > TRACE_TOL {
                return Err(format!("wall trace {name} = {v:.3e} exceeds {TRACE_TOL:.1e}"));
            }
        }
        Ok(())
    }
}

/// Report produced by initial-data validation. Callers decide what to do
/// with a failing report; validation itself never errors.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ValidationReport {
    /// Discrete L2 norm of div u0.
    pub divergence_l2: f64,
    /// Wall traces: no-penetration and the slip conditions on u0.
    pub u3_wall: f64,
    pub du1_dz_wall: f64,
    pub du2_dz_wall: f64,
    /// Wall trace of d rho0 / dz (compatibility condition on the density).
    pub drho_dz_wall: f64,
    pub rho_min: f64,
    pub rho_max: f64,
    pub bounds: DensityBounds,
    pub residual_tol: f64,
    pub pass: bool,
    pub failures: Vec<String>,
}

/// Residual tolerance for initial-data admission.
pub const VALIDATION_TOL: f64 = 1e-10;

/// Check that (rho0, u0) is admissible: u0 divergence-free and in the slip
/// class, rho0 compatible with the walls, and the density within the
/// declared positive bounds.
pub fn validate_initial_data(
    rho0: &ScalarField,
    u0: &VectorField,
    bounds: &DensityBounds,
) -> ValidationReport {
    let divergence_l2 = u0.divergence().norm_l2();
    let u3_wall = u0.u3.value_trace_max();
    let du1_dz_wall = u0.u1.dz_trace_max();
    let du2_dz_wall = u0.u2.dz_trace_max();
    let drho_dz_wall = rho0.dz_trace_max();
    let (rho_min, rho_max) = rho0.min_max();

    let mut failures = Vec::new();
    for (name, v) in [
        ("div u0", divergence_l2),
        ("u3 wall trace", u3_wall),
        ("du1/dz wall trace", du1_dz_wall),
        ("du2/dz wall trace", du2_dz_wall),
        ("drho0/dz wall trace", drho_dz_wall),
    ] {
        if v > VALIDATION_TOL {
            failures.push(format!("{name} = {v:.3e} exceeds {VALIDATION_TOL:.1e}"));
        }
    }
    if !bounds.is_valid() {
        failures.push(format!(
            "density bounds invalid: need 0 < rho_min <= rho_max, got [{}, {}]",
            bounds.rho_min, bounds.rho_max
        ));
    }
    if rho_min <= 0.0 {
        failures.push(format!("rho0 not strictly positive, min = {rho_min:.3e}"));
    }
    if rho_min < bounds.rho_min - 1e-12 || rho_max > bounds.rho_max + 1e-12 {
        failures.push(format!(
            "rho0 range [{rho_min:.6}, {rho_max:.6}] violates bounds [{}, {}]",
            bounds.rho_min, bounds.rho_max
        ));
    }

    ValidationReport {
        divergence_l2,
        u3_wall,
        du1_dz_wall,
        du2_dz_wall,
        drho_dz_wall,
        rho_min,
        rho_max,
        bounds: *bounds,
        residual_tol: VALIDATION_TOL,
        pass: failures.is_empty(),
        failures,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::{DomainSpec, Grid, Parity, VectorField};
    use std::f64::consts::PI;

    #[test]
    fn shear_data_passes() {
        let g = Grid::new(DomainSpec::new_2d(1.0, 8, 16).unwrap());
        let rho = ScalarField::from_fn(&g, Parity::Even, |_, _, _| 1.0);
        let u1 = ScalarField::from_fn(&g, Parity::Even, |_, _, z| (PI * z).cos());
        let u = VectorField::new(
            u1,
            ScalarField::zeros(&g, Parity::Even),
            ScalarField::zeros(&g, Parity::Odd),
        )
        .unwrap();
        let report = validate_initial_data(&rho, &u, &DensityBounds::from_field(&rho));
        assert!(report.pass, "{:?}", report.failures);
    }

    #[test]
    fn sine_density_fails_compatibility() {
        let g = Grid::new(DomainSpec::new_2d(1.0, 8, 16).unwrap());
        // Odd content in the density has a nonzero Neumann trace at the
        // walls; the report must flag the compatibility condition.
        let rho = ScalarField::from_fn(&g, Parity::Odd, |_, _, z| 1.0 + 0.3 * (PI * z).sin());
        let u = VectorField::zeros(&g);
        let bounds = DensityBounds { rho_min: 0.5, rho_max: 1.5 };
        let report = validate_initial_data(&rho, &u, &bounds);
        assert!(!report.pass);
        assert!(report.drho_dz_wall > 1e-3, "trace {}", report.drho_dz_wall);
    }

    #[test]
    fn gradient_velocity_fails_divergence() {
        let g = Grid::new(DomainSpec::new_2d(1.0, 8, 16).unwrap());
        let phi = ScalarField::from_fn(&g, Parity::Even, |x, _, z| {
            (2.0 * PI * x).cos() * (PI * z).cos()
        });
        let (gx, gy, gz) = VectorField::gradient(&phi);
        let u = VectorField::new(gx, gy, gz).unwrap();
        let rho = ScalarField::from_fn(&g, Parity::Even, |_, _, _| 1.0);
        let report = validate_initial_data(&rho, &u, &DensityBounds::from_field(&rho));
        assert!(!report.pass);
        assert!(report.divergence_l2 > 1e-3);
    }
}
