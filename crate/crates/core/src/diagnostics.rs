//! Discrete Sobolev norms, vorticity, boundary-trace residuals and the
//! kinetic energy budget.
//!
//! Norms use the spectral multiplier (1 + |k|^2)^s, which is exact on the
//! basis and resolution-independent; `H^0` coincides with the L2 norm of
//! the physical field. The Laplacian seminorm (|k|^4 weight at s = 2)
//! doubles as the `psi = -lap u` magnitude, so no separate machinery is
//! kept for it.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::solver::FlowState;
use crate::spectral::{Axis3, Grid, Parity, ScalarField, VectorField};

#[derive(Debug, Error)]
pub enum NormError {
    #[error("unsupported Sobolev order {0}; supported orders are 0..=3")]
    UnsupportedOrder(u32),
}

/// Which Sobolev functional to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NormKind {
    /// Full norm: weight (1 + |k|^2)^s.
    Full,
    /// Seminorm: weight |k|^(2s).
    Seminorm,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormSpec {
    pub order: u32,
    pub kind: NormKind,
}

impl NormSpec {
    pub fn full(order: u32) -> Self {
        NormSpec { order, kind: NormKind::Full }
    }

    pub fn validate(&self) -> Result<(), NormError> {
        if self.order > 3 {
            return Err(NormError::UnsupportedOrder(self.order));
        }
        Ok(())
    }
}

/// Squared Sobolev norm of a scalar field.
pub fn sobolev_norm_sq(f: &ScalarField, spec: NormSpec) -> Result<f64, NormError> {
    spec.validate()?;
    let grid = f.grid();
    let (nz, ny, nx) = grid.shape();
    let area = grid.domain.lx * grid.domain.ly;
    let mut sum = 0.0;
    for m in 0..nz {
        let wz = Grid::z_mode_weight(f.parity(), m);
        for j in 0..ny {
            for i in 0..nx {
                let k2 = grid.k_squared(m, j, i);
                let w = match spec.kind {
                    NormKind::Full => (1.0 + k2).powi(spec.order as i32),
                    NormKind::Seminorm => k2.powi(spec.order as i32),
                };
                sum += wz * w * f.coeffs()[[m, j, i]].norm_sqr();
            }
        }
    }
    Ok(area * sum)
}

/// Sobolev norm of a scalar field.
pub fn sobolev_norm(f: &ScalarField, spec: NormSpec) -> Result<f64, NormError> {
    Ok(sobolev_norm_sq(f, spec)?.sqrt())
}

/// Squared Sobolev norm of a vector field (sum over components).
pub fn sobolev_norm_sq_vec(u: &VectorField, spec: NormSpec) -> Result<f64, NormError> {
    let mut sum = 0.0;
    for c in u.components() {
        sum += sobolev_norm_sq(c, spec)?;
    }
    Ok(sum)
}

pub fn sobolev_norm_vec(u: &VectorField, spec: NormSpec) -> Result<f64, NormError> {
    Ok(sobolev_norm_sq_vec(u, spec)?.sqrt())
}

/// Vorticity `omega = curl u`. For a slip-compatible velocity the component
/// parities come out (Odd, Odd, Even): the tangential components vanish at
/// the walls exactly, the discrete form of the slip condition on the curl.
#[derive(Debug, Clone)]
pub struct Vorticity {
    pub w1: ScalarField,
    pub w2: ScalarField,
    pub w3: ScalarField,
}

impl Vorticity {
    pub fn components(&self) -> [&ScalarField; 3] {
        [&self.w1, &self.w2, &self.w3]
    }
}

pub fn vorticity(u: &VectorField) -> Vorticity {
    let w1 = u.u3.derivative(Axis3::Y).sub(&u.u2.derivative(Axis3::Z));
    let w2 = u.u1.derivative(Axis3::Z).sub(&u.u3.derivative(Axis3::X));
    let w3 = u.u2.derivative(Axis3::X).sub(&u.u1.derivative(Axis3::Y));
    Vorticity { w1, w2, w3 }
}

/// Max-abs wall traces of every boundary quantity the slip structure pins:
/// the velocity and density traces of the boundary conditions, the
/// tangential vorticity, and the tangential trace of
/// `rho (u . grad omega - omega . grad u)` from the vorticity equation.
///
/// Traces are evaluated from each field's own parity tag with exact
/// endpoint basis values, so structurally valid states report exact zeros
/// while corrupted states (wrong parity content) report the true residual.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BoundaryReport {
    /// u . n at the walls.
    pub u3_wall: f64,
    /// d u1 / dz at the walls.
    pub du1_dz_wall: f64,
    /// d u2 / dz at the walls.
    pub du2_dz_wall: f64,
    /// d rho / dz at the walls (density compatibility).
    pub drho_dz_wall: f64,
    /// Tangential vorticity traces.
    pub omega1_wall: f64,
    pub omega2_wall: f64,
    /// Tangential trace of rho (u . grad omega - omega . grad u); absent
    /// when the velocity parities are corrupted and the identity has no
    /// single-parity representation.
    pub vorticity_identity_wall: Option<f64>,
}

impl BoundaryReport {
    /// Largest of the six structural residuals (the vorticity identity is
    /// reported separately as a diagnostic).
    pub fn max_structural(&self) -> f64 {
        self.u3_wall
            .max(self.du1_dz_wall)
            .max(self.du2_dz_wall)
            .max(self.drho_dz_wall)
            .max(self.omega1_wall)
            .max(self.omega2_wall)
    }
}

pub fn boundary_residuals(state: &FlowState) -> BoundaryReport {
    boundary_residuals_parts(&state.rho, &state.u, true)
}

/// As `boundary_residuals` but usable on bare fields; `with_identity`
/// controls whether the (more expensive) vorticity-identity trace is
/// evaluated.
pub fn boundary_residuals_parts(
    rho: &ScalarField,
    u: &VectorField,
    with_identity: bool,
) -> BoundaryReport {
    use crate::spectral::Wall;

    // Curl traces assembled on wall planes term by term: traces are linear,
    // so this stays well-defined for deliberately corrupted parities where
    // a typed curl would not.
    let trace_of_difference = |a: &ScalarField, b: &ScalarField| -> f64 {
        let grid = a.grid();
        Wall::BOTH
            .iter()
            .map(|&wall| {
                let pa = grid.value_trace_plane(a.coeffs(), a.parity(), wall);
                let pb = grid.value_trace_plane(b.coeffs(), b.parity(), wall);
                grid.wall_plane_max(pa - pb)
            })
            .fold(0.0, f64::max)
    };
    let omega1_wall =
        trace_of_difference(&u.u3.derivative(Axis3::Y), &u.u2.derivative(Axis3::Z));
    let omega2_wall =
        trace_of_difference(&u.u1.derivative(Axis3::Z), &u.u3.derivative(Axis3::X));

    let canonical = u.u1.parity() == Parity::Even
        && u.u2.parity() == Parity::Even
        && u.u3.parity() == Parity::Odd;
    let identity = if with_identity && canonical {
        let w = vorticity(u);
        let g = vorticity_identity_field(rho, u, &w);
        Some(g.0.value_trace_max().max(g.1.value_trace_max()))
    } else {
        None
    };
    BoundaryReport {
        u3_wall: u.u3.value_trace_max(),
        du1_dz_wall: u.u1.dz_trace_max(),
        du2_dz_wall: u.u2.dz_trace_max(),
        drho_dz_wall: rho.dz_trace_max(),
        omega1_wall,
        omega2_wall,
        vorticity_identity_wall: identity,
    }
}

/// Tangential components of `rho (u . grad omega - omega . grad u)`.
fn vorticity_identity_field(
    rho: &ScalarField,
    u: &VectorField,
    w: &Vorticity,
) -> (ScalarField, ScalarField) {
    let mut tangential = Vec::with_capacity(2);
    for comp in [&w.w1, &w.w2] {
        let mut acc = ScalarField::zeros(u.grid(), comp.parity());
        for (vel, axis) in u.components().into_iter().zip([Axis3::X, Axis3::Y, Axis3::Z]) {
            if vel.max_coeff() > 0.0 {
                acc = acc.add(&vel.multiply(&comp.derivative(axis), true));
            }
        }
        tangential.push(acc);
    }
    // omega . grad u, tangential components
    for (idx, comp) in [&u.u1, &u.u2].into_iter().enumerate() {
        let mut acc = ScalarField::zeros(u.grid(), tangential[idx].parity());
        for (wc, axis) in w.components().into_iter().zip([Axis3::X, Axis3::Y, Axis3::Z]) {
            if wc.max_coeff() > 0.0 {
                acc = acc.add(&wc.multiply(&comp.derivative(axis), true));
            }
        }
        tangential[idx] = tangential[idx].sub(&acc);
    }
    let g2 = rho.multiply(&tangential[1], true);
    let g1 = rho.multiply(&tangential[0], true);
    (g1, g2)
}

/// Kinetic energy `0.5 * integral rho |u|^2` via collocation quadrature.
pub fn kinetic_energy(rho: &ScalarField, u: &VectorField) -> f64 {
    let grid = rho.grid();
    let rv = rho.to_values();
    let v1 = u.u1.to_values();
    let v2 = u.u2.to_values();
    let v3 = u.u3.to_values();
    let mut sum = 0.0;
    for (((r, a), b), c) in rv.iter().zip(v1.iter()).zip(v2.iter()).zip(v3.iter()) {
        sum += r * (a * a + b * b + c * c);
    }
    0.5 * sum * grid.domain.volume() / grid.domain.len() as f64
}

/// Viscous dissipation rate `nu * integral |grad u|^2`.
pub fn dissipation_rate(u: &VectorField, nu: f64) -> f64 {
    if nu == 0.0 {
        return 0.0;
    }
    let mut sum = 0.0;
    for comp in u.components() {
        for axis in [Axis3::X, Axis3::Y, Axis3::Z] {
            let d = comp.derivative(axis);
            let n = d.norm_l2();
            sum += n * n;
        }
    }
    nu * sum
}

/// One window of the discrete energy budget.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EnergyBudget {
    pub t_start: f64,
    pub t_end: f64,
    /// Kinetic energy at the window end.
    pub kinetic: f64,
    /// Dissipation rate at the window end.
    pub dissipation_rate: f64,
    /// |E(t2) - E(t1) + trapezoid integral of the dissipation|.
    pub imbalance: f64,
}

/// Energy budget along a trajectory of states; windows are consecutive
/// snapshot pairs, dissipation integrated with the trapezoid rule.
pub fn energy_budget(traj: &[FlowState], nu: f64) -> Vec<EnergyBudget> {
    assert!(traj.len() >= 2, "energy budget needs at least two snapshots");
    let mut out = Vec::with_capacity(traj.len() - 1);
    let mut prev_e = kinetic_energy(&traj[0].rho, &traj[0].u);
    let mut prev_d = dissipation_rate(&traj[0].u, nu);
    let mut prev_t = traj[0].t;
    for state in &traj[1..] {
        let e = kinetic_energy(&state.rho, &state.u);
        let d = dissipation_rate(&state.u, nu);
        let dt = state.t - prev_t;
        let imbalance = (e - prev_e + 0.5 * dt * (d + prev_d)).abs();
        out.push(EnergyBudget {
            t_start: prev_t,
            t_end: state.t,
            kinetic: e,
            dissipation_rate: d,
            imbalance,
        });
        prev_e = e;
        prev_d = d;
        prev_t = state.t;
    }
    out
}

/// Trajectory-level CSV: one row per state with the kinetic energy, the
/// dissipation rate and the state residuals (divergence and the largest
/// structural wall trace).
pub fn trajectory_csv(traj: &[FlowState], nu: f64) -> String {
    let mut out = String::from("t,kinetic_energy,dissipation_rate,divergence_l2,wall_trace_max\n");
    for state in traj {
        let report = boundary_residuals_parts(&state.rho, &state.u, false);
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            state.t,
            kinetic_energy(&state.rho, &state.u),
            dissipation_rate(&state.u, nu),
            state.u.divergence().norm_l2(),
            report.max_structural(),
        ));
    }
    out
}

/// `||rho||_3 + ||u||_3`, the quantity the uniform-in-viscosity bound
/// controls.
pub fn h3_monitor(rho: &ScalarField, u: &VectorField) -> f64 {
    let spec = NormSpec::full(3);
    sobolev_norm(rho, spec).expect("order 3 supported")
        + sobolev_norm_vec(u, spec).expect("order 3 supported")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::DomainSpec;
    use std::f64::consts::PI;
    use std::sync::Arc;

    fn grid() -> Arc<Grid> {
        Grid::new(DomainSpec::new_2d(1.0, 16, 16).unwrap())
    }

    #[test]
    fn constant_norm_is_sqrt_volume_for_every_order() {
        let g = Grid::new(DomainSpec::new_3d(2.0, 1.5, 8, 8, 8).unwrap());
        let c = 2.5;
        let f = ScalarField::from_fn(&g, Parity::Even, |_, _, _| c);
        let expect = c * g.domain.volume().sqrt();
        for s in 0..=3 {
            let n = sobolev_norm(&f, NormSpec::full(s)).unwrap();
            assert!((n - expect).abs() < 1e-12, "order {s}: {n} vs {expect}");
        }
    }

    #[test]
    fn cosine_norms_match_hand_computation() {
        let g = grid();
        let a = 1.7;
        let f = ScalarField::from_fn(&g, Parity::Even, |_, _, z| a * (PI * z).cos());
        let v = g.domain.volume();
        let h0 = sobolev_norm_sq(&f, NormSpec::full(0)).unwrap();
        assert!((h0 - a * a * v / 2.0).abs() < 1e-12);
        let h2 = sobolev_norm_sq(&f, NormSpec::full(2)).unwrap();
        let expect = (1.0 + PI * PI).powi(2) * a * a * v / 2.0;
        assert!((h2 - expect).abs() < 1e-9 * expect.abs());
    }

    #[test]
    fn parseval_matches_collocation_quadrature() {
        let g = grid();
        let f = ScalarField::from_fn(&g, Parity::Even, |x, _, z| {
            0.3 + (2.0 * PI * x).sin() * (2.0 * PI * z).cos() + 0.1 * (PI * z).cos()
        });
        let h0 = sobolev_norm_sq(&f, NormSpec::full(0)).unwrap();
        let vals = f.to_values();
        let quad: f64 = vals.iter().map(|v| v * v).sum::<f64>() * g.domain.volume()
            / g.domain.len() as f64;
        assert!((h0 - quad).abs() < 1e-12, "{h0} vs {quad}");
    }

    #[test]
    fn norm_monotone_in_order() {
        let g = grid();
        let f = ScalarField::from_fn(&g, Parity::Even, |x, _, z| {
            (2.0 * PI * x).cos() * (3.0 * PI * z).cos() + 0.2
        });
        let mut prev = 0.0;
        for s in 0..=3 {
            let n = sobolev_norm(&f, NormSpec::full(s)).unwrap();
            assert!(n >= prev);
            prev = n;
        }
    }

    #[test]
    fn rejects_order_above_three() {
        let g = grid();
        let f = ScalarField::zeros(&g, Parity::Even);
        assert!(sobolev_norm(&f, NormSpec::full(4)).is_err());
    }

    #[test]
    fn vorticity_of_shear_is_analytic() {
        let g = grid();
        let a = 0.9;
        let u1 = ScalarField::from_fn(&g, Parity::Even, |_, _, z| a * (PI * z).cos());
        let u = VectorField::new(
            u1,
            ScalarField::zeros(&g, Parity::Even),
            ScalarField::zeros(&g, Parity::Odd),
        )
        .unwrap();
        let w = vorticity(&u);
        // omega = (0, -a pi sin(pi z), 0)
        let expect = ScalarField::from_fn(&g, Parity::Odd, |_, _, z| -a * PI * (PI * z).sin());
        assert!(w.w1.max_coeff() < 1e-13);
        assert!(w.w2.sub(&expect).max_coeff() < 1e-11);
        assert!(w.w3.max_coeff() < 1e-13);
        assert_eq!(w.w1.parity(), Parity::Odd);
        assert_eq!(w.w2.parity(), Parity::Odd);
        assert_eq!(w.w3.parity(), Parity::Even);
    }

    #[test]
    fn vorticity_of_gradient_vanishes() {
        let g = grid();
        let phi = ScalarField::from_fn(&g, Parity::Even, |x, _, z| {
            (2.0 * PI * x).cos() * (PI * z).cos()
        });
        let (gx, gy, gz) = VectorField::gradient(&phi);
        let u = VectorField::new(gx, gy, gz).unwrap();
        let w = vorticity(&u);
        for c in w.components() {
            assert!(c.max_coeff() < 1e-12);
        }
    }

    #[test]
    fn curl_is_divergence_free() {
        let g = grid();
        let psi = ScalarField::from_fn(&g, Parity::Odd, |x, _, z| {
            (2.0 * PI * x).sin() * (2.0 * PI * z).sin()
        });
        let u1 = psi.derivative(Axis3::Z);
        let u3 = psi.derivative(Axis3::X).scale(-1.0);
        let u = VectorField::new(u1, ScalarField::zeros(&g, Parity::Even), u3).unwrap();
        let w = vorticity(&u);
        let div = w.w1.derivative(Axis3::X).add(&w.w2.derivative(Axis3::Y)).add(&w.w3.derivative(Axis3::Z));
        assert!(div.max_coeff() < 1e-10);
    }

    #[test]
    fn leray_commutes_with_vorticity() {
        let g = grid();
        // Arbitrary slip-compatible field, not divergence-free.
        let u1 = ScalarField::from_fn(&g, Parity::Even, |x, _, z| {
            (2.0 * PI * x).sin() * (2.0 * PI * z).cos()
        });
        let u3 = ScalarField::from_fn(&g, Parity::Odd, |x, _, z| {
            0.4 * (2.0 * PI * x).cos() * (PI * z).sin()
        });
        let u = VectorField::new(u1, ScalarField::zeros(&g, Parity::Even), u3).unwrap();
        let w_before = vorticity(&u);
        let w_after = vorticity(&crate::elliptic::leray_project(&u));
        for (a, b) in w_before.components().iter().zip(w_after.components()) {
            assert!(a.sub(b).max_coeff() < 1e-12);
        }
    }
}
