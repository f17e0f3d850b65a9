//! Shared manufactured-solution machinery for verification tests.
//!
//! Viscosity-free forced flow with closed-form (rho*, u*): see
//! `Manufactured` below. Used by the temporal-order acceptance criterion
//! and the spatial-accuracy integration test.

use std::f64::consts::PI;
use std::sync::Arc;

use vvlab_core::elliptic::PressureSolveParams;
use vvlab_core::solver::{run, DtPolicy, FlowState, Forcing, SolverParams};
use vvlab_core::spectral::{DomainSpec, Grid, Parity, ScalarField};

/// Manufactured time-dependent solution (viscosity zero, forced):
///
///   psi* = s sin(2 pi x) sin(pi z),  u* = A(t) (dz psi*, 0, -dx psi*)
///   rho* = 1 + r cos(2 pi x) cos(pi z) B(t)
///
/// with A(t) = 1 + 0.5 sin(3t), B(t) = cos(3t). The momentum force
/// rho*(du*/dt + u*.grad u*) and the transport source
/// drho*/dt + u*.grad rho* make (rho*, u*) an exact solution.
pub struct Manufactured {
    pub s: f64,
    pub r: f64,
}

impl Manufactured {
    fn a(t: f64) -> f64 {
        1.0 + 0.5 * (3.0 * t).sin()
    }
    fn a_dot(t: f64) -> f64 {
        1.5 * (3.0 * t).cos()
    }
    fn b(t: f64) -> f64 {
        (3.0 * t).cos()
    }
    fn b_dot(t: f64) -> f64 {
        -3.0 * (3.0 * t).sin()
    }

    fn velocity(&self, x: f64, z: f64, t: f64) -> (f64, f64) {
        let a = Self::a(t);
        let u1 = a * PI * self.s * (2.0 * PI * x).sin() * (PI * z).cos();
        let u3 = -a * 2.0 * PI * self.s * (2.0 * PI * x).cos() * (PI * z).sin();
        (u1, u3)
    }

    fn density_at(&self, x: f64, z: f64, t: f64) -> f64 {
        1.0 + self.r * (2.0 * PI * x).cos() * (PI * z).cos() * Self::b(t)
    }
}

impl Forcing for Manufactured {
    fn density(&self, x: f64, _y: f64, z: f64, t: f64) -> f64 {
        let (s2, c2) = ((2.0 * PI * x).sin(), (2.0 * PI * x).cos());
        let (s1, c1) = ((PI * z).sin(), (PI * z).cos());
        let a = Self::a(t);
        let b = Self::b(t);
        self.r * c2 * c1 * Self::b_dot(t)
            + 2.0 * PI * PI * self.r * self.s * a * b * (c2 * c2 * s1 * s1 - s2 * s2 * c1 * c1)
    }

    fn momentum(&self, x: f64, _y: f64, z: f64, t: f64) -> [f64; 3] {
        let (s2, c2) = ((2.0 * PI * x).sin(), (2.0 * PI * x).cos());
        let (s1, c1) = ((PI * z).sin(), (PI * z).cos());
        let a = Self::a(t);
        let adot = Self::a_dot(t);
        let rho = self.density_at(x, z, t);
        let pi3s2 = PI * PI * PI * self.s * self.s;
        // du*/dt + u*.grad u*, then times rho*.
        let f1 = adot * PI * self.s * s2 * c1 + a * a * pi3s2 * (4.0 * PI * x).sin();
        let f3 = -adot * 2.0 * PI * self.s * c2 * s1 + a * a * 2.0 * pi3s2 * (2.0 * PI * z).sin();
        [rho * f1, 0.0, rho * f3]
    }
}

/// L2 error of the forced run against the manufactured solution at the
/// final time, for each step size.
#[allow(dead_code)]
pub fn manufactured_errors(dts: &[f64]) -> Result<Vec<f64>, String> {
    manufactured_errors_at(32, dts, 0.3)
}

/// As `manufactured_errors` with the grid resolution and horizon exposed.
#[allow(dead_code)]
pub fn manufactured_errors_at(n: usize, dts: &[f64], t_end: f64) -> Result<Vec<f64>, String> {
    manufactured_errors_with(n, dts, t_end, 0.1, 0.2)
}

/// Fully parameterized variant: streamfunction and density amplitudes
/// control how much spectral tail the coefficient 1/rho* carries.
#[allow(dead_code)]
pub fn manufactured_errors_with(
    n: usize,
    dts: &[f64],
    t_end: f64,
    s_amp: f64,
    r_amp: f64,
) -> Result<Vec<f64>, String> {
    let grid = Grid::new(DomainSpec::new_2d(1.0, n, n).map_err(|e| e.to_string())?);
    let m = Arc::new(Manufactured { s: s_amp, r: r_amp });

    let rho0 = ScalarField::from_fn(&grid, Parity::Even, |x, _, z| m.density_at(x, z, 0.0));
    let u10 = ScalarField::from_fn(&grid, Parity::Even, |x, _, z| m.velocity(x, z, 0.0).0);
    let u30 = ScalarField::from_fn(&grid, Parity::Odd, |x, _, z| m.velocity(x, z, 0.0).1);
    let u0 =
        vvlab_core::spectral::VectorField::new(u10, ScalarField::zeros(&grid, Parity::Even), u30)
            .map_err(|e| e.to_string())?;
    let state0 = FlowState::new(0.0, rho0, u0);

    let rho_star = ScalarField::from_fn(&grid, Parity::Even, |x, _, z| m.density_at(x, z, t_end));
    let u1_star = ScalarField::from_fn(&grid, Parity::Even, |x, _, z| m.velocity(x, z, t_end).0);
    let u3_star = ScalarField::from_fn(&grid, Parity::Odd, |x, _, z| m.velocity(x, z, t_end).1);

    let mut errors = Vec::new();
    for &dt in dts {
        let params = SolverParams {
            nu: 0.0,
            dt_policy: DtPolicy::Fixed { dt },
            t_end,
            pressure: PressureSolveParams { rel_tol: 1e-11, max_iter: 400, precond_coeff: None },
            ..SolverParams::default()
        };
        let forcing: Arc<dyn Forcing> = m.clone();
        let traj = run(&state0, &params, &[t_end], Some(forcing)).map_err(|e| e.to_string())?;
        let s = traj.states.last().unwrap();
        let e_rho = s.rho.sub(&rho_star).norm_l2();
        let e_u1 = s.u.u1.sub(&u1_star).norm_l2();
        let e_u3 = s.u.u3.sub(&u3_star).norm_l2();
        errors.push((e_rho * e_rho + e_u1 * e_u1 + e_u3 * e_u3).sqrt());
    }
    Ok(errors)
}
