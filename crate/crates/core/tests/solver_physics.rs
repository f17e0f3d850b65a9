//! Physics-level checks of the stepper against closed-form solutions.

use std::f64::consts::PI;
use std::sync::Arc;

use vvlab_core::diagnostics::{self, boundary_residuals_parts, energy_budget};
use vvlab_core::elliptic::leray_project;
use vvlab_core::solver::{
    advect_density, momentum_rhs, run, DtPolicy, FlowState, IcPreset, SolverError, SolverParams,
};
use vvlab_core::spectral::{DomainSpec, Grid, Parity, ScalarField, VectorField};

fn grid_2d(nx: usize, nz: usize) -> Arc<Grid> {
    Grid::new(DomainSpec::new_2d(1.0, nx, nz).unwrap())
}

fn shear_state(grid: &Arc<Grid>, amplitude: f64) -> FlowState {
    let (rho, u) = IcPreset::ShearDecay { amplitude, rho0: 1.0 }.build(grid);
    FlowState::new(0.0, rho, u)
}

fn fixed_params(nu: f64, dt: f64, t_end: f64) -> SolverParams {
    SolverParams { nu, dt_policy: DtPolicy::Fixed { dt }, t_end, ..SolverParams::default() }
}

#[test]
fn viscous_shear_decays_at_the_analytic_rate() {
    let grid = grid_2d(4, 32);
    let state0 = shear_state(&grid, 1.0);
    let nu = 0.01;
    let t_end = 0.25;
    let params = fixed_params(nu, 1e-3, t_end);
    let traj = run(&state0, &params, &[t_end], None).unwrap();
    let final_state = traj.states.last().unwrap();

    let expected = ScalarField::from_fn(&grid, Parity::Even, |_, _, z| {
        (-nu * PI * PI * t_end).exp() * (PI * z).cos()
    });
    let err_vals = final_state.u.u1.sub(&expected).to_values();
    let max_err = err_vals.iter().map(|v| v.abs()).fold(0.0, f64::max);
    assert!(max_err < 1e-7, "shear decay error {max_err}");
    assert!(final_state.u.u3.max_coeff() < 1e-12);
}

#[test]
fn inviscid_shear_is_a_steady_state() {
    let grid = grid_2d(4, 32);
    let state0 = shear_state(&grid, 1.0);
    let params = fixed_params(0.0, 1e-2, 0.2);
    let traj = run(&state0, &params, &[0.2], None).unwrap();
    let final_state = traj.states.last().unwrap();
    let drift = final_state.u.u1.sub(&state0.u.u1).max_coeff();
    assert!(drift < 1e-12, "steady Euler shear drifted by {drift}");
}

#[test]
fn momentum_rhs_of_shear_matches_viscous_decay() {
    let grid = grid_2d(4, 32);
    let amplitude = 0.8;
    let state = shear_state(&grid, amplitude);
    let nu = 0.05;
    let params = SolverParams { nu, ..SolverParams::default() };
    let rhs = momentum_rhs(&state, nu, &params).unwrap();
    // rho = 1, u . grad u = 0, p = 0: du/dt = -nu pi^2 A cos(pi z).
    let expected = ScalarField::from_fn(&grid, Parity::Even, |_, _, z| {
        -nu * PI * PI * amplitude * (PI * z).cos()
    });
    assert!(rhs.u1.sub(&expected).max_coeff() < 1e-9);
    assert!(rhs.u3.max_coeff() < 1e-12);

    let rhs_euler = momentum_rhs(&state, 0.0, &params).unwrap();
    assert!(rhs_euler.u1.max_coeff() < 1e-12, "steady Euler shear has zero RHS");
}

#[test]
fn constant_density_reduces_to_leray_projected_rhs() {
    // With rho identically 1 the variable-density path must agree with the
    // classical projection form P(-u.grad u) + nu lap u.
    let grid = grid_2d(16, 16);
    let nu = 0.02;
    let (_, u) = IcPreset::RandomSmooth {
        seed: 11,
        decay: 5.0,
        u_amp: 0.5,
        rho_base: 1.0,
        rho_amp: 0.0,
    }
    .build(&grid);
    let rho = ScalarField::from_fn(&grid, Parity::Even, |_, _, _| 1.0);
    let state = FlowState::new(0.0, rho, u.clone());
    let params = SolverParams { nu, ..SolverParams::default() };
    let rhs = momentum_rhs(&state, nu, &params).unwrap();

    let adv = vvlab_core::elliptic::convective_term(&u, true);
    let mut oracle = leray_project(&adv.scale(-1.0));
    oracle.u1.axpy(nu, &u.u1.laplacian());
    oracle.u2.axpy(nu, &u.u2.laplacian());
    oracle.u3.axpy(nu, &u.u3.laplacian());

    for (a, b) in rhs.components().iter().zip(oracle.components()) {
        let diff = a.sub(b).norm_l2();
        assert!(diff < 1e-9, "constant-density reduction differs by {diff}");
    }
}

#[test]
fn density_translates_with_uniform_velocity() {
    let grid = grid_2d(16, 8);
    let c = 1.0;
    let rho0 = ScalarField::from_fn(&grid, Parity::Even, |x, _, _| 1.5 + (2.0 * PI * x).cos());
    let u1 = ScalarField::from_fn(&grid, Parity::Even, |_, _, _| c);
    let u = VectorField::new(
        u1,
        ScalarField::zeros(&grid, Parity::Even),
        ScalarField::zeros(&grid, Parity::Odd),
    )
    .unwrap();
    let state0 = FlowState::new(0.0, rho0, u);
    let t_end = 0.25;
    let params = fixed_params(0.0, 5e-4, t_end);
    let traj = run(&state0, &params, &[t_end], None).unwrap();
    let expected = ScalarField::from_fn(&grid, Parity::Even, |x, _, _| {
        1.5 + (2.0 * PI * (x - c * t_end)).cos()
    });
    let err = traj.states[0].rho.sub(&expected).to_values();
    let max_err = err.iter().map(|v| v.abs()).fold(0.0, f64::max);
    assert!(max_err < 1e-8, "translated density error {max_err}");
}

#[test]
fn advect_density_identity_with_zero_velocity() {
    let grid = grid_2d(8, 8);
    let rho = ScalarField::from_fn(&grid, Parity::Even, |x, _, z| {
        1.0 + 0.2 * (2.0 * PI * x).cos() * (PI * z).cos()
    });
    let state = FlowState::new(0.0, rho.clone(), VectorField::zeros(&grid));
    let advanced = advect_density(&state, 0.1);
    assert!(advanced.sub(&rho).max_coeff() < 1e-15);
}

#[test]
fn density_mean_is_conserved_over_many_steps() {
    let grid = grid_2d(16, 16);
    let (rho, u) =
        IcPreset::StratifiedVortex { rho_base: 1.0, rho_amp: 0.3, psi_amp: 0.05 }.build(&grid);
    let mean0 = rho.mean();
    let state0 = FlowState::new(0.0, rho, u);
    let dt = 2e-3;
    let params = fixed_params(0.0, dt, 100.0 * dt);
    let traj = run(&state0, &params, &[], None).unwrap();
    let drift = (traj.states.last().unwrap().rho.mean() - mean0).abs();
    assert!(drift < 1e-12, "mean density drifted by {drift} over 100 steps");
    for entry in &traj.log {
        assert!((entry.rho_mean - mean0).abs() < 1e-12);
    }
}

#[test]
fn kinetic_energy_non_increasing_for_viscous_stratified_run() {
    let grid = grid_2d(32, 32);
    let (rho, u) =
        IcPreset::StratifiedVortex { rho_base: 1.0, rho_amp: 0.3, psi_amp: 0.05 }.build(&grid);
    let state0 = FlowState::new(0.0, rho, u);
    let params = fixed_params(0.05, 1e-3, 0.1);
    let traj = run(&state0, &params, &[], None).unwrap();
    let mut prev = f64::INFINITY;
    for entry in &traj.log {
        assert!(
            entry.kinetic_energy <= prev + 1e-12,
            "energy increased: {} -> {}",
            prev,
            entry.kinetic_energy
        );
        prev = entry.kinetic_energy;
    }
}

#[test]
fn runs_are_bit_deterministic() {
    let grid = grid_2d(16, 16);
    let (rho, u) = IcPreset::RandomSmooth {
        seed: 3,
        decay: 4.0,
        u_amp: 0.3,
        rho_base: 1.0,
        rho_amp: 0.2,
    }
    .build(&grid);
    let state0 = FlowState::new(0.0, rho, u);
    let params = SolverParams {
        nu: 1e-3,
        t_end: 0.05,
        ..SolverParams::default()
    };
    let a = run(&state0, &params, &[0.025, 0.05], None).unwrap();
    let b = run(&state0, &params, &[0.025, 0.05], None).unwrap();
    assert_eq!(a.states.len(), b.states.len());
    for (sa, sb) in a.states.iter().zip(&b.states) {
        assert_eq!(sa.t, sb.t);
        assert_eq!(sa.rho.coeffs(), sb.rho.coeffs());
        for (ca, cb) in sa.u.components().iter().zip(sb.u.components()) {
            assert_eq!(ca.coeffs(), cb.coeffs());
        }
    }
}

#[test]
fn snapshots_land_exactly_on_requested_times() {
    let grid = grid_2d(8, 8);
    let state0 = shear_state(&grid, 0.5);
    let t_end = 0.3;
    let params = fixed_params(0.0, 7e-3, t_end);
    let times = [0.0, 0.15, 0.3];
    let traj = run(&state0, &params, &times, None).unwrap();
    assert_eq!(traj.states.len(), 3);
    for (s, t) in traj.states.iter().zip(times) {
        assert!((s.t - t).abs() <= 1e-14, "snapshot at {} requested {t}", s.t);
    }
}

#[test]
fn zero_t_end_returns_initial_state() {
    let grid = grid_2d(8, 8);
    let state0 = shear_state(&grid, 0.5);
    let params = fixed_params(0.0, 1e-2, 0.0);
    let traj = run(&state0, &params, &[], None).unwrap();
    assert_eq!(traj.states.len(), 1);
    assert_eq!(traj.states[0].t, 0.0);
    assert_eq!(traj.states[0].u.u1.coeffs(), state0.u.u1.coeffs());
}

#[test]
fn cfl_violation_is_reported() {
    let grid = grid_2d(8, 32);
    let state0 = shear_state(&grid, 1.0);
    // Advective cap is 0.5 * (1/32) / 1; pick something far above it.
    let params = fixed_params(0.0, 0.5, 1.0);
    match run(&state0, &params, &[], None) {
        Err(failure) => {
            assert!(matches!(failure.error, SolverError::CflViolation { .. }));
        }
        Ok(_) => panic!("expected CFL violation"),
    }
}

#[test]
fn invalid_initial_data_is_rejected_by_run() {
    let grid = grid_2d(8, 8);
    // Gradient field: not divergence-free.
    let phi = ScalarField::from_fn(&grid, Parity::Even, |x, _, z| {
        (2.0 * PI * x).cos() * (PI * z).cos()
    });
    let (gx, gy, gz) = VectorField::gradient(&phi);
    let u = VectorField::new(gx, gy, gz).unwrap();
    let rho = ScalarField::from_fn(&grid, Parity::Even, |_, _, _| 1.0);
    let state0 = FlowState::new(0.0, rho, u);
    let params = fixed_params(0.0, 1e-3, 0.1);
    match run(&state0, &params, &[], None) {
        Err(failure) => {
            assert!(matches!(failure.error, SolverError::InvalidInitialData(_)));
        }
        Ok(_) => panic!("expected validation failure"),
    }
}

#[test]
fn euler_shear_energy_budget_is_exact() {
    let grid = grid_2d(4, 16);
    let state0 = shear_state(&grid, 1.0);
    let params = fixed_params(0.0, 5e-3, 0.1);
    let traj = run(&state0, &params, &[0.0, 0.05, 0.1], None).unwrap();
    for window in energy_budget(&traj.states, 0.0) {
        assert!(window.imbalance < 1e-12, "imbalance {}", window.imbalance);
    }
}

#[test]
fn viscous_shear_energy_budget_closes() {
    let grid = grid_2d(4, 32);
    let state0 = shear_state(&grid, 1.0);
    let nu = 0.01;
    let params = fixed_params(nu, 1e-3, 0.2);
    let times: Vec<f64> = (0..=20).map(|i| i as f64 * 0.01).collect();
    let traj = run(&state0, &params, &times, None).unwrap();
    // E(t) = E(0) exp(-2 nu pi^2 t); imbalance dominated by the trapezoid
    // window error.
    let e0 = diagnostics::kinetic_energy(&traj.states[0].rho, &traj.states[0].u);
    for (s, t) in traj.states.iter().zip(&times) {
        let e = diagnostics::kinetic_energy(&s.rho, &s.u);
        let expected = e0 * (-2.0 * nu * PI * PI * t).exp();
        assert!((e - expected).abs() < 1e-10, "t={t}: {e} vs {expected}");
    }
    for window in energy_budget(&traj.states, nu) {
        assert!(window.imbalance < 1e-8, "imbalance {}", window.imbalance);
    }
}

#[test]
fn shear_satisfies_vorticity_identity_at_walls() {
    let grid = grid_2d(8, 16);
    let state = shear_state(&grid, 1.0);
    let report = diagnostics::boundary_residuals(&state);
    assert!(report.vorticity_identity_wall.unwrap() <= 1e-10);
    assert!(report.max_structural() <= 1e-12);
}

#[test]
fn corrupted_velocity_reports_nonzero_trace() {
    let grid = grid_2d(8, 16);
    let rho = ScalarField::from_fn(&grid, Parity::Even, |_, _, _| 1.0);
    // Sine content injected into u1: the slip class demands Even here, and
    // the wall-normal derivative of a sine expansion does not vanish.
    let u1_bad = ScalarField::from_fn(&grid, Parity::Odd, |_, _, z| (PI * z).sin());
    let u = VectorField::from_parts_unchecked(
        u1_bad,
        ScalarField::zeros(&grid, Parity::Even),
        ScalarField::zeros(&grid, Parity::Odd),
    );
    let report = boundary_residuals_parts(&rho, &u, false);
    assert!(report.du1_dz_wall > 1.0, "corruption must show up, got {}", report.du1_dz_wall);
}

#[test]
fn adaptive_policy_respects_caps_and_integrates() {
    let grid = grid_2d(16, 16);
    let (rho, u) =
        IcPreset::StratifiedVortex { rho_base: 1.0, rho_amp: 0.3, psi_amp: 0.05 }.build(&grid);
    let state0 = FlowState::new(0.0, rho, u);
    let params = SolverParams {
        nu: 0.05,
        dt_policy: DtPolicy::CflAdaptive { safety: 0.9 },
        t_end: 0.05,
        ..SolverParams::default()
    };
    let traj = run(&state0, &params, &[0.05], None).unwrap();
    let h = 1.0 / 16.0;
    for entry in &traj.log {
        assert!(entry.dt <= params.cfl_visc * h * h / params.nu + 1e-15);
        assert!(entry.divergence_l2 <= 1e-10);
    }
    assert!((traj.states[0].t - 0.05).abs() <= 1e-14);
}

mod common;

#[test]
fn manufactured_solution_is_spatially_exact_at_every_resolution() {
    // Spatial accuracy check at a fixed small step. The manufactured data
    // is band-limited and collocation products evaluate 1/rho pointwise,
    // so the spatial error sits at the round-off/time floor already at the
    // coarsest admissible resolution; any fixed-order scheme would show a
    // large h^p error at Nz = 8 instead.
    let dts = [2e-4];
    for n in [8usize, 12, 16] {
        let err = common::manufactured_errors_with(n, &dts, 0.02, 0.1, 0.7).unwrap()[0];
        assert!(err <= 1e-11, "spatial error {err:.3e} above floor at n = {n}");
    }
}
