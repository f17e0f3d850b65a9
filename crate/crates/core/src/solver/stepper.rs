//! Explicit SSP Runge-Kutta time integration of the coupled
//! density-transport + momentum system.
//!
//! One code path serves both the viscous equations and their inviscid
//! limit: `nu = 0` skips the viscous term and nothing else, which is what
//! a fair vanishing-viscosity comparison needs. All terms are treated
//! explicitly; the study targets small viscosities where the viscous CFL
//! is not binding.
//!
//! Each stage solves the variable-coefficient pressure problem to the
//! configured tolerance and then applies the constant-density Leray
//! projection as a cleanup, removing residual divergence at machine
//! precision.

use std::sync::Arc;

use ndarray::Array3;
use thiserror::Error;

use super::forcing::{self, Forcing};
use super::params::{DtPolicy, SolverParams};
use super::state::{FlowState, ValidationReport};
use crate::diagnostics;
use crate::elliptic::{self, EllipticError, PressureSolveParams};
use crate::spectral::{Axis3, Parity, ScalarField, VectorField};

/// Real-axis stability extent of the three-stage SSP scheme, used as a
/// guard on the viscous spectral radius when choosing adaptive steps.
const RK3_REAL_STABILITY: f64 = 2.5;

#[derive(Debug, Error)]
pub enum SolverError {
    #[error("CFL violation: dt = {dt:.3e} exceeds the {which} cap {cap:.3e}")]
    CflViolation { dt: f64, cap: f64, which: &'static str },
    #[error("density positivity lost at t = {t:.6}: min rho = {min_rho:.3e}")]
    PositivityLoss { t: f64, min_rho: f64 },
    #[error(transparent)]
    Pressure(#[from] EllipticError),
    #[error("state invariant violated at t = {t:.6}: {message}")]
    Invariant { t: f64, message: String },
    #[error("initial data failed validation: {0:?}")]
    InvalidInitialData(Box<ValidationReport>),
    #[error("invalid solver parameters: {0}")]
    InvalidParams(String),
    #[error("snapshot time {0} lies outside [0, t_end]")]
    SnapshotOutOfRange(f64),
}

/// Result of one right-hand-side evaluation.
pub struct RhsEval {
    pub drho: ScalarField,
    pub du: VectorField,
    pub pressure: ScalarField,
    pub pressure_iterations: usize,
    pub pressure_residual: f64,
}

/// Evaluate the full stage right-hand side at state (rho, u, t):
///
///   d rho/dt = -u . grad rho                   (+ density forcing)
///   d u/dt   = P[ -u . grad u - (1/rho) grad p
///                 + (nu/rho) lap u + (1/rho) F ]
///
/// with p from the variable-coefficient pressure problem and P the Leray
/// cleanup projection. Component parities (Even, Even, Odd) are preserved
/// term by term.
///
/// Products accumulate in physical space so each derived field costs one
/// forward transform; every term of `u . grad f` shares the parity of f,
/// and every term of the pressure/viscous/forcing group shares the parity
/// of the velocity component, so the accumulated sums stay single-parity.
#[allow(clippy::too_many_arguments)]
pub fn eval_rhs(
    rho: &ScalarField,
    u: &VectorField,
    t: f64,
    nu: f64,
    pressure_params: &PressureSolveParams,
    dealias: bool,
    forcing: Option<&dyn Forcing>,
    pressure_guess: Option<&ScalarField>,
) -> Result<RhsEval, SolverError> {
    let grid = rho.grid();

    let rho_vals = rho.to_values();
    let rho_min = rho_vals.iter().cloned().fold(f64::INFINITY, f64::min);
    if rho_min <= 0.0 {
        return Err(SolverError::PositivityLoss { t, min_rho: rho_min });
    }
    let beta_vals = rho_vals.mapv(|r| 1.0 / r);

    // Physical velocity components, shared by every product below. Zero
    // components short-circuit.
    let u_vals: Vec<Option<Array3<f64>>> = u
        .components()
        .iter()
        .map(|c| if c.max_coeff() > 0.0 { Some(c.to_values()) } else { None })
        .collect();

    let finish = |acc: Array3<f64>, parity: Parity| -> ScalarField {
        let mut out = ScalarField::from_values(grid, parity, acc.view()).expect("grid shape");
        if dealias {
            out.dealias();
        }
        out
    };

    // u . grad f, accumulated pointwise; all terms carry f's parity.
    let advect = |f: &ScalarField| -> ScalarField {
        let mut acc = Array3::<f64>::zeros(grid.shape());
        for (vals, axis) in u_vals.iter().zip([Axis3::X, Axis3::Y, Axis3::Z]) {
            if let Some(vals) = vals {
                let d = f.derivative(axis);
                if d.max_coeff() > 0.0 {
                    acc.zip_mut_with(&(vals * &d.to_values()), |a, b| *a += *b);
                }
            }
        }
        finish(acc, f.parity())
    };

    // Density transport.
    let mut drho = advect(rho).scale(-1.0);
    if let Some(f) = forcing {
        drho = drho.add(&forcing::density_field(f, grid, t));
    }

    // Convective term u . grad u.
    let adv_u1 = advect(&u.u1);
    let adv_u2 = advect(&u.u2);
    let adv_u3 = advect(&u.u3);

    // Momentum forcing in physical space.
    let body_vals = forcing.map(|f| {
        let fu = forcing::momentum_field(f, grid, t);
        [fu.u1.to_values(), fu.u2.to_values(), fu.u3.to_values()]
    });

    // Pressure problem: div((1/rho) grad p) = div(-u . grad u + F/rho).
    // The normal component of u . grad u is Odd, so the boundary data the
    // flat-wall reduction drops is structurally zero; assert the trace.
    debug_assert!(adv_u3.value_trace_max() <= 1e-10);
    let mut rhs_p = adv_u1
        .derivative(Axis3::X)
        .add(&adv_u2.derivative(Axis3::Y))
        .add(&adv_u3.derivative(Axis3::Z))
        .scale(-1.0);
    if let Some(vals) = &body_vals {
        for ((v, parity), axis) in vals
            .iter()
            .zip([Parity::Even, Parity::Even, Parity::Odd])
            .zip([Axis3::X, Axis3::Y, Axis3::Z])
        {
            let flux = finish(&beta_vals * v, parity);
            rhs_p = rhs_p.add(&flux.derivative(axis));
        }
    }
    let sol = elliptic::solve_variable_poisson_with_beta(
        grid,
        &beta_vals,
        &rhs_p,
        pressure_params,
        pressure_guess,
        dealias,
    )?;

    // Per component: -u.grad u_i + (1/rho)(-grad_i p + nu lap u_i + F_i),
    // the parenthesized group accumulated pointwise and transformed once.
    let grad_p = VectorField::gradient(&sol.p);
    let grad_p = [grad_p.0, grad_p.1, grad_p.2];
    let parities = [Parity::Even, Parity::Even, Parity::Odd];
    let mut du = Vec::with_capacity(3);
    for i in 0..3 {
        let mut acc = Array3::<f64>::zeros(grid.shape());
        let mut any = false;
        if grad_p[i].max_coeff() > 0.0 {
            acc.zip_mut_with(&grad_p[i].to_values(), |a, b| *a -= *b);
            any = true;
        }
        if nu > 0.0 {
            let comp = u.components()[i];
            if comp.max_coeff() > 0.0 {
                acc.zip_mut_with(&comp.laplacian().to_values(), |a, b| *a += nu * *b);
                any = true;
            }
        }
        if let Some(vals) = &body_vals {
            acc.zip_mut_with(&vals[i], |a, b| *a += *b);
            any = true;
        }
        let group = if any {
            acc.zip_mut_with(&beta_vals, |a, b| *a *= *b);
            finish(acc, parities[i])
        } else {
            ScalarField::zeros(grid, parities[i])
        };
        du.push(group.sub([&adv_u1, &adv_u2, &adv_u3][i]));
    }
    let du3 = du.pop().unwrap();
    let du2 = du.pop().unwrap();
    let du1 = du.pop().unwrap();

    // Cleanup projection: the pressure enforces the constraint only to
    // solver tolerance (and the paper's pressure problem omits the
    // variable-density viscous divergence); the Leray projection removes
    // what is left at machine precision.
    let du = elliptic::leray_project(&VectorField::from_parts_unchecked(du1, du2, du3));

    Ok(RhsEval {
        drho,
        du,
        pressure: sol.p,
        pressure_iterations: sol.iterations,
        pressure_residual: sol.residual,
    })
}

/// Momentum right-hand side at a state; the projected
/// `-u.grad u - (1/rho) grad p + (nu/rho) lap u`.
pub fn momentum_rhs(
    state: &FlowState,
    nu: f64,
    params: &SolverParams,
) -> Result<VectorField, SolverError> {
    let eval = eval_rhs(
        &state.rho,
        &state.u,
        state.t,
        nu,
        &params.pressure,
        params.dealias,
        None,
        None,
    )?;
    Ok(eval.du)
}

/// One explicit Euler stage of the density transport: rho - dt * u.grad rho.
/// The transport conserves the density mean because u is divergence-free.
pub fn advect_density(state: &FlowState, dt: f64) -> ScalarField {
    let drho = density_rhs(&state.rho, &state.u, true);
    let mut out = state.rho.clone();
    out.axpy(dt, &drho);
    out
}

/// -u . grad rho.
pub fn density_rhs(rho: &ScalarField, u: &VectorField, dealias: bool) -> ScalarField {
    let mut acc = ScalarField::zeros(rho.grid(), rho.parity());
    for (vel, axis) in u.components().into_iter().zip([Axis3::X, Axis3::Y, Axis3::Z]) {
        if vel.max_coeff() > 0.0 {
            acc = acc.add(&vel.multiply(&rho.derivative(axis), dealias));
        }
    }
    acc.scale(-1.0)
}

/// Advance (rho, u) by one three-stage SSP Runge-Kutta step of size `dt`.
///
/// Pressure solves warm-start from a linear extrapolation of the previous
/// two solutions of the same stage slot, which keeps the Richardson
/// iteration count low along smooth trajectories.
pub struct Stepper<'a> {
    pub params: &'a SolverParams,
    pub forcing: Option<Arc<dyn Forcing>>,
    pressure_history: [Vec<ScalarField>; 3],
    /// Stats from the most recent step.
    pub last_pressure_iterations: usize,
    pub last_pressure_residual: f64,
}

impl<'a> Stepper<'a> {
    pub fn new(params: &'a SolverParams) -> Self {
        Stepper {
            params,
            forcing: None,
            pressure_history: [Vec::new(), Vec::new(), Vec::new()],
            last_pressure_iterations: 0,
            last_pressure_residual: 0.0,
        }
    }

    pub fn with_forcing(mut self, forcing: Option<Arc<dyn Forcing>>) -> Self {
        self.forcing = forcing;
        self
    }

    /// Advective and viscous step caps for the current state.
    pub fn dt_caps(&self, state: &FlowState) -> (f64, f64) {
        let h = state.rho.grid().domain.min_spacing();
        let umax = state.u.max_speed();
        let adv = if umax > 0.0 { self.params.cfl_adv * h / umax } else { f64::INFINITY };
        let visc = if self.params.nu > 0.0 {
            self.params.cfl_visc * h * h / self.params.nu
        } else {
            f64::INFINITY
        };
        (adv, visc)
    }

    /// Hard stability guard: the h^2 heuristic alone underestimates the
    /// spectral radius of the viscous term in this basis, so the adaptive
    /// policy also respects nu * max(1/rho) * |k|^2_max * dt <= RK3
    /// stability extent. The 1/rho factor matters: the local diffusivity
    /// of the momentum equation is nu/rho, and the corner modes go
    /// unstable against the largest value it takes.
    fn spectral_guard(&self, state: &FlowState) -> f64 {
        if self.params.nu > 0.0 {
            let k2 = state.rho.grid().k_squared_max(self.params.dealias);
            let (rho_min, _) = state.rho.min_max();
            let beta_max = if rho_min > 0.0 { 1.0 / rho_min } else { f64::INFINITY };
            RK3_REAL_STABILITY / (self.params.nu * k2 * beta_max)
        } else {
            f64::INFINITY
        }
    }

    /// Choose the step for the adaptive policy, or validate the fixed one.
    pub fn propose_dt(&self, state: &FlowState) -> Result<f64, SolverError> {
        let (adv, visc) = self.dt_caps(state);
        match self.params.dt_policy {
            DtPolicy::Fixed { dt } => {
                if dt > adv {
                    return Err(SolverError::CflViolation { dt, cap: adv, which: "advective" });
                }
                if dt > visc {
                    return Err(SolverError::CflViolation { dt, cap: visc, which: "viscous" });
                }
                Ok(dt)
            }
            DtPolicy::CflAdaptive { safety } => {
                let dt = safety * adv.min(visc).min(self.spectral_guard(state));
                if !dt.is_finite() {
                    // Zero velocity, zero viscosity: any step works; pick
                    // something proportional to the remaining interval.
                    return Ok(self.params.t_end.max(1.0));
                }
                Ok(dt)
            }
        }
    }

    fn stage(
        &mut self,
        slot: usize,
        rho: &ScalarField,
        u: &VectorField,
        t: f64,
    ) -> Result<(ScalarField, VectorField), SolverError> {
        let history = &self.pressure_history[slot];
        let guess = match history.len() {
            0 => None,
            1 => Some(history[0].clone()),
            _ => {
                // 2 p_{n-1} - p_{n-2}: first-order extrapolation in step
                // index.
                let mut g = history[history.len() - 1].scale(2.0);
                g.axpy(-1.0, &history[history.len() - 2]);
                Some(g)
            }
        };
        let eval = eval_rhs(
            rho,
            u,
            t,
            self.params.nu,
            &self.params.pressure,
            self.params.dealias,
            self.forcing.as_deref(),
            guess.as_ref(),
        )?;
        let history = &mut self.pressure_history[slot];
        if history.len() == 2 {
            history.remove(0);
        }
        history.push(eval.pressure.clone());
        self.last_pressure_iterations += eval.pressure_iterations;
        self.last_pressure_residual = self.last_pressure_residual.max(eval.pressure_residual);
        Ok((eval.drho, eval.du))
    }

    /// One SSP-RK3 step (Shu-Osher form). Re-asserts the state invariants
    /// and aborts on density positivity loss; clamping would silently
    /// violate the transport equation.
    pub fn step(&mut self, state: &FlowState, dt: f64) -> Result<FlowState, SolverError> {
        self.last_pressure_iterations = 0;
        self.last_pressure_residual = 0.0;
        let t = state.t;

        // Stage 1: s1 = s + dt f(s)
        let (k_rho, k_u) = self.stage(0, &state.rho, &state.u, t)?;
        let mut rho1 = state.rho.clone();
        rho1.axpy(dt, &k_rho);
        let mut u1 = state.u.clone();
        u1.u1.axpy(dt, &k_u.u1);
        u1.u2.axpy(dt, &k_u.u2);
        u1.u3.axpy(dt, &k_u.u3);
        let u1 = elliptic::leray_project(&u1);

        // Stage 2: s2 = 3/4 s + 1/4 (s1 + dt f(s1))
        let (k_rho, k_u) = self.stage(1, &rho1, &u1, t + dt)?;
        let mut rho2 = rho1;
        rho2.axpy(dt, &k_rho);
        rho2.combine(0.25, 0.75, &state.rho);
        let mut u2 = u1;
        u2.u1.axpy(dt, &k_u.u1);
        u2.u2.axpy(dt, &k_u.u2);
        u2.u3.axpy(dt, &k_u.u3);
        u2.combine(0.25, 0.75, &state.u);
        let u2 = elliptic::leray_project(&u2);

        // Stage 3: s' = 1/3 s + 2/3 (s2 + dt f(s2))
        let (k_rho, k_u) = self.stage(2, &rho2, &u2, t + 0.5 * dt)?;
        let mut rho_new = rho2;
        rho_new.axpy(dt, &k_rho);
        rho_new.combine(2.0 / 3.0, 1.0 / 3.0, &state.rho);
        let mut u_new = u2;
        u_new.u1.axpy(dt, &k_u.u1);
        u_new.u2.axpy(dt, &k_u.u2);
        u_new.u3.axpy(dt, &k_u.u3);
        u_new.combine(2.0 / 3.0, 1.0 / 3.0, &state.u);
        let u_new = elliptic::leray_project(&u_new);

        let new_state = FlowState::new(t + dt, rho_new, u_new);
        let (rho_min, _) = new_state.rho.min_max();
        if rho_min <= 0.0 {
            return Err(SolverError::PositivityLoss { t: new_state.t, min_rho: rho_min });
        }
        if let Err(message) = new_state.check_invariants() {
            return Err(SolverError::Invariant { t: new_state.t, message });
        }
        Ok(new_state)
    }
}

/// Per-step log record; serialized as one JSON line per accepted step.
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct RunLogEntry {
    pub t: f64,
    pub dt: f64,
    pub kinetic_energy: f64,
    pub rho_min: f64,
    pub rho_max: f64,
    pub rho_mean: f64,
    pub divergence_l2: f64,
    pub pressure_iterations: usize,
    pub pressure_residual: f64,
    pub h3: f64,
}

/// A completed (or partial, on failure) run.
#[derive(Debug, Clone)]
pub struct Trajectory {
    /// States at the requested snapshot times (the final state when no
    /// times were requested).
    pub states: Vec<FlowState>,
    pub log: Vec<RunLogEntry>,
    /// max over time of ||rho||_3 + ||u||_3.
    pub max_h3: f64,
    /// Set when the H3 monitor exceeded norm_growth_limit times its
    /// initial value; the existence interval the theory guarantees is
    /// non-constructive, so growth is reported rather than fatal.
    pub norm_growth_flagged: bool,
}

/// A failed run carries the diagnostics gathered so far.
#[derive(Debug, Error)]
#[error("run aborted at t = {t:.6}: {error}")]
pub struct RunFailure {
    pub t: f64,
    #[source]
    pub error: SolverError,
    pub partial: Trajectory,
}

/// Integrate from `state0` to `params.t_end`, recording snapshots exactly
/// at `snapshot_times` (by shortening steps, never by interpolation).
/// Deterministic for fixed inputs.
pub fn run(
    state0: &FlowState,
    params: &SolverParams,
    snapshot_times: &[f64],
    forcing: Option<Arc<dyn Forcing>>,
) -> Result<Trajectory, Box<RunFailure>> {
    let fail = |t: f64, error: SolverError, partial: Trajectory| {
        Box::new(RunFailure { t, error, partial })
    };
    let empty = Trajectory {
        states: Vec::new(),
        log: Vec::new(),
        max_h3: 0.0,
        norm_growth_flagged: false,
    };

    if let Err(msg) = params.validate() {
        return Err(fail(state0.t, SolverError::InvalidParams(msg), empty));
    }
    let bounds = super::state::DensityBounds::from_field(&state0.rho);
    let report = super::state::validate_initial_data(&state0.rho, &state0.u, &bounds);
    if !report.pass {
        return Err(fail(state0.t, SolverError::InvalidInitialData(Box::new(report)), empty));
    }

    let mut targets: Vec<f64> = snapshot_times.to_vec();
    targets.sort_by(|a, b| a.partial_cmp(b).expect("snapshot times must be finite"));
    for &t in &targets {
        if t < state0.t - 1e-14 || t > params.t_end + 1e-14 {
            return Err(fail(state0.t, SolverError::SnapshotOutOfRange(t), empty));
        }
    }

    let mut stepper = Stepper::new(params).with_forcing(forcing);
    let mut state = state0.clone();
    let mut traj = empty;
    let h3_initial = diagnostics::h3_monitor(&state.rho, &state.u);
    traj.max_h3 = h3_initial;

    let mut target_idx = 0;
    // Snapshots requested at (or numerically at) the start.
    while target_idx < targets.len() && targets[target_idx] <= state.t + 1e-14 {
        traj.states.push(state.clone());
        target_idx += 1;
    }

    while state.t < params.t_end - 1e-14 {
        let mut dt = match stepper.propose_dt(&state) {
            Ok(dt) => dt,
            Err(e) => return Err(fail(state.t, e, traj)),
        };
        // Shorten to land exactly on the next snapshot time or t_end.
        let next_stop = if target_idx < targets.len() {
            targets[target_idx].min(params.t_end)
        } else {
            params.t_end
        };
        let mut landed = false;
        if state.t + dt >= next_stop - 1e-14 {
            dt = next_stop - state.t;
            landed = true;
        }

        match stepper.step(&state, dt) {
            Ok(mut new_state) => {
                if landed {
                    new_state.t = next_stop;
                }
                state = new_state;
            }
            Err(e) => return Err(fail(state.t, e, traj)),
        }

        let h3 = diagnostics::h3_monitor(&state.rho, &state.u);
        traj.max_h3 = traj.max_h3.max(h3);
        if h3 > params.norm_growth_limit * h3_initial {
            traj.norm_growth_flagged = true;
        }
        let (rho_min, rho_max) = state.rho.min_max();
        traj.log.push(RunLogEntry {
            t: state.t,
            dt,
            kinetic_energy: diagnostics::kinetic_energy(&state.rho, &state.u),
            rho_min,
            rho_max,
            rho_mean: state.rho.mean(),
            divergence_l2: state.u.divergence().norm_l2(),
            pressure_iterations: stepper.last_pressure_iterations,
            pressure_residual: stepper.last_pressure_residual,
            h3,
        });

        while target_idx < targets.len() && targets[target_idx] <= state.t + 1e-14 {
            traj.states.push(state.clone());
            target_idx += 1;
        }
    }

    if targets.is_empty() {
        traj.states.push(state.clone());
    }
    Ok(traj)
}
