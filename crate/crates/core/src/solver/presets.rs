//! Built-in initial conditions. All three satisfy the density
//! compatibility condition and the slip class by construction.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::elliptic::leray_project;
use crate::spectral::{Axis3, Grid, Parity, ScalarField, VectorField};

/// Initial-condition presets.
///
/// `shear_decay`: constant density and a plane Couette-like profile
/// `u = (A cos(pi z), 0, 0)`; with viscosity this decays exactly as
/// `A exp(-nu pi^2 t) cos(pi z)`.
///
/// `stratified_vortex`: density `rho_base + rho_amp cos(2 pi x/Lx) cos(pi z)`
/// and velocity from a wall-compatible streamfunction, so the density
/// gradient and the vortex interact baroclinically.
///
/// `random_smooth`: seeded random coefficients with prescribed spectral
/// decay, projected divergence-free and parity-respecting.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "preset", rename_all = "snake_case", deny_unknown_fields)]
pub enum IcPreset {
    ShearDecay {
        #[serde(default = "one")]
        amplitude: f64,
        #[serde(default = "one")]
        rho0: f64,
    },
    StratifiedVortex {
        #[serde(default = "one")]
        rho_base: f64,
        #[serde(default = "default_rho_amp")]
        rho_amp: f64,
        #[serde(default = "default_psi_amp")]
        psi_amp: f64,
    },
    RandomSmooth {
        #[serde(default)]
        seed: u64,
        /// Spectral decay exponent q: coefficients damped by (1+|k|^2)^(-q/2).
        #[serde(default = "default_decay")]
        decay: f64,
        #[serde(default = "default_u_amp")]
        u_amp: f64,
        #[serde(default = "one")]
        rho_base: f64,
        #[serde(default = "default_random_rho_amp")]
        rho_amp: f64,
    },
}

fn one() -> f64 {
    1.0
}
fn default_rho_amp() -> f64 {
    0.3
}
fn default_psi_amp() -> f64 {
    0.01
}
fn default_decay() -> f64 {
    4.0
}
fn default_u_amp() -> f64 {
    0.3
}
fn default_random_rho_amp() -> f64 {
    0.2
}

impl IcPreset {
    pub fn name(&self) -> &'static str {
        match self {
            IcPreset::ShearDecay { .. } => "shear_decay",
            IcPreset::StratifiedVortex { .. } => "stratified_vortex",
            IcPreset::RandomSmooth { .. } => "random_smooth",
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        match self {
            IcPreset::ShearDecay { rho0, .. } => {
                if *rho0 <= 0.0 {
                    return Err("shear_decay: rho0 must be positive".into());
                }
            }
            IcPreset::StratifiedVortex { rho_base, rho_amp, .. } => {
                if rho_amp.abs() >= *rho_base || !rho_base.is_finite() {
                    return Err(
                        "stratified_vortex: |rho_amp| must be smaller than rho_base".into()
                    );
                }
            }
            IcPreset::RandomSmooth { rho_base, rho_amp, decay, .. } => {
                if rho_amp.abs() >= *rho_base || !rho_base.is_finite() {
                    return Err("random_smooth: |rho_amp| must be smaller than rho_base".into());
                }
                if *decay < 2.0 {
                    return Err("random_smooth: decay exponent must be >= 2".into());
                }
            }
        }
        Ok(())
    }

    /// Build (rho0, u0) on the grid.
    pub fn build(&self, grid: &Arc<Grid>) -> (ScalarField, VectorField) {
        match *self {
            IcPreset::ShearDecay { amplitude, rho0 } => {
                let rho = ScalarField::from_fn(grid, Parity::Even, |_, _, _| rho0);
                let u1 = ScalarField::from_fn(grid, Parity::Even, |_, _, z| {
                    amplitude * (std::f64::consts::PI * z).cos()
                });
                let u = VectorField::new(
                    u1,
                    ScalarField::zeros(grid, Parity::Even),
                    ScalarField::zeros(grid, Parity::Odd),
                )
                .expect("shear parities");
                (rho, u)
            }
            IcPreset::StratifiedVortex { rho_base, rho_amp, psi_amp } => {
                let lx = grid.domain.lx;
                let pi = std::f64::consts::PI;
                let rho = ScalarField::from_fn(grid, Parity::Even, |x, _, z| {
                    rho_base + rho_amp * (2.0 * pi * x / lx).cos() * (pi * z).cos()
                });
                // u = (dz psi, 0, -dx psi): exactly divergence-free, and the
                // sine-sine streamfunction vanishes at the walls, so u stays
                // in the slip class.
                let psi = ScalarField::from_fn(grid, Parity::Odd, |x, _, z| {
                    psi_amp * (2.0 * pi * x / lx).sin() * (pi * z).sin()
                });
                let u1 = psi.derivative(Axis3::Z);
                let u3 = psi.derivative(Axis3::X).scale(-1.0);
                let u = VectorField::new(u1, ScalarField::zeros(grid, Parity::Even), u3)
                    .expect("streamfunction parities");
                (rho, u)
            }
            IcPreset::RandomSmooth { seed, decay, u_amp, rho_base, rho_amp } => {
                build_random_smooth(grid, seed, decay, u_amp, rho_base, rho_amp)
            }
        }
    }
}

fn random_field(grid: &Arc<Grid>, parity: Parity, rng: &mut ChaCha8Rng, decay: f64) -> ScalarField {
    let (nz, ny, nx) = grid.shape();
    let mut vals = ndarray::Array3::<f64>::zeros((nz, ny, nx));
    for v in vals.iter_mut() {
        *v = rng.gen_range(-1.0..1.0);
    }
    let mut f = ScalarField::from_values(grid, parity, vals.view()).expect("grid shape");
    // Shape the spectrum and keep the field inside the dealiased band so
    // products remain alias-free from step one.
    let (nz, ny, nx) = grid.shape();
    for m in 0..nz {
        for j in 0..ny {
            for i in 0..nx {
                let damp = (1.0 + grid.k_squared(m, j, i)).powf(-decay / 2.0);
                f.coeffs_mut()[[m, j, i]] *= damp;
            }
        }
    }
    f.dealias();
    f
}

fn build_random_smooth(
    grid: &Arc<Grid>,
    seed: u64,
    decay: f64,
    u_amp: f64,
    rho_base: f64,
    rho_amp: f64,
) -> (ScalarField, VectorField) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let g = random_field(grid, Parity::Even, &mut rng, decay);
    let (lo, hi) = g.min_max();
    let scale = lo.abs().max(hi.abs());
    let rho = if scale > 0.0 {
        let mut rho = g.scale(rho_amp / scale);
        rho.coeffs_mut()[[0, 0, 0]] += num_complex::Complex64::new(rho_base, 0.0);
        rho
    } else {
        ScalarField::from_fn(grid, Parity::Even, |_, _, _| rho_base)
    };

    let raw = VectorField::from_parts_unchecked(
        random_field(grid, Parity::Even, &mut rng, decay),
        random_field(grid, Parity::Even, &mut rng, decay),
        random_field(grid, Parity::Odd, &mut rng, decay),
    );
    let mut u = leray_project(&raw);
    let speed = u.max_speed();
    if speed > 0.0 {
        u = u.scale(u_amp / speed);
    }
    (rho, u)
}
