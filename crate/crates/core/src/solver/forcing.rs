//! Optional body forcing for manufactured-solution verification runs.

use std::sync::Arc;

use ndarray::Array3;

use crate::spectral::{Grid, Parity, ScalarField, VectorField};

/// Prescribed source terms: `f_rho` enters the density transport equation,
/// `f_u` the momentum equation (as a force density, divided by rho inside
/// the stepper). Production runs carry no forcing; this hook exists so a
/// prescribed smooth (rho*, u*, p*) can be made an exact solution.
pub trait Forcing: Send + Sync {
    fn density(&self, x: f64, y: f64, z: f64, t: f64) -> f64;
    fn momentum(&self, x: f64, y: f64, z: f64, t: f64) -> [f64; 3];
}

pub(crate) fn density_field(f: &dyn Forcing, grid: &Arc<Grid>, t: f64) -> ScalarField {
    ScalarField::from_fn(grid, Parity::Even, |x, y, z| f.density(x, y, z, t))
}

pub(crate) fn momentum_field(f: &dyn Forcing, grid: &Arc<Grid>, t: f64) -> VectorField {
    let (nz, ny, nx) = grid.shape();
    let mut v1 = Array3::zeros((nz, ny, nx));
    let mut v2 = Array3::zeros((nz, ny, nx));
    let mut v3 = Array3::zeros((nz, ny, nx));
    for m in 0..nz {
        for j in 0..ny {
            for i in 0..nx {
                let [a, b, c] = f.momentum(grid.x[i], grid.y[j], grid.z[m], t);
                v1[[m, j, i]] = a;
                v2[[m, j, i]] = b;
                v3[[m, j, i]] = c;
            }
        }
    }
    VectorField::new(
        ScalarField::from_values(grid, Parity::Even, v1.view()).expect("grid shape"),
        ScalarField::from_values(grid, Parity::Even, v2.view()).expect("grid shape"),
        ScalarField::from_values(grid, Parity::Odd, v3.view()).expect("grid shape"),
    )
    .expect("forcing parities fixed")
}
