//! Scalar and vector fields in spectral representation.

use std::sync::Arc;

use ndarray::{Array3, ArrayView3};
use num_complex::Complex64;
use thiserror::Error;

use super::domain::{Parity, Wall};
use super::grid::Grid;

#[derive(Debug, Error)]
pub enum FieldError {
    #[error("collocation array shape {got:?} does not match domain shape {expected:?}")]
    DimensionMismatch { expected: (usize, usize, usize), got: (usize, usize, usize) },
    #[error(
        "Neumann solvability violated: Even input has mean {mean:.3e} (tolerance {tol:.1e})"
    )]
    Solvability { mean: f64, tol: f64 },
    #[error("velocity components must have parities (even, even, odd), got ({0:?}, {1:?}, {2:?})")]
    VelocityParity(Parity, Parity, Parity),
}

/// One scalar unknown stored as spectral coefficients with a wall-normal
/// parity tag. Coefficients are indexed `(m, ky, kx)`.
#[derive(Debug, Clone)]
pub struct ScalarField {
    grid: Arc<Grid>,
    parity: Parity,
    coeffs: Array3<Complex64>,
}

/// Differentiation axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis3 {
    X,
    Y,
    Z,
}

impl ScalarField {
    /// All-zero field.
    pub fn zeros(grid: &Arc<Grid>, parity: Parity) -> Self {
        let shape = grid.shape();
        ScalarField { grid: grid.clone(), parity, coeffs: Array3::zeros(shape) }
    }

    /// Transform physical collocation values into spectral coefficients.
    pub fn from_values(
        grid: &Arc<Grid>,
        parity: Parity,
        values: ArrayView3<'_, f64>,
    ) -> Result<Self, FieldError> {
        if values.dim() != grid.shape() {
            return Err(FieldError::DimensionMismatch { expected: grid.shape(), got: values.dim() });
        }
        let coeffs = grid.forward(values, parity);
        Ok(ScalarField { grid: grid.clone(), parity, coeffs })
    }

    /// Evaluate a closure on the collocation grid and transform.
    pub fn from_fn(
        grid: &Arc<Grid>,
        parity: Parity,
        mut f: impl FnMut(f64, f64, f64) -> f64,
    ) -> Self {
        let (nz, ny, nx) = grid.shape();
        let mut vals = Array3::zeros((nz, ny, nx));
        for m in 0..nz {
            for j in 0..ny {
                for i in 0..nx {
                    vals[[m, j, i]] = f(grid.x[i], grid.y[j], grid.z[m]);
                }
            }
        }
        ScalarField::from_values(grid, parity, vals.view()).expect("shape by construction")
    }

    pub fn from_coeffs(grid: &Arc<Grid>, parity: Parity, coeffs: Array3<Complex64>) -> Self {
        assert_eq!(coeffs.dim(), grid.shape(), "coefficient shape mismatch");
        let mut field = ScalarField { grid: grid.clone(), parity, coeffs };
        if parity == Parity::Odd {
            field.clear_odd_zero_mode();
        }
        field
    }

    fn clear_odd_zero_mode(&mut self) {
        let (_, ny, nx) = self.grid.shape();
        for j in 0..ny {
            for i in 0..nx {
                self.coeffs[[0, j, i]] = Complex64::new(0.0, 0.0);
            }
        }
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn parity(&self) -> Parity {
        self.parity
    }

    pub fn coeffs(&self) -> &Array3<Complex64> {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut Array3<Complex64> {
        &mut self.coeffs
    }

    /// Inverse transform to physical collocation values.
    pub fn to_values(&self) -> Array3<f64> {
        self.grid.inverse(&self.coeffs, self.parity)
    }

    /// Domain mean; exact coefficient read for Even fields, series sum of
    /// the sine integrals for Odd fields.
    pub fn mean(&self) -> f64 {
        match self.parity {
            Parity::Even => self.coeffs[[0, 0, 0]].re,
            Parity::Odd => {
                let nz = self.grid.domain.nz;
                let mut mean = 0.0;
                for m in 1..nz {
                    // integral over [0,1] of sin(m pi z) = (1 - (-1)^m)/(m pi)
                    if m % 2 == 1 {
                        mean += self.coeffs[[m, 0, 0]].re * 2.0 / (m as f64 * std::f64::consts::PI);
                    }
                }
                mean
            }
        }
    }

    /// Spectral differentiation. The z-derivative flips parity; x and y
    /// derivatives preserve it.
    pub fn derivative(&self, axis: Axis3) -> ScalarField {
        let (nz, ny, nx) = self.grid.shape();
        let mut out = Array3::<Complex64>::zeros((nz, ny, nx));
        match axis {
            Axis3::X => {
                for m in 0..nz {
                    for j in 0..ny {
                        for i in 0..nx {
                            let k = self.grid.dx_multiplier(i);
                            let c = self.coeffs[[m, j, i]];
                            out[[m, j, i]] = Complex64::new(-k * c.im, k * c.re);
                        }
                    }
                }
                ScalarField { grid: self.grid.clone(), parity: self.parity, coeffs: out }
            }
            Axis3::Y => {
                for m in 0..nz {
                    for j in 0..ny {
                        let k = self.grid.dy_multiplier(j);
                        for i in 0..nx {
                            let c = self.coeffs[[m, j, i]];
                            out[[m, j, i]] = Complex64::new(-k * c.im, k * c.re);
                        }
                    }
                }
                ScalarField { grid: self.grid.clone(), parity: self.parity, coeffs: out }
            }
            Axis3::Z => {
                // d/dz cos(m pi z) = -m pi sin(m pi z)
                // d/dz sin(m pi z) = +m pi cos(m pi z)
                let sign = match self.parity {
                    Parity::Even => -1.0,
                    Parity::Odd => 1.0,
                };
                for m in 0..nz {
                    let k = sign * m as f64 * std::f64::consts::PI;
                    for j in 0..ny {
                        for i in 0..nx {
                            out[[m, j, i]] = self.coeffs[[m, j, i]] * k;
                        }
                    }
                }
                ScalarField {
                    grid: self.grid.clone(),
                    parity: self.parity.flipped(),
                    coeffs: out,
                }
            }
        }
    }

    /// Pointwise product computed in collocation space. Result parity is
    /// Even when the parities agree, Odd otherwise. With `dealias`, the
    /// 2/3-rule truncation is applied to the result; the solver keeps all
    /// evolving fields truncated, which makes retained products alias-free.
    pub fn multiply(&self, other: &ScalarField, dealias: bool) -> ScalarField {
        self.assert_same_grid(other);
        let a = self.to_values();
        let b = other.to_values();
        let prod = &a * &b;
        let parity = self.parity.product(other.parity);
        let mut out = ScalarField::from_values(&self.grid, parity, prod.view())
            .expect("shapes agree by construction");
        if dealias {
            out.dealias();
        }
        out
    }

    /// Zero every mode outside the 2/3 retention band.
    pub fn dealias(&mut self) {
        let (nz, ny, nx) = self.grid.shape();
        for m in 0..nz {
            for j in 0..ny {
                for i in 0..nx {
                    if !self.grid.keep_mode(m, j, i) {
                        self.coeffs[[m, j, i]] = Complex64::new(0.0, 0.0);
                    }
                }
            }
        }
    }

    /// Solve the constant-coefficient Poisson problem `lap g = f` with the
    /// zero-mean gauge. Even input must be mean-free (homogeneous Neumann
    /// solvability); Odd input needs no condition.
    pub fn inverse_laplacian(&self) -> Result<ScalarField, FieldError> {
        const TOL: f64 = 1e-12;
        if self.parity == Parity::Even {
            let mean = self.coeffs[[0, 0, 0]].norm();
            if mean > TOL {
                return Err(FieldError::Solvability { mean, tol: TOL });
            }
        }
        let (nz, ny, nx) = self.grid.shape();
        let mut out = Array3::<Complex64>::zeros((nz, ny, nx));
        for m in 0..nz {
            for j in 0..ny {
                for i in 0..nx {
                    let k2 = self.grid.k_squared_deriv(m, j, i);
                    if k2 > 0.0 {
                        out[[m, j, i]] = self.coeffs[[m, j, i]] * (-1.0 / k2);
                    }
                }
            }
        }
        Ok(ScalarField { grid: self.grid.clone(), parity: self.parity, coeffs: out })
    }

    /// Spectral Laplacian (multiplier -|k|^2, derivative convention),
    /// parity preserved; exactly the divergence of the gradient.
    pub fn laplacian(&self) -> ScalarField {
        let (nz, ny, nx) = self.grid.shape();
        let mut out = Array3::<Complex64>::zeros((nz, ny, nx));
        for m in 0..nz {
            for j in 0..ny {
                for i in 0..nx {
                    out[[m, j, i]] = self.coeffs[[m, j, i]] * (-self.grid.k_squared_deriv(m, j, i));
                }
            }
        }
        ScalarField { grid: self.grid.clone(), parity: self.parity, coeffs: out }
    }

    /// Discrete L2 norm of the physical field (volume-weighted Parseval).
    pub fn norm_l2(&self) -> f64 {
        let (nz, ny, nx) = self.grid.shape();
        let area = self.grid.domain.lx * self.grid.domain.ly;
        let mut sum = 0.0;
        for m in 0..nz {
            let w = Grid::z_mode_weight(self.parity, m);
            for j in 0..ny {
                for i in 0..nx {
                    sum += w * self.coeffs[[m, j, i]].norm_sqr();
                }
            }
        }
        (area * sum).sqrt()
    }

    /// Max-abs wall trace of the field value over both walls.
    pub fn value_trace_max(&self) -> f64 {
        Wall::BOTH
            .iter()
            .map(|w| self.grid.value_trace(&self.coeffs, self.parity, *w))
            .fold(0.0, f64::max)
    }

    /// Max-abs wall trace of the wall-normal derivative over both walls.
    pub fn dz_trace_max(&self) -> f64 {
        Wall::BOTH
            .iter()
            .map(|w| self.grid.dz_trace(&self.coeffs, self.parity, *w))
            .fold(0.0, f64::max)
    }

    pub fn assert_same_grid(&self, other: &ScalarField) {
        assert_eq!(
            self.grid.domain, other.grid.domain,
            "fields live on different domains"
        );
    }

    fn assert_same_parity(&self, other: &ScalarField) {
        assert_eq!(self.parity, other.parity, "parity mismatch in linear field operation");
    }

    pub fn add(&self, other: &ScalarField) -> ScalarField {
        self.assert_same_grid(other);
        self.assert_same_parity(other);
        ScalarField {
            grid: self.grid.clone(),
            parity: self.parity,
            coeffs: &self.coeffs + &other.coeffs,
        }
    }

    pub fn sub(&self, other: &ScalarField) -> ScalarField {
        self.assert_same_grid(other);
        self.assert_same_parity(other);
        ScalarField {
            grid: self.grid.clone(),
            parity: self.parity,
            coeffs: &self.coeffs - &other.coeffs,
        }
    }

    pub fn scale(&self, a: f64) -> ScalarField {
        ScalarField {
            grid: self.grid.clone(),
            parity: self.parity,
            coeffs: self.coeffs.mapv(|c| c * a),
        }
    }

    /// self += a * other
    pub fn axpy(&mut self, a: f64, other: &ScalarField) {
        self.assert_same_grid(other);
        self.assert_same_parity(other);
        self.coeffs.zip_mut_with(&other.coeffs, |c, o| *c += *o * a);
    }

    /// In-place convex update `self = a*self + b*other`, the building block
    /// of the SSP Runge-Kutta stages.
    pub fn combine(&mut self, a: f64, b: f64, other: &ScalarField) {
        self.assert_same_grid(other);
        self.assert_same_parity(other);
        self.coeffs.zip_mut_with(&other.coeffs, |c, o| *c = *c * a + *o * b);
    }

    /// Min and max of the physical field over the collocation grid.
    pub fn min_max(&self) -> (f64, f64) {
        let vals = self.to_values();
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for v in vals.iter() {
            lo = lo.min(*v);
            hi = hi.max(*v);
        }
        (lo, hi)
    }

    /// Largest coefficient magnitude; cheap zero test.
    pub fn max_coeff(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }
}

/// Velocity field with the slip structure built in: components carry fixed
/// parities (Even, Even, Odd), so `u3 = 0` and `d u1/dz = d u2/dz = 0` at
/// the walls hold exactly by basis.
#[derive(Debug, Clone)]
pub struct VectorField {
    pub u1: ScalarField,
    pub u2: ScalarField,
    pub u3: ScalarField,
}

impl VectorField {
    pub fn new(u1: ScalarField, u2: ScalarField, u3: ScalarField) -> Result<Self, FieldError> {
        if u1.parity() != Parity::Even || u2.parity() != Parity::Even || u3.parity() != Parity::Odd
        {
            return Err(FieldError::VelocityParity(u1.parity(), u2.parity(), u3.parity()));
        }
        u1.assert_same_grid(&u2);
        u1.assert_same_grid(&u3);
        Ok(VectorField { u1, u2, u3 })
    }

    /// Bypass the parity check. Exists for diagnostics and negative-control
    /// tests that need deliberately corrupted states.
    pub fn from_parts_unchecked(u1: ScalarField, u2: ScalarField, u3: ScalarField) -> Self {
        VectorField { u1, u2, u3 }
    }

    pub fn zeros(grid: &Arc<Grid>) -> Self {
        VectorField {
            u1: ScalarField::zeros(grid, Parity::Even),
            u2: ScalarField::zeros(grid, Parity::Even),
            u3: ScalarField::zeros(grid, Parity::Odd),
        }
    }

    pub fn grid(&self) -> &Arc<Grid> {
        self.u1.grid()
    }

    pub fn components(&self) -> [&ScalarField; 3] {
        [&self.u1, &self.u2, &self.u3]
    }

    /// Spectral divergence (Even parity).
    pub fn divergence(&self) -> ScalarField {
        let d1 = self.u1.derivative(Axis3::X);
        let d2 = self.u2.derivative(Axis3::Y);
        let d3 = self.u3.derivative(Axis3::Z);
        d1.add(&d2).add(&d3)
    }

    pub fn add(&self, other: &VectorField) -> VectorField {
        VectorField {
            u1: self.u1.add(&other.u1),
            u2: self.u2.add(&other.u2),
            u3: self.u3.add(&other.u3),
        }
    }

    pub fn sub(&self, other: &VectorField) -> VectorField {
        VectorField {
            u1: self.u1.sub(&other.u1),
            u2: self.u2.sub(&other.u2),
            u3: self.u3.sub(&other.u3),
        }
    }

    pub fn scale(&self, a: f64) -> VectorField {
        VectorField { u1: self.u1.scale(a), u2: self.u2.scale(a), u3: self.u3.scale(a) }
    }

    pub fn combine(&mut self, a: f64, b: f64, other: &VectorField) {
        self.u1.combine(a, b, &other.u1);
        self.u2.combine(a, b, &other.u2);
        self.u3.combine(a, b, &other.u3);
    }

    pub fn dealias(&mut self) {
        self.u1.dealias();
        self.u2.dealias();
        self.u3.dealias();
    }

    /// Max pointwise speed over the collocation grid.
    pub fn max_speed(&self) -> f64 {
        let v1 = self.u1.to_values();
        let v2 = self.u2.to_values();
        let v3 = self.u3.to_values();
        let mut max = 0.0f64;
        for ((a, b), c) in v1.iter().zip(v2.iter()).zip(v3.iter()) {
            max = max.max((a * a + b * b + c * c).sqrt());
        }
        max
    }

    /// Gradient of a scalar: component parities follow the derivative rules.
    pub fn gradient(f: &ScalarField) -> (ScalarField, ScalarField, ScalarField) {
        (f.derivative(Axis3::X), f.derivative(Axis3::Y), f.derivative(Axis3::Z))
    }
}
