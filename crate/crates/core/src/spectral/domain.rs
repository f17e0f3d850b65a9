//! Channel geometry and the wall-normal parity tags.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Wall-normal extent of the channel, fixed by the model geometry.
pub const LZ: f64 = 1.0;

/// Spatial dimensionality. `Two` collapses the y-direction to a single
/// constant mode while keeping the identical code path.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Dim {
    #[serde(rename = "2")]
    #[serde(alias = "two")]
    Two,
    #[serde(rename = "3")]
    #[serde(alias = "three")]
    Three,
}

/// Channel domain `[0,Lx] x [0,Ly] x [0,1]`, periodic in x and y,
/// flat walls at z = 0 and z = 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainSpec {
    /// Horizontal period in x.
    pub lx: f64,
    /// Horizontal period in y.
    pub ly: f64,
    /// Fourier mode count in x.
    pub nx: usize,
    /// Fourier mode count in y (1 in 2D mode).
    pub ny: usize,
    /// Cosine/sine mode count in the wall-normal direction.
    pub nz: usize,
    pub dim: Dim,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DomainError {
    #[error("lx and ly must be positive, got lx={lx}, ly={ly}")]
    NonPositiveLength { lx: f64, ly: f64 },
    #[error("nx must be even and >= 4, got {0}")]
    BadNx(usize),
    #[error("ny must be even and >= 4 (or exactly 1 in 2D mode), got {ny} with dim {dim:?}")]
    BadNy { ny: usize, dim: Dim },
    #[error("nz must be >= 4, got {0}")]
    BadNz(usize),
}

impl DomainSpec {
    pub fn new_2d(lx: f64, nx: usize, nz: usize) -> Result<Self, DomainError> {
        let spec = Self { lx, ly: 1.0, nx, ny: 1, nz, dim: Dim::Two };
        spec.validate()?;
        Ok(spec)
    }

    pub fn new_3d(lx: f64, ly: f64, nx: usize, ny: usize, nz: usize) -> Result<Self, DomainError> {
        let spec = Self { lx, ly, nx, ny, nz, dim: Dim::Three };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<(), DomainError> {
        if self.lx <= 0.0 || self.ly <= 0.0 {
            return Err(DomainError::NonPositiveLength { lx: self.lx, ly: self.ly });
        }
        if self.nx < 4 || !self.nx.is_multiple_of(2) {
            return Err(DomainError::BadNx(self.nx));
        }
        let ny_ok = match self.dim {
            Dim::Two => self.ny == 1 || (self.ny >= 4 && self.ny.is_multiple_of(2)),
            Dim::Three => self.ny >= 4 && self.ny.is_multiple_of(2),
        };
        if !ny_ok {
            return Err(DomainError::BadNy { ny: self.ny, dim: self.dim });
        }
        if self.nz < 4 {
            return Err(DomainError::BadNz(self.nz));
        }
        Ok(())
    }

    /// Total collocation point count.
    pub fn len(&self) -> usize {
        self.nx * self.ny * self.nz
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Domain volume `Lx * Ly * 1`.
    pub fn volume(&self) -> f64 {
        self.lx * self.ly * LZ
    }

    /// Smallest collocation spacing, used by the CFL policy.
    pub fn min_spacing(&self) -> f64 {
        let hx = self.lx / self.nx as f64;
        let hz = LZ / self.nz as f64;
        match self.dim {
            Dim::Two => hx.min(hz),
            Dim::Three => hx.min(self.ly / self.ny as f64).min(hz),
        }
    }
}

/// Wall-normal expansion parity.
///
/// `Even` fields expand in cos(m pi z): the wall-normal derivative vanishes
/// identically at z = 0, 1. `Odd` fields expand in sin(m pi z): the value
/// itself vanishes at the walls. This is the structural encoding of the
/// slip boundary conditions and of the density compatibility condition.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Parity {
    Even,
    Odd,
}

impl Parity {
    /// Parity of a pointwise product.
    pub fn product(self, other: Parity) -> Parity {
        if self == other {
            Parity::Even
        } else {
            Parity::Odd
        }
    }

    /// Parity after one wall-normal derivative.
    pub fn flipped(self) -> Parity {
        match self {
            Parity::Even => Parity::Odd,
            Parity::Odd => Parity::Even,
        }
    }
}

/// Wall selector for trace evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Wall {
    Bottom,
    Top,
}

impl Wall {
    pub const BOTH: [Wall; 2] = [Wall::Bottom, Wall::Top];

    /// cos(m pi z) at the wall: 1 at z = 0, (-1)^m at z = 1.
    /// Exact integer-valued endpoint evaluation; never computed through
    /// floating `sin`/`cos` of multiples of pi.
    pub fn cos_sign(self, m: usize) -> f64 {
        match self {
            Wall::Bottom => 1.0,
            Wall::Top => {
                if m.is_multiple_of(2) {
                    1.0
                } else {
                    -1.0
                }
            }
        }
    }
}
