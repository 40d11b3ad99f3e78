//! Mixed Fourier (x) x cosine/sine (y) spectral representation on the channel.
//!
//! A real scalar field is stored as
//! `g(x, y) = sum_{k1, k2} c(k1, k2) exp(2 pi i k1 x) B_{k2}(y)`
//! with `B_{k2} = cos(pi k2 y)` (`CosineY`, `k2 = 0..=ny`) or
//! `B_{k2} = sin(pi k2 y)` (`SineY`, `k2 = 1..ny`). Basis functions carry unit
//! amplitude, so Parseval reads `||g||^2 = sum w(k2) |c|^2` with `w(0) = 1`
//! and `w(k2 >= 1) = 1/2`.

mod grid;
mod physical;
mod profile;
mod random;
mod spectrum;
pub(crate) mod transform;

use thiserror::Error;

pub use grid::{Dealias, SpectralGrid};
pub use physical::PhysicalField;
pub use profile::Profile;
pub use random::{random_band_limited, random_profile};
pub(crate) use spectrum::to_spectral_unchecked;
pub use spectrum::{
    decompose_mean_osc, dx, dy, l2_norm, laplacian_symbol, multiply_dealiased, product_basis, to_physical, to_spectral,
    truncate_modes, ScalarSpectrum,
};

/// y-basis family of a spectrum.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum YBasis {
    CosineY,
    SineY,
}

impl YBasis {
    /// Basis after one y-derivative.
    pub fn flipped(self) -> YBasis {
        match self {
            YBasis::CosineY => YBasis::SineY,
            YBasis::SineY => YBasis::CosineY,
        }
    }

    /// Whether index `k2` is a stored mode of this basis on a grid with `ny`.
    pub fn holds(self, k2: usize, ny: usize) -> bool {
        match self {
            YBasis::CosineY => k2 <= ny,
            YBasis::SineY => k2 >= 1 && k2 < ny,
        }
    }

    /// Parseval weight `int_0^1 B_k2(y)^2 dy`.
    pub fn weight(self, k2: usize) -> f64 {
        match (self, k2) {
            (YBasis::CosineY, 0) => 1.0,
            (YBasis::SineY, 0) => 0.0,
            _ => 0.5,
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpectralError {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("grid mismatch: {left:?} vs {right:?}")]
    GridMismatch { left: SpectralGrid, right: SpectralGrid },
    #[error("SineY transform requested but wall values reach {max_wall:e} (tolerance {tolerance:e})")]
    WallValueError { max_wall: f64, tolerance: f64 },
    #[error("band kmax = {kmax} exceeds the retained band {limit}")]
    BandTooWide { kmax: usize, limit: usize },
    #[error("basis mismatch: expected {expected:?}, found {found:?}")]
    BasisMismatch { expected: YBasis, found: YBasis },
}

pub(crate) fn check_grids(a: &SpectralGrid, b: &SpectralGrid) -> Result<(), SpectralError> {
    if a != b {
        Err(SpectralError::GridMismatch { left: *a, right: *b })
    } else {
        Ok(())
    }
}
