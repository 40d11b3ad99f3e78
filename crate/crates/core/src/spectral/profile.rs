use std::f64::consts::PI;

use num_complex::Complex64;

use super::{ScalarSpectrum, SpectralGrid, YBasis};

/// Real coefficients of an x-independent profile in a y-basis, `k2 = 0..=ny`.
#[derive(Debug, Clone, PartialEq)]
pub struct Profile {
    basis: YBasis,
    coeffs: Vec<f64>,
}

impl Profile {
    pub fn zeros(ny: usize, basis: YBasis) -> Self {
        Profile { basis, coeffs: vec![0.0; ny + 1] }
    }

    /// Rows outside the basis are cleared.
    pub fn from_coeffs(basis: YBasis, mut coeffs: Vec<f64>) -> Self {
        let ny = coeffs.len() - 1;
        for (k2, c) in coeffs.iter_mut().enumerate() {
            if !basis.holds(k2, ny) {
                *c = 0.0;
            }
        }
        Profile { basis, coeffs }
    }

    /// Cosine coefficients of the linear profile `a y` (L2 projection).
    pub fn linear_shear(ny: usize, a: f64) -> Self {
        let mut coeffs = vec![0.0; ny + 1];
        coeffs[0] = 0.5 * a;
        for (k2, c) in coeffs.iter_mut().enumerate().skip(1) {
            if k2 % 2 == 1 {
                let pk = PI * k2 as f64;
                *c = -4.0 * a / (pk * pk);
            }
        }
        Profile { basis: YBasis::CosineY, coeffs }
    }

    pub fn basis(&self) -> YBasis {
        self.basis
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [f64] {
        &mut self.coeffs
    }

    pub fn ny(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn dy(&self) -> Profile {
        let ny = self.ny();
        let sign = match self.basis {
            YBasis::SineY => 1.0,
            YBasis::CosineY => -1.0,
        };
        let mut out = Profile::zeros(ny, self.basis.flipped());
        for k2 in 1..ny {
            out.coeffs[k2] = sign * PI * k2 as f64 * self.coeffs[k2];
        }
        out
    }

    pub fn scale(&self, a: f64) -> Profile {
        Profile { basis: self.basis, coeffs: self.coeffs.iter().map(|c| c * a).collect() }
    }

    /// `self += a * other`.
    pub fn axpy(&mut self, a: f64, other: &Profile) {
        assert_eq!(self.basis, other.basis, "basis mismatch");
        assert_eq!(self.coeffs.len(), other.coeffs.len(), "length mismatch");
        for (c, o) in self.coeffs.iter_mut().zip(&other.coeffs) {
            *c += a * o;
        }
    }

    pub fn sub(&self, other: &Profile) -> Profile {
        let mut out = self.clone();
        out.axpy(-1.0, other);
        out
    }

    pub fn inner(&self, other: &Profile) -> f64 {
        assert_eq!(self.basis, other.basis, "basis mismatch");
        self.coeffs.iter().zip(&other.coeffs).enumerate().map(|(k2, (a, b))| self.basis.weight(k2) * a * b).sum()
    }

    /// L2 norm on `[0, 1]` (equal to the channel norm of the x-independent field).
    pub fn l2_norm(&self) -> f64 {
        self.inner(self).max(0.0).sqrt()
    }

    /// `int_0^1 profile dy`.
    pub fn integral(&self) -> f64 {
        match self.basis {
            YBasis::CosineY => self.coeffs[0],
            YBasis::SineY => self
                .coeffs
                .iter()
                .enumerate()
                .filter(|(k2, _)| k2 % 2 == 1)
                .map(|(k2, c)| 2.0 * c / (PI * k2 as f64))
                .sum(),
        }
    }

    pub fn evaluate(&self, y: f64) -> f64 {
        self.coeffs
            .iter()
            .enumerate()
            .map(|(k2, c)| {
                let arg = PI * k2 as f64 * y;
                c * match self.basis {
                    YBasis::CosineY => arg.cos(),
                    YBasis::SineY => arg.sin(),
                }
            })
            .sum()
    }

    /// Embeds the profile as the k1 = 0 row of a spectrum on `grid`.
    pub fn to_spectrum(&self, grid: SpectralGrid) -> ScalarSpectrum {
        assert_eq!(grid.ny(), self.ny(), "profile resolution does not match grid");
        let nx = grid.nx();
        let mut coeffs = vec![Complex64::new(0.0, 0.0); grid.len()];
        for (k2, c) in self.coeffs.iter().enumerate() {
            coeffs[k2 * nx] = Complex64::new(*c, 0.0);
        }
        ScalarSpectrum::from_coeffs(grid, self.basis, coeffs)
    }

    pub fn truncated(&self, kmax: usize) -> Profile {
        let mut out = self.clone();
        out.coeffs.iter_mut().skip(kmax + 1).for_each(|c| *c = 0.0);
        out
    }

    pub fn is_finite(&self) -> bool {
        self.coeffs.iter().all(|c| c.is_finite())
    }
}
