use std::f64::consts::PI;

use num_complex::Complex64;

use super::{check_grids, transform, PhysicalField, Profile, SpectralError, SpectralGrid, YBasis};

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

/// Coefficients of a real scalar field in the mixed Fourier x {cos|sin} basis.
///
/// Storage is `coeffs[k2 * nx + index_of(k1)]` for `k2 = 0..=ny`; rows that
/// the basis does not hold (k2 = 0 and k2 = ny for `SineY`) stay zero.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarSpectrum {
    grid: SpectralGrid,
    basis: YBasis,
    coeffs: Vec<Complex64>,
}

impl ScalarSpectrum {
    pub fn zeros(grid: SpectralGrid, basis: YBasis) -> Self {
        ScalarSpectrum { grid, basis, coeffs: vec![ZERO; grid.len()] }
    }

    /// Wraps raw coefficients. Rows outside the basis are cleared.
    pub fn from_coeffs(grid: SpectralGrid, basis: YBasis, mut coeffs: Vec<Complex64>) -> Self {
        assert_eq!(coeffs.len(), grid.len(), "coefficient array does not match grid");
        if basis == YBasis::SineY {
            let nx = grid.nx();
            coeffs[..nx].iter_mut().for_each(|c| *c = ZERO);
            coeffs[grid.ny() * nx..].iter_mut().for_each(|c| *c = ZERO);
        }
        ScalarSpectrum { grid, basis, coeffs }
    }

    pub fn grid(&self) -> &SpectralGrid {
        &self.grid
    }

    pub fn basis(&self) -> YBasis {
        self.basis
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn get(&self, k1: i64, k2: usize) -> Complex64 {
        self.coeffs[k2 * self.grid.nx() + self.grid.index_of(k1)]
    }

    /// Sets mode `(k1, k2)` and its Hermitian partner `(-k1, k2)`.
    pub fn set_mode(&mut self, k1: i64, k2: usize, c: Complex64) {
        assert!(self.basis.holds(k2, self.grid.ny()), "k2 = {k2} not in {:?}", self.basis);
        let nx = self.grid.nx();
        let idx = self.grid.index_of(k1);
        if idx == 0 || self.grid.is_nyquist(idx) {
            self.coeffs[k2 * nx + idx] = Complex64::new(c.re, 0.0);
        } else {
            self.coeffs[k2 * nx + idx] = c;
            self.coeffs[k2 * nx + self.grid.index_of(-k1)] = c.conj();
        }
    }

    /// Applies `f(k1, k2, c)` to every stored mode of the basis.
    pub fn map_modes(&self, mut f: impl FnMut(i64, usize, Complex64) -> Complex64) -> Self {
        let nx = self.grid.nx();
        let ny = self.grid.ny();
        let mut out = ScalarSpectrum::zeros(self.grid, self.basis);
        for k2 in 0..=ny {
            if !self.basis.holds(k2, ny) {
                continue;
            }
            for idx in 0..nx {
                let k1 = self.grid.k1_at(idx);
                out.coeffs[k2 * nx + idx] = f(k1, k2, self.coeffs[k2 * nx + idx]);
            }
        }
        out
    }

    pub fn scale(&self, a: f64) -> Self {
        let mut out = self.clone();
        out.coeffs.iter_mut().for_each(|c| *c *= a);
        out
    }

    /// `self += a * other`.
    pub fn axpy(&mut self, a: f64, other: &ScalarSpectrum) {
        assert_eq!(self.grid, other.grid, "grid mismatch");
        assert_eq!(self.basis, other.basis, "basis mismatch");
        for (c, o) in self.coeffs.iter_mut().zip(&other.coeffs) {
            *c += o * a;
        }
    }

    pub fn add(&self, other: &ScalarSpectrum) -> Self {
        let mut out = self.clone();
        out.axpy(1.0, other);
        out
    }

    pub fn sub(&self, other: &ScalarSpectrum) -> Self {
        let mut out = self.clone();
        out.axpy(-1.0, other);
        out
    }

    /// Zeroes every mode outside the dealiased band.
    pub fn dealias_in_place(&mut self) {
        let nx = self.grid.nx();
        let kx = self.grid.kx_cut() as i64;
        let ky = self.grid.ky_cut();
        for (k2, row) in self.coeffs.chunks_exact_mut(nx).enumerate() {
            for (idx, c) in row.iter_mut().enumerate() {
                let k1 = if idx <= nx / 2 { idx as i64 } else { idx as i64 - nx as i64 };
                if k1.abs() > kx || k2 > ky {
                    *c = ZERO;
                }
            }
        }
    }

    pub fn dealiased(&self) -> Self {
        let mut out = self.clone();
        out.dealias_in_place();
        out
    }

    /// Multiplies by the Laplacian symbol `-((2 pi k1)^2 + (pi k2)^2)`.
    pub fn laplacian(&self) -> Self {
        self.map_modes(|k1, k2, c| c * -laplacian_symbol(k1, k2))
    }

    /// L2 inner product `int g h` of two real fields in the same basis.
    pub fn inner(&self, other: &ScalarSpectrum) -> f64 {
        assert_eq!(self.grid, other.grid, "grid mismatch");
        if self.basis != other.basis {
            // cos and sin families are not orthogonal on [0,1]; callers compare like with like
            panic!("inner product across bases");
        }
        let nx = self.grid.nx();
        let mut sum = 0.0;
        for (k2, (ra, rb)) in self.coeffs.chunks_exact(nx).zip(other.coeffs.chunks_exact(nx)).enumerate() {
            let w = self.basis.weight(k2);
            if w == 0.0 {
                continue;
            }
            let s: f64 = ra.iter().zip(rb).map(|(a, b)| (a * b.conj()).re).sum();
            sum += w * s;
        }
        sum
    }

    /// Mean profile: the k1 = 0 row.
    pub fn mean_profile(&self) -> Profile {
        let nx = self.grid.nx();
        let coeffs = (0..=self.grid.ny()).map(|k2| self.coeffs[k2 * nx].re).collect();
        Profile::from_coeffs(self.basis, coeffs)
    }

    /// Copy with the k1 = 0 row removed.
    pub fn without_mean(&self) -> Self {
        let mut out = self.clone();
        let nx = self.grid.nx();
        for k2 in 0..=self.grid.ny() {
            out.coeffs[k2 * nx] = ZERO;
        }
        out
    }

    /// Embeds (or truncates) onto another grid. The x-Nyquist column is dropped.
    pub fn resample(&self, grid: SpectralGrid) -> Self {
        let mut out = ScalarSpectrum::zeros(grid, self.basis);
        let kx = (self.grid.nx() / 2).min(grid.nx() / 2) as i64 - 1;
        let ky = self.grid.ny().min(grid.ny());
        for k2 in 0..=ky {
            if !self.basis.holds(k2, self.grid.ny()) || !self.basis.holds(k2, grid.ny()) {
                continue;
            }
            for k1 in -kx..=kx {
                out.coeffs[k2 * grid.nx() + grid.index_of(k1)] = self.get(k1, k2);
            }
        }
        out
    }

    pub fn is_finite(&self) -> bool {
        self.coeffs.iter().all(|c| c.re.is_finite() && c.im.is_finite())
    }

    /// Largest |k1| and k2 with a nonzero coefficient.
    pub fn support(&self) -> (usize, usize) {
        let nx = self.grid.nx();
        let mut kx = 0;
        let mut ky = 0;
        for (k2, row) in self.coeffs.chunks_exact(nx).enumerate() {
            for (idx, c) in row.iter().enumerate() {
                if *c != ZERO {
                    kx = kx.max(self.grid.k1_at(idx).unsigned_abs() as usize);
                    ky = ky.max(k2);
                }
            }
        }
        (kx, ky)
    }

    /// Evaluates the series at an arbitrary point by direct summation.
    pub fn evaluate(&self, x: f64, y: f64) -> f64 {
        let nx = self.grid.nx();
        let mut sum = 0.0;
        for (k2, row) in self.coeffs.chunks_exact(nx).enumerate() {
            let b = match self.basis {
                YBasis::CosineY => (PI * k2 as f64 * y).cos(),
                YBasis::SineY => (PI * k2 as f64 * y).sin(),
            };
            for (idx, c) in row.iter().enumerate() {
                if *c == ZERO {
                    continue;
                }
                let ph = 2.0 * PI * self.grid.k1_at(idx) as f64 * x;
                sum += (c * Complex64::new(ph.cos(), ph.sin())).re * b;
            }
        }
        sum
    }
}

/// `(2 pi k1)^2 + (pi k2)^2`.
pub fn laplacian_symbol(k1: i64, k2: usize) -> f64 {
    let a = 2.0 * PI * k1 as f64;
    let b = PI * k2 as f64;
    a * a + b * b
}

/// Evaluates the truncated series at the collocation points.
pub fn to_physical(s: &ScalarSpectrum) -> PhysicalField {
    let values = transform::synthesize(&s.grid, s.basis, &s.coeffs);
    PhysicalField::from_values(s.grid, values.into_iter().map(|c| c.re).collect())
}

/// Inverse of [`to_physical`] on band-limited data.
///
/// Fails with `WallValueError` when `SineY` is requested for a field whose
/// wall rows exceed `1e-10 * max|p|`.
pub fn to_spectral(p: &PhysicalField, basis: YBasis) -> Result<ScalarSpectrum, SpectralError> {
    if basis == YBasis::SineY {
        let max_wall = p.max_wall_abs();
        let tolerance = 1e-10 * p.max_abs();
        if max_wall > tolerance {
            return Err(SpectralError::WallValueError { max_wall, tolerance });
        }
    }
    Ok(to_spectral_unchecked(p, basis))
}

pub(crate) fn to_spectral_unchecked(p: &PhysicalField, basis: YBasis) -> ScalarSpectrum {
    let coeffs = transform::analyze(p.grid(), basis, p.values());
    ScalarSpectrum { grid: *p.grid(), basis, coeffs }
}

/// x-derivative: multiplication by `2 pi i k1`; the Nyquist column is dropped.
pub fn dx(s: &ScalarSpectrum) -> ScalarSpectrum {
    let nyq = (s.grid.nx() / 2) as i64;
    s.map_modes(|k1, _, c| if k1 == nyq { ZERO } else { c * Complex64::new(0.0, 2.0 * PI * k1 as f64) })
}

/// y-derivative. `SineY -> CosineY` with factor `+pi k2`; `CosineY -> SineY`
/// with factor `-pi k2` (the constant row and the unrepresentable `sin(pi ny y)`
/// row map to zero).
pub fn dy(s: &ScalarSpectrum) -> ScalarSpectrum {
    let nx = s.grid.nx();
    let ny = s.grid.ny();
    let target = s.basis.flipped();
    let sign = match s.basis {
        YBasis::SineY => 1.0,
        YBasis::CosineY => -1.0,
    };
    let mut out = ScalarSpectrum::zeros(s.grid, target);
    for k2 in 1..ny {
        let f = sign * PI * k2 as f64;
        for idx in 0..nx {
            out.coeffs[k2 * nx + idx] = s.coeffs[k2 * nx + idx] * f;
        }
    }
    out
}

/// Basis of a product: like parities multiply to cosine, unlike to sine.
pub fn product_basis(a: YBasis, b: YBasis) -> YBasis {
    if a == b {
        YBasis::CosineY
    } else {
        YBasis::SineY
    }
}

/// Pseudo-spectral product with the dealiasing filter applied to both inputs
/// and to the result. Equals the exact truncated convolution.
pub fn multiply_dealiased(a: &ScalarSpectrum, b: &ScalarSpectrum) -> Result<ScalarSpectrum, SpectralError> {
    check_grids(&a.grid, &b.grid)?;
    let pa = to_physical(&a.dealiased());
    let pb = to_physical(&b.dealiased());
    let prod = pa.pointwise_mul(&pb)?;
    let mut out = to_spectral_unchecked(&prod, product_basis(a.basis, b.basis));
    out.dealias_in_place();
    Ok(out)
}

/// L2 norm over the channel by Parseval.
pub fn l2_norm(s: &ScalarSpectrum) -> f64 {
    s.inner(s).max(0.0).sqrt()
}

/// Zeroes every coefficient with `|k1| > m` or `k2 > m`.
pub fn truncate_modes(s: &ScalarSpectrum, m: usize) -> ScalarSpectrum {
    let m1 = m as i64;
    s.map_modes(|k1, k2, c| if k1.abs() > m1 || k2 > m { ZERO } else { c })
}

/// Splits a field into its horizontal mean profile and zero-mean remainder.
pub fn decompose_mean_osc(s: &ScalarSpectrum) -> (Profile, ScalarSpectrum) {
    (s.mean_profile(), s.without_mean())
}
