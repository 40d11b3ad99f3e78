use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::{l2_norm, Profile, ScalarSpectrum, SpectralError, SpectralGrid, YBasis};

/// Seeded random real field with a flat complex-Gaussian spectrum on
/// `|k1| <= kmax`, `k2 <= kmax`, normalized to unit L2 norm.
pub fn random_band_limited(
    grid: SpectralGrid,
    seed: u64,
    kmax: usize,
    basis: YBasis,
) -> Result<ScalarSpectrum, SpectralError> {
    let limit = grid.max_band();
    if kmax == 0 || kmax > limit {
        return Err(SpectralError::BandTooWide { kmax, limit });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut s = ScalarSpectrum::zeros(grid, basis);
    for k2 in 0..=kmax {
        if !basis.holds(k2, grid.ny()) {
            continue;
        }
        for k1 in 0..=kmax as i64 {
            let re: f64 = StandardNormal.sample(&mut rng);
            let im: f64 = StandardNormal.sample(&mut rng);
            let c = if k1 == 0 { Complex64::new(re, 0.0) } else { Complex64::new(re, im) * 0.5f64.sqrt() };
            s.set_mode(k1, k2, c);
        }
    }
    let n = l2_norm(&s);
    Ok(if n > 0.0 { s.scale(1.0 / n) } else { s })
}

/// Seeded random profile with Gaussian coefficients for `k2 <= kmax`, unit L2 norm.
pub fn random_profile(ny: usize, seed: u64, kmax: usize, basis: YBasis) -> Profile {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut coeffs = vec![0.0; ny + 1];
    for (k2, c) in coeffs.iter_mut().enumerate().take(kmax.min(ny) + 1) {
        let z: f64 = StandardNormal.sample(&mut rng);
        if basis.holds(k2, ny) {
            *c = z;
        }
    }
    let p = Profile::from_coeffs(basis, coeffs);
    let n = p.l2_norm();
    if n > 0.0 {
        p.scale(1.0 / n)
    } else {
        p
    }
}
