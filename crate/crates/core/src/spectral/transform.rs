//! Fast transforms between collocation values and mixed Fourier x {cos|sin} coefficients.
//!
//! The y direction uses the even (cosine) or odd (sine) extension of the
//! `ny + 1` wall-inclusive samples to a periodic sequence of length `2 ny`,
//! so both bases share the ordinary complex FFT code path.

use std::cell::RefCell;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use super::{SpectralGrid, YBasis};

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

fn plan(len: usize, forward: bool) -> Arc<dyn Fft<f64>> {
    PLANNER.with(|p| {
        let mut p = p.borrow_mut();
        if forward {
            p.plan_fft_forward(len)
        } else {
            p.plan_fft_inverse(len)
        }
    })
}

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

/// Coefficients (layout `[k2 * nx + idx]`) to complex collocation values
/// (layout `[j * nx + i]`). The imaginary part vanishes for Hermitian input.
pub(crate) fn synthesize(grid: &SpectralGrid, basis: YBasis, coeffs: &[Complex64]) -> Vec<Complex64> {
    let nx = grid.nx();
    let ny = grid.ny();
    let n2 = 2 * ny;
    let mut work = vec![Complex64::new(0.0, 0.0); grid.len()];
    let yfft = plan(n2, false);
    let mut ext = vec![Complex64::new(0.0, 0.0); n2];
    let mut scratch = vec![Complex64::new(0.0, 0.0); yfft.get_inplace_scratch_len()];

    for idx in 0..nx {
        let mut any = false;
        for k2 in 0..=ny {
            if coeffs[k2 * nx + idx] != Complex64::new(0.0, 0.0) {
                any = true;
                break;
            }
        }
        if !any {
            continue;
        }
        ext.iter_mut().for_each(|e| *e = Complex64::new(0.0, 0.0));
        match basis {
            YBasis::CosineY => {
                ext[0] = coeffs[idx];
                ext[ny] = coeffs[ny * nx + idx];
                for k2 in 1..ny {
                    let half = coeffs[k2 * nx + idx] * 0.5;
                    ext[k2] = half;
                    ext[n2 - k2] = half;
                }
            }
            YBasis::SineY => {
                for k2 in 1..ny {
                    let a = coeffs[k2 * nx + idx] / (2.0 * I);
                    ext[k2] = a;
                    ext[n2 - k2] = -a;
                }
            }
        }
        yfft.process_with_scratch(&mut ext, &mut scratch);
        for j in 0..=ny {
            work[j * nx + idx] = ext[j];
        }
    }

    let xfft = plan(nx, false);
    let mut scratch = vec![Complex64::new(0.0, 0.0); xfft.get_inplace_scratch_len()];
    for row in work.chunks_exact_mut(nx) {
        xfft.process_with_scratch(row, &mut scratch);
    }
    work
}

/// Real collocation values (layout `[j * nx + i]`) to coefficients in `basis`.
///
/// For `SineY` the wall rows are ignored (the odd extension pins them to 0).
/// The result is symmetrized so that Hermitian symmetry holds exactly.
pub(crate) fn analyze(grid: &SpectralGrid, basis: YBasis, values: &[f64]) -> Vec<Complex64> {
    let nx = grid.nx();
    let ny = grid.ny();
    let n2 = 2 * ny;
    let mut work: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();

    let xfft = plan(nx, true);
    let mut scratch = vec![Complex64::new(0.0, 0.0); xfft.get_inplace_scratch_len()];
    let inv_nx = 1.0 / nx as f64;
    for row in work.chunks_exact_mut(nx) {
        xfft.process_with_scratch(row, &mut scratch);
        row.iter_mut().for_each(|c| *c *= inv_nx);
    }

    let yfft = plan(n2, true);
    let mut ext = vec![Complex64::new(0.0, 0.0); n2];
    let mut scratch = vec![Complex64::new(0.0, 0.0); yfft.get_inplace_scratch_len()];
    let mut out = vec![Complex64::new(0.0, 0.0); grid.len()];
    let inv_ny = 1.0 / ny as f64;
    for idx in 0..nx {
        match basis {
            YBasis::CosineY => {
                for j in 0..=ny {
                    ext[j] = work[j * nx + idx];
                }
                for j in 1..ny {
                    ext[n2 - j] = work[j * nx + idx];
                }
            }
            YBasis::SineY => {
                ext[0] = Complex64::new(0.0, 0.0);
                ext[ny] = Complex64::new(0.0, 0.0);
                for j in 1..ny {
                    let v = work[j * nx + idx];
                    ext[j] = v;
                    ext[n2 - j] = -v;
                }
            }
        }
        yfft.process_with_scratch(&mut ext, &mut scratch);
        match basis {
            YBasis::CosineY => {
                out[idx] = ext[0] * (0.5 * inv_ny);
                out[ny * nx + idx] = ext[ny] * (0.5 * inv_ny);
                for k2 in 1..ny {
                    out[k2 * nx + idx] = ext[k2] * inv_ny;
                }
            }
            YBasis::SineY => {
                for k2 in 1..ny {
                    out[k2 * nx + idx] = I * ext[k2] * inv_ny;
                }
            }
        }
    }
    symmetrize(grid, &mut out);
    out
}

/// Enforces `c(-k1, k2) = conj(c(k1, k2))` by averaging each Hermitian pair.
pub(crate) fn symmetrize(grid: &SpectralGrid, coeffs: &mut [Complex64]) {
    let nx = grid.nx();
    for row in coeffs.chunks_exact_mut(nx) {
        row[0].im = 0.0;
        row[nx / 2].im = 0.0;
        for idx in 1..nx / 2 {
            let a = row[idx];
            let b = row[nx - idx].conj();
            let m = (a + b) * 0.5;
            row[idx] = m;
            row[nx - idx] = m.conj();
        }
    }
}
