//! Per-mode elliptic solvers: Dirichlet Poisson inversion, pressure recovery
//! with Neumann walls, and the auxiliary problem `-lap phi = u_y` solved by
//! second-order finite differences in y.

use std::f64::consts::PI;

use num_complex::Complex64;
use thiserror::Error;

use crate::flow::VelocityPair;
use crate::spectral::{dx, dy, l2_norm, laplacian_symbol, multiply_dealiased, ScalarSpectrum, SpectralError, YBasis};

#[derive(Debug, Error, PartialEq)]
pub enum EllipticError {
    #[error(transparent)]
    Spectral(#[from] SpectralError),
    #[error("Neumann compatibility violated: |rhs(0,0)| = {residual:e} exceeds {tolerance:e}")]
    Compatibility { residual: f64, tolerance: f64 },
    #[error("finite-difference resolution ny_fd = {0} is below the minimum of 16")]
    Resolution(usize),
}

/// Solves `-lap phi = rhs` for a sine-family right-hand side.
pub fn solve_dirichlet(rhs: &ScalarSpectrum) -> Result<ScalarSpectrum, SpectralError> {
    if rhs.basis() != YBasis::SineY {
        return Err(SpectralError::BasisMismatch { expected: YBasis::SineY, found: rhs.basis() });
    }
    Ok(rhs.map_modes(|k1, k2, c| if k2 == 0 { c * 0.0 } else { c / laplacian_symbol(k1, k2) }))
}

/// `(u^2)_xx + (v^2)_yy + 2 (uv)_xy` with dealiased products; cosine family.
pub fn pressure_rhs(vel: &VelocityPair) -> Result<ScalarSpectrum, SpectralError> {
    let uu = multiply_dealiased(&vel.u, &vel.u)?;
    let vv = multiply_dealiased(&vel.v, &vel.v)?;
    let uv = multiply_dealiased(&vel.u, &vel.v)?;
    let mut rhs = dx(&dx(&uu));
    rhs.axpy(1.0, &dy(&dy(&vv)));
    rhs.axpy(2.0, &dx(&dy(&uv)));
    Ok(rhs)
}

/// Pressure with `p_y = 0` at the walls and zero mean.
pub fn solve_pressure(vel: &VelocityPair) -> Result<ScalarSpectrum, EllipticError> {
    let rhs = pressure_rhs(vel)?;
    let residual = rhs.get(0, 0).norm();
    let tolerance = 1e-10 * l2_norm(&rhs);
    if residual > tolerance {
        return Err(EllipticError::Compatibility { residual, tolerance });
    }
    Ok(rhs.map_modes(
        |k1, k2, c| {
            if k1 == 0 && k2 == 0 {
                Complex64::new(0.0, 0.0)
            } else {
                c / laplacian_symbol(k1, k2)
            }
        },
    ))
}

/// Solves `(kappa2 - D2) phi = rhs` on `n + 1` equispaced nodes with
/// `phi_0 = phi_n = 0`. `rhs` holds all nodes; its end values are ignored.
pub fn solve_mode_fd(kappa2: f64, rhs: &[Complex64]) -> Vec<Complex64> {
    let n = rhs.len() - 1;
    let h2 = 1.0 / (n * n) as f64;
    let diag = kappa2 + 2.0 / h2;
    let off = -1.0 / h2;
    let mut phi = vec![Complex64::new(0.0, 0.0); n + 1];
    if n < 2 {
        return phi;
    }
    // Thomas algorithm on the interior nodes 1..n-1.
    let m = n - 1;
    let mut c_prime = vec![0.0; m];
    let mut d_prime = vec![Complex64::new(0.0, 0.0); m];
    c_prime[0] = off / diag;
    d_prime[0] = rhs[1] / diag;
    for i in 1..m {
        let denom = diag - off * c_prime[i - 1];
        c_prime[i] = off / denom;
        d_prime[i] = (rhs[i + 1] - d_prime[i - 1] * off) / denom;
    }
    phi[m] = d_prime[m - 1];
    for i in (0..m - 1).rev() {
        phi[i + 1] = d_prime[i] - phi[i + 2] * c_prime[i];
    }
    phi
}

/// Finite-difference solution of `-lap phi = u_y`, Dirichlet in y.
/// `modes[idx]` holds the y-profile of Fourier mode `k1_at(idx)` at nodes `j / ny_fd`.
#[derive(Debug, Clone, PartialEq)]
pub struct PhiField {
    nx: usize,
    ny_fd: usize,
    modes: Vec<Vec<Complex64>>,
}

impl PhiField {
    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn ny_fd(&self) -> usize {
        self.ny_fd
    }

    pub fn k1_at(&self, idx: usize) -> i64 {
        if idx <= self.nx / 2 {
            idx as i64
        } else {
            idx as i64 - self.nx as i64
        }
    }

    pub fn mode(&self, idx: usize) -> &[Complex64] {
        &self.modes[idx]
    }

    /// Physical values at `(i / nx, j / ny_fd)`, layout `[j * nx + i]`.
    pub fn to_physical(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.nx * (self.ny_fd + 1)];
        for (idx, mode) in self.modes.iter().enumerate() {
            let k1 = self.k1_at(idx) as f64;
            for i in 0..self.nx {
                let ph = 2.0 * PI * k1 * i as f64 / self.nx as f64;
                let e = Complex64::new(ph.cos(), ph.sin());
                for (j, c) in mode.iter().enumerate() {
                    out[j * self.nx + i] += (c * e).re;
                }
            }
        }
        out
    }
}

/// Solves `((2 pi k1)^2 - D2) phi_k1 = (u_y)_k1` for every Fourier mode. The
/// right-hand side is the sine series of `u_y` summed at the finite-difference nodes.
pub fn solve_phi_fd(vel: &VelocityPair, ny_fd: usize) -> Result<PhiField, EllipticError> {
    if ny_fd < 16 {
        return Err(EllipticError::Resolution(ny_fd));
    }
    let uy = dy(&vel.u);
    let g = *uy.grid();
    let nx = g.nx();
    let modes = (0..nx)
        .map(|idx| {
            let k1 = g.k1_at(idx);
            let rhs: Vec<Complex64> = (0..=ny_fd)
                .map(|j| {
                    let y = j as f64 / ny_fd as f64;
                    (1..g.ny()).map(|k2| uy.get(k1, k2) * (PI * k2 as f64 * y).sin()).sum()
                })
                .collect();
            let kx = 2.0 * PI * k1 as f64;
            solve_mode_fd(kx * kx, &rhs)
        })
        .collect();
    Ok(PhiField { nx, ny_fd, modes })
}

/// Both sides of the three `phi` estimates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhiReport {
    /// `(||phi_x||^2, ||phi_y||^2)`.
    pub lhs_l2: (f64, f64),
    /// `||u||^2`.
    pub rhs_l2: f64,
    /// `(||phi_xx||^2, ||phi_yy||^2, ||phi_xy||^2)`.
    pub lhs_h2: (f64, f64, f64),
    /// `||u_y||^2`.
    pub rhs_h2: f64,
    /// `(||phi_xxx||^2, ||phi_xxy||^2)`.
    pub lhs_h3: (f64, f64),
    /// `||u_xy||^2`.
    pub rhs_h3: f64,
    pub satisfied: [bool; 3],
}

impl PhiReport {
    pub fn lhs_l2_sum(&self) -> f64 {
        self.lhs_l2.0 + self.lhs_l2.1
    }

    /// `||phi_xx||^2 + ||phi_yy||^2 + 2 ||phi_xy||^2`.
    pub fn lhs_h2_sum(&self) -> f64 {
        self.lhs_h2.0 + self.lhs_h2.1 + 2.0 * self.lhs_h2.2
    }

    pub fn lhs_h3_sum(&self) -> f64 {
        self.lhs_h3.0 + self.lhs_h3.1
    }
}

/// Discrete norms of one mode: trapezoid sum of `|phi|^2`, midpoint sum of
/// `|D+ phi|^2`, trapezoid sum of `|D2 phi|^2` (zero at the walls).
fn mode_norms(phi: &[Complex64]) -> (f64, f64, f64) {
    let n = phi.len() - 1;
    let h = 1.0 / n as f64;
    let val: f64 =
        phi[1..n].iter().map(|c| c.norm_sqr()).sum::<f64>() * h + 0.5 * h * (phi[0].norm_sqr() + phi[n].norm_sqr());
    let grad: f64 = phi.windows(2).map(|w| ((w[1] - w[0]) / h).norm_sqr()).sum::<f64>() * h;
    let second: f64 = phi.windows(3).map(|w| ((w[2] - w[1] * 2.0 + w[0]) / (h * h)).norm_sqr()).sum::<f64>() * h;
    (val, grad, second)
}

/// Evaluates the three estimates; "satisfied" allows `rhs (1 + 10 / ny_fd^2)`.
pub fn verify_phi_estimates(vel: &VelocityPair, ny_fd: usize) -> Result<PhiReport, EllipticError> {
    let phi = solve_phi_fd(vel, ny_fd)?;
    let mut acc = [0.0f64; 7];
    for idx in 0..phi.nx {
        let kx2 = (2.0 * PI * phi.k1_at(idx) as f64).powi(2);
        let (val, grad, second) = mode_norms(phi.mode(idx));
        acc[0] += kx2 * val; // phi_x
        acc[1] += grad; // phi_y
        acc[2] += kx2 * kx2 * val; // phi_xx
        acc[3] += second; // phi_yy
        acc[4] += kx2 * grad; // phi_xy
        acc[5] += kx2 * kx2 * kx2 * val; // phi_xxx
        acc[6] += kx2 * kx2 * grad; // phi_xxy
    }
    let uy = dy(&vel.u);
    let sq = |s: &ScalarSpectrum| s.inner(s);
    let rhs_l2 = sq(&vel.u);
    let rhs_h2 = sq(&uy);
    let rhs_h3 = sq(&dx(&uy));
    let slack = 1.0 + 10.0 / (ny_fd * ny_fd) as f64;
    let mut report = PhiReport {
        lhs_l2: (acc[0], acc[1]),
        rhs_l2,
        lhs_h2: (acc[2], acc[3], acc[4]),
        rhs_h2,
        lhs_h3: (acc[5], acc[6]),
        rhs_h3,
        satisfied: [false; 3],
    };
    report.satisfied = [
        report.lhs_l2_sum() <= rhs_l2 * slack,
        report.lhs_h2_sum() <= rhs_h2 * slack,
        report.lhs_h3_sum() <= rhs_h3 * slack,
    ];
    Ok(report)
}
