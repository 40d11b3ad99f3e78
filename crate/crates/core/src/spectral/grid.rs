use super::SpectralError;

/// Dealiasing fraction as a reduced-or-not rational `num/den` in (0, 1].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Dealias {
    num: u32,
    den: u32,
}

impl Dealias {
    pub const TWO_THIRDS: Dealias = Dealias { num: 2, den: 3 };
    pub const NONE: Dealias = Dealias { num: 1, den: 1 };

    pub fn new(num: u32, den: u32) -> Result<Self, SpectralError> {
        if den == 0 || num == 0 || num > den {
            return Err(SpectralError::InvalidGrid(format!("dealias fraction {num}/{den} must lie in (0, 1]")));
        }
        Ok(Dealias { num, den })
    }

    pub fn num(self) -> u32 {
        self.num
    }

    pub fn den(self) -> u32 {
        self.den
    }

    pub fn value(self) -> f64 {
        self.num as f64 / self.den as f64
    }

    /// Largest wavenumber `k` with `k < fraction * n`.
    ///
    /// The strict inequality keeps quadratic products alias-free even when
    /// `fraction * n` is an integer.
    pub fn cutoff(self, n: usize) -> usize {
        let lim = self.num as usize * n;
        if lim == 0 {
            0
        } else {
            (lim - 1) / self.den as usize
        }
    }
}

impl Default for Dealias {
    fn default() -> Self {
        Dealias::TWO_THIRDS
    }
}

/// Collocation grid on the periodic channel `[0,1) x [0,1]`.
///
/// `nx` Fourier modes in x (period 1) and wavenumber indices `0..=ny` in y,
/// with collocation points `x_i = i/nx` and `y_j = j/ny` (walls included).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SpectralGrid {
    nx: usize,
    ny: usize,
    dealias: Dealias,
}

impl SpectralGrid {
    pub fn new(nx: usize, ny: usize) -> Result<Self, SpectralError> {
        Self::with_dealias(nx, ny, Dealias::TWO_THIRDS)
    }

    pub fn with_dealias(nx: usize, ny: usize, dealias: Dealias) -> Result<Self, SpectralError> {
        let mut problems = Vec::new();
        if nx < 4 || !nx.is_multiple_of(2) {
            problems.push(format!("nx = {nx} must be even and >= 4"));
        }
        if ny < 2 {
            problems.push(format!("ny = {ny} must be >= 2"));
        }
        if !problems.is_empty() {
            return Err(SpectralError::InvalidGrid(problems.join("; ")));
        }
        Ok(SpectralGrid { nx, ny, dealias })
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn ny(&self) -> usize {
        self.ny
    }

    pub fn dealias(&self) -> Dealias {
        self.dealias
    }

    /// Number of stored coefficients / collocation values.
    pub fn len(&self) -> usize {
        self.nx * (self.ny + 1)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn x(&self, i: usize) -> f64 {
        i as f64 / self.nx as f64
    }

    pub fn y(&self, j: usize) -> f64 {
        j as f64 / self.ny as f64
    }

    pub fn dx_spacing(&self) -> f64 {
        1.0 / self.nx as f64
    }

    pub fn dy_spacing(&self) -> f64 {
        1.0 / self.ny as f64
    }

    /// Signed x-wavenumber stored at FFT index `idx`.
    pub fn k1_at(&self, idx: usize) -> i64 {
        if idx <= self.nx / 2 {
            idx as i64
        } else {
            idx as i64 - self.nx as i64
        }
    }

    /// FFT index holding x-wavenumber `k1`.
    pub fn index_of(&self, k1: i64) -> usize {
        k1.rem_euclid(self.nx as i64) as usize
    }

    pub fn is_nyquist(&self, idx: usize) -> bool {
        idx == self.nx / 2
    }

    /// Largest |k1| kept by the dealiasing filter.
    pub fn kx_cut(&self) -> usize {
        self.dealias.cutoff(self.nx / 2)
    }

    /// Largest k2 kept by the dealiasing filter.
    pub fn ky_cut(&self) -> usize {
        self.dealias.cutoff(self.ny)
    }

    pub fn retains(&self, k1: i64, k2: usize) -> bool {
        k1.unsigned_abs() as usize <= self.kx_cut() && k2 <= self.ky_cut()
    }

    /// Largest band `kmax` for which a square band `|k1|, k2 <= kmax` is retained.
    pub fn max_band(&self) -> usize {
        self.kx_cut().min(self.ky_cut())
    }
}
