use super::{check_grids, SpectralError, SpectralGrid};

/// Real collocation values, layout `values[j * nx + i]` at `(x_i, y_j)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PhysicalField {
    grid: SpectralGrid,
    values: Vec<f64>,
}

impl PhysicalField {
    pub fn zeros(grid: SpectralGrid) -> Self {
        PhysicalField { grid, values: vec![0.0; grid.len()] }
    }

    pub fn from_values(grid: SpectralGrid, values: Vec<f64>) -> Self {
        assert_eq!(values.len(), grid.len(), "value array does not match grid");
        PhysicalField { grid, values }
    }

    pub fn from_fn(grid: SpectralGrid, f: impl Fn(f64, f64) -> f64) -> Self {
        let mut values = Vec::with_capacity(grid.len());
        for j in 0..=grid.ny() {
            for i in 0..grid.nx() {
                values.push(f(grid.x(i), grid.y(j)));
            }
        }
        PhysicalField { grid, values }
    }

    pub fn grid(&self) -> &SpectralGrid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[j * self.grid.nx() + i]
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Largest |value| on the two wall rows.
    pub fn max_wall_abs(&self) -> f64 {
        let nx = self.grid.nx();
        let ny = self.grid.ny();
        self.values[..nx].iter().chain(&self.values[ny * nx..]).fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        PhysicalField { grid: self.grid, values: self.values.iter().map(|&v| f(v)).collect() }
    }

    pub fn pointwise_mul(&self, other: &PhysicalField) -> Result<Self, SpectralError> {
        check_grids(&self.grid, &other.grid)?;
        let values = self.values.iter().zip(&other.values).map(|(a, b)| a * b).collect();
        Ok(PhysicalField { grid: self.grid, values })
    }

    /// `int_Omega g`: rectangle rule in x, trapezoid rule in y.
    pub fn integrate(&self) -> f64 {
        let nx = self.grid.nx();
        let ny = self.grid.ny();
        let mut total = 0.0;
        for (j, row) in self.values.chunks_exact(nx).enumerate() {
            let w = if j == 0 || j == ny { 0.5 } else { 1.0 };
            total += w * row.iter().sum::<f64>();
        }
        total / (nx as f64 * ny as f64)
    }

    pub fn l1_norm(&self) -> f64 {
        self.map(f64::abs).integrate()
    }
}
