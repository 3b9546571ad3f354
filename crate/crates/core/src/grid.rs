//! Rectangular grids and sampled scalar fields for the 2D solvers.

use crate::error::{check_finite, Error, Result};
use crate::fft::Fft2;
use num_complex::Complex64;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Geometry {
    /// Doubly periodic box `[0,lx) × [0,ly)`.
    Torus { lx: f64, ly: f64 },
    /// Periodic in x, free-slip walls at the bottom and top of `[0, height]`.
    Channel { lx: f64, height: f64 },
}

impl Geometry {
    /// Tag used by the FLD1 snapshot format.
    pub fn tag(&self) -> u8 {
        match self {
            Geometry::Torus { .. } => 0,
            Geometry::Channel { .. } => 1,
        }
    }
}

/// `nx × ny` intervals. Torus fields store `ny` rows; channel fields store
/// `ny + 1` rows so that both walls are sampled.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Grid2D {
    pub geometry: Geometry,
    pub nx: usize,
    pub ny: usize,
    pub x0: f64,
    pub y0: f64,
}

impl Grid2D {
    pub fn new(geometry: Geometry, nx: usize, ny: usize) -> Result<Self> {
        if nx < 8 || ny < 8 || nx % 2 != 0 || ny % 2 != 0 {
            return Err(Error::InvalidGrid(format!(
                "nx, ny must be even and >= 8 (got {nx}, {ny})"
            )));
        }
        let (a, b) = match geometry {
            Geometry::Torus { lx, ly } => (lx, ly),
            Geometry::Channel { lx, height } => (lx, height),
        };
        if !(a > 0.0 && b > 0.0 && a.is_finite() && b.is_finite()) {
            return Err(Error::InvalidGrid(format!(
                "domain lengths must be positive (got {a}, {b})"
            )));
        }
        Ok(Grid2D {
            geometry,
            nx,
            ny,
            x0: 0.0,
            y0: 0.0,
        })
    }

    pub fn torus(lx: f64, ly: f64, nx: usize, ny: usize) -> Result<Self> {
        Self::new(Geometry::Torus { lx, ly }, nx, ny)
    }

    pub fn channel(lx: f64, height: f64, nx: usize, ny: usize) -> Result<Self> {
        Self::new(Geometry::Channel { lx, height }, nx, ny)
    }

    pub fn with_origin(mut self, x0: f64, y0: f64) -> Self {
        self.x0 = x0;
        self.y0 = y0;
        self
    }

    pub fn is_channel(&self) -> bool {
        matches!(self.geometry, Geometry::Channel { .. })
    }

    pub fn lx(&self) -> f64 {
        match self.geometry {
            Geometry::Torus { lx, .. } | Geometry::Channel { lx, .. } => lx,
        }
    }

    /// Physical extent in y (period for the torus, height for the channel).
    pub fn ly(&self) -> f64 {
        match self.geometry {
            Geometry::Torus { ly, .. } => ly,
            Geometry::Channel { height, .. } => height,
        }
    }

    pub fn dx(&self) -> f64 {
        self.lx() / self.nx as f64
    }

    pub fn dy(&self) -> f64 {
        self.ly() / self.ny as f64
    }

    pub fn rows(&self) -> usize {
        if self.is_channel() {
            self.ny + 1
        } else {
            self.ny
        }
    }

    pub fn len(&self) -> usize {
        self.nx * self.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Rows of the periodic computational grid (doubled for the channel).
    pub fn ext_rows(&self) -> usize {
        if self.is_channel() {
            2 * self.ny
        } else {
            self.ny
        }
    }

    pub fn ext_ly(&self) -> f64 {
        if self.is_channel() {
            2.0 * self.ly()
        } else {
            self.ly()
        }
    }

    pub fn x(&self, i: usize) -> f64 {
        self.x0 + i as f64 * self.dx()
    }

    pub fn y(&self, j: usize) -> f64 {
        self.y0 + j as f64 * self.dy()
    }

    pub fn area(&self) -> f64 {
        self.lx() * self.ly()
    }

    /// Quadrature weight of row `j` (trapezoid in y for the channel).
    pub fn row_weight(&self, j: usize) -> f64 {
        let w = self.dx() * self.dy();
        if self.is_channel() && (j == 0 || j == self.ny) {
            0.5 * w
        } else {
            w
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Field2D {
    pub grid: Grid2D,
    pub values: Vec<f64>,
}

impl Field2D {
    pub fn zeros(grid: Grid2D) -> Self {
        Field2D {
            grid,
            values: vec![0.0; grid.len()],
        }
    }

    pub fn from_values(grid: Grid2D, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::InvalidGrid(format!(
                "expected {} values, got {}",
                grid.len(),
                values.len()
            )));
        }
        Ok(Field2D { grid, values })
    }

    pub fn from_fn<F: Fn(f64, f64) -> f64>(grid: Grid2D, f: F) -> Self {
        let mut values = Vec::with_capacity(grid.len());
        for j in 0..grid.rows() {
            let y = grid.y(j);
            for i in 0..grid.nx {
                values.push(f(grid.x(i), y));
            }
        }
        Field2D { grid, values }
    }

    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.values[j * self.grid.nx + i]
    }

    pub fn check_finite(&self) -> Result<()> {
        check_finite(&self.values)
    }

    pub fn max_abs(&self) -> f64 {
        crate::stats::max_abs(&self.values)
    }

    /// `∫ f` over the physical domain.
    pub fn integral(&self) -> f64 {
        self.weighted_sum(|v| v)
    }

    pub fn weighted_sum<F: Fn(f64) -> f64>(&self, f: F) -> f64 {
        let nx = self.grid.nx;
        let mut s = 0.0;
        for j in 0..self.grid.rows() {
            let w = self.grid.row_weight(j);
            let row: f64 = self.values[j * nx..(j + 1) * nx].iter().map(|&v| f(v)).sum();
            s += w * row;
        }
        s
    }

    pub fn mean(&self) -> f64 {
        self.integral() / self.grid.area()
    }

    /// Samples on the periodic computational grid; channel fields are
    /// extended oddly across the bottom wall.
    pub fn extended(&self) -> Vec<f64> {
        if !self.grid.is_channel() {
            return self.values.clone();
        }
        let (nx, ny) = (self.grid.nx, self.grid.ny);
        let mut out = vec![0.0; nx * 2 * ny];
        for j in 1..ny {
            for i in 0..nx {
                let v = self.values[j * nx + i];
                out[j * nx + i] = v;
                out[(2 * ny - j) * nx + i] = -v;
            }
        }
        out
    }

    /// Inverse of [`Field2D::extended`] (restriction to physical rows).
    pub fn from_extended(grid: Grid2D, ext: &[f64]) -> Self {
        let n = grid.len();
        Field2D {
            grid,
            values: ext[..n].to_vec(),
        }
    }
}

/// Fourier coefficients of a field on its periodic computational grid
/// (`nx × ext_rows`, FFT ordering, unnormalised forward transform).
#[derive(Clone, Debug, PartialEq)]
pub struct Spectrum2D {
    pub grid: Grid2D,
    pub coeffs: Vec<Complex64>,
}

impl Spectrum2D {
    pub fn from_field(field: &Field2D, fft: &mut Fft2) -> Self {
        Spectrum2D {
            grid: field.grid,
            coeffs: fft.forward_real(&field.extended()),
        }
    }

    pub fn to_field(&self, fft: &mut Fft2) -> Field2D {
        let ext = fft.inverse_real(&self.coeffs);
        Field2D::from_extended(self.grid, &ext)
    }

    /// Largest violation of `c(-k) = conj(c(k))`.
    pub fn hermitian_defect(&self) -> f64 {
        let nx = self.grid.nx;
        let ny = self.grid.ext_rows();
        let mut d = 0.0f64;
        for j in 0..ny {
            for i in 0..nx {
                let a = self.coeffs[j * nx + i];
                let b = self.coeffs[((ny - j) % ny) * nx + (nx - i) % nx].conj();
                d = d.max((a - b).norm());
            }
        }
        d
    }
}
