//! Thin wrappers over `rustfft` for the transforms used by the spectral solvers.
//! Inverse transforms are normalised so that `inverse(forward(x)) == x`.

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use std::sync::Arc;

/// Signed wavenumber of FFT index `i` for a transform of length `n`.
/// The Nyquist index `n/2` maps to `+n/2`.
pub fn signed_index(i: usize, n: usize) -> i64 {
    if i <= n / 2 {
        i as i64
    } else {
        i as i64 - n as i64
    }
}

/// Largest retained |m| under the 2/3 rule for a transform of length `n`.
/// Quadratic products of retained modes then alias only onto discarded ones.
pub fn two_thirds_cutoff(n: usize) -> i64 {
    ((n - 1) / 3) as i64
}

pub struct Fft1 {
    n: usize,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
    scratch: Vec<Complex64>,
}

impl Fft1 {
    pub fn new(n: usize) -> Self {
        let mut planner = FftPlanner::new();
        let fwd = planner.plan_fft_forward(n);
        let inv = planner.plan_fft_inverse(n);
        let len = fwd
            .get_inplace_scratch_len()
            .max(inv.get_inplace_scratch_len());
        Fft1 {
            n,
            fwd,
            inv,
            scratch: vec![Complex64::new(0.0, 0.0); len],
        }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// In-place forward transform of every consecutive block of length `n`.
    pub fn forward(&mut self, data: &mut [Complex64]) {
        self.fwd.process_with_scratch(data, &mut self.scratch);
    }

    /// In-place normalised inverse transform of every consecutive block.
    pub fn inverse(&mut self, data: &mut [Complex64]) {
        self.inv.process_with_scratch(data, &mut self.scratch);
        let s = 1.0 / self.n as f64;
        for v in data.iter_mut() {
            *v *= s;
        }
    }

    pub fn forward_real(&mut self, values: &[f64]) -> Vec<Complex64> {
        let mut buf: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.forward(&mut buf);
        buf
    }

    pub fn inverse_real(&mut self, coeffs: &[Complex64]) -> Vec<f64> {
        let mut buf = coeffs.to_vec();
        self.inverse(&mut buf);
        buf.iter().map(|c| c.re).collect()
    }
}

/// Row-major 2D transform: `ny` rows of length `nx`.
pub struct Fft2 {
    nx: usize,
    ny: usize,
    rows: Fft1,
    cols: Fft1,
    tbuf: Vec<Complex64>,
}

impl Fft2 {
    pub fn new(nx: usize, ny: usize) -> Self {
        Fft2 {
            nx,
            ny,
            rows: Fft1::new(nx),
            cols: Fft1::new(ny),
            tbuf: vec![Complex64::new(0.0, 0.0); nx * ny],
        }
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.nx, self.ny)
    }

    fn transpose_in(&mut self, data: &[Complex64]) {
        for j in 0..self.ny {
            for i in 0..self.nx {
                self.tbuf[i * self.ny + j] = data[j * self.nx + i];
            }
        }
    }

    fn transpose_out(&self, data: &mut [Complex64]) {
        for i in 0..self.nx {
            for j in 0..self.ny {
                data[j * self.nx + i] = self.tbuf[i * self.ny + j];
            }
        }
    }

    pub fn forward(&mut self, data: &mut [Complex64]) {
        self.rows.forward(data);
        self.transpose_in(data);
        let mut t = std::mem::take(&mut self.tbuf);
        self.cols.forward(&mut t);
        self.tbuf = t;
        self.transpose_out(data);
    }

    pub fn inverse(&mut self, data: &mut [Complex64]) {
        self.rows.inverse(data);
        self.transpose_in(data);
        let mut t = std::mem::take(&mut self.tbuf);
        self.cols.inverse(&mut t);
        self.tbuf = t;
        self.transpose_out(data);
    }

    pub fn forward_real(&mut self, values: &[f64]) -> Vec<Complex64> {
        let mut buf: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.forward(&mut buf);
        buf
    }

    pub fn inverse_real(&mut self, coeffs: &[Complex64]) -> Vec<f64> {
        let mut buf = coeffs.to_vec();
        self.inverse(&mut buf);
        buf.iter().map(|c| c.re).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_2d() {
        let (nx, ny) = (12, 8);
        let vals: Vec<f64> = (0..nx * ny).map(|k| ((k * 7919) % 23) as f64 - 11.0).collect();
        let mut f = Fft2::new(nx, ny);
        let c = f.forward_real(&vals);
        let back = f.inverse_real(&c);
        for (a, b) in vals.iter().zip(&back) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn single_mode_lands_on_expected_index() {
        let (nx, ny) = (16, 8);
        let mut vals = vec![0.0; nx * ny];
        for j in 0..ny {
            for i in 0..nx {
                let x = 2.0 * std::f64::consts::PI * i as f64 / nx as f64;
                let y = 2.0 * std::f64::consts::PI * j as f64 / ny as f64;
                vals[j * nx + i] = (3.0 * x - 2.0 * y).cos();
            }
        }
        let c = Fft2::new(nx, ny).forward_real(&vals);
        let idx = (ny - 2) * nx + 3;
        assert!((c[idx].re - (nx * ny) as f64 / 2.0).abs() < 1e-9);
        assert_eq!(signed_index(ny - 2, ny), -2);
        assert_eq!(two_thirds_cutoff(96), 31);
    }
}
