//! The 2D model transported by the P₂-truncated stream function
//! `ψ = r² ∫_r^∞ P₂(ω)(ρ,θ)/ρ dρ`, on a polar finite-volume grid.
//!
//! `ψ` lives on cell corners and face fluxes are corner differences, so the
//! discrete velocity is exactly divergence free and `∫ω` is conserved to
//! round-off.

use crate::error::{check_finite, Error, Result};
use std::f64::consts::{PI, TAU};

/// Cell averages on `[0, r_max] × [0, 2π)`; ring `i` covers
/// `[i·dr, (i+1)·dr]`, values are ring-major.
#[derive(Clone, Debug, PartialEq)]
pub struct DiskField {
    pub nr: usize,
    pub n_theta: usize,
    pub r_max: f64,
    pub values: Vec<f64>,
}

impl DiskField {
    pub fn new(nr: usize, n_theta: usize, r_max: f64, values: Vec<f64>) -> Result<Self> {
        if nr < 4 || n_theta < 8 || n_theta % 2 != 0 || !(r_max > 0.0 && r_max.is_finite()) {
            return Err(Error::InvalidGrid(format!(
                "disk grid needs nr >= 4, even n_theta >= 8, r_max > 0 (got {nr}, {n_theta}, {r_max})"
            )));
        }
        if values.len() != nr * n_theta {
            return Err(Error::InvalidGrid(format!("{} values for {nr}×{n_theta}", values.len())));
        }
        check_finite(&values)?;
        Ok(DiskField {
            nr,
            n_theta,
            r_max,
            values,
        })
    }

    /// Samples `f` at cell centres.
    pub fn from_fn<F: Fn(f64, f64) -> f64>(nr: usize, n_theta: usize, r_max: f64, f: F) -> Result<Self> {
        let dr = r_max / nr as f64;
        let dth = TAU / n_theta as f64;
        let mut v = Vec::with_capacity(nr * n_theta);
        for i in 0..nr {
            for j in 0..n_theta {
                v.push(f((i as f64 + 0.5) * dr, (j as f64 + 0.5) * dth));
            }
        }
        Self::new(nr, n_theta, r_max, v)
    }

    pub fn dr(&self) -> f64 {
        self.r_max / self.nr as f64
    }

    pub fn dtheta(&self) -> f64 {
        TAU / self.n_theta as f64
    }

    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.n_theta + j]
    }

    fn area(&self, i: usize) -> f64 {
        let dr = self.dr();
        let (a, b) = (i as f64 * dr, (i + 1) as f64 * dr);
        0.5 * (b * b - a * a) * self.dtheta()
    }

    pub fn integral(&self) -> f64 {
        (0..self.nr)
            .map(|i| self.area(i) * self.values[i * self.n_theta..(i + 1) * self.n_theta].iter().sum::<f64>())
            .sum()
    }

    pub fn max_abs(&self) -> f64 {
        crate::stats::max_abs(&self.values)
    }

    /// Largest centred-difference `|∇ω|` over interior cells.
    pub fn grad_max(&self) -> f64 {
        let (dr, dth, m) = (self.dr(), self.dtheta(), self.n_theta);
        let mut g = 0.0f64;
        for i in 1..self.nr - 1 {
            let r = (i as f64 + 0.5) * dr;
            for j in 0..m {
                let wr = (self.at(i + 1, j) - self.at(i - 1, j)) / (2.0 * dr);
                let wt = (self.at(i, (j + 1) % m) - self.at(i, (j + m - 1) % m)) / (2.0 * dth * r);
                g = g.max(wr.hypot(wt));
            }
        }
        g
    }

    /// True when the innermost ring carries vorticity.
    pub fn touches_axis(&self) -> bool {
        let m = self.max_abs();
        m > 0.0 && self.values[..self.n_theta].iter().any(|v| v.abs() > 1e-12 * m)
    }
}

/// Corner values of the P₂ stream function.
#[derive(Clone, Debug, PartialEq)]
pub struct P2Stream {
    pub nr: usize,
    pub n_theta: usize,
    pub dr: f64,
    /// `(A_i, B_i) = ∫_{r_i}^∞ (a₂, b₂)/ρ dρ` at the ring faces `r_i = i·dr`.
    pub coefficients: Vec<(f64, f64)>,
}

impl P2Stream {
    pub fn new(w: &DiskField) -> Self {
        let (m, dth) = (w.n_theta, w.dtheta());
        let mut coef = vec![(0.0, 0.0); w.nr + 1];
        for i in (1..w.nr).rev() {
            let (mut a, mut b) = (0.0, 0.0);
            for j in 0..m {
                let th = (j as f64 + 0.5) * dth;
                a += w.at(i, j) * (2.0 * th).cos();
                b += w.at(i, j) * (2.0 * th).sin();
            }
            let lr = ((i + 1) as f64 / i as f64).ln();
            let (a2, b2) = (a * dth / PI, b * dth / PI);
            coef[i] = (coef[i + 1].0 + a2 * lr, coef[i + 1].1 + b2 * lr);
        }
        P2Stream {
            nr: w.nr,
            n_theta: m,
            dr: w.dr(),
            coefficients: coef,
        }
    }

    /// `ψ` at the corner `(i·dr, j·dθ)`.
    pub fn corner(&self, i: usize, j: usize) -> f64 {
        let r = i as f64 * self.dr;
        let th = TAU * (j % self.n_theta) as f64 / self.n_theta as f64;
        let (a, b) = self.coefficients[i];
        r * r * (a * (2.0 * th).cos() + b * (2.0 * th).sin())
    }

    /// Angular velocity `u_θ/r = -∂_rψ/r` at the face radius `i·dr`
    /// (`0 < i < nr`), centred difference of the corner values.
    pub fn angular_rate(&self, i: usize, j: usize) -> f64 {
        let r = i as f64 * self.dr;
        -(self.corner(i + 1, j) - self.corner(i - 1, j)) / (2.0 * self.dr) / r
    }
}

fn minmod(a: f64, b: f64) -> f64 {
    if a * b <= 0.0 {
        0.0
    } else if a.abs() < b.abs() {
        a
    } else {
        b
    }
}

/// `dω/dt` from the flux balance with MUSCL/minmod upwinding.
fn tendency(w: &DiskField) -> Vec<f64> {
    let s = P2Stream::new(w);
    let (nr, m) = (w.nr, w.n_theta);
    let mut out = vec![0.0; nr * m];
    let at = |i: i64, j: usize| -> f64 {
        if i < 0 || i >= nr as i64 {
            0.0
        } else {
            w.at(i as usize, j)
        }
    };
    // radial faces i = 1..nr-1 (r = 0 and r = r_max carry no flux)
    for i in 1..nr {
        for j in 0..m {
            let flux = s.corner(i, j + 1) - s.corner(i, j);
            let ii = i as i64;
            let face = if flux > 0.0 {
                let c = at(ii - 1, j);
                c + 0.5 * minmod(c - at(ii - 2, j), at(ii, j) - c)
            } else {
                let c = at(ii, j);
                c - 0.5 * minmod(c - at(ii - 1, j), at(ii + 1, j) - c)
            };
            let f = flux * face;
            out[(i - 1) * m + j] -= f;
            out[i * m + j] += f;
        }
    }
    // angular faces θ_j between cells j-1 and j
    for i in 0..nr {
        for j in 0..m {
            let flux = -(s.corner(i + 1, j) - s.corner(i, j));
            let jm = (j + m - 1) % m;
            let face = if flux > 0.0 {
                let c = w.at(i, jm);
                c + 0.5 * minmod(c - w.at(i, (jm + m - 1) % m), w.at(i, j) - c)
            } else {
                let c = w.at(i, j);
                c - 0.5 * minmod(c - w.at(i, jm), w.at(i, (j + 1) % m) - c)
            };
            let f = flux * face;
            out[i * m + jm] -= f;
            out[i * m + j] += f;
        }
    }
    for i in 0..nr {
        let a = w.area(i);
        for v in &mut out[i * m..(i + 1) * m] {
            *v /= a;
        }
    }
    out
}

fn axpy(w: &DiskField, k: &[f64], dt: f64) -> DiskField {
    DiskField {
        values: w.values.iter().zip(k).map(|(v, k)| v + dt * k).collect(),
        ..w.clone()
    }
}

fn ssp_rk3(w: &DiskField, dt: f64) -> DiskField {
    let w1 = axpy(w, &tendency(w), dt);
    let w2 = axpy(&w1, &tendency(&w1), dt);
    let w2 = DiskField {
        values: w.values.iter().zip(&w2.values).map(|(a, b)| 0.75 * a + 0.25 * b).collect(),
        ..w.clone()
    };
    let w3 = axpy(&w2, &tendency(&w2), dt);
    DiskField {
        values: w.values.iter().zip(&w3.values).map(|(a, b)| a / 3.0 + 2.0 * b / 3.0).collect(),
        ..w.clone()
    }
}

/// One SSP-RK3 step. Data already reaching the innermost ring are rejected.
pub fn p2_model_step(omega: &DiskField, dt: f64) -> Result<DiskField> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::InvalidArgument(format!("dt must be positive, got {dt}")));
    }
    if omega.touches_axis() {
        return Err(Error::InvalidArgument("vorticity reaches the r = 0 cell".into()));
    }
    let out = ssp_rk3(omega, dt);
    check_finite(&out.values)?;
    Ok(out)
}

#[derive(Clone, Debug, PartialEq)]
pub struct P2ModelConfig {
    pub dt: f64,
    pub end_time: f64,
    pub snapshot_every: usize,
}

impl Default for P2ModelConfig {
    fn default() -> Self {
        P2ModelConfig {
            dt: 1e-3,
            end_time: 1.0,
            snapshot_every: 100,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct P2History {
    pub times: Vec<f64>,
    pub fields: Vec<DiskField>,
    /// `(t, max|∇ω|)` every step.
    pub grad_series: Vec<(f64, f64)>,
    /// Largest `|∫ω(t) - ∫ω(0)|`.
    pub integral_drift: f64,
    /// First time vorticity entered the innermost ring, if it did.
    pub axis_reached: Option<f64>,
}

/// Runs the model; the axis flag is recorded rather than aborting the run.
pub fn evolve_p2_model(omega0: &DiskField, cfg: &P2ModelConfig) -> Result<P2History> {
    if !(cfg.dt > 0.0) || !(cfg.end_time >= 0.0) || cfg.snapshot_every == 0 {
        return Err(Error::InvalidArgument("dt > 0, end_time >= 0 and snapshot_every >= 1 required".into()));
    }
    if omega0.touches_axis() {
        return Err(Error::InvalidArgument("vorticity reaches the r = 0 cell".into()));
    }
    let steps = (cfg.end_time / cfg.dt).round() as usize;
    let i0 = omega0.integral();
    let mut w = omega0.clone();
    let mut h = P2History {
        times: vec![0.0],
        fields: vec![w.clone()],
        grad_series: vec![(0.0, w.grad_max())],
        integral_drift: 0.0,
        axis_reached: None,
    };
    for s in 1..=steps {
        w = ssp_rk3(&w, cfg.dt);
        check_finite(&w.values)?;
        let t = s as f64 * cfg.dt;
        h.grad_series.push((t, w.grad_max()));
        h.integral_drift = h.integral_drift.max((w.integral() - i0).abs());
        if h.axis_reached.is_none() && w.touches_axis() {
            h.axis_reached = Some(t);
        }
        if s % cfg.snapshot_every == 0 || s == steps {
            h.times.push(t);
            h.fields.push(w.clone());
        }
    }
    Ok(h)
}
