//! The axisymmetric no-swirl fundamental model
//! `∂tΩ - (3/2) L₁₂(Ω) sin(2θ) ∂θΩ = L₁₂(Ω) Ω` on `[0, ∞] × [0, π/2]` and
//! its θ-independent reduction `∂tΩ = Ω ∫_R^∞ Ω(s)/s ds`.

use crate::error::{check_finite, Error, Result};
use crate::quad::{fornberg, CumulativeRule};
use crate::radial::{Profile1D, RadialGrid};
use crate::stats::{fit_blowup_time, RunStatus};
use std::f64::consts::FRAC_PI_2;

const QUAD_ORDER: usize = 6;
const THETA_ORDER: usize = 8;
/// A profile is treated as non-decaying when `R·|Ω|` at the last finite
/// node exceeds this multiple of `max|Ω|`.
const TAIL_FACTOR: f64 = 50.0;

pub fn kernel(theta: f64) -> f64 {
    3.0 * theta.cos().powi(2) * theta.sin()
}

/// `K(θ) = 3cos²θ sinθ` sampled on the uniform θ-grid with composite
/// high-order weights.
#[derive(Clone, Debug, PartialEq)]
pub struct L12Kernel {
    pub theta: Vec<f64>,
    pub k: Vec<f64>,
    /// `w_j K(θ_j)`.
    pub weights: Vec<f64>,
}

impl L12Kernel {
    pub fn new(n_theta: usize) -> Result<Self> {
        if n_theta < 9 {
            return Err(Error::InvalidGrid(format!("need at least 9 θ nodes, got {n_theta}")));
        }
        let theta = theta_nodes(n_theta);
        let k: Vec<f64> = theta.iter().map(|&t| kernel(t)).collect();
        let w = CumulativeRule::new(&theta, THETA_ORDER).total_weights();
        let weights = w.iter().zip(&k).map(|(w, k)| w * k).collect();
        Ok(L12Kernel { theta, k, weights })
    }

    /// `∫₀^{π/2} K dθ` by the discrete rule.
    pub fn total(&self) -> f64 {
        self.weights.iter().sum()
    }

    pub fn moment(&self, row: &[f64]) -> f64 {
        self.weights.iter().zip(row).map(|(w, v)| w * v).sum()
    }
}

fn theta_nodes(n: usize) -> Vec<f64> {
    (0..n).map(|j| FRAC_PI_2 * j as f64 / (n - 1) as f64).collect()
}

/// `Ω(R_i, θ_j)` stored row-major with `R` as the slow index.
#[derive(Clone, Debug, PartialEq)]
pub struct PolarField {
    pub grid: RadialGrid,
    pub n_theta: usize,
    pub values: Vec<f64>,
}

impl PolarField {
    pub fn new(grid: RadialGrid, n_theta: usize, values: Vec<f64>) -> Result<Self> {
        if n_theta < 9 {
            return Err(Error::InvalidGrid(format!("need at least 9 θ nodes, got {n_theta}")));
        }
        if values.len() != grid.n() * n_theta {
            return Err(Error::InvalidGrid(format!(
                "expected {} values, got {}",
                grid.n() * n_theta,
                values.len()
            )));
        }
        check_finite(&values)?;
        Ok(PolarField { grid, n_theta, values })
    }

    /// Samples `f(R, θ)`; the `R = ∞` row is set to zero.
    pub fn from_fn<F: Fn(f64, f64) -> f64>(grid: &RadialGrid, n_theta: usize, f: F) -> Result<Self> {
        let theta = theta_nodes(n_theta.max(2));
        let mut values = Vec::with_capacity(grid.n() * n_theta);
        for &r in grid.r() {
            for &t in &theta {
                values.push(if r.is_finite() { f(r, t) } else { 0.0 });
            }
        }
        Self::new(grid.clone(), n_theta, values)
    }

    /// θ-independent field from a radial profile.
    pub fn from_profile(p: &Profile1D, n_theta: usize) -> Result<Self> {
        let values = p.values.iter().flat_map(|&v| std::iter::repeat_n(v, n_theta)).collect();
        Self::new(p.grid.clone(), n_theta, values)
    }

    pub fn theta(&self) -> Vec<f64> {
        theta_nodes(self.n_theta)
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.n_theta..(i + 1) * self.n_theta]
    }

    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.n_theta + j]
    }

    pub fn max_abs(&self) -> f64 {
        crate::stats::max_abs(&self.values)
    }

    /// `max_θ Ω` on every radial row.
    pub fn row_sup(&self) -> Vec<f64> {
        (0..self.grid.n())
            .map(|i| self.row(i).iter().cloned().fold(f64::NEG_INFINITY, f64::max))
            .collect()
    }
}

/// Reusable quadrature for `∫_R^∞ m(s)/s ds` on a compactified grid.
#[derive(Clone, Debug)]
struct RadialIntegrator {
    grid: RadialGrid,
    rule: CumulativeRule,
}

impl RadialIntegrator {
    fn new(grid: &RadialGrid) -> Result<Self> {
        if !grid.is_compactified() {
            return Err(Error::InvalidGrid("L12 needs a compactified radial grid (s = R/(1+R))".into()));
        }
        Ok(RadialIntegrator {
            grid: grid.clone(),
            rule: CumulativeRule::new(grid.s(), QUAD_ORDER),
        })
    }

    fn check(&self, m: &[f64]) -> Result<()> {
        let n = m.len();
        let scale = crate::stats::max_abs(m);
        if scale == 0.0 {
            return Ok(());
        }
        if m[0].abs() > 1e-12 * scale {
            return Err(Error::InvalidArgument(format!(
                "Ω must vanish at R = 0 (found {:e}); ∫Ω/s diverges at the axis",
                m[0]
            )));
        }
        let r_last = self.grid.r()[n - 2];
        if m[n - 1].abs() > 1e-12 * scale || r_last * m[n - 2].abs() > TAIL_FACTOR * scale {
            return Err(Error::NonDecaying(format!(
                "R·|Ω| = {:e} at R = {r_last:e} against max {scale:e}",
                r_last * m[n - 2].abs()
            )));
        }
        Ok(())
    }

    /// `∫_{R_i}^∞ m(s)/s ds` for every node.
    fn tail_integral(&self, m: &[f64]) -> Result<Vec<f64>> {
        self.check(m)?;
        let s = self.grid.s();
        let n = s.len();
        let mut g = vec![0.0; n];
        for i in 1..n - 1 {
            g[i] = m[i] / (s[i] * (1.0 - s[i]));
        }
        g[0] = self.grid.extrapolate_end(&g, true, QUAD_ORDER);
        g[n - 1] = self.grid.extrapolate_end(&g, false, QUAD_ORDER);
        Ok(self.rule.from_right(&g))
    }
}

/// `L₁₂(Ω)(R) = ∫_R^∞ ∫₀^{π/2} Ω(s,θ)K(θ)/s dθ ds`.
pub fn l12(omega: &PolarField) -> Result<Profile1D> {
    let ker = L12Kernel::new(omega.n_theta)?;
    let integ = RadialIntegrator::new(&omega.grid)?;
    let m: Vec<f64> = (0..omega.grid.n()).map(|i| ker.moment(omega.row(i))).collect();
    Profile1D::new(omega.grid.clone(), integ.tail_integral(&m)?)
}

/// `L(F)(R) = ∫_R^∞ F(s)/s ds` for a radial profile.
pub fn radial_l(f: &Profile1D) -> Result<Profile1D> {
    let integ = RadialIntegrator::new(&f.grid)?;
    Profile1D::new(f.grid.clone(), integ.tail_integral(&f.values)?)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ProfileEquation {
    /// `F + zF' = F²`.
    Local,
    /// `F + zF' = amplitude · F · L(F)`.
    Nonlocal { amplitude: f64 },
}

/// Max-norm residual of a self-similar profile equation on the grid.
pub fn profile_residual(f: &Profile1D, eq: ProfileEquation) -> Result<f64> {
    let zf = f.grid.r_dr(&f.values, 9);
    let rhs: Vec<f64> = match eq {
        ProfileEquation::Local => f.values.iter().map(|v| v * v).collect(),
        ProfileEquation::Nonlocal { amplitude } => {
            let l = radial_l(f)?;
            f.values.iter().zip(&l.values).map(|(v, l)| amplitude * v * l).collect()
        }
    };
    Ok(f.values
        .iter()
        .zip(&zf)
        .zip(&rhs)
        .map(|((v, d), r)| (v + d - r).abs())
        .fold(0.0, f64::max))
}

/// `F(z) = z/(1+z)²`, with `L(F) = 1/(1+z)`.
pub fn self_similar_profile(z: f64) -> f64 {
    if z.is_infinite() {
        0.0
    } else {
        z / (1.0 + z).powi(2)
    }
}

/// `Ω(R,t) = (2/(1-t)) F(R/(1-t))`.
pub fn exact_blowup(r: f64, t: f64) -> f64 {
    2.0 / (1.0 - t) * self_similar_profile(r / (1.0 - t))
}

#[derive(Clone, Debug, PartialEq)]
pub struct FundamentalConfig {
    pub dt: f64,
    pub end_time: f64,
    pub snapshot_every: usize,
    /// Steps shrink to keep `dt·rate ≤ cfl`.
    pub cfl: f64,
    pub transport: bool,
    pub stretching: bool,
    /// Stop once max|Ω| exceeds this multiple of its initial value.
    pub blowup_factor: f64,
    /// `1/max` is fitted for `max/max₀` inside this window.
    pub fit_window: (f64, f64),
}

impl Default for FundamentalConfig {
    fn default() -> Self {
        FundamentalConfig {
            dt: 1e-3,
            end_time: 1.0,
            snapshot_every: 100,
            cfl: 0.5,
            transport: true,
            stretching: true,
            blowup_factor: 200.0,
            fit_window: (10.0, 100.0),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FundamentalHistory {
    pub times: Vec<f64>,
    pub fields: Vec<PolarField>,
    pub max_series: Vec<(f64, f64)>,
    pub status: RunStatus,
    /// Extrapolated blow-up time from the `1/max` fit, when available.
    pub t_star: Option<f64>,
}

struct Fundamental {
    ker: L12Kernel,
    integ: RadialIntegrator,
    nr: usize,
    nt: usize,
    h: f64,
    sin2: Vec<f64>,
    /// Extrapolation weights for the ghosts at distance 1, 2, 3 beyond an end.
    ghost: [Vec<f64>; 3],
    transport: bool,
    stretching: bool,
}

const GHOST_WIDTH: usize = 5;

impl Fundamental {
    fn new(omega: &PolarField, cfg: &FundamentalConfig) -> Result<Self> {
        let ker = L12Kernel::new(omega.n_theta)?;
        let integ = RadialIntegrator::new(&omega.grid)?;
        let nt = omega.n_theta;
        let h = FRAC_PI_2 / (nt - 1) as f64;
        let idx: Vec<f64> = (0..GHOST_WIDTH).map(|k| k as f64).collect();
        let ghost = |g: f64| fornberg(g, &idx, 0)[0].clone();
        Ok(Fundamental {
            sin2: ker.theta.iter().map(|t| (2.0 * t).sin()).collect(),
            ker,
            integ,
            nr: omega.grid.n(),
            nt,
            h,
            ghost: [ghost(-1.0), ghost(-2.0), ghost(-3.0)],
            transport: cfg.transport,
            stretching: cfg.stretching,
        })
    }

    fn l12(&self, w: &[f64]) -> Result<Vec<f64>> {
        let m: Vec<f64> = (0..self.nr).map(|i| self.ker.moment(&w[i * self.nt..(i + 1) * self.nt])).collect();
        self.integ.tail_integral(&m)
    }

    /// Row with three extrapolated ghost values on each side.
    fn extend(&self, row: &[f64]) -> Vec<f64> {
        let nt = self.nt;
        let mut e = vec![0.0; nt + 6];
        e[3..3 + nt].copy_from_slice(row);
        for g in 0..3 {
            e[2 - g] = self.ghost[g].iter().zip(row).map(|(c, v)| c * v).sum();
            e[nt + 3 + g] = self.ghost[g].iter().zip(row.iter().rev()).map(|(c, v)| c * v).sum();
        }
        e
    }

    fn rhs(&self, w: &[f64]) -> Result<(Vec<f64>, f64)> {
        let l = self.l12(w)?;
        let mut out = vec![0.0; w.len()];
        let mut rate = 0.0f64;
        for i in 0..self.nr {
            let row = &w[i * self.nt..(i + 1) * self.nt];
            let o = &mut out[i * self.nt..(i + 1) * self.nt];
            if self.stretching {
                for j in 0..self.nt {
                    o[j] = l[i] * row[j];
                }
                rate = rate.max(l[i].abs());
            }
            if self.transport {
                rate = rate.max(1.5 * l[i].abs() / self.h);
            }
            if self.transport && l[i] != 0.0 {
                let e = self.extend(row);
                // ∂tΩ + cΩ_θ with c = -(3/2) L sin 2θ
                let upwind_right = l[i] > 0.0;
                let vmax = e.windows(2).fold(0.0f64, |m, p| m.max((p[1] - p[0]).abs())) / self.h;
                if vmax == 0.0 {
                    continue;
                }
                let eps = 1e-6 * vmax * vmax + 1e-100;
                for j in 0..self.nt {
                    let c = -1.5 * l[i] * self.sin2[j];
                    if c == 0.0 {
                        continue;
                    }
                    let d = weno5_derivative(&e, j + 3, self.h, upwind_right, eps);
                    o[j] -= c * d;
                }
            }
        }
        Ok((out, rate))
    }
}

/// Osher–Shu WENO5 one-sided derivative at index `j` of the extended row.
/// `from_right` selects the `φ_x⁺` branch (information travelling leftward).
fn weno5_derivative(e: &[f64], j: usize, h: f64, from_right: bool, eps: f64) -> f64 {
    let d = |k: usize| (e[k + 1] - e[k]) / h;
    let v = if from_right {
        [d(j + 2), d(j + 1), d(j), d(j - 1), d(j - 2)]
    } else {
        [d(j - 3), d(j - 2), d(j - 1), d(j), d(j + 1)]
    };
    let [v1, v2, v3, v4, v5] = v;
    let p1 = v1 / 3.0 - 7.0 * v2 / 6.0 + 11.0 * v3 / 6.0;
    let p2 = -v2 / 6.0 + 5.0 * v3 / 6.0 + v4 / 3.0;
    let p3 = v3 / 3.0 + 5.0 * v4 / 6.0 - v5 / 6.0;
    let s1 = 13.0 / 12.0 * (v1 - 2.0 * v2 + v3).powi(2) + 0.25 * (v1 - 4.0 * v2 + 3.0 * v3).powi(2);
    let s2 = 13.0 / 12.0 * (v2 - 2.0 * v3 + v4).powi(2) + 0.25 * (v2 - v4).powi(2);
    let s3 = 13.0 / 12.0 * (v3 - 2.0 * v4 + v5).powi(2) + 0.25 * (3.0 * v3 - 4.0 * v4 + v5).powi(2);
    let a1 = 0.1 / (eps + s1).powi(2);
    let a2 = 0.6 / (eps + s2).powi(2);
    let a3 = 0.3 / (eps + s3).powi(2);
    (a1 * p1 + a2 * p2 + a3 * p3) / (a1 + a2 + a3)
}

fn rk4_run<F>(
    w0: Vec<f64>,
    cfg_dt: f64,
    end_time: f64,
    cfl: f64,
    snapshot_every: usize,
    threshold: f64,
    mut rhs: F,
    mut snap: impl FnMut(f64, &[f64]),
) -> Result<(Vec<(f64, f64)>, RunStatus)>
where
    F: FnMut(&[f64]) -> Result<(Vec<f64>, f64)>,
{
    if !(cfg_dt > 0.0) || snapshot_every == 0 || !(cfl > 0.0) {
        return Err(Error::InvalidArgument("dt, cfl and snapshot_every must be positive".into()));
    }
    let mut w = w0;
    let mut t = 0.0;
    let mut series = vec![(0.0, crate::stats::max_abs(&w))];
    snap(0.0, &w);
    let tol = 1e-12 * end_time.max(1.0);
    let mut k = 0;
    let n = w.len();
    while t < end_time - tol {
        let (k1, rate) = rhs(&w)?;
        let mut dt = cfg_dt.min(end_time - t);
        if rate > 0.0 {
            dt = dt.min(cfl / rate);
        }
        let stage = |k: &[f64], a: f64| -> Vec<f64> { (0..n).map(|j| w[j] + a * k[j]).collect() };
        let (k2, _) = rhs(&stage(&k1, 0.5 * dt))?;
        let (k3, _) = rhs(&stage(&k2, 0.5 * dt))?;
        let (k4, _) = rhs(&stage(&k3, dt))?;
        for j in 0..n {
            w[j] += dt / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]);
        }
        t += dt;
        k += 1;
        let m = crate::stats::max_abs(&w);
        series.push((t, m));
        if !m.is_finite() || m > threshold {
            snap(t, &w);
            return Ok((series, RunStatus::ResolutionExceeded { t, max: m }));
        }
        if k % snapshot_every == 0 || t >= end_time - tol {
            snap(t, &w);
        }
    }
    Ok((series, RunStatus::Completed))
}

fn fit_from(series: &[(f64, f64)], cfg: &FundamentalConfig) -> Option<f64> {
    let m0 = series.first()?.1;
    fit_blowup_time(series, cfg.fit_window.0 * m0, cfg.fit_window.1 * m0)
}

/// RK4 evolution of the fundamental model with WENO5 angular advection.
pub fn evolve_fundamental(omega0: &PolarField, cfg: &FundamentalConfig) -> Result<FundamentalHistory> {
    let model = Fundamental::new(omega0, cfg)?;
    let mut times = Vec::new();
    let mut fields = Vec::new();
    let threshold = cfg.blowup_factor * omega0.max_abs();
    let (max_series, status) = rk4_run(
        omega0.values.clone(),
        cfg.dt,
        cfg.end_time,
        cfg.cfl,
        cfg.snapshot_every,
        if threshold > 0.0 { threshold } else { f64::INFINITY },
        |w| model.rhs(w),
        |t, w| {
            times.push(t);
            fields.push(PolarField {
                grid: omega0.grid.clone(),
                n_theta: omega0.n_theta,
                values: w.to_vec(),
            });
        },
    )?;
    let t_star = fit_from(&max_series, cfg);
    Ok(FundamentalHistory {
        times,
        fields,
        max_series,
        status,
        t_star,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct RadialHistory {
    pub times: Vec<f64>,
    pub profiles: Vec<Profile1D>,
    pub max_series: Vec<(f64, f64)>,
    pub status: RunStatus,
    pub t_star: Option<f64>,
}

/// The θ-independent reduction `∂tΩ = Ω·L(Ω)`.
pub fn evolve_radial(f0: &Profile1D, cfg: &FundamentalConfig) -> Result<RadialHistory> {
    let integ = RadialIntegrator::new(&f0.grid)?;
    let mut times = Vec::new();
    let mut profiles = Vec::new();
    let threshold = cfg.blowup_factor * f0.max_abs();
    let (max_series, status) = rk4_run(
        f0.values.clone(),
        cfg.dt,
        cfg.end_time,
        cfg.cfl,
        cfg.snapshot_every,
        if threshold > 0.0 { threshold } else { f64::INFINITY },
        |w| {
            let l = integ.tail_integral(w)?;
            let rate = l.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            Ok((w.iter().zip(&l).map(|(a, b)| a * b).collect(), rate))
        },
        |t, w| {
            times.push(t);
            profiles.push(Profile1D {
                grid: f0.grid.clone(),
                values: w.to_vec(),
            });
        },
    )?;
    let t_star = fit_from(&max_series, cfg);
    Ok(RadialHistory {
        times,
        profiles,
        max_series,
        status,
        t_star,
    })
}
