//! 1D vorticity models on the circle, the inviscid Burgers equation and the
//! scale-invariant 1D Euler system, with closed-form oracles.
//!
//! Convention: `λ(ω) = (1/π)∫ω sin x dx`, so `ℙ₁ω = λ sin x` is the L²
//! orthogonal projection onto `sin x`. The Hilbert transform acts as
//! `H(e^{ikx}) = -i sgn(k) e^{ikx}`, hence `H(sin) = -cos`.

use crate::error::{check_finite, Error, Result};
use crate::fft::{signed_index, two_thirds_cutoff, Fft1};
pub use crate::stats::RunStatus;
use num_complex::Complex64;
use std::f64::consts::PI;

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

/// Samples at `x_j = 2πj/n`.
#[derive(Clone, Debug, PartialEq)]
pub struct CircleField {
    pub values: Vec<f64>,
}

impl CircleField {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        let n = values.len();
        if n < 16 || n % 2 != 0 {
            return Err(Error::InvalidGrid(format!("circle field needs even n >= 16, got {n}")));
        }
        check_finite(&values)?;
        Ok(CircleField { values })
    }

    pub fn from_fn<F: Fn(f64) -> f64>(n: usize, f: F) -> Result<Self> {
        Self::new((0..n).map(|j| f(Self::node(j, n))).collect())
    }

    pub fn node(j: usize, n: usize) -> f64 {
        2.0 * PI * j as f64 / n as f64
    }

    pub fn n(&self) -> usize {
        self.values.len()
    }

    pub fn max_abs(&self) -> f64 {
        crate::stats::max_abs(&self.values)
    }

    /// `∫ f dx` (trapezoid, spectrally exact for trigonometric data).
    pub fn integral(&self) -> f64 {
        self.values.iter().sum::<f64>() * 2.0 * PI / self.n() as f64
    }

    pub fn lp_norm(&self, p: f64) -> f64 {
        let h = 2.0 * PI / self.n() as f64;
        (self.values.iter().map(|v| v.abs().powf(p)).sum::<f64>() * h).powf(1.0 / p)
    }

    pub fn interpolant(&self) -> TrigInterpolant {
        TrigInterpolant::new(&self.values)
    }

    /// Supremum of `|f|` for the trigonometric interpolant.
    pub fn spectral_max_abs(&self) -> f64 {
        let ti = self.interpolant();
        let n = self.n();
        let h = 2.0 * PI / n as f64;
        let mut best = self.max_abs();
        let mut idx: Vec<usize> = (0..n)
            .filter(|&j| {
                let v = self.values[j].abs();
                v >= self.values[(j + n - 1) % n].abs() && v >= self.values[(j + 1) % n].abs()
            })
            .collect();
        idx.sort_by(|a, b| self.values[*b].abs().total_cmp(&self.values[*a].abs()));
        idx.truncate(6);
        for j in idx {
            let sgn = self.values[j].signum();
            let mut x = Self::node(j, n);
            for _ in 0..40 {
                let (f, d1, d2) = ti.eval_d2(x);
                best = best.max(f.abs());
                if sgn * d2 >= 0.0 {
                    break;
                }
                let dx = (-d1 / d2).clamp(-h, h);
                x += dx;
                if dx.abs() < 1e-15 {
                    break;
                }
            }
            best = best.max(ti.eval(x).abs());
        }
        best
    }
}

/// Real trigonometric interpolant `a0 + Σ a_k cos kx + b_k sin kx`.
#[derive(Clone, Debug, PartialEq)]
pub struct TrigInterpolant {
    pub a: Vec<f64>,
    pub b: Vec<f64>,
}

impl TrigInterpolant {
    pub fn new(values: &[f64]) -> Self {
        let n = values.len();
        let c = Fft1::new(n).forward_real(values);
        let half = n / 2;
        let mut a = vec![0.0; half + 1];
        let mut b = vec![0.0; half + 1];
        a[0] = c[0].re / n as f64;
        for k in 1..half {
            a[k] = 2.0 * c[k].re / n as f64;
            b[k] = -2.0 * c[k].im / n as f64;
        }
        a[half] = c[half].re / n as f64;
        // trailing modes at FFT roundoff only cost evaluation time
        let scale = a.iter().chain(&b).fold(0.0f64, |m, v| m.max(v.abs()));
        let mut keep = a.len();
        while keep > 1 && a[keep - 1].abs().max(b[keep - 1].abs()) <= f64::EPSILON * scale {
            keep -= 1;
        }
        a.truncate(keep);
        b.truncate(keep);
        TrigInterpolant { a, b }
    }

    pub fn eval(&self, x: f64) -> f64 {
        let (s1, c1) = x.sin_cos();
        let (mut s, mut c) = (0.0f64, 1.0f64);
        let mut sum = self.a[0];
        for k in 1..self.a.len() {
            let ns = s * c1 + c * s1;
            let nc = c * c1 - s * s1;
            s = ns;
            c = nc;
            sum += self.a[k] * c + self.b[k] * s;
        }
        sum
    }

    /// Value, first and second derivative.
    pub fn eval_d2(&self, x: f64) -> (f64, f64, f64) {
        let (mut f, mut d1, mut d2) = (self.a[0], 0.0, 0.0);
        for k in 1..self.a.len() {
            let kf = k as f64;
            let (s, c) = (kf * x).sin_cos();
            f += self.a[k] * c + self.b[k] * s;
            d1 += kf * (-self.a[k] * s + self.b[k] * c);
            d2 -= kf * kf * (self.a[k] * c + self.b[k] * s);
        }
        (f, d1, d2)
    }
}

/// Velocity closures for `∂tω + u∂xω = ω∂xu` and the companion systems.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Closure {
    /// `u = ℙ₁ω`.
    ProjectionA,
    /// `∂xu = ℙ₁ω`.
    ProjectionB,
    /// `∂xu = Hω`.
    DeGregorio,
    /// Stretching only: `∂tω = ωHω`.
    Clm,
    /// `∂tg + 2G∂θg = 0`, `4G + G'' = g`.
    ScaleInvariantEuler,
    /// `∂tu + u∂xu = 0`.
    Burgers,
}

/// Structural metadata of a closure.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ClosureInfo {
    pub law: &'static str,
    /// Order of the map `ω ↦ u` as a Fourier multiplier, when it is one.
    pub symbol_degree: Option<i32>,
    /// Odd data stay odd under the evolution.
    pub preserves_odd: bool,
    pub has_transport: bool,
}

impl Closure {
    pub fn info(&self) -> ClosureInfo {
        match self {
            Closure::ProjectionA => ClosureInfo {
                law: "u = P1(w)",
                symbol_degree: None,
                preserves_odd: true,
                has_transport: true,
            },
            Closure::ProjectionB => ClosureInfo {
                law: "du/dx = P1(w)",
                symbol_degree: None,
                preserves_odd: false,
                has_transport: true,
            },
            Closure::DeGregorio => ClosureInfo {
                law: "du/dx = H(w)",
                symbol_degree: Some(-1),
                preserves_odd: true,
                has_transport: true,
            },
            Closure::Clm => ClosureInfo {
                law: "dw/dt = w H(w)",
                symbol_degree: Some(0),
                preserves_odd: true,
                has_transport: false,
            },
            Closure::ScaleInvariantEuler => ClosureInfo {
                law: "4G + G'' = g, transport by 2G",
                symbol_degree: Some(-2),
                preserves_odd: false,
                has_transport: true,
            },
            Closure::Burgers => ClosureInfo {
                law: "u_t + u u_x = 0",
                symbol_degree: Some(0),
                preserves_odd: true,
                has_transport: true,
            },
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Closure::ProjectionA => "projection-a",
            Closure::ProjectionB => "projection-b",
            Closure::DeGregorio => "de-gregorio",
            Closure::Clm => "clm",
            Closure::ScaleInvariantEuler => "scale-invariant-euler",
            Closure::Burgers => "burgers",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        [
            Closure::ProjectionA,
            Closure::ProjectionB,
            Closure::DeGregorio,
            Closure::Clm,
            Closure::ScaleInvariantEuler,
            Closure::Burgers,
        ]
        .into_iter()
        .find(|c| c.name() == s)
    }
}

/// `λ = (1/π)∫ω sin x dx`.
pub fn p1_coefficient(omega: &CircleField) -> f64 {
    let n = omega.n();
    let h = 2.0 * PI / n as f64;
    omega
        .values
        .iter()
        .enumerate()
        .map(|(j, v)| v * CircleField::node(j, n).sin())
        .sum::<f64>()
        * h
        / PI
}

/// `ℙ₁ω = λ sin x` together with `λ`.
pub fn project_p1(omega: &CircleField) -> (f64, CircleField) {
    let lam = p1_coefficient(omega);
    let n = omega.n();
    let values = (0..n).map(|j| lam * CircleField::node(j, n).sin()).collect();
    (lam, CircleField { values })
}

#[derive(Clone, Debug, PartialEq)]
pub struct Evolve1dConfig {
    pub dt: f64,
    pub end_time: f64,
    pub snapshot_every: usize,
    /// When set, steps shrink to keep `dt·max(|u|/dx, |u_x|, |ω|) ≤ cfl`.
    pub adaptive_cfl: Option<f64>,
    /// Stop (with status `ResolutionExceeded`) once max|ω| exceeds this
    /// multiple of its initial value.
    pub blowup_factor: f64,
    pub dealias: bool,
}

impl Default for Evolve1dConfig {
    fn default() -> Self {
        Evolve1dConfig {
            dt: 1e-3,
            end_time: 1.0,
            snapshot_every: 10,
            adaptive_cfl: None,
            blowup_factor: 1e3,
            dealias: true,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct History1D {
    pub closure: Closure,
    pub times: Vec<f64>,
    pub fields: Vec<CircleField>,
    /// `λ(t)` at snapshot times (projection closures only).
    pub lambda: Vec<f64>,
    /// `Λ(t) = ∫λ` at snapshot times (projection closures only).
    pub big_lambda: Vec<f64>,
    /// max|ω| after every accepted step, with its time.
    pub max_series: Vec<(f64, f64)>,
    pub warnings: Vec<String>,
    pub status: RunStatus,
}

struct Spectral1 {
    n: usize,
    fft: Fft1,
    k: Vec<f64>,
    mask: Vec<bool>,
    x: Vec<f64>,
}

impl Spectral1 {
    fn new(n: usize, dealias: bool) -> Self {
        let cut = two_thirds_cutoff(n);
        let k: Vec<f64> = (0..n)
            .map(|i| if 2 * i == n { 0.0 } else { signed_index(i, n) as f64 })
            .collect();
        let mask = (0..n).map(|i| !dealias || signed_index(i, n).abs() <= cut).collect();
        let x = (0..n).map(|j| CircleField::node(j, n)).collect();
        Spectral1 {
            n,
            fft: Fft1::new(n),
            k,
            mask,
            x,
        }
    }

    fn fwd(&mut self, v: &[f64]) -> Vec<Complex64> {
        self.fft.forward_real(v)
    }

    fn inv(&mut self, c: &[Complex64]) -> Vec<f64> {
        self.fft.inverse_real(c)
    }

    fn deriv(&mut self, c: &[Complex64]) -> Vec<f64> {
        let d: Vec<Complex64> = c.iter().zip(&self.k).map(|(c, k)| I * k * c).collect();
        self.inv(&d)
    }

    fn filter(&mut self, v: &[f64]) -> Vec<f64> {
        let mut c = self.fwd(v);
        for (c, &m) in c.iter_mut().zip(&self.mask) {
            if !m {
                *c = Complex64::new(0.0, 0.0);
            }
        }
        self.inv(&c)
    }

    fn hilbert(&mut self, c: &[Complex64]) -> Vec<f64> {
        let mut h: Vec<Complex64> = c
            .iter()
            .enumerate()
            .map(|(i, c)| -I * (signed_index(i, self.n).signum() as f64) * c)
            .collect();
        h[self.n / 2] = Complex64::new(0.0, 0.0);
        self.inv(&h)
    }
}

/// Velocity, its derivative and the stretching factor for the current `ω`.
struct Rates {
    u: Vec<f64>,
    ux: Vec<f64>,
    lambda: f64,
}

fn closure_rates(sp: &mut Spectral1, closure: Closure, w: &[f64], c: &[Complex64]) -> Rates {
    let n = sp.n;
    match closure {
        Closure::ProjectionA | Closure::ProjectionB => {
            let lam = w.iter().zip(&sp.x).map(|(v, x)| v * x.sin()).sum::<f64>() * 2.0 / n as f64;
            let (u, ux) = if closure == Closure::ProjectionA {
                (sp.x.iter().map(|x| lam * x.sin()).collect(), sp.x.iter().map(|x| lam * x.cos()).collect())
            } else {
                (sp.x.iter().map(|x| -lam * x.cos()).collect(), sp.x.iter().map(|x| lam * x.sin()).collect())
            };
            Rates { u, ux, lambda: lam }
        }
        Closure::DeGregorio => {
            let uh: Vec<Complex64> = c
                .iter()
                .enumerate()
                .map(|(i, c)| {
                    let k = signed_index(i, n);
                    if k == 0 || 2 * i == n {
                        Complex64::new(0.0, 0.0)
                    } else {
                        -c / (k.abs() as f64)
                    }
                })
                .collect();
            let u = sp.inv(&uh);
            let ux = sp.hilbert(c);
            Rates { u, ux, lambda: 0.0 }
        }
        Closure::Clm => Rates {
            u: vec![0.0; n],
            ux: sp.hilbert(c),
            lambda: 0.0,
        },
        Closure::ScaleInvariantEuler => {
            let gh: Vec<Complex64> = c
                .iter()
                .enumerate()
                .map(|(i, c)| {
                    let k = signed_index(i, n) as f64;
                    if (4.0 - k * k) == 0.0 {
                        Complex64::new(0.0, 0.0)
                    } else {
                        c / (4.0 - k * k)
                    }
                })
                .collect();
            let big_g = sp.inv(&gh);
            Rates {
                u: big_g.iter().map(|g| 2.0 * g).collect(),
                ux: vec![0.0; n],
                lambda: 0.0,
            }
        }
        Closure::Burgers => Rates {
            u: w.to_vec(),
            ux: vec![0.0; n],
            lambda: 0.0,
        },
    }
}

/// Returns `(∂tω, λ, max speed terms)`.
fn rhs(sp: &mut Spectral1, closure: Closure, w: &[f64]) -> (Vec<f64>, f64, f64) {
    let c = sp.fwd(w);
    let r = closure_rates(sp, closure, w, &c);
    let wx = sp.deriv(&c);
    let h = 2.0 * PI / sp.n as f64;
    let mut rate = 0.0f64;
    let raw: Vec<f64> = (0..sp.n)
        .map(|j| {
            rate = rate.max(r.u[j].abs() / h).max(r.ux[j].abs());
            match closure {
                Closure::Burgers => -w[j] * wx[j],
                Closure::Clm => w[j] * r.ux[j],
                Closure::ScaleInvariantEuler => -r.u[j] * wx[j],
                _ => -r.u[j] * wx[j] + w[j] * r.ux[j],
            }
        })
        .collect();
    (sp.filter(&raw), r.lambda, rate)
}

/// Pseudospectral RK4 evolution of a circle model. For the projection
/// closures `Λ = ∫λ` is integrated alongside as an extra ODE component.
pub fn evolve_1d(omega0: &CircleField, closure: Closure, cfg: &Evolve1dConfig) -> Result<History1D> {
    if !(cfg.dt > 0.0) || cfg.snapshot_every == 0 {
        return Err(Error::InvalidArgument("dt must be positive and snapshot_every >= 1".into()));
    }
    check_finite(&omega0.values)?;
    if closure == Closure::Burgers {
        let t_star = burgers_shock_time(omega0);
        if cfg.end_time >= t_star {
            return Err(Error::PostShock {
                t_star,
                end: cfg.end_time,
            });
        }
    }
    let mut sp = Spectral1::new(omega0.n(), cfg.dealias);
    let mut w = omega0.values.clone();
    let mut big = 0.0;
    let m0 = omega0.max_abs();
    let threshold = cfg.blowup_factor * m0;
    let (_, lam0, _) = rhs(&mut sp, closure, &w);
    let mut hist = History1D {
        closure,
        times: vec![0.0],
        fields: vec![omega0.clone()],
        lambda: vec![lam0],
        big_lambda: vec![0.0],
        max_series: vec![(0.0, m0)],
        warnings: Vec::new(),
        status: RunStatus::Completed,
    };
    let mut t = 0.0;
    let mut k = 0usize;
    let tol = 1e-12 * cfg.end_time.max(1.0);
    while t < cfg.end_time - tol {
        let (k1, l1, rate) = rhs(&mut sp, closure, &w);
        let mut dt = cfg.dt.min(cfg.end_time - t);
        if let Some(cfl) = cfg.adaptive_cfl {
            let m = crate::stats::max_abs(&w);
            let r = rate.max(if closure == Closure::Burgers { 0.0 } else { m });
            if r > 0.0 {
                dt = dt.min(cfl / r);
            }
        }
        let n = w.len();
        let stage = |w: &[f64], k: &[f64], a: f64| -> Vec<f64> { (0..n).map(|j| w[j] + a * k[j]).collect() };
        let (k2, l2, _) = rhs(&mut sp, closure, &stage(&w, &k1, 0.5 * dt));
        let (k3, l3, _) = rhs(&mut sp, closure, &stage(&w, &k2, 0.5 * dt));
        let (k4, l4, _) = rhs(&mut sp, closure, &stage(&w, &k3, dt));
        for j in 0..n {
            w[j] += dt / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]);
        }
        big += dt / 6.0 * (l1 + 2.0 * l2 + 2.0 * l3 + l4);
        t += dt;
        k += 1;
        let m = crate::stats::max_abs(&w);
        hist.max_series.push((t, m));
        if !m.is_finite() || m > threshold {
            hist.status = RunStatus::ResolutionExceeded { t, max: m };
            break;
        }
        if k % cfg.snapshot_every == 0 || t >= cfg.end_time - tol {
            let (_, lam, _) = rhs(&mut sp, closure, &w);
            hist.times.push(t);
            hist.fields.push(CircleField { values: w.clone() });
            hist.lambda.push(lam);
            hist.big_lambda.push(big);
        }
    }
    Ok(hist)
}

/// The two-term Λ-ODE oracle for the projection models.
#[derive(Clone, Debug)]
pub struct LambdaOracle {
    pub closure: Closure,
    pub times: Vec<f64>,
    pub big_lambda: Vec<f64>,
    /// `Λ'(t) = λ(t)`.
    pub rate: Vec<f64>,
    /// Finite-time divergence estimate, when Λ ran past the cap.
    pub t_star: Option<f64>,
    data: InitialData,
}

#[derive(Clone)]
enum InitialData {
    Trig(TrigInterpolant),
    Func(std::sync::Arc<dyn Fn(f64) -> f64 + Send + Sync>),
}

impl std::fmt::Debug for InitialData {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            InitialData::Trig(_) => write!(f, "Trig"),
            InitialData::Func(_) => write!(f, "Func"),
        }
    }
}

impl InitialData {
    fn eval(&self, x: f64) -> f64 {
        match self {
            InitialData::Trig(t) => t.eval(x),
            InitialData::Func(f) => f(x),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct OracleConfig {
    pub dt: f64,
    pub end_time: f64,
    /// Stop once Λ exceeds this value (finite-time divergence).
    pub lambda_cap: f64,
    /// Spacing of the trapezoid rule in `s = ln tan(|x|/2)`.
    pub h: f64,
    pub s_max: f64,
    /// Largest change of Λ allowed in one step.
    pub max_increment: f64,
}

impl Default for OracleConfig {
    fn default() -> Self {
        OracleConfig {
            dt: 1e-3,
            end_time: 1.0,
            lambda_cap: 30.0,
            h: 0.05,
            s_max: 40.0,
            max_increment: 0.02,
        }
    }
}

fn logistic_halves(s: f64) -> (f64, f64) {
    // sin²(y/2), cos²(y/2) for y = 2 arctan(e^s)
    let sn2 = 1.0 / (1.0 + (-2.0 * s).exp());
    let cs2 = 1.0 / (1.0 + (2.0 * s).exp());
    (sn2, cs2)
}

impl LambdaOracle {
    /// Frame shift: ProjectionB is ProjectionA's structure in `y = x - π/2`.
    fn shift(&self) -> f64 {
        if self.closure == Closure::ProjectionB {
            PI / 2.0
        } else {
            0.0
        }
    }

    /// `Λ'` as a function of `Λ` (composed-argument quadrature).
    pub fn rate_at(&self, big: f64, cfg: &OracleConfig) -> f64 {
        let shift = self.shift();
        let m = (cfg.s_max / cfg.h).ceil() as i64;
        let (mut i1, mut i2) = (0.0, 0.0);
        for q in -m..=m {
            let s = q as f64 * cfg.h;
            let (sn2, cs2) = logistic_halves(s);
            let sech = 2.0 / (s.exp() + (-s).exp());
            let yy = 2.0 * (s - big).exp().atan();
            let (k1, k2) = match self.closure {
                Closure::ProjectionB => {
                    let cosy = cs2 - sn2;
                    (2.0 * cs2 * cosy, 2.0 * sn2 * cosy)
                }
                _ => {
                    let (sn, cs) = (sn2.sqrt(), cs2.sqrt());
                    (4.0 * sn * cs * cs2, 4.0 * sn2 * sn * cs)
                }
            };
            let (fp, fm) = (self.data.eval(yy + shift), self.data.eval(-yy + shift));
            let (a, b) = match self.closure {
                Closure::ProjectionB => (k1 * (fp + fm), k2 * (fp + fm)),
                _ => (k1 * (fp - fm), k2 * (fp - fm)),
            };
            i1 += a * sech;
            i2 += b * sech;
        }
        i1 *= cfg.h;
        i2 *= cfg.h;
        (big.exp() * i1 + (-big).exp() * i2) / (2.0 * PI)
    }

    /// Exact transported vorticity at position `x` when `Λ(t) = big`.
    pub fn omega_given_lambda(&self, x: f64, big: f64) -> f64 {
        let shift = self.shift();
        let mut y = (x - shift).rem_euclid(2.0 * PI);
        if y > PI {
            y -= 2.0 * PI;
        }
        let (sh, ch) = (0.5 * y).sin_cos();
        let yy = 2.0 * ((-big).exp() * sh).atan2(ch);
        let factor = big.exp() * ch * ch + (-big).exp() * sh * sh;
        self.data.eval(yy + shift) * factor
    }

    /// Λ at time `t` by linear interpolation of the stored series.
    pub fn lambda_at(&self, t: f64) -> f64 {
        let k = self.times.partition_point(|&s| s <= t);
        if k == 0 {
            return self.big_lambda[0];
        }
        if k >= self.times.len() {
            return *self.big_lambda.last().unwrap();
        }
        let (t0, t1) = (self.times[k - 1], self.times[k]);
        let w = (t - t0) / (t1 - t0);
        self.big_lambda[k - 1] * (1.0 - w) + self.big_lambda[k] * w
    }

    pub fn omega_at(&self, x: f64, t: f64) -> f64 {
        self.omega_given_lambda(x, self.lambda_at(t))
    }

    /// Maximum of `|ω|` on `n` uniform points at the given Λ.
    pub fn max_abs_given_lambda(&self, big: f64, n: usize) -> f64 {
        (0..n)
            .map(|j| self.omega_given_lambda(CircleField::node(j, n), big).abs())
            .fold(0.0, f64::max)
    }

    pub fn max_rate(&self) -> f64 {
        self.rate.iter().fold(0.0f64, |m, r| m.max(r.abs()))
    }
}

fn run_oracle(closure: Closure, data: InitialData, cfg: &OracleConfig) -> Result<LambdaOracle> {
    if !matches!(closure, Closure::ProjectionA | Closure::ProjectionB) {
        return Err(Error::InvalidArgument("the Λ oracle exists only for the projection closures".into()));
    }
    let mut o = LambdaOracle {
        closure,
        times: vec![0.0],
        big_lambda: vec![0.0],
        rate: Vec::new(),
        t_star: None,
        data,
    };
    let r0 = o.rate_at(0.0, cfg);
    o.rate.push(r0);
    let (mut t, mut big) = (0.0, 0.0);
    let tol = 1e-12 * cfg.end_time.max(1.0);
    while t < cfg.end_time - tol {
        let r = *o.rate.last().unwrap();
        let mut dt = cfg.dt.min(cfg.end_time - t);
        if r.abs() > 0.0 {
            dt = dt.min(cfg.max_increment / r.abs());
        }
        let k1 = r;
        let k2 = o.rate_at(big + 0.5 * dt * k1, cfg);
        let k3 = o.rate_at(big + 0.5 * dt * k2, cfg);
        let k4 = o.rate_at(big + dt * k3, cfg);
        big += dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        t += dt;
        let r = o.rate_at(big, cfg);
        o.times.push(t);
        o.big_lambda.push(big);
        o.rate.push(r);
        if !big.is_finite() || big > cfg.lambda_cap {
            // Near divergence Λ' ≈ a e^Λ, so e^{-Λ} ≈ a (T* - t).
            let a = r * (-big).exp();
            o.t_star = Some(if a > 0.0 { t + (-big).exp() / a } else { t });
            break;
        }
    }
    Ok(o)
}

/// Λ-ODE oracle for data given on the grid (evaluated through its
/// trigonometric interpolant).
pub fn lambda_oracle(omega0: &CircleField, closure: Closure, cfg: &OracleConfig) -> Result<LambdaOracle> {
    run_oracle(closure, InitialData::Trig(omega0.interpolant()), cfg)
}

/// Λ-ODE oracle for data given as a function on `(-π, π]` (2π-periodic).
pub fn lambda_oracle_fn<F>(omega0: F, closure: Closure, cfg: &OracleConfig) -> Result<LambdaOracle>
where
    F: Fn(f64) -> f64 + Send + Sync + 'static,
{
    let f = move |x: f64| {
        let mut y = x.rem_euclid(2.0 * PI);
        if y > PI {
            y -= 2.0 * PI;
        }
        omega0(y)
    };
    run_oracle(closure, InitialData::Func(std::sync::Arc::new(f)), cfg)
}

/// C^α data with a one-sided cusp at `x = 0`:
/// `sgn(sin(x/2)) |sin(x/2)|^α cos²(x/2)` for `x ∈ (-π, π]`.
pub fn holder_cusp(alpha: f64) -> impl Fn(f64) -> f64 + Send + Sync + Clone + 'static {
    move |x: f64| {
        let mut y = x.rem_euclid(2.0 * PI);
        if y > PI {
            y -= 2.0 * PI;
        }
        let s = (0.5 * y).sin();
        s.signum() * s.abs().powf(alpha) * (0.5 * y).cos().powi(2)
    }
}

/// `T* = -1 / min u₀'` (∞ when u₀ is non-decreasing).
pub fn burgers_shock_time(u0: &CircleField) -> f64 {
    let ti = u0.interpolant();
    let n = u0.n();
    let mut min_d = f64::INFINITY;
    for j in 0..4 * n {
        let x = 2.0 * PI * j as f64 / (4 * n) as f64;
        min_d = min_d.min(ti.eval_d2(x).1);
    }
    if min_d >= 0.0 {
        f64::INFINITY
    } else {
        -1.0 / min_d
    }
}

/// Exponents used for the Burgers gradient series.
pub const BURGERS_P: [f64; 5] = [1.0, 1.2, 1.4, 1.5, 2.0];

#[derive(Clone, Debug, PartialEq)]
pub struct BurgersRun {
    pub history: History1D,
    pub t_star: f64,
    /// `(t, [‖u_x‖_p for p in BURGERS_P])` at snapshot times.
    pub gradient_norms: Vec<(f64, [f64; 5])>,
}

pub fn burgers_1d(u0: &CircleField, cfg: &Evolve1dConfig) -> Result<BurgersRun> {
    let t_star = burgers_shock_time(u0);
    let history = evolve_1d(u0, Closure::Burgers, cfg)?;
    let mut sp = Spectral1::new(u0.n(), false);
    let gradient_norms = history
        .times
        .iter()
        .zip(&history.fields)
        .map(|(&t, f)| {
            let c = sp.fwd(&f.values);
            let ux = CircleField {
                values: sp.deriv(&c),
            };
            let mut out = [0.0; 5];
            for (o, p) in out.iter_mut().zip(BURGERS_P) {
                *o = ux.lp_norm(p);
            }
            (t, out)
        })
        .collect();
    Ok(BurgersRun {
        history,
        t_star,
        gradient_norms,
    })
}

/// `‖u_x(t)‖_p` from characteristics:
/// `∫ |u₀'(a)|^p (1 + t u₀'(a))^{1-p} da`, evaluated by the periodic
/// trapezoid rule on `m` label points.
pub fn burgers_characteristic_norm<F: Fn(f64) -> f64>(du0: F, t: f64, p: f64, m: usize) -> f64 {
    let h = 2.0 * PI / m as f64;
    let s: f64 = (0..m)
        .map(|j| {
            let d = du0(j as f64 * h);
            d.abs().powf(p) * (1.0 + t * d).powf(1.0 - p)
        })
        .sum();
    (s * h).powf(1.0 / p)
}

/// `u_x` along the characteristic from label `a`: `u₀'(a)/(1 + t u₀'(a))`.
pub fn burgers_characteristic_gradient(du0_a: f64, t: f64) -> f64 {
    du0_a / (1.0 + t * du0_a)
}

/// Scale-invariant 1D Euler run for m-fold symmetric data.
pub fn scale_invariant_euler(g0: &CircleField, m: usize, cfg: &Evolve1dConfig) -> Result<History1D> {
    if m < 3 {
        return Err(Error::InvalidArgument(format!(
            "m-fold symmetry with m >= 3 is required (got m = {m}); 4 + d²/dθ² is singular on k = ±2"
        )));
    }
    let n = g0.n();
    let c = Fft1::new(n).forward_real(&g0.values);
    let scale = c.iter().fold(0.0f64, |a, v| a.max(v.norm())).max(1e-300);
    for (i, v) in c.iter().enumerate() {
        let k = signed_index(i, n).unsigned_abs() as usize;
        if k % m != 0 && v.norm() > 1e-10 * scale {
            return Err(Error::InvalidArgument(format!(
                "data are not {m}-fold symmetric (mode {k} has weight {:e})",
                v.norm() / scale
            )));
        }
    }
    evolve_1d(g0, Closure::ScaleInvariantEuler, cfg)
}

/// `G` from `4G + G'' = g` (mode-wise `Ĝ_k = ĝ_k/(4-k²)`), for data without
/// `k = ±2` content.
pub fn solve_g(g: &CircleField) -> CircleField {
    let mut sp = Spectral1::new(g.n(), false);
    let c = sp.fwd(&g.values);
    let r = closure_rates(&mut sp, Closure::ScaleInvariantEuler, &g.values, &c);
    CircleField {
        values: r.u.iter().map(|u| 0.5 * u).collect(),
    }
}

/// Velocity `u` and `u_x` of a closure evaluated on `ω` (diagnostics).
pub fn velocity(omega: &CircleField, closure: Closure) -> (CircleField, CircleField) {
    let mut sp = Spectral1::new(omega.n(), false);
    let c = sp.fwd(&omega.values);
    let r = closure_rates(&mut sp, closure, &omega.values, &c);
    (CircleField { values: r.u }, CircleField { values: r.ux })
}
