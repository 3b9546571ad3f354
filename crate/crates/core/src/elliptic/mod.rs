//! The α-scaled elliptic problem
//! `α²R²Ψ_RR + (4α+α²)RΨ_R + 4Ψ + Ψ_θθ = Ω`, its singular/regular split, the
//! pointwise expansion of `Δ⁻¹` at a point and the P₂-truncated 2D model.
//!
//! Radial work happens on log-uniform grids, where `x = ln R` turns the mode
//! equation into `α²ψ'' + 4αψ' + (4 - n²)ψ = F` with constant coefficients.

mod keylemma;
mod p2model;

pub use keylemma::{key_lemma_remainder, torus_poisson, KeyLemmaConfig, KeyLemmaReport};
pub use p2model::{evolve_p2_model, p2_model_step, DiskField, P2History, P2ModelConfig, P2Stream};

use crate::banded::Banded;
use crate::error::{check_finite, Error, Result};
use crate::fft::Fft1;
use crate::quad::{fornberg, gauss_legendre, CumulativeRule};
use crate::radial::{Profile1D, RadialGrid, RadialMap};
use num_complex::Complex64;
use rand::Rng;

const STENCIL: usize = 7;

fn log_spacing(grid: &RadialGrid) -> Result<f64> {
    match grid.map() {
        RadialMap::LogUniform { .. } => Ok(grid.s()[1] - grid.s()[0]),
        _ => Err(Error::InvalidGrid("the elliptic solvers need a log-uniform radial grid".into())),
    }
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha.is_finite() && alpha <= 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("α must lie in (0, 1], got {alpha}")))
    }
}

/// Log grid on `[1e-9, 1e7]` fine enough for the `R^{-4/α}` scale.
pub fn bsalpha_grid(alpha: f64) -> Result<RadialGrid> {
    check_alpha(alpha)?;
    let span = (1e7f64 / 1e-9).ln();
    let h = (alpha / 8.0).min(0.02);
    RadialGrid::log_uniform((span / h).ceil() as usize + 1, 1e-9, 1e7)
}

/// Angular mode `F(R)e^{inθ}` of a right-hand side.
#[derive(Clone, Debug, PartialEq)]
pub struct ModeProfile {
    pub n: u32,
    pub profile: Profile1D,
    pub alpha: f64,
}

impl ModeProfile {
    pub fn new(n: u32, profile: Profile1D, alpha: f64) -> Result<Self> {
        check_alpha(alpha)?;
        log_spacing(&profile.grid)?;
        let m = profile.max_abs();
        let last = *profile.values.last().unwrap();
        if m > 0.0 && last.abs() > 1e-6 * m {
            return Err(Error::NonDecaying(format!("|F(R_max)| = {last:e}")));
        }
        Ok(ModeProfile { n, profile, alpha })
    }
}

/// Roots `(λ₋, λ₊) = ((-2-n)/α, (-2+n)/α)`: the homogeneous solutions are `R^λ`.
pub fn mode_exponents(n: u32, alpha: f64) -> (f64, f64) {
    let n = n as f64;
    ((-2.0 - n) / alpha, (-2.0 + n) / alpha)
}

/// Local decay rate `p` of `F ~ e^{-p x}` at the right end, if it decays.
fn right_decay(f: &[f64], h: f64) -> Option<f64> {
    let k = f.len();
    let (a, b) = (f[k - 2], f[k - 1]);
    if b == 0.0 || a == 0.0 || a.signum() != b.signum() {
        return None;
    }
    let p = (a / b).ln() / h;
    (p > 0.0).then_some(p)
}

/// Direct solve of the mode equation. The admissible branch is selected by
/// Robin closures built from the known exponents: for `n ≥ 2` the `R^{λ₋}`
/// branch is excluded at `R_min` and `R^{λ₊}` at `R_max`. For `n < 2` both
/// branches are singular at the origin and the forced response is the causal
/// one, obtained from two first-order sweeps instead of a banded solve.
pub fn solve_mode(mode: &ModeProfile) -> Result<Profile1D> {
    let grid = &mode.profile.grid;
    let h = log_spacing(grid)?;
    let f = &mode.profile.values;
    let n = f.len();
    if n < 2 * STENCIL {
        return Err(Error::InvalidGrid(format!("mode solve needs at least {} nodes", 2 * STENCIL)));
    }
    let alpha = mode.alpha;
    let c = 4.0 - (mode.n as f64).powi(2);
    let (lm, lp) = mode_exponents(mode.n, alpha);
    let x = grid.s();
    let half = STENCIL / 2;
    let mut a = Banded::zeros(n, STENCIL - 1, STENCIL - 1);
    let mut b = f.clone();

    let stencil = |i: usize| -> (usize, Vec<Vec<f64>>) {
        let lo = i.saturating_sub(half).min(n - STENCIL);
        (lo, fornberg(x[i], &x[lo..lo + STENCIL], 2))
    };
    let ode_row = |a: &mut Banded, i: usize| {
        let (lo, w) = stencil(i);
        for k in 0..STENCIL {
            let mut v = alpha * alpha * w[2][k] + 4.0 * alpha * w[1][k];
            if lo + k == i {
                v += c;
            }
            a.set(i, lo + k, v);
        }
    };
    // (D - λ)ψ at node i
    let robin_row = |a: &mut Banded, i: usize, lambda: f64| {
        let (lo, w) = stencil(i);
        for k in 0..STENCIL {
            let mut v = w[1][k];
            if lo + k == i {
                v -= lambda;
            }
            a.set(i, lo + k, v);
        }
    };

    let f0 = f[0];
    if mode.n >= 2 {
        robin_row(&mut a, 0, lp);
        // particular solution near the origin for F ≈ F(R_min)
        b[0] = if mode.n == 2 { f0 / (4.0 * alpha) } else { -lp * f0 / c };
        let last = n - 1;
        robin_row(&mut a, last, lm);
        b[last] = match right_decay(f, h) {
            Some(p) => {
                let denom = alpha * alpha * p * p - 4.0 * alpha * p + c;
                if denom.abs() > 1e-12 {
                    (-p - lm) * f[last] / denom
                } else {
                    0.0
                }
            }
            None => 0.0,
        };
        for i in 1..last {
            ode_row(&mut a, i);
        }
    } else {
        // α²(D - λ₋)(D - λ₊)ψ = F, both factors inverted causally
        let u: Vec<f64> = f.iter().map(|v| v / (alpha * alpha)).collect();
        let u = causal_decay(&u, h, -lm)?;
        let psi = causal_decay(&u, h, -lp)?;
        check_finite(&psi)?;
        return Profile1D::new(grid.clone(), psi);
    }
    let psi = a.solve(&b)?;
    check_finite(&psi)?;
    Profile1D::new(grid.clone(), psi)
}

/// `L(F)` and `𝓡(F)` on the profile's grid.
#[derive(Clone, Debug, PartialEq)]
pub struct SingularSplit {
    pub alpha: f64,
    /// `∫_R^∞ F(s)/s ds`.
    pub l: Profile1D,
    /// `(1/4α) R^{-4/α} ∫_0^R s^{4/α} F(s)/s ds`.
    pub r: Profile1D,
}

impl SingularSplit {
    /// The n = 2 mode solution assembled from the split, `-(L/(4α) + 𝓡)`.
    pub fn mode_two_solution(&self) -> Profile1D {
        let v = self
            .l
            .values
            .iter()
            .zip(&self.r.values)
            .map(|(l, r)| -(l / (4.0 * self.alpha) + r))
            .collect();
        Profile1D {
            grid: self.l.grid.clone(),
            values: v,
        }
    }
}

const SPLIT_ORDER: usize = 6;

/// `J(x) = ∫_{-∞}^x e^{a(y-x)} v(y) dy` on a uniform grid of spacing `h`,
/// advanced with the damping factor `e^{-ah}` and exponentially weighted
/// interval rules; `v` is taken constant left of the grid.
fn causal_decay(v: &[f64], h: f64, a: f64) -> Result<Vec<f64>> {
    if a * h > 50.0 {
        return Err(Error::InvalidArgument(format!(
            "overflow guard: a·h = {:.1} is too coarse for the grid",
            a * h
        )));
    }
    // exponentially weighted interval weights, cached by stencil offset
    let n = v.len();
    let p = SPLIT_ORDER.min(n);
    let (gx, gw) = gauss_legendre(12 + (a * h).ceil() as usize);
    let mut cache: Vec<Option<Vec<f64>>> = vec![None; p];
    let damp = (-a * h).exp();
    let mut j = vec![0.0; n];
    j[0] = v[0] / a;
    for i in 0..n - 1 {
        let lo = (i as i64 - (p as i64 / 2 - 1)).clamp(0, (n - p) as i64) as usize;
        let off = i - lo;
        let w = cache[off].get_or_insert_with(|| {
            // nodes relative to x_{i+1}
            let nodes: Vec<f64> = (0..p).map(|k| (k as f64 - off as f64 - 1.0) * h).collect();
            let mut w = vec![0.0; p];
            for (&t, &wt) in gx.iter().zip(&gw) {
                let y = -h + 0.5 * h * (t + 1.0);
                let e = (a * y).exp() * 0.5 * h * wt;
                for k in 0..p {
                    let mut lk = 1.0;
                    for m in 0..p {
                        if m != k {
                            lk *= (y - nodes[m]) / (nodes[k] - nodes[m]);
                        }
                    }
                    w[k] += e * lk;
                }
            }
            w
        });
        let inc: f64 = w.iter().zip(&v[lo..lo + p]).map(|(w, v)| w * v).sum();
        j[i + 1] = damp * j[i] + inc;
    }
    Ok(j)
}

/// Evaluates `L` and `𝓡` by quadrature in `x = ln R`. The `R^{-4/α}`
/// prefactor is never formed: `𝓡 = J/(4α)` with `J` the causal decay of `F`
/// at rate `a = 4/α`.
pub fn singular_split(f: &Profile1D, alpha: f64) -> Result<SingularSplit> {
    check_alpha(alpha)?;
    let h = log_spacing(&f.grid)?;
    check_finite(&f.values)?;
    let n = f.values.len();
    let x = f.grid.s();
    let a = 4.0 / alpha;
    let v = &f.values;

    let rule = CumulativeRule::new(x, 8);
    let mut l = rule.from_right(v);
    let tail = if v[n - 1] == 0.0 {
        0.0
    } else {
        match right_decay(v, h) {
            Some(p) => v[n - 1] / p,
            None => return Err(Error::NonDecaying(format!("F(R_max) = {:e}", v[n - 1]))),
        }
    };
    for li in l.iter_mut() {
        *li += tail;
    }

    let j = causal_decay(v, h, a)?;
    let r: Vec<f64> = j.iter().map(|j| j / (4.0 * alpha)).collect();
    Ok(SingularSplit {
        alpha,
        l: Profile1D::new(f.grid.clone(), l)?,
        r: Profile1D::new(f.grid.clone(), r)?,
    })
}

/// `‖F‖_{L²(dR)}` on a log grid.
pub fn l2_norm(f: &Profile1D) -> Result<f64> {
    log_spacing(&f.grid)?;
    let w = CumulativeRule::new(f.grid.s(), 8).total_weights();
    let s: f64 = w
        .iter()
        .zip(&f.values)
        .zip(f.grid.r())
        .map(|((w, v), r)| w * v * v * r)
        .sum();
    Ok(s.max(0.0).sqrt())
}

/// Sharp operator norm of `𝓡` on `L²(dR)` (Mellin symbol at the `L²` line).
pub fn r_operator_norm(alpha: f64) -> f64 {
    1.0 / (2.0 * (8.0 - alpha))
}

/// Random smooth profile: a sum of up to four Gaussians in `ln R`.
pub fn random_profile<R: Rng>(grid: &RadialGrid, rng: &mut R) -> Profile1D {
    let k = rng.gen_range(1..=4);
    let bumps: Vec<(f64, f64, f64)> = (0..k)
        .map(|_| (rng.gen_range(-1.0..1.0), rng.gen_range(-3.0..3.0), rng.gen_range(0.3..1.5)))
        .collect();
    let values = grid
        .s()
        .iter()
        .map(|&x| {
            bumps
                .iter()
                .map(|&(c, m, s)| c * (-(x - m) * (x - m) / (2.0 * s * s)).exp())
                .sum()
        })
        .collect();
    Profile1D {
        grid: grid.clone(),
        values,
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct NormAudit {
    pub alpha: f64,
    pub ratios: Vec<f64>,
    pub max_ratio: f64,
    /// `1/(8(8-α))`.
    pub stated_bound: f64,
    /// `1/(2(8-α))`.
    pub sharp_bound: f64,
}

/// `‖𝓡F‖₂/‖F‖₂` over `samples` random profiles.
pub fn r_norm_audit(alpha: f64, samples: usize, seed: u64) -> Result<NormAudit> {
    use rand::SeedableRng;
    check_alpha(alpha)?;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let h = (alpha / 8.0).min(0.01);
    let grid = RadialGrid::log_uniform((40.0 / h).ceil() as usize + 1, (-25f64).exp(), 15f64.exp())?;
    let mut ratios = Vec::with_capacity(samples);
    for _ in 0..samples {
        let f = random_profile(&grid, &mut rng);
        let split = singular_split(&f, alpha)?;
        ratios.push(l2_norm(&split.r)? / l2_norm(&f)?);
    }
    let max_ratio = ratios.iter().cloned().fold(0.0, f64::max);
    Ok(NormAudit {
        alpha,
        ratios,
        max_ratio,
        stated_bound: 1.0 / (8.0 * (8.0 - alpha)),
        sharp_bound: r_operator_norm(alpha),
    })
}

/// Real field on (log-uniform R) × (θ ∈ [0, 2π), `n_theta` points); R is the
/// slow index.
#[derive(Clone, Debug, PartialEq)]
pub struct AngularField {
    pub grid: RadialGrid,
    pub n_theta: usize,
    pub values: Vec<f64>,
}

impl AngularField {
    pub fn new(grid: RadialGrid, n_theta: usize, values: Vec<f64>) -> Result<Self> {
        log_spacing(&grid)?;
        if n_theta < 8 || n_theta % 2 != 0 {
            return Err(Error::InvalidGrid(format!("n_theta must be even and >= 8, got {n_theta}")));
        }
        if values.len() != grid.n() * n_theta {
            return Err(Error::InvalidGrid(format!("{} values for {}×{n_theta}", values.len(), grid.n())));
        }
        check_finite(&values)?;
        Ok(AngularField { grid, n_theta, values })
    }

    pub fn from_fn<F: Fn(f64, f64) -> f64>(grid: &RadialGrid, n_theta: usize, f: F) -> Result<Self> {
        let mut v = Vec::with_capacity(grid.n() * n_theta);
        for &r in grid.r() {
            for j in 0..n_theta {
                v.push(f(r, Self::theta_of(n_theta, j)));
            }
        }
        Self::new(grid.clone(), n_theta, v)
    }

    fn theta_of(n_theta: usize, j: usize) -> f64 {
        std::f64::consts::TAU * j as f64 / n_theta as f64
    }

    pub fn theta(&self, j: usize) -> f64 {
        Self::theta_of(self.n_theta, j)
    }

    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.n_theta + j]
    }

    fn spectrum(&self) -> Vec<Complex64> {
        let mut fft = Fft1::new(self.n_theta);
        let mut c: Vec<Complex64> = self.values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        fft.forward(&mut c);
        c
    }

    fn from_spectrum(&self, mut c: Vec<Complex64>) -> Self {
        let mut fft = Fft1::new(self.n_theta);
        fft.inverse(&mut c);
        AngularField {
            grid: self.grid.clone(),
            n_theta: self.n_theta,
            values: c.iter().map(|z| z.re).collect(),
        }
    }

    /// Keeps only the `cos nθ, sin nθ` band.
    pub fn band(&self, n: usize) -> Self {
        let m = self.n_theta;
        let mut c = self.spectrum();
        for (k, z) in c.iter_mut().enumerate() {
            let kk = k % m;
            if kk != n && kk != (m - n) % m {
                *z = Complex64::new(0.0, 0.0);
            }
        }
        self.from_spectrum(c)
    }

    /// Removes the bands `n ∈ {0, 1, 2}`.
    pub fn regular_part(&self) -> Self {
        let m = self.n_theta;
        let mut c = self.spectrum();
        for (k, z) in c.iter_mut().enumerate() {
            let kk = k % m;
            if kk <= 2 || kk >= m - 2 {
                *z = Complex64::new(0.0, 0.0);
            }
        }
        self.from_spectrum(c)
    }

    /// `(cos, sin)` coefficient profiles of band `n`.
    pub fn mode(&self, n: usize) -> (Profile1D, Profile1D) {
        let m = self.n_theta;
        let c = self.spectrum();
        let scale = if n == 0 || 2 * n == m { 1.0 } else { 2.0 } / m as f64;
        let (mut a, mut b) = (Vec::new(), Vec::new());
        for i in 0..self.grid.n() {
            let z = c[i * m + n];
            a.push(scale * z.re);
            b.push(-scale * z.im);
        }
        (
            Profile1D {
                grid: self.grid.clone(),
                values: a,
            },
            Profile1D {
                grid: self.grid.clone(),
                values: b,
            },
        )
    }

    /// `‖·‖_{L²(dR dθ)}`.
    pub fn l2_norm(&self) -> f64 {
        let w = CumulativeRule::new(self.grid.s(), 8).total_weights();
        let dth = std::f64::consts::TAU / self.n_theta as f64;
        let mut s = 0.0;
        for (i, (&wi, &r)) in w.iter().zip(self.grid.r()).enumerate() {
            let row: f64 = self.values[i * self.n_theta..(i + 1) * self.n_theta].iter().map(|v| v * v).sum();
            s += wi * r * row * dth;
        }
        s.sqrt()
    }

    /// `∂θθ` by spectral differentiation.
    pub fn d_theta_theta(&self) -> Self {
        let m = self.n_theta;
        let mut c = self.spectrum();
        for (k, z) in c.iter_mut().enumerate() {
            let kk = crate::fft::signed_index(k % m, m) as f64;
            *z *= -kk * kk;
        }
        self.from_spectrum(c)
    }
}

/// Solves the α-scaled problem band by band on the field's grid.
pub fn solve_bsalpha(omega: &AngularField, alpha: f64) -> Result<AngularField> {
    check_alpha(alpha)?;
    let m = omega.n_theta;
    let nr = omega.grid.n();
    let c = omega.spectrum();
    let mut out = vec![Complex64::new(0.0, 0.0); c.len()];
    for k in 0..=m / 2 {
        let re: Vec<f64> = (0..nr).map(|i| c[i * m + k].re).collect();
        let im: Vec<f64> = (0..nr).map(|i| c[i * m + k].im).collect();
        let solve = |v: Vec<f64>| -> Result<Vec<f64>> {
            if v.iter().all(|&x| x == 0.0) {
                return Ok(v);
            }
            let mode = ModeProfile::new(k as u32, Profile1D::new(omega.grid.clone(), v)?, alpha)?;
            Ok(solve_mode(&mode)?.values)
        };
        let pr = solve(re)?;
        let pi = solve(im)?;
        for i in 0..nr {
            let z = Complex64::new(pr[i], pi[i]);
            out[i * m + k] = z;
            if k != 0 && 2 * k != m {
                out[i * m + m - k] = z.conj();
            }
        }
    }
    Ok(omega.from_spectrum(out))
}

/// Largest `‖∂θθΨ‖/‖Ω‖` over random data orthogonal to the bands 0, 1, 2.
pub fn regular_estimate_constant(alpha: f64, samples: usize, seed: u64) -> Result<f64> {
    use rand::SeedableRng;
    check_alpha(alpha)?;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let grid = bsalpha_grid(alpha)?;
    let mut worst = 0.0f64;
    for _ in 0..samples {
        let n = rng.gen_range(3..=8u32);
        let f = random_profile(&grid, &mut rng);
        let fl2 = l2_norm(&f)?;
        let psi = solve_mode(&ModeProfile::new(n, f, alpha)?)?;
        worst = worst.max((n * n) as f64 * l2_norm(&psi)? / fl2);
    }
    Ok(worst)
}

/// Exponents of the homogeneous mode equation measured by integrating it
/// forward and backward in `x = ln R` and fitting `ln|ψ|` against `x`.
/// Returns `(backward, forward)`, which approximate `(λ₋, λ₊)`.
pub fn fit_homogeneous_exponents(n: u32, alpha: f64) -> Result<(f64, f64)> {
    check_alpha(alpha)?;
    let c = 4.0 - (n as f64).powi(2);
    let (lm, lp) = mode_exponents(n, alpha);
    let scale = lm.abs().max(lp.abs()).max(1.0);
    let run = |dir: f64| -> f64 {
        // y = (ψ, ψ'), ψ'' = (-4αψ' - cψ)/α²
        let rhs = |y: [f64; 2]| [dir * y[1], dir * (-4.0 * alpha * y[1] - c * y[0]) / (alpha * alpha)];
        let span = 400.0 / scale;
        let steps = 20000;
        let h = span / steps as f64;
        let mut y = [1.0, 0.3];
        let mut log_scale = 0.0;
        let mut xs = Vec::new();
        let mut ls = Vec::new();
        for s in 1..=steps {
            let k1 = rhs(y);
            let k2 = rhs([y[0] + 0.5 * h * k1[0], y[1] + 0.5 * h * k1[1]]);
            let k3 = rhs([y[0] + 0.5 * h * k2[0], y[1] + 0.5 * h * k2[1]]);
            let k4 = rhs([y[0] + h * k3[0], y[1] + h * k3[1]]);
            for q in 0..2 {
                y[q] += h / 6.0 * (k1[q] + 2.0 * k2[q] + 2.0 * k3[q] + k4[q]);
            }
            let m = y[0].abs().max(y[1].abs() / scale);
            if m > 0.0 {
                y[0] /= m;
                y[1] /= m;
                log_scale += m.ln();
            }
            if s > steps / 2 {
                xs.push(dir * s as f64 * h);
                ls.push(log_scale + y[0].abs().max(1e-300).ln());
            }
        }
        crate::stats::linear_fit(&xs, &ls).1
    };
    Ok((run(-1.0), run(1.0)))
}
