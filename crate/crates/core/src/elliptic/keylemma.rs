//! Pointwise second-order expansion of `Δ⁻¹` at the origin of a periodic box.

use crate::error::{check_finite, Error, Result};
use crate::fft::{signed_index, Fft2};
use crate::grid::{Field2D, Geometry};
use crate::interp::PeriodicLattice;
use crate::quad::CumulativeRule;
use num_complex::Complex64;
use std::f64::consts::{PI, TAU};

fn torus_lengths(f: &Field2D) -> Result<(f64, f64)> {
    match f.grid.geometry {
        Geometry::Torus { lx, ly } => Ok((lx, ly)),
        _ => Err(Error::InvalidGrid("key-lemma diagnostics need a torus grid".into())),
    }
}

fn wavenumbers(n: usize, l: f64) -> Vec<f64> {
    (0..n)
        .map(|i| {
            if 2 * i == n {
                0.0
            } else {
                TAU * signed_index(i, n) as f64 / l
            }
        })
        .collect()
}

/// Mean-free periodic solution of `Δψ = f - mean(f)`; Nyquist modes are dropped.
pub fn torus_poisson(f: &Field2D) -> Result<Field2D> {
    let (lx, ly) = torus_lengths(f)?;
    f.check_finite()?;
    let (nx, ny) = (f.grid.nx, f.grid.ny);
    let kx = wavenumbers(nx, lx);
    let ky = wavenumbers(ny, ly);
    let mut fft = Fft2::new(nx, ny);
    let mut c = fft.forward_real(&f.values);
    for j in 0..ny {
        for i in 0..nx {
            let k2 = kx[i] * kx[i] + ky[j] * ky[j];
            let p = j * nx + i;
            let nyquist = 2 * i == nx || 2 * j == ny;
            c[p] = if k2 == 0.0 || nyquist { Complex64::new(0.0, 0.0) } else { -c[p] / k2 };
        }
    }
    Field2D::from_values(f.grid, fft.inverse_real(&c))
}

/// Trigonometric interpolant of a torus field (Nyquist modes dropped).
struct SpectralEval {
    coef: Vec<Complex64>,
    kx: Vec<f64>,
    ky: Vec<f64>,
    x0: f64,
    y0: f64,
}

impl SpectralEval {
    fn new(f: &Field2D, lx: f64, ly: f64) -> Self {
        let (nx, ny) = (f.grid.nx, f.grid.ny);
        let mut fft = Fft2::new(nx, ny);
        let s = 1.0 / (nx * ny) as f64;
        let coef = fft.forward_real(&f.values).into_iter().map(|c| c * s).collect();
        SpectralEval {
            coef,
            kx: wavenumbers(nx, lx),
            ky: wavenumbers(ny, ly),
            x0: f.grid.x0,
            y0: f.grid.y0,
        }
    }

    /// Value and gradient at `(x, y)`.
    fn eval(&self, x: f64, y: f64) -> (f64, f64, f64) {
        let nx = self.kx.len();
        let ex: Vec<Complex64> = self.kx.iter().map(|k| Complex64::from_polar(1.0, k * (x - self.x0))).collect();
        let (mut v, mut gx, mut gy) = (Complex64::default(), Complex64::default(), Complex64::default());
        for (j, &ky) in self.ky.iter().enumerate() {
            let ey = Complex64::from_polar(1.0, ky * (y - self.y0));
            let row = &self.coef[j * nx..(j + 1) * nx];
            let (mut rv, mut rx) = (Complex64::default(), Complex64::default());
            for ((c, e), k) in row.iter().zip(&ex).zip(&self.kx) {
                let t = c * e;
                rv += t;
                rx += t * k;
            }
            v += rv * ey;
            gx += rx * ey;
            gy += rv * ey * ky;
        }
        // ∂ brings a factor i
        (v.re, -gx.im, -gy.im)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct KeyLemmaConfig {
    /// Sample radii; empty selects dyadic radii from `min(lx, ly)/8` down to
    /// two grid spacings.
    pub radii: Vec<f64>,
    pub angles: usize,
    /// Allowed `max|Δψ - f|` relative to `max|f|`.
    pub poisson_tol: f64,
    /// Angular nodes for the P₂ projection.
    pub projection_nodes: usize,
    /// Radial quadrature nodes per octave.
    pub per_octave: usize,
}

impl Default for KeyLemmaConfig {
    fn default() -> Self {
        KeyLemmaConfig {
            radii: Vec::new(),
            angles: 32,
            poisson_tol: 1e-8,
            projection_nodes: 64,
            per_octave: 16,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct KeyLemmaReport {
    /// `sup |ψ(x) - ψ(0) - x·∇ψ(0) + ¼|x|² ∫_{|x|}^∞ P₂f/ρ dρ| / (‖f‖∞|x|²)`.
    pub constant: f64,
    /// The same quotient without the P₂ term.
    pub taylor_only: f64,
    /// `(radius, constant over that radius, max |∫P₂f/ρ|)`.
    pub per_radius: Vec<(f64, f64, f64)>,
    pub poisson_residual: f64,
    pub f_sup: f64,
}

/// Empirical constant of the expansion of `ψ` around the origin. For
/// `Δψ = g(ρ)e^{2iθ}` the quadratic singular term is
/// `-¼|x|² ∫_{|x|}^∞ g/ρ dρ`, which fixes the normalisation used here.
/// `f` is taken mean-free (the torus Laplacian only sees `f - mean f`).
pub fn key_lemma_remainder(psi: &Field2D, f: &Field2D, cfg: &KeyLemmaConfig) -> Result<KeyLemmaReport> {
    let (lx, ly) = torus_lengths(f)?;
    if psi.grid != f.grid {
        return Err(Error::InvalidGrid("ψ and f live on different grids".into()));
    }
    check_finite(&psi.values)?;
    check_finite(&f.values)?;
    if !(f.grid.x0 <= 0.0 && f.grid.x0 + lx > 0.0 && f.grid.y0 <= 0.0 && f.grid.y0 + ly > 0.0) {
        return Err(Error::InvalidGrid("the box must contain the origin".into()));
    }
    if cfg.angles == 0 || cfg.projection_nodes < 8 || cfg.per_octave == 0 {
        return Err(Error::InvalidArgument("angles, projection_nodes and per_octave must be positive".into()));
    }
    let mean = f.mean();
    let fm: Vec<f64> = f.values.iter().map(|v| v - mean).collect();
    let f_sup = crate::stats::max_abs(&fm);

    let lap = crate::spectral2d::laplacian(psi);
    let poisson_residual = lap.values.iter().zip(&fm).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    if poisson_residual > cfg.poisson_tol * f_sup.max(1e-300) && poisson_residual > 1e-13 {
        return Err(Error::PoissonResidual {
            residual: poisson_residual,
        });
    }

    let (dx, dy) = (f.grid.dx(), f.grid.dy());
    let h = dx.max(dy);
    let r_top = lx.min(ly) / 8.0;
    let radii: Vec<f64> = if cfg.radii.is_empty() {
        let mut v = Vec::new();
        let mut r = r_top;
        while r >= 2.0 * h {
            v.push(r);
            r *= 0.5;
        }
        v
    } else {
        cfg.radii.clone()
    };
    if radii.iter().any(|&r| !(r > 0.0 && r < lx.min(ly) / 2.0)) {
        return Err(Error::InvalidArgument("sample radii must lie inside the inscribed disk".into()));
    }

    // P₂ coefficients on a log-uniform ρ grid through every sample radius
    let du = std::f64::consts::LN_2 / cfg.per_octave as f64;
    let rho_max = lx.min(ly) / 2.0;
    let r_min = radii.iter().cloned().fold(f64::INFINITY, f64::min);
    let u0 = r_min.ln();
    let m = ((rho_max.ln() - u0) / du).floor() as usize + 1;
    let us: Vec<f64> = (0..m).map(|k| u0 + k as f64 * du).collect();
    let lattice = PeriodicLattice {
        nx: f.grid.nx,
        ny: f.grid.ny,
        x0: f.grid.x0,
        y0: f.grid.y0,
        dx,
        dy,
    };
    let q = cfg.projection_nodes;
    let (mut a2, mut b2) = (vec![0.0; m], vec![0.0; m]);
    for (k, &u) in us.iter().enumerate() {
        (a2[k], b2[k]) = lattice_p2(&lattice, &fm, u.exp(), q);
    }
    let rule = CumulativeRule::new(&us, 8);
    let ia = rule.from_right(&a2);
    let ib = rule.from_right(&b2);
    let p2_integral = |r: f64| -> (f64, f64) {
        let t = (r.ln() - u0) / du;
        let k = t.round() as usize;
        if (t - k as f64).abs() < 1e-9 && k < m {
            (ia[k], ib[k])
        } else {
            // off-grid radius: integrate the short gap separately
            let k = (t.ceil() as usize).min(m - 1);
            let gap = us[k] - r.ln();
            let fa = crate::quad::integrate(
                |u| lattice_p2(&lattice, &fm, u.exp(), q).0,
                r.ln(),
                r.ln() + gap,
                1e-12,
            );
            let fb = crate::quad::integrate(
                |u| lattice_p2(&lattice, &fm, u.exp(), q).1,
                r.ln(),
                r.ln() + gap,
                1e-12,
            );
            (ia[k] + fa, ib[k] + fb)
        }
    };

    let spec = SpectralEval::new(psi, lx, ly);
    let (p0, gx0, gy0) = spec.eval(0.0, 0.0);
    let mut constant = 0.0f64;
    let mut taylor_only = 0.0f64;
    let mut per_radius = Vec::with_capacity(radii.len());
    let scale = |r: f64| if f_sup > 0.0 { f_sup * r * r } else { 1.0 };
    for &r in &radii {
        let (ar, br) = p2_integral(r);
        let mut c_r = 0.0f64;
        for k in 0..cfg.angles {
            let s = TAU * k as f64 / cfg.angles as f64;
            let (x, y) = (r * s.cos(), r * s.sin());
            let taylor = spec.eval(x, y).0 - p0 - x * gx0 - y * gy0;
            let p2 = ar * (2.0 * s).cos() + br * (2.0 * s).sin();
            let rem = taylor + 0.25 * r * r * p2;
            c_r = c_r.max(rem.abs() / scale(r));
            taylor_only = taylor_only.max(taylor.abs() / scale(r));
        }
        constant = constant.max(c_r);
        per_radius.push((r, c_r, ar.hypot(br)));
    }
    Ok(KeyLemmaReport {
        constant,
        taylor_only,
        per_radius,
        poisson_residual,
        f_sup,
    })
}

fn lattice_p2(lattice: &PeriodicLattice, v: &[f64], rho: f64, q: usize) -> (f64, f64) {
    let (mut a, mut b) = (0.0, 0.0);
    for j in 0..q {
        let phi = TAU * j as f64 / q as f64;
        let f = lattice.value(v, rho * phi.cos(), rho * phi.sin());
        a += f * (2.0 * phi).cos();
        b += f * (2.0 * phi).sin();
    }
    (a * TAU / (q as f64 * PI), b * TAU / (q as f64 * PI))
}
