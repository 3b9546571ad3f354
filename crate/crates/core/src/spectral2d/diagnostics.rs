use super::{biot_savart, gradient, EulerState};
use crate::error::Result;
use crate::grid::Field2D;
use crate::stats::DiagnosticRecord;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Integrand `H` of the Casimir `∫H(ω)`.
#[derive(Clone, Debug, PartialEq)]
pub enum Casimir {
    /// `H(s) = |s|^p`.
    Power(f64),
    /// `H` sampled on a uniform table over `[s_min, s_max]`, evaluated by
    /// cubic convolution and held constant outside the table.
    Table {
        s_min: f64,
        s_max: f64,
        values: Vec<f64>,
    },
}

impl Casimir {
    pub fn table_from_fn<F: Fn(f64) -> f64>(s_min: f64, s_max: f64, n: usize, h: F) -> Self {
        let values = (0..n)
            .map(|k| h(s_min + (s_max - s_min) * k as f64 / (n - 1) as f64))
            .collect();
        Casimir::Table { s_min, s_max, values }
    }

    pub fn eval(&self, s: f64) -> f64 {
        match self {
            Casimir::Power(p) => s.abs().powf(*p),
            Casimir::Table { s_min, s_max, values } => {
                let n = values.len();
                let h = (s_max - s_min) / (n - 1) as f64;
                let f = ((s - s_min) / h).clamp(0.0, (n - 1) as f64);
                let i = (f.floor() as usize).min(n - 2);
                let t = f - i as f64;
                let at = |k: i64| -> f64 {
                    let k = k.clamp(0, n as i64 - 1) as usize;
                    values[k]
                };
                let (p0, p1, p2, p3) = (at(i as i64 - 1), at(i as i64), at(i as i64 + 1), at(i as i64 + 2));
                // Catmull–Rom (cubic convolution with a = -1/2)
                p1 + 0.5
                    * t
                    * (p2 - p0 + t * (2.0 * p0 - 5.0 * p1 + 4.0 * p2 - p3 + t * (3.0 * (p1 - p2) + p3 - p0)))
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DiagnosticsConfig {
    pub alpha: f64,
    pub p_max: usize,
    pub casimir: Casimir,
    pub holder_pairs: usize,
    pub seed: u64,
}

impl Default for DiagnosticsConfig {
    fn default() -> Self {
        DiagnosticsConfig {
            alpha: 0.5,
            p_max: 64,
            casimir: Casimir::Power(4.0),
            holder_pairs: 100_000,
            seed: 0,
        }
    }
}

/// Grid `L^p` norm with weights from the grid quadrature.
pub fn lp_norm(f: &Field2D, p: f64) -> f64 {
    let m = f.max_abs();
    if m == 0.0 {
        return 0.0;
    }
    (f.weighted_sum(|v| (v.abs() / m).powf(p))).powf(1.0 / p) * m
}

/// Largest `|f(a) - f(b)| / |a - b|^α` over all nearest-neighbour pairs and
/// `pairs` random pairs. Distances are periodic in x (and in y on the torus).
pub fn holder_quotient(f: &Field2D, alpha: f64, pairs: usize, seed: u64) -> f64 {
    let g = f.grid;
    let (nx, rows) = (g.nx, g.rows());
    let (dx, dy) = (g.dx(), g.dy());
    let (lx, ly) = (g.lx(), g.ly());
    let periodic_y = !g.is_channel();
    let dist = |i1: usize, j1: usize, i2: usize, j2: usize| -> f64 {
        let mut ddx = (i1 as f64 - i2 as f64).abs() * dx;
        ddx = ddx.min(lx - ddx);
        let mut ddy = (j1 as f64 - j2 as f64).abs() * dy;
        if periodic_y {
            ddy = ddy.min(ly - ddy);
        }
        (ddx * ddx + ddy * ddy).sqrt()
    };
    let mut best = 0.0f64;
    let mut consider = |i1: usize, j1: usize, i2: usize, j2: usize| {
        let d = dist(i1, j1, i2, j2);
        if d > 0.0 {
            let q = (f.at(i1, j1) - f.at(i2, j2)).abs() / d.powf(alpha);
            if q > best {
                best = q;
            }
        }
    };
    for j in 0..rows {
        for i in 0..nx {
            let ip = (i + 1) % nx;
            consider(i, j, ip, j);
            let jn = if j + 1 < rows {
                Some(j + 1)
            } else if periodic_y {
                Some(0)
            } else {
                None
            };
            if let Some(jn) = jn {
                consider(i, j, i, jn);
                consider(i, j, ip, jn);
                consider(ip, j, i, jn);
            }
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..pairs {
        let (i1, j1) = (rng.gen_range(0..nx), rng.gen_range(0..rows));
        let (i2, j2) = (rng.gen_range(0..nx), rng.gen_range(0..rows));
        consider(i1, j1, i2, j2);
    }
    best
}

/// `max |∇f|` using spectral derivatives.
pub fn grad_max(f: &Field2D) -> f64 {
    let (gx, gy) = gradient(f);
    gx.values
        .iter()
        .zip(&gy.values)
        .fold(0.0f64, |m, (a, b)| m.max((a * a + b * b).sqrt()))
}

/// Snapshot diagnostics. Norms and the Hölder quotient use the total vorticity
/// (background shear included); the gradient uses the dynamical part, whose
/// gradient is the same.
pub fn diagnostics(state: &EulerState, cfg: &DiagnosticsConfig) -> Result<DiagnosticRecord> {
    let grid = state.omega.grid;
    let vel = biot_savart(&state.omega)?;
    let [mu, mv] = state.mean_velocity;
    let nx = grid.nx;
    let mut energy = 0.0;
    for j in 0..grid.rows() {
        let ub = mu + state.background_shear * (j as f64 * grid.dy());
        let w = grid.row_weight(j);
        for i in 0..nx {
            let p = j * nx + i;
            let u = vel.u.values[p] + ub;
            let v = vel.v.values[p] + mv;
            energy += 0.5 * w * (u * u + v * v);
        }
    }
    let total = state.total_vorticity();
    let enstrophy = 0.5 * total.weighted_sum(|v| v * v);
    let max_w = total.max_abs();
    let holder = holder_quotient(&total, cfg.alpha, cfg.holder_pairs, cfg.seed);
    let gmax = if state.omega.max_abs() == 0.0 { 0.0 } else { grad_max(&state.omega) };
    let area = grid.area();
    let p_max = cfg.p_max.max(2);
    let mut y_norm = 0.0f64;
    let mut x_norm = 0.0;
    for p in 2..=p_max {
        let n = lp_norm(&total, p as f64);
        let lp = (p as f64).ln();
        y_norm = y_norm.max(n / lp);
        x_norm += n / (p as f64 * lp * lp);
    }
    let growth = area.powf(1.0 / (p_max as f64 + 1.0)).max(1.0);
    let y_tail = max_w * growth / ((p_max + 1) as f64).ln();
    let x_tail = max_w * growth / (p_max as f64).ln();
    let casimir = total.weighted_sum(|v| cfg.casimir.eval(v));

    let mut r = DiagnosticRecord::new(state.t);
    r.push("energy", energy);
    r.push("enstrophy", enstrophy);
    r.push("max_vorticity", max_w);
    r.push("max_grad_vorticity", gmax);
    r.push("holder_quotient", holder);
    r.push("bkm_integral", state.bkm_integral);
    r.push("y_norm", y_norm);
    r.push("y_norm_tail_bound", y_tail);
    r.push("x_norm", x_norm);
    r.push("x_norm_tail_bound", x_tail);
    r.push("casimir", casimir);
    Ok(r)
}

/// Fit of the double-exponential envelope
/// `‖ω(t)‖_{C^α} ≤ ‖ω₀‖_∞ · r₀^{exp(c‖ω₀‖_∞ t / α)}` where
/// `r₀ = ‖ω₀‖_{C^α}/‖ω₀‖_∞`.
#[derive(Clone, Debug, PartialEq)]
pub struct EnvelopeFit {
    pub c: f64,
    pub ratio0: f64,
    /// Largest `measured / envelope` over the series with the fitted `c`.
    pub worst: f64,
}

/// Smallest `c ≥ 0` making the envelope hold at every sample.
pub fn fit_growth_envelope(times: &[f64], c_alpha: &[f64], sup0: f64, alpha: f64) -> EnvelopeFit {
    let ratio0 = c_alpha[0] / sup0;
    let mut c = 0.0f64;
    for (&t, &n) in times.iter().zip(c_alpha) {
        if t <= 0.0 {
            continue;
        }
        let r = n / sup0;
        if r > ratio0 && ratio0 > 1.0 {
            let need = alpha * (r.ln() / ratio0.ln()).ln() / (sup0 * t);
            c = c.max(need);
        }
    }
    let worst = times
        .iter()
        .zip(c_alpha)
        .map(|(&t, &n)| {
            let env = sup0 * ratio0.powf((c * sup0 * t / alpha).exp());
            n / env
        })
        .fold(0.0f64, f64::max);
    EnvelopeFit { c, ratio0, worst }
}

/// Supremum of `|f|` for the trigonometric interpolant of a torus field,
/// refined from the best grid maxima by Newton iterations on exact Fourier
/// sums. Channel fields are handled through their odd extension.
pub fn spectral_max_abs(f: &Field2D) -> f64 {
    use crate::fft::{signed_index, Fft2};
    let g = f.grid;
    let (nx, nye) = (g.nx, g.ext_rows());
    let ext = f.extended();
    let mut fft = Fft2::new(nx, nye);
    let c = fft.forward_real(&ext);
    let scale = 1.0 / (nx * nye) as f64;
    let two_pi = 2.0 * std::f64::consts::PI;
    let mut modes = Vec::new();
    for j in 0..nye {
        for i in 0..nx {
            let v = c[j * nx + i] * scale;
            if v.norm() > 1e-15 * f.max_abs().max(1e-300) {
                let kx = two_pi / g.lx() * signed_index(i, nx) as f64;
                let ky = two_pi / g.ext_ly() * signed_index(j, nye) as f64;
                modes.push((kx, ky, v));
            }
        }
    }
    let eval = |x: f64, y: f64| -> (f64, [f64; 2], [f64; 3]) {
        let (mut s, mut gx, mut gy, mut hxx, mut hxy, mut hyy) = (0.0, 0.0, 0.0, 0.0, 0.0, 0.0);
        for &(kx, ky, v) in &modes {
            let ph = kx * (x - g.x0) + ky * (y - g.y0);
            let (sn, cs) = ph.sin_cos();
            let re = v.re * cs - v.im * sn;
            let im = v.re * sn + v.im * cs;
            s += re;
            gx -= kx * im;
            gy -= ky * im;
            hxx -= kx * kx * re;
            hxy -= kx * ky * re;
            hyy -= ky * ky * re;
        }
        (s, [gx, gy], [hxx, hxy, hyy])
    };
    let rows = g.rows();
    let mut cands: Vec<(f64, usize, usize)> = Vec::new();
    for j in 0..rows {
        for i in 0..nx {
            let v = f.at(i, j).abs();
            let mut is_max = true;
            'n: for dj in -1i64..=1 {
                for di in -1i64..=1 {
                    let jj = j as i64 + dj;
                    if jj < 0 || jj >= rows as i64 {
                        continue;
                    }
                    let ii = (i as i64 + di).rem_euclid(nx as i64) as usize;
                    if f.at(ii, jj as usize).abs() > v {
                        is_max = false;
                        break 'n;
                    }
                }
            }
            if is_max {
                cands.push((v, i, j));
            }
        }
    }
    cands.sort_by(|a, b| b.0.total_cmp(&a.0));
    cands.truncate(8);
    let mut best = f.max_abs();
    for &(_, i, j) in &cands {
        let (mut x, mut y) = (g.x(i), g.y(j));
        let sgn = f.at(i, j).signum();
        for _ in 0..30 {
            let (s, gr, h) = eval(x, y);
            best = best.max(s.abs());
            let (a, b, d) = (sgn * h[0], sgn * h[1], sgn * h[2]);
            let det = a * d - b * b;
            let (gx, gy) = (sgn * gr[0], sgn * gr[1]);
            if a < 0.0 && det > 0.0 {
                let dx = -(d * gx - b * gy) / det;
                let dy = -(-b * gx + a * gy) / det;
                let lim = g.dx().max(g.dy());
                let norm = (dx * dx + dy * dy).sqrt();
                let f = if norm > lim { lim / norm } else { 1.0 };
                x += f * dx;
                y += f * dy;
                if norm < 1e-14 {
                    break;
                }
            } else {
                break;
            }
        }
        best = best.max(eval(x, y).0.abs());
    }
    best
}
