//! Geometry of 2D flows: the action of discretised Lagrangian paths, the
//! volume-preserving path perturbation, and streamline travel times.

use crate::error::{Error, Result};
use crate::fft::{signed_index, Fft2};
use crate::grid::Field2D;
use crate::interp::PeriodicLattice;
use num_complex::Complex64;
use std::f64::consts::TAU;

/// Marker positions of a flow map on the torus `[0,lx) × [0,ly)`. Labels sit
/// at cell centres of an `nx × ny` lattice; positions are unwrapped.
#[derive(Clone, Debug, PartialEq)]
pub struct FlowPath {
    pub lx: f64,
    pub ly: f64,
    pub nx: usize,
    pub ny: usize,
    pub times: Vec<f64>,
    /// `positions[k][j*nx + i]`.
    pub positions: Vec<Vec<[f64; 2]>>,
    pub velocity_id: String,
}

pub const PATH_VOLUME_TOL: f64 = 1e-6;

impl FlowPath {
    pub fn label(&self, i: usize, j: usize) -> [f64; 2] {
        [
            (i as f64 + 0.5) * self.lx / self.nx as f64,
            (j as f64 + 0.5) * self.ly / self.ny as f64,
        ]
    }

    pub fn labels(&self) -> Vec<[f64; 2]> {
        (0..self.ny)
            .flat_map(|j| (0..self.nx).map(move |i| (i, j)))
            .map(|(i, j)| self.label(i, j))
            .collect()
    }

    /// Markers advected by `u(t, x, y)` with RK4, `substeps` per stored
    /// interval, stored at `n_times` uniform times on `[t1, t2]`.
    #[allow(clippy::too_many_arguments)]
    pub fn from_velocity<U: Fn(f64, f64, f64) -> (f64, f64)>(
        u: U,
        lx: f64,
        ly: f64,
        n: usize,
        t1: f64,
        t2: f64,
        n_times: usize,
        substeps: usize,
        id: &str,
    ) -> Result<Self> {
        if n < 4 || n % 2 != 0 || n_times < 2 || substeps == 0 || !(t2 > t1) || !(lx > 0.0 && ly > 0.0) {
            return Err(Error::InvalidArgument(
                "need even n >= 4, n_times >= 2, substeps >= 1, t2 > t1 and a positive box".into(),
            ));
        }
        let mut path = FlowPath {
            lx,
            ly,
            nx: n,
            ny: n,
            times: (0..n_times)
                .map(|k| t1 + (t2 - t1) * k as f64 / (n_times - 1) as f64)
                .collect(),
            positions: Vec::new(),
            velocity_id: id.to_string(),
        };
        let mut x = path.labels();
        path.positions.push(x.clone());
        for k in 1..n_times {
            let (ta, tb) = (path.times[k - 1], path.times[k]);
            let h = (tb - ta) / substeps as f64;
            for s in 0..substeps {
                let t = ta + s as f64 * h;
                for p in x.iter_mut() {
                    *p = rk4(&|y: [f64; 2], t: f64| {
                        let (a, b) = u(t, y[0], y[1]);
                        [a, b]
                    }, *p, t, h);
                }
            }
            for p in &x {
                if !(p[0].is_finite() && p[1].is_finite()) {
                    return Err(Error::NonFinite);
                }
            }
            path.positions.push(x.clone());
        }
        Ok(path)
    }

    /// `max |det ∂X/∂a - 1|` over markers at stored time `k`, with the
    /// periodic displacement `X - a` differentiated spectrally.
    pub fn volume_defect(&self, k: usize) -> f64 {
        let (nx, ny) = (self.nx, self.ny);
        let labels = self.labels();
        let mut fft = Fft2::new(nx, ny);
        let mut grads = Vec::new();
        for c in 0..2 {
            let disp: Vec<f64> = self.positions[k].iter().zip(&labels).map(|(p, a)| p[c] - a[c]).collect();
            let spec = fft.forward_real(&disp);
            let mut dx = spec.clone();
            let mut dy = spec;
            for j in 0..ny {
                for i in 0..nx {
                    let kx = if 2 * i == nx { 0.0 } else { TAU * signed_index(i, nx) as f64 / self.lx };
                    let ky = if 2 * j == ny { 0.0 } else { TAU * signed_index(j, ny) as f64 / self.ly };
                    dx[j * nx + i] *= Complex64::new(0.0, kx);
                    dy[j * nx + i] *= Complex64::new(0.0, ky);
                }
            }
            grads.push((fft.inverse_real(&dx), fft.inverse_real(&dy)));
        }
        (0..nx * ny)
            .map(|p| {
                let (a, b) = (1.0 + grads[0].0[p], grads[0].1[p]);
                let (c, d) = (grads[1].0[p], 1.0 + grads[1].1[p]);
                (a * d - b * c - 1.0).abs()
            })
            .fold(0.0, f64::max)
    }

    pub fn max_volume_defect(&self) -> f64 {
        (0..self.times.len()).map(|k| self.volume_defect(k)).fold(0.0, f64::max)
    }

    fn cell_area(&self) -> f64 {
        self.lx * self.ly / (self.nx * self.ny) as f64
    }
}

fn rk4<F: Fn([f64; 2], f64) -> [f64; 2]>(f: &F, y: [f64; 2], t: f64, h: f64) -> [f64; 2] {
    let k1 = f(y, t);
    let k2 = f([y[0] + 0.5 * h * k1[0], y[1] + 0.5 * h * k1[1]], t + 0.5 * h);
    let k3 = f([y[0] + 0.5 * h * k2[0], y[1] + 0.5 * h * k2[1]], t + 0.5 * h);
    let k4 = f([y[0] + h * k3[0], y[1] + h * k3[1]], t + h);
    [
        y[0] + h / 6.0 * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0]),
        y[1] + h / 6.0 * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1]),
    ]
}

#[derive(Clone, Debug, PartialEq)]
pub struct ActionReport {
    pub value: f64,
    pub volume_defect: f64,
    pub warning: Option<String>,
}

/// `½∫∫|γ̇|² da dt`: second-order differences for `γ̇` (one-sided at the
/// ends), lattice quadrature in the label, trapezoid in time.
pub fn action(path: &FlowPath) -> Result<ActionReport> {
    let nt = path.times.len();
    if nt < 3 {
        return Err(Error::InvalidArgument("the action needs at least three stored times".into()));
    }
    let t = &path.times;
    let mut density = vec![0.0; nt];
    for (k, dens) in density.iter_mut().enumerate() {
        // three-point weights on a possibly non-uniform stencil
        let (a, b, c) = if k == 0 {
            (0, 1, 2)
        } else if k == nt - 1 {
            (nt - 3, nt - 2, nt - 1)
        } else {
            (k - 1, k, k + 1)
        };
        let w = crate::quad::fornberg(t[k], &[t[a], t[b], t[c]], 1);
        let mut s = 0.0;
        for p in 0..path.positions[k].len() {
            let mut v = [0.0; 2];
            let x0 = path.positions[b][p];
            for (q, idx) in [a, b, c].iter().enumerate() {
                v[0] += w[1][q] * (path.positions[*idx][p][0] - x0[0]);
                v[1] += w[1][q] * (path.positions[*idx][p][1] - x0[1]);
            }
            s += v[0] * v[0] + v[1] * v[1];
        }
        *dens = 0.5 * s * path.cell_area();
    }
    let value = crate::quad::trapezoid(t, &density);
    let volume_defect = path.max_volume_defect();
    let warning = (volume_defect > PATH_VOLUME_TOL)
        .then(|| format!("label-to-position map is not volume preserving (defect {volume_defect:.2e})"));
    Ok(ActionReport {
        value,
        volume_defect,
        warning,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct PerturbConfig {
    pub eps: f64,
    pub steps: usize,
    pub endpoint_tol: f64,
}

impl Default for PerturbConfig {
    fn default() -> Self {
        PerturbConfig {
            eps: 0.1,
            steps: 20,
            endpoint_tol: 1e-10,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Perturbed {
    pub path: FlowPath,
    pub endpoint_drift: f64,
    /// `max |det Dξ_ε - 1|` of the ε-flow at every stored time, measured on
    /// a marker subsample with fourth-order differences.
    pub volume_defect: f64,
}

/// `γ^ε_t = ξ^ε_t ∘ γ_t` with `dξ/dε = v(t, ξ)`; `v` must vanish at the first
/// and last stored times and be divergence free.
pub fn perturb_path<V: Fn(f64, f64, f64) -> (f64, f64)>(path: &FlowPath, v: V, cfg: &PerturbConfig) -> Result<Perturbed> {
    if cfg.steps == 0 || !cfg.eps.is_finite() {
        return Err(Error::InvalidArgument("steps >= 1 and finite eps required".into()));
    }
    let h = cfg.eps / cfg.steps as f64;
    let flow = |t: f64, mut p: [f64; 2]| -> [f64; 2] {
        let f = |y: [f64; 2], _s: f64| {
            let (a, b) = v(t, y[0], y[1]);
            [a, b]
        };
        for s in 0..cfg.steps {
            p = rk4(&f, p, s as f64 * h, h);
        }
        p
    };
    let mut out = path.clone();
    let mut volume_defect = 0.0f64;
    let stride = (path.positions[0].len() / 64).max(1);
    for (k, &t) in path.times.iter().enumerate() {
        for p in out.positions[k].iter_mut() {
            *p = flow(t, *p);
        }
        let d = 1e-3;
        for p in path.positions[k].iter().step_by(stride) {
            let mut jac = [[0.0; 2]; 2];
            for c in 0..2 {
                let shifted = |s: f64| {
                    let mut q = *p;
                    q[c] += s * d;
                    flow(t, q)
                };
                let (m2, m1, p1, p2) = (shifted(-2.0), shifted(-1.0), shifted(1.0), shifted(2.0));
                for r in 0..2 {
                    jac[r][c] = (m2[r] - 8.0 * m1[r] + 8.0 * p1[r] - p2[r]) / (12.0 * d);
                }
            }
            volume_defect = volume_defect.max((jac[0][0] * jac[1][1] - jac[0][1] * jac[1][0] - 1.0).abs());
        }
    }
    let last = path.times.len() - 1;
    let endpoint_drift = [0, last]
        .iter()
        .flat_map(|&k| {
            path.positions[k]
                .iter()
                .zip(&out.positions[k])
                .map(|(a, b)| (a[0] - b[0]).hypot(a[1] - b[1]))
        })
        .fold(0.0, f64::max);
    if endpoint_drift > cfg.endpoint_tol {
        return Err(Error::EndpointDrift { drift: endpoint_drift });
    }
    out.velocity_id = format!("{}+perturbed", path.velocity_id);
    Ok(Perturbed {
        path: out,
        endpoint_drift,
        volume_defect,
    })
}

/// Rectangle `[x_min, x_max] × [y_min, y_max]` restricting the analysis.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Window {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
}

impl Window {
    fn contains(&self, x: f64, y: f64) -> bool {
        x >= self.x_min && x <= self.x_max && y >= self.y_min && y <= self.y_max
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TravelTimeConfig {
    /// Grid cells are used only if they lie inside the window; `None` uses
    /// the whole non-periodic sample box.
    pub window: Option<Window>,
    /// Half-width of the area difference quotient, relative to the level
    /// spacing scale `max ψ - min ψ`.
    pub area_delta: f64,
    /// Levels closer than this (relative to the ψ range) to a critical value
    /// are skipped.
    pub critical_eps: f64,
}

impl Default for TravelTimeConfig {
    fn default() -> Self {
        TravelTimeConfig {
            window: None,
            area_delta: 1e-3,
            critical_eps: 1e-3,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TravelTime {
    pub level: f64,
    /// `∮ dℓ/|∇ψ|` along the level set.
    pub contour: f64,
    /// Centred difference of `Area{ψ ≤ c}`.
    pub area_derivative: f64,
    pub segments: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TravelTimeTable {
    pub rows: Vec<TravelTime>,
    pub skipped: Vec<(f64, String)>,
}

impl TravelTimeTable {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("level,mu_contour,mu_area\n");
        for r in &self.rows {
            s.push_str(&format!("{},{:.12e},{:.12e}\n", r.level, r.contour, r.area_derivative));
        }
        s
    }
}

struct Sampler<'a> {
    psi: &'a Field2D,
    lattice: PeriodicLattice,
    cells: Vec<(usize, usize)>,
}

impl<'a> Sampler<'a> {
    fn new(psi: &'a Field2D, window: Option<Window>) -> Self {
        let g = &psi.grid;
        let (nx, ny) = (g.nx, g.rows());
        let lattice = PeriodicLattice {
            nx,
            ny,
            x0: g.x0,
            y0: g.y0,
            dx: g.dx(),
            dy: g.dy(),
        };
        let mut cells = Vec::new();
        for j in 0..ny - 1 {
            for i in 0..nx - 1 {
                let inside = match window {
                    Some(w) => w.contains(g.x(i), g.y(j)) && w.contains(g.x(i + 1), g.y(j + 1)),
                    // keep clear of the stencil wrap at the box edge
                    None => i >= 2 && j >= 2 && i + 3 < nx && j + 3 < ny,
                };
                if inside {
                    cells.push((i, j));
                }
            }
        }
        Sampler { psi, lattice, cells }
    }

    fn corners(&self, i: usize, j: usize) -> [([f64; 2], f64); 4] {
        let g = &self.psi.grid;
        let nx = g.nx;
        let v = |i: usize, j: usize| self.psi.values[j * nx + i];
        [
            ([g.x(i), g.y(j)], v(i, j)),
            ([g.x(i + 1), g.y(j)], v(i + 1, j)),
            ([g.x(i + 1), g.y(j + 1)], v(i + 1, j + 1)),
            ([g.x(i), g.y(j + 1)], v(i, j + 1)),
        ]
    }

    /// Moves a point onto `{ψ = c}` along the interpolated gradient.
    fn project(&self, mut p: [f64; 2], c: f64) -> [f64; 2] {
        for _ in 0..4 {
            let (v, gx, gy) = self.lattice.value_grad(&self.psi.values, p[0], p[1]);
            let g2 = gx * gx + gy * gy;
            if g2 == 0.0 {
                break;
            }
            let s = (v - c) / g2;
            p = [p[0] - s * gx, p[1] - s * gy];
        }
        p
    }

    /// Marching-squares segments of `{ψ = c}`.
    fn segments(&self, c: f64) -> Vec<([f64; 2], [f64; 2])> {
        let mut out = Vec::new();
        for &(i, j) in &self.cells {
            let q = self.corners(i, j);
            let mut cuts = Vec::with_capacity(4);
            for e in 0..4 {
                let (pa, va) = q[e];
                let (pb, vb) = q[(e + 1) % 4];
                if (va < c) != (vb < c) {
                    let s = (c - va) / (vb - va);
                    cuts.push([pa[0] + s * (pb[0] - pa[0]), pa[1] + s * (pb[1] - pa[1])]);
                }
            }
            match cuts.len() {
                2 => out.push((cuts[0], cuts[1])),
                4 => {
                    // saddle cell: pair by the centre value
                    let centre = 0.25 * q.iter().map(|p| p.1).sum::<f64>();
                    if (centre < c) == (q[0].1 < c) {
                        out.push((cuts[0], cuts[3]));
                        out.push((cuts[1], cuts[2]));
                    } else {
                        out.push((cuts[0], cuts[1]));
                        out.push((cuts[2], cuts[3]));
                    }
                }
                _ => {}
            }
        }
        out
    }

    fn contour_integral(&self, c: f64) -> (f64, usize) {
        let segs = self.segments(c);
        let mut s = 0.0;
        for (a, b) in &segs {
            let (a, b) = (self.project(*a, c), self.project(*b, c));
            let mid = self.project([0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1])], c);
            // arc through a, mid, b: two chords
            let len = (mid[0] - a[0]).hypot(mid[1] - a[1]) + (b[0] - mid[0]).hypot(b[1] - mid[1]);
            let (_, gx, gy) = self.lattice.value_grad(&self.psi.values, mid[0], mid[1]);
            s += len / gx.hypot(gy);
        }
        (s, segs.len())
    }

    /// Crossing of `{ψ = c}` on the grid edge `pa → pb`: linear guess refined
    /// with the cubic interpolant.
    fn edge_cut(&self, pa: [f64; 2], va: f64, pb: [f64; 2], vb: f64, c: f64) -> [f64; 2] {
        let mut s = (c - va) / (vb - va);
        let e = [pb[0] - pa[0], pb[1] - pa[1]];
        for _ in 0..4 {
            let p = [pa[0] + s * e[0], pa[1] + s * e[1]];
            let (v, gx, gy) = self.lattice.value_grad(&self.psi.values, p[0], p[1]);
            let d = gx * e[0] + gy * e[1];
            if d == 0.0 {
                break;
            }
            s = (s - (v - c) / d).clamp(0.0, 1.0);
        }
        [pa[0] + s * e[0], pa[1] + s * e[1]]
    }

    /// `Area{ψ ≤ c}` over the analysed cells: each cell is clipped at the
    /// interpolated level crossings, and the lens between a chord and the
    /// level curve is added as a parabolic segment (`⅔·chord·sagitta`).
    fn sublevel_area(&self, c: f64) -> f64 {
        let mut area = 0.0;
        for &(i, j) in &self.cells {
            let q = self.corners(i, j);
            let mut poly: Vec<[f64; 2]> = Vec::with_capacity(8);
            let mut cuts = Vec::with_capacity(4);
            for e in 0..4 {
                let (pa, va) = q[e];
                let (pb, vb) = q[(e + 1) % 4];
                if va <= c {
                    poly.push(pa);
                }
                if (va <= c) != (vb <= c) {
                    let p = self.edge_cut(pa, va, pb, vb, c);
                    poly.push(p);
                    cuts.push(p);
                }
            }
            let n = poly.len();
            if n >= 3 {
                let mut a = 0.0;
                for k in 0..n {
                    let (p, r) = (poly[k], poly[(k + 1) % n]);
                    a += p[0] * r[1] - r[0] * p[1];
                }
                area += 0.5 * a.abs();
            }
            if cuts.len() == 2 {
                let mid = [0.5 * (cuts[0][0] + cuts[1][0]), 0.5 * (cuts[0][1] + cuts[1][1])];
                let on = self.project(mid, c);
                let chord = (cuts[1][0] - cuts[0][0]).hypot(cuts[1][1] - cuts[0][1]);
                let lens = 2.0 / 3.0 * chord * (on[0] - mid[0]).hypot(on[1] - mid[1]);
                let inside = self.lattice.value(&self.psi.values, mid[0], mid[1]) <= c;
                area += if inside { lens } else { -lens };
            }
        }
        area
    }

    /// Values at grid extrema and saddles of the analysed region.
    fn critical_values(&self) -> Vec<f64> {
        let g = &self.psi.grid;
        let nx = g.nx;
        let v = |i: usize, j: usize| self.psi.values[j * nx + i];
        let mut out = Vec::new();
        for &(i, j) in &self.cells {
            if i == 0 || j == 0 {
                continue;
            }
            let c = v(i, j);
            let ring = [
                v(i - 1, j - 1),
                v(i, j - 1),
                v(i + 1, j - 1),
                v(i + 1, j),
                v(i + 1, j + 1),
                v(i, j + 1),
                v(i - 1, j + 1),
                v(i - 1, j),
            ];
            let changes = (0..8).filter(|&k| (ring[k] > c) != (ring[(k + 1) % 8] > c)).count();
            if ring.iter().all(|&r| r > c) || ring.iter().all(|&r| r < c) || changes >= 4 {
                out.push(c);
            }
        }
        out
    }
}

/// Travel time `μ(c)` per level, by the contour integral and by the area
/// derivative. Levels near a critical value or outside the sampled range are
/// skipped with a note.
pub fn travel_time(psi: &Field2D, levels: &[f64], cfg: &TravelTimeConfig) -> Result<TravelTimeTable> {
    psi.check_finite()?;
    if !(cfg.area_delta > 0.0) || !(cfg.critical_eps >= 0.0) {
        return Err(Error::InvalidArgument("area_delta must be positive, critical_eps non-negative".into()));
    }
    let s = Sampler::new(psi, cfg.window);
    if s.cells.is_empty() {
        return Err(Error::InvalidArgument("the analysis window contains no grid cells".into()));
    }
    let vals: Vec<f64> = s
        .cells
        .iter()
        .flat_map(|&(i, j)| s.corners(i, j).map(|p| p.1))
        .collect();
    let (lo, hi) = vals.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    let range = hi - lo;
    let crit = s.critical_values();
    let delta = cfg.area_delta * range;
    let mut table = TravelTimeTable {
        rows: Vec::new(),
        skipped: Vec::new(),
    };
    for &c in levels {
        if !(c - delta > lo && c + delta < hi) {
            table.skipped.push((c, "level outside the sampled range".into()));
            continue;
        }
        if let Some(v) = crit.iter().find(|&&v| (v - c).abs() <= cfg.critical_eps * range + delta) {
            table.skipped.push((c, format!("within tolerance of the critical value {v:.6}")));
            continue;
        }
        let (contour, segments) = s.contour_integral(c);
        let area_derivative = (s.sublevel_area(c + delta) - s.sublevel_area(c - delta)) / (2.0 * delta);
        table.rows.push(TravelTime {
            level: c,
            contour,
            area_derivative,
            segments,
        });
    }
    Ok(table)
}

/// `(max μ - min μ)/mean μ` over the analysed levels (contour values).
pub fn isochronality_defect(psi: &Field2D, levels: &[f64], cfg: &TravelTimeConfig) -> Result<f64> {
    let t = travel_time(psi, levels, cfg)?;
    if t.rows.len() < 2 {
        return Err(Error::InvalidArgument(format!(
            "need two analysable levels, got {} ({} skipped)",
            t.rows.len(),
            t.skipped.len()
        )));
    }
    let mu: Vec<f64> = t.rows.iter().map(|r| r.contour).collect();
    let (lo, hi) = mu.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    Ok((hi - lo) / (mu.iter().sum::<f64>() / mu.len() as f64))
}

/// Pressure of the steady cellular flow `ψ = sin x sin y`,
/// `p = -½|∇ψ|² + G(ψ)` with `G(ψ) = -ψ²`, i.e. `¼(cos 2x + cos 2y)` up to a
/// constant.
pub fn cellular_pressure(x: f64, y: f64) -> f64 {
    0.25 * ((2.0 * x).cos() + (2.0 * y).cos())
}

/// Largest eigenvalue of the pressure Hessian sampled on an `n × n` grid of
/// the period cell, by centred differences of `p` with spacing `h`.
pub fn hessian_sup<P: Fn(f64, f64) -> f64>(p: P, lx: f64, ly: f64, n: usize, h: f64) -> f64 {
    let mut k = f64::NEG_INFINITY;
    for j in 0..n {
        for i in 0..n {
            let (x, y) = (lx * i as f64 / n as f64, ly * j as f64 / n as f64);
            let pxx = (p(x + h, y) - 2.0 * p(x, y) + p(x - h, y)) / (h * h);
            let pyy = (p(x, y + h) - 2.0 * p(x, y) + p(x, y - h)) / (h * h);
            let pxy = (p(x + h, y + h) - p(x + h, y - h) - p(x - h, y + h) + p(x - h, y - h)) / (4.0 * h * h);
            let m = 0.5 * (pxx + pyy);
            let r = (0.25 * (pxx - pyy).powi(2) + pxy * pxy).sqrt();
            k = k.max(m + r);
        }
    }
    k
}
