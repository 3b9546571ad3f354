//! Dealiased pseudospectral solver for 2D incompressible Euler and
//! Navier–Stokes in vorticity form on the flat torus and the periodic channel.
//!
//! The channel `[0,Lx) × [0,H]` is handled by odd reflection across the bottom
//! wall onto a torus of height `2H`; the stream function is then odd in y and
//! vanishes on both walls. A uniform background flow `U + S·(y - y0)` (Couette
//! shear in the channel, harmonic mean velocity on the torus) is advected
//! analytically and never touches the spectral state.

mod diagnostics;
mod tracers;

pub use diagnostics::{
    diagnostics, fit_growth_envelope, grad_max, holder_quotient, lp_norm, spectral_max_abs, Casimir,
    DiagnosticsConfig, EnvelopeFit,
};
pub use tracers::{
    advect_curve, advect_markers, curve_distance, CurveDistance, CurveHistory, CurveTracker,
    VelocitySnapshot,
};

use crate::error::{Error, Result};
use crate::fft::{signed_index, two_thirds_cutoff, Fft2};
use crate::grid::{Field2D, Grid2D};
use num_complex::Complex64;
use std::f64::consts::PI;

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Dealias {
    TwoThirds,
    None,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SolverConfig {
    pub dt: f64,
    pub nu: f64,
    pub dealias: Dealias,
    pub end_time: f64,
    pub snapshot_every: usize,
    /// Abort once max|ω| exceeds this multiple of its initial value.
    pub blowup_factor: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            dt: 1e-3,
            nu: 0.0,
            dealias: Dealias::TwoThirds,
            end_time: 1.0,
            snapshot_every: 100,
            blowup_factor: 1e3,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::InvalidArgument(format!("dt must be positive, got {}", self.dt)));
        }
        if !(self.nu >= 0.0 && self.nu.is_finite()) {
            return Err(Error::InvalidArgument(format!("nu must be >= 0, got {}", self.nu)));
        }
        if !(self.end_time >= 0.0 && self.end_time.is_finite()) {
            return Err(Error::InvalidArgument("end_time must be >= 0".into()));
        }
        if self.snapshot_every == 0 {
            return Err(Error::InvalidArgument("snapshot_every must be >= 1".into()));
        }
        if self.blowup_factor <= 1.0 {
            return Err(Error::InvalidArgument("blowup_factor must exceed 1".into()));
        }
        Ok(())
    }

    pub fn steps(&self) -> usize {
        (self.end_time / self.dt).round() as usize
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EulerState {
    /// Dynamical vorticity (mean-free on the torus, zero on channel walls).
    pub omega: Field2D,
    pub t: f64,
    /// Harmonic (mean) velocity on the torus; uniform drift in the channel.
    pub mean_velocity: [f64; 2],
    /// Channel only: background velocity `(S·(y - y0), 0)` with vorticity `-S`.
    pub background_shear: f64,
    /// Running `∫ max|ω| dt` (trapezoid over accepted steps).
    pub bkm_integral: f64,
}

impl EulerState {
    pub fn new(omega: Field2D) -> Result<Self> {
        let s = EulerState {
            omega,
            t: 0.0,
            mean_velocity: [0.0, 0.0],
            background_shear: 0.0,
            bkm_integral: 0.0,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn with_mean_velocity(mut self, u: [f64; 2]) -> Self {
        self.mean_velocity = u;
        self
    }

    pub fn with_background_shear(mut self, s: f64) -> Self {
        self.background_shear = s;
        self
    }

    pub fn validate(&self) -> Result<()> {
        self.omega.check_finite()?;
        if !self.t.is_finite() {
            return Err(Error::NonFinite);
        }
        check_representable(&self.omega)?;
        if self.omega.grid.is_channel() {
            if self.mean_velocity[1] != 0.0 {
                return Err(Error::InvalidArgument(
                    "channel flow cannot carry a wall-normal mean velocity".into(),
                ));
            }
        } else if self.background_shear != 0.0 {
            return Err(Error::InvalidArgument(
                "background shear is only defined in the channel".into(),
            ));
        }
        Ok(())
    }

    /// Vorticity including the background shear contribution.
    pub fn total_vorticity(&self) -> Field2D {
        let mut f = self.omega.clone();
        if self.background_shear != 0.0 {
            for v in f.values.iter_mut() {
                *v -= self.background_shear;
            }
        }
        f
    }
}

fn check_representable(omega: &Field2D) -> Result<()> {
    let scale = omega.max_abs().max(1.0);
    let g = omega.grid;
    if g.is_channel() {
        let nx = g.nx;
        let top = g.ny * nx;
        let wall = omega.values[..nx]
            .iter()
            .chain(&omega.values[top..top + nx])
            .fold(0.0f64, |m, v| m.max(v.abs()));
        if wall > 1e-10 * scale {
            return Err(Error::NotSineRepresentable { wall });
        }
    } else {
        let mean = omega.mean();
        if mean.abs() > 1e-10 * scale {
            return Err(Error::NotMeanFree { mean });
        }
    }
    Ok(())
}

/// Stream function and velocity `u = ∇⊥ψ = (-∂yψ, ∂xψ)` of a vorticity field.
#[derive(Clone, Debug, PartialEq)]
pub struct VelocityField {
    pub psi: Field2D,
    pub u: Field2D,
    pub v: Field2D,
}

/// Wavenumber tables for one computational grid.
#[derive(Clone, Debug)]
pub(crate) struct Operators {
    pub nx: usize,
    pub nye: usize,
    /// Derivative wavenumbers (Nyquist zeroed).
    pub kx: Vec<f64>,
    pub ky: Vec<f64>,
    pub k2: Vec<f64>,
    pub mask: Vec<bool>,
    /// Height above the bottom wall for each computational row.
    pub eta: Vec<f64>,
    pub channel: bool,
}

impl Operators {
    pub fn new(grid: &Grid2D, dealias: Dealias) -> Self {
        let nx = grid.nx;
        let nye = grid.ext_rows();
        let (lx, lye) = (grid.lx(), grid.ext_ly());
        let kx_full: Vec<f64> = (0..nx).map(|i| 2.0 * PI / lx * signed_index(i, nx) as f64).collect();
        let ky_full: Vec<f64> = (0..nye).map(|j| 2.0 * PI / lye * signed_index(j, nye) as f64).collect();
        let kx: Vec<f64> = (0..nx)
            .map(|i| if 2 * i == nx { 0.0 } else { kx_full[i] })
            .collect();
        let ky: Vec<f64> = (0..nye)
            .map(|j| if 2 * j == nye { 0.0 } else { ky_full[j] })
            .collect();
        let (cx, cy) = (two_thirds_cutoff(nx), two_thirds_cutoff(nye));
        let mut k2 = vec![0.0; nx * nye];
        let mut mask = vec![true; nx * nye];
        for j in 0..nye {
            for i in 0..nx {
                let p = j * nx + i;
                k2[p] = kx_full[i] * kx_full[i] + ky_full[j] * ky_full[j];
                if dealias == Dealias::TwoThirds {
                    mask[p] = signed_index(i, nx).abs() <= cx && signed_index(j, nye).abs() <= cy;
                }
            }
        }
        let dy = grid.dy();
        let eta = (0..nye)
            .map(|j| {
                if grid.is_channel() && j > grid.ny {
                    (2 * grid.ny - j) as f64 * dy
                } else {
                    j as f64 * dy
                }
            })
            .collect();
        Operators {
            nx,
            nye,
            kx,
            ky,
            k2,
            mask,
            eta,
            channel: grid.is_channel(),
        }
    }

    /// Enforces the symmetry of the odd-in-y extension.
    pub fn antisymmetrize(&self, c: &mut [Complex64]) {
        if !self.channel {
            return;
        }
        let (nx, nye) = (self.nx, self.nye);
        for j in 0..=nye / 2 {
            let jm = (nye - j) % nye;
            for i in 0..nx {
                let (p, q) = (j * nx + i, jm * nx + i);
                if p == q {
                    c[p] = Complex64::new(0.0, 0.0);
                } else {
                    let a = 0.5 * (c[p] - c[q]);
                    c[p] = a;
                    c[q] = -a;
                }
            }
        }
    }

    pub fn psi_hat(&self, w: &[Complex64]) -> Vec<Complex64> {
        w.iter()
            .zip(&self.k2)
            .map(|(&c, &k2)| if k2 == 0.0 { Complex64::new(0.0, 0.0) } else { -c / k2 })
            .collect()
    }
}

/// Inverts `Δψ = ω` and returns `ψ` and `u = ∇⊥ψ`.
pub fn biot_savart(omega: &Field2D) -> Result<VelocityField> {
    omega.check_finite()?;
    check_representable(omega)?;
    let grid = omega.grid;
    let ops = Operators::new(&grid, Dealias::None);
    let mut fft = Fft2::new(ops.nx, ops.nye);
    let w = fft.forward_real(&omega.extended());
    let psi = ops.psi_hat(&w);
    let mut uh = vec![Complex64::new(0.0, 0.0); psi.len()];
    let mut vh = uh.clone();
    for j in 0..ops.nye {
        for i in 0..ops.nx {
            let p = j * ops.nx + i;
            uh[p] = -I * ops.ky[j] * psi[p];
            vh[p] = I * ops.kx[i] * psi[p];
        }
    }
    let to_field = |c: &[Complex64], fft: &mut Fft2| {
        let ext = fft.inverse_real(c);
        Field2D::from_extended(grid, &ext)
    };
    Ok(VelocityField {
        psi: to_field(&psi, &mut fft),
        u: to_field(&uh, &mut fft),
        v: to_field(&vh, &mut fft),
    })
}

/// Spectral Laplacian. Channel fields are treated through their odd extension,
/// so they must vanish on the walls.
pub fn laplacian(f: &Field2D) -> Field2D {
    let grid = f.grid;
    let ops = Operators::new(&grid, Dealias::None);
    let mut fft = Fft2::new(ops.nx, ops.nye);
    let mut c = fft.forward_real(&f.extended());
    for (v, k2) in c.iter_mut().zip(&ops.k2) {
        *v *= -k2;
    }
    Field2D::from_extended(grid, &fft.inverse_real(&c))
}

/// Spectral gradient `(∂x f, ∂y f)`.
pub fn gradient(f: &Field2D) -> (Field2D, Field2D) {
    let grid = f.grid;
    let ops = Operators::new(&grid, Dealias::None);
    let mut fft = Fft2::new(ops.nx, ops.nye);
    let c = fft.forward_real(&f.extended());
    let mut gx = c.clone();
    let mut gy = c;
    for j in 0..ops.nye {
        for i in 0..ops.nx {
            let p = j * ops.nx + i;
            gx[p] *= I * ops.kx[i];
            gy[p] *= I * ops.ky[j];
        }
    }
    (
        Field2D::from_extended(grid, &fft.inverse_real(&gx)),
        Field2D::from_extended(grid, &fft.inverse_real(&gy)),
    )
}

/// Torus pressure from `-Δp = ∂i∂j(u_i u_j)`, normalised to zero mean.
pub fn pressure(state: &EulerState) -> Result<Field2D> {
    let grid = state.omega.grid;
    if grid.is_channel() {
        return Err(Error::InvalidArgument("pressure is only implemented on the torus".into()));
    }
    let vel = biot_savart(&state.omega)?;
    let [mu, mv] = state.mean_velocity;
    let n = grid.len();
    let mut uu = vec![0.0; n];
    let mut uv = vec![0.0; n];
    let mut vv = vec![0.0; n];
    for p in 0..n {
        let (a, b) = (vel.u.values[p] + mu, vel.v.values[p] + mv);
        uu[p] = a * a;
        uv[p] = a * b;
        vv[p] = b * b;
    }
    let ops = Operators::new(&grid, Dealias::None);
    let mut fft = Fft2::new(ops.nx, ops.nye);
    let (cu, cuv, cv) = (fft.forward_real(&uu), fft.forward_real(&uv), fft.forward_real(&vv));
    let mut ph = vec![Complex64::new(0.0, 0.0); n];
    for j in 0..ops.nye {
        for i in 0..ops.nx {
            let p = j * ops.nx + i;
            let k2 = ops.k2[p];
            if k2 > 0.0 {
                let (kx, ky) = (ops.kx[i], ops.ky[j]);
                ph[p] = -(kx * kx * cu[p] + 2.0 * kx * ky * cuv[p] + ky * ky * cv[p]) / k2;
            }
        }
    }
    Ok(Field2D::from_extended(grid, &fft.inverse_real(&ph)))
}

/// CFL or other non-fatal condition recorded during a run.
#[derive(Clone, Debug, PartialEq)]
pub struct SolverWarning {
    pub t: f64,
    pub message: String,
}

/// Tendency `∂tω` together with the CFL number of the evaluating state.
#[derive(Clone, Debug, PartialEq)]
pub struct Tendency {
    pub field: Field2D,
    pub cfl: f64,
    pub warning: Option<SolverWarning>,
}

pub struct EulerSolver {
    grid: Grid2D,
    config: SolverConfig,
    ops: Operators,
    fft: Fft2,
    what: Vec<Complex64>,
    t: f64,
    steps_taken: usize,
    mean_velocity: [f64; 2],
    shear: f64,
    bkm: f64,
    last_max: f64,
    threshold: f64,
    warnings: Vec<SolverWarning>,
    buf_a: Vec<Complex64>,
    buf_b: Vec<Complex64>,
}

impl EulerSolver {
    pub fn new(state: &EulerState, config: SolverConfig) -> Result<Self> {
        config.validate()?;
        state.validate()?;
        let grid = state.omega.grid;
        let ops = Operators::new(&grid, config.dealias);
        let mut fft = Fft2::new(ops.nx, ops.nye);
        let mut what = fft.forward_real(&state.omega.extended());
        for (c, &m) in what.iter_mut().zip(&ops.mask) {
            if !m {
                *c = Complex64::new(0.0, 0.0);
            }
        }
        if !grid.is_channel() {
            what[0] = Complex64::new(0.0, 0.0);
        }
        ops.antisymmetrize(&mut what);
        let n = what.len();
        let mut s = EulerSolver {
            grid,
            config,
            ops,
            fft,
            what,
            t: state.t,
            steps_taken: 0,
            mean_velocity: state.mean_velocity,
            shear: state.background_shear,
            bkm: state.bkm_integral,
            last_max: 0.0,
            threshold: 0.0,
            warnings: Vec::new(),
            buf_a: vec![Complex64::new(0.0, 0.0); n],
            buf_b: vec![Complex64::new(0.0, 0.0); n],
        };
        s.last_max = s.max_total_vorticity();
        s.threshold = s.config.blowup_factor * s.last_max;
        Ok(s)
    }

    pub fn grid(&self) -> Grid2D {
        self.grid
    }

    pub fn config(&self) -> &SolverConfig {
        &self.config
    }

    pub fn time(&self) -> f64 {
        self.t
    }

    pub fn steps_taken(&self) -> usize {
        self.steps_taken
    }

    pub fn warnings(&self) -> &[SolverWarning] {
        &self.warnings
    }

    fn max_total_vorticity(&mut self) -> f64 {
        let ext = self.fft.inverse_real(&self.what);
        let nrows = self.grid.rows();
        ext[..nrows * self.grid.nx]
            .iter()
            .fold(0.0f64, |m, &v| m.max((v - self.shear).abs()))
    }

    /// Dealiased advection term `-(u + U)·∇ω` in spectral space; returns the
    /// maximal velocity component magnitude.
    fn nonlinear(&mut self, w: &[Complex64], out: &mut [Complex64]) -> f64 {
        let (nx, nye) = (self.ops.nx, self.ops.nye);
        for j in 0..nye {
            let ky = self.ops.ky[j];
            for i in 0..nx {
                let p = j * nx + i;
                let kx = self.ops.kx[i];
                let k2 = self.ops.k2[p];
                let psi = if k2 == 0.0 { Complex64::new(0.0, 0.0) } else { -w[p] / k2 };
                let uh = -I * ky * psi;
                let vh = I * kx * psi;
                self.buf_a[p] = uh + I * vh;
                let wx = I * kx * w[p];
                let wy = I * ky * w[p];
                self.buf_b[p] = wx + I * wy;
            }
        }
        self.fft.inverse(&mut self.buf_a);
        self.fft.inverse(&mut self.buf_b);
        let [mu, mv] = self.mean_velocity;
        let mut vmax = 0.0f64;
        for j in 0..nye {
            let ub = mu + self.shear * self.ops.eta[j];
            for i in 0..nx {
                let p = j * nx + i;
                let u = self.buf_a[p].re + ub;
                let v = self.buf_a[p].im + mv;
                vmax = vmax.max(u.abs()).max(v.abs());
                let n = -(u * self.buf_b[p].re + v * self.buf_b[p].im);
                out[p] = Complex64::new(n, 0.0);
            }
        }
        self.fft.forward(out);
        for (c, &m) in out.iter_mut().zip(&self.ops.mask) {
            if !m {
                *c = Complex64::new(0.0, 0.0);
            }
        }
        if !self.ops.channel {
            out[0] = Complex64::new(0.0, 0.0);
        }
        self.ops.antisymmetrize(out);
        vmax
    }

    fn cfl_number(&self, vmax: f64) -> f64 {
        self.config.dt * vmax / self.grid.dx().min(self.grid.dy())
    }

    /// Full tendency `-(u+U)·∇ω + νΔω` of the current state.
    pub fn tendency(&mut self) -> Tendency {
        let w = self.what.clone();
        let mut out = vec![Complex64::new(0.0, 0.0); w.len()];
        let vmax = self.nonlinear(&w, &mut out);
        for p in 0..out.len() {
            out[p] -= self.config.nu * self.ops.k2[p] * w[p];
        }
        let ext = self.fft.inverse_real(&out);
        let cfl = self.cfl_number(vmax);
        let warning = (cfl >= 1.0).then(|| SolverWarning {
            t: self.t,
            message: format!("CFL number {cfl:.3} >= 1"),
        });
        Tendency {
            field: Field2D::from_extended(self.grid, &ext),
            cfl,
            warning,
        }
    }

    /// One integrating-factor RK4 step.
    pub fn step(&mut self) -> Result<()> {
        let dt = self.config.dt;
        let n = self.what.len();
        let nu = self.config.nu;
        let (e, eh): (Vec<f64>, Vec<f64>) = if nu > 0.0 {
            self.ops
                .k2
                .iter()
                .map(|k2| ((-nu * k2 * dt).exp(), (-nu * k2 * dt * 0.5).exp()))
                .unzip()
        } else {
            (vec![1.0; n], vec![1.0; n])
        };
        let w0 = self.what.clone();
        let zero = Complex64::new(0.0, 0.0);
        let mut a = vec![zero; n];
        let mut b = vec![zero; n];
        let mut c = vec![zero; n];
        let mut d = vec![zero; n];
        let vmax = self.nonlinear(&w0, &mut a);
        let w1: Vec<Complex64> = (0..n).map(|p| eh[p] * (w0[p] + 0.5 * dt * a[p])).collect();
        self.nonlinear(&w1, &mut b);
        let w2: Vec<Complex64> = (0..n).map(|p| eh[p] * w0[p] + 0.5 * dt * b[p]).collect();
        self.nonlinear(&w2, &mut c);
        let w3: Vec<Complex64> = (0..n).map(|p| e[p] * w0[p] + dt * eh[p] * c[p]).collect();
        self.nonlinear(&w3, &mut d);
        for p in 0..n {
            self.what[p] = e[p] * w0[p] + dt / 6.0 * (e[p] * a[p] + 2.0 * eh[p] * (b[p] + c[p]) + d[p]);
        }
        self.ops.antisymmetrize(&mut self.what);
        let cfl = self.cfl_number(vmax);
        if cfl >= 1.0 {
            self.warnings.push(SolverWarning {
                t: self.t,
                message: format!("CFL number {cfl:.3} >= 1"),
            });
        }
        let t_new = self.t + dt;
        let m = self.max_total_vorticity();
        if !m.is_finite() || m > self.threshold {
            return Err(Error::ResolutionExceeded {
                t: t_new,
                max: m,
                threshold: self.threshold,
            });
        }
        self.bkm += 0.5 * dt * (self.last_max + m);
        self.last_max = m;
        self.steps_taken += 1;
        self.t = t_new;
        Ok(())
    }

    pub fn state(&mut self) -> EulerState {
        let ext = self.fft.inverse_real(&self.what);
        EulerState {
            omega: Field2D::from_extended(self.grid, &ext),
            t: self.t,
            mean_velocity: self.mean_velocity,
            background_shear: self.shear,
            bkm_integral: self.bkm,
        }
    }

    /// Total velocity (including background) on the computational grid.
    pub fn velocity_snapshot(&mut self) -> VelocitySnapshot {
        let psi = self.ops.psi_hat(&self.what);
        let (nx, nye) = (self.ops.nx, self.ops.nye);
        let mut uv = vec![Complex64::new(0.0, 0.0); nx * nye];
        for j in 0..nye {
            for i in 0..nx {
                let p = j * nx + i;
                uv[p] = -I * self.ops.ky[j] * psi[p] + I * (I * self.ops.kx[i] * psi[p]);
            }
        }
        self.fft.inverse(&mut uv);
        let [mu, mv] = self.mean_velocity;
        let mut u = vec![0.0; nx * nye];
        let mut v = vec![0.0; nx * nye];
        for j in 0..nye {
            let ub = mu + self.shear * self.ops.eta[j];
            for i in 0..nx {
                let p = j * nx + i;
                u[p] = uv[p].re + ub;
                v[p] = uv[p].im + mv;
            }
        }
        VelocitySnapshot::new(self.grid, self.t, u, v)
    }

    /// Runs to `config.end_time`, invoking `on_snapshot` at the start, every
    /// `snapshot_every` steps and at the final step.
    pub fn run<F>(&mut self, mut on_snapshot: F) -> Result<()>
    where
        F: FnMut(&mut EulerSolver) -> Result<()>,
    {
        let steps = self.config.steps();
        on_snapshot(self)?;
        for k in 1..=steps {
            self.step()?;
            if k % self.config.snapshot_every == 0 || k == steps {
                on_snapshot(self)?;
            }
        }
        Ok(())
    }
}

/// Stateless tendency evaluation.
pub fn tendency(state: &EulerState, config: &SolverConfig) -> Result<Tendency> {
    let mut s = EulerSolver::new(state, config.clone())?;
    Ok(s.tendency())
}

/// Stateless single step.
pub fn step(state: &EulerState, config: &SolverConfig) -> Result<EulerState> {
    let mut s = EulerSolver::new(state, config.clone())?;
    s.step()?;
    Ok(s.state())
}
