//! Pressureless Euler (multidimensional Burgers) with nilpotent gradient data.
//! Along the straight characteristics `Φ_t(x) = x + t u₀(x)` the gradient is
//! `A(t) = A₀(I + tA₀)⁻¹`, a finite Neumann sum when `A₀` is nilpotent.
//!
//! Matrix norms are max absolute row sums throughout.

use crate::banded::DenseLu;
use crate::error::{Error, Result};
use std::fmt::Write as _;
use std::sync::Arc;

pub type Mat = Vec<Vec<f64>>;

pub fn identity(d: usize) -> Mat {
    (0..d)
        .map(|i| (0..d).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
        .collect()
}

pub fn matmul(a: &Mat, b: &Mat) -> Mat {
    let (n, k, m) = (a.len(), b.len(), b[0].len());
    let mut c = vec![vec![0.0; m]; n];
    for i in 0..n {
        for l in 0..k {
            let x = a[i][l];
            if x != 0.0 {
                for j in 0..m {
                    c[i][j] += x * b[l][j];
                }
            }
        }
    }
    c
}

pub fn transpose(a: &Mat) -> Mat {
    (0..a[0].len()).map(|j| a.iter().map(|r| r[j]).collect()).collect()
}

pub fn row_sum_norm(a: &Mat) -> f64 {
    a.iter()
        .map(|r| r.iter().map(|x| x.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

fn max_diff(a: &Mat, b: &Mat) -> f64 {
    a.iter()
        .zip(b)
        .flat_map(|(r, s)| r.iter().zip(s).map(|(x, y)| (x - y).abs()))
        .fold(0.0, f64::max)
}

/// Determinant by partial-pivot elimination.
pub fn det(a: &Mat) -> f64 {
    let n = a.len();
    let mut m = a.clone();
    let mut d = 1.0;
    for k in 0..n {
        let p = (k..n).max_by(|&i, &j| m[i][k].abs().total_cmp(&m[j][k].abs())).unwrap();
        if m[p][k] == 0.0 {
            return 0.0;
        }
        if p != k {
            m.swap(p, k);
            d = -d;
        }
        d *= m[k][k];
        for i in k + 1..n {
            let f = m[i][k] / m[k][k];
            for j in k..n {
                m[i][j] -= f * m[k][j];
            }
        }
    }
    d
}

/// `u(s) = amp·sin(freq·s + phase)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Sine {
    pub amp: f64,
    pub freq: f64,
    pub phase: f64,
}

impl Sine {
    /// `-sin s`: slope −1 at the origin and `|u'| ≤ 1`.
    pub const NEG_SIN: Sine = Sine {
        amp: -1.0,
        freq: 1.0,
        phase: 0.0,
    };

    pub fn value(&self, s: f64) -> f64 {
        self.amp * (self.freq * s + self.phase).sin()
    }

    pub fn derivative(&self, s: f64) -> f64 {
        self.amp * self.freq * (self.freq * s + self.phase).cos()
    }
}

type VelocityFn = Arc<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>;
type JacobianFn = Arc<dyn Fn(&[f64]) -> Mat + Send + Sync>;

/// Initial velocity with (expected) nilpotent gradient.
#[derive(Clone)]
pub enum NilpotentFlow {
    /// `u_i = c_i(x_{i+1})` for `i < d-1`, `u_{d-1} = 0`: strictly upper
    /// triangular gradient.
    Chain { components: Vec<Sine> },
    /// Arbitrary field with an analytic Jacobian; nilpotency is only checked
    /// on samples.
    General {
        d: usize,
        velocity: VelocityFn,
        jacobian: JacobianFn,
    },
}

impl std::fmt::Debug for NilpotentFlow {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            NilpotentFlow::Chain { components } => f.debug_struct("Chain").field("components", components).finish(),
            NilpotentFlow::General { d, .. } => f.debug_struct("General").field("d", d).finish_non_exhaustive(),
        }
    }
}

impl NilpotentFlow {
    /// Chain of length `d` with every component `-sin`.
    pub fn chain(d: usize) -> Result<Self> {
        Self::chain_from(vec![Sine::NEG_SIN; d.saturating_sub(1)])
    }

    pub fn chain_from(components: Vec<Sine>) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::InvalidArgument("a chain needs d >= 2".into()));
        }
        if components.iter().any(|c| !(c.amp.is_finite() && c.freq.is_finite() && c.phase.is_finite())) {
            return Err(Error::NonFinite);
        }
        Ok(NilpotentFlow::Chain { components })
    }

    pub fn general(
        d: usize,
        velocity: impl Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static,
        jacobian: impl Fn(&[f64]) -> Mat + Send + Sync + 'static,
    ) -> Self {
        NilpotentFlow::General {
            d,
            velocity: Arc::new(velocity),
            jacobian: Arc::new(jacobian),
        }
    }

    /// `(x₂, -x₁, 0, …)`: gradient with a rotation block, not nilpotent.
    pub fn rotation(d: usize) -> Self {
        Self::general(
            d,
            move |x| {
                let mut u = vec![0.0; d];
                u[0] = x[1];
                u[1] = -x[0];
                u
            },
            move |_| {
                let mut a = vec![vec![0.0; d]; d];
                a[0][1] = 1.0;
                a[1][0] = -1.0;
                a
            },
        )
    }

    /// `x ↦ Q u₀(Qᵀx)` for orthogonal `Q`; the gradient is `Q A₀ Qᵀ`.
    pub fn conjugated(&self, q: Mat) -> Self {
        let d = self.dim();
        let inner = self.clone();
        let inner2 = self.clone();
        let qt = transpose(&q);
        let (q1, qt1, q2, qt2) = (q.clone(), qt.clone(), q, qt);
        let apply = |m: &Mat, v: &[f64]| -> Vec<f64> { m.iter().map(|r| r.iter().zip(v).map(|(a, b)| a * b).sum()).collect() };
        Self::general(
            d,
            move |x| apply(&q1, &inner.velocity(&apply(&qt1, x))),
            move |x| matmul(&matmul(&q2, &inner2.jacobian(&apply(&qt2, x))), &qt2),
        )
    }

    pub fn dim(&self) -> usize {
        match self {
            NilpotentFlow::Chain { components } => components.len() + 1,
            NilpotentFlow::General { d, .. } => *d,
        }
    }

    pub fn velocity(&self, x: &[f64]) -> Vec<f64> {
        match self {
            NilpotentFlow::Chain { components } => {
                let mut u: Vec<f64> = components.iter().enumerate().map(|(i, c)| c.value(x[i + 1])).collect();
                u.push(0.0);
                u
            }
            NilpotentFlow::General { velocity, .. } => velocity(x),
        }
    }

    /// `A₀ = ∇u₀(x)`, `A₀[i][j] = ∂_j u_i`.
    pub fn jacobian(&self, x: &[f64]) -> Mat {
        match self {
            NilpotentFlow::Chain { components } => {
                let d = components.len() + 1;
                let mut a = vec![vec![0.0; d]; d];
                for (i, c) in components.iter().enumerate() {
                    a[i][i + 1] = c.derivative(x[i + 1]);
                }
                a
            }
            NilpotentFlow::General { jacobian, .. } => jacobian(x),
        }
    }
}

/// Deterministic low-discrepancy points in `[0, 2π)^d` (Kronecker sequence
/// with the generalised golden ratio), preceded by the origin.
pub fn sample_points(d: usize, count: usize) -> Vec<Vec<f64>> {
    // φ_d solves x^{d+1} = x + 1
    let mut phi = 2.0f64;
    for _ in 0..64 {
        phi = (1.0 + phi).powf(1.0 / (d as f64 + 1.0));
    }
    let alpha: Vec<f64> = (1..=d).map(|j| phi.powi(-(j as i32))).collect();
    let mut pts = vec![vec![0.0; d]];
    for k in 1..count {
        pts.push(
            alpha
                .iter()
                .map(|a| (0.5 + k as f64 * a).fract() * std::f64::consts::TAU)
                .collect(),
        );
    }
    pts
}

#[derive(Clone, Debug, PartialEq)]
pub struct NilpotencyReport {
    /// `max ‖A₀^d‖` over the samples.
    pub power_defect: f64,
    /// `max |det(I + tA₀) - 1|` over samples and times.
    pub det_defect: f64,
    pub passed: bool,
}

pub const NILPOTENCY_TOL: f64 = 1e-10;

fn matrix_power(a: &Mat, k: usize) -> Mat {
    let mut p = identity(a.len());
    for _ in 0..k {
        p = matmul(&p, a);
    }
    p
}

fn shifted(a: &Mat, t: f64) -> Mat {
    let mut m = identity(a.len());
    for (i, r) in a.iter().enumerate() {
        for (j, v) in r.iter().enumerate() {
            m[i][j] += t * v;
        }
    }
    m
}

/// Samples `‖A₀^d‖` and `det(I + tA₀)`; never fails.
pub fn check_nilpotent(flow: &NilpotentFlow, points: &[Vec<f64>], times: &[f64]) -> NilpotencyReport {
    let d = flow.dim();
    let mut power_defect = 0.0f64;
    let mut det_defect = 0.0f64;
    for x in points {
        let a = flow.jacobian(x);
        power_defect = power_defect.max(row_sum_norm(&matrix_power(&a, d)));
        for &t in times {
            det_defect = det_defect.max((det(&shifted(&a, t)) - 1.0).abs());
        }
    }
    NilpotencyReport {
        power_defect,
        det_defect,
        passed: power_defect < NILPOTENCY_TOL && power_defect.is_finite(),
    }
}

/// `Σ_{m=0}^{d-2} (-t)^m A₀^{m+1}`.
pub fn neumann_gradient(a0: &Mat, t: f64) -> Mat {
    let d = a0.len();
    let mut out = vec![vec![0.0; d]; d];
    let mut p = a0.clone();
    let mut c = 1.0;
    for _ in 0..d.saturating_sub(1) {
        for i in 0..d {
            for j in 0..d {
                out[i][j] += c * p[i][j];
            }
        }
        p = matmul(&p, a0);
        c *= -t;
    }
    out
}

/// `(I + tA₀)⁻¹A₀` by an LU solve.
pub fn resolvent_gradient(a0: &Mat, t: f64) -> Result<Mat> {
    let lu = DenseLu::new(&shifted(a0, t))?;
    let d = a0.len();
    let cols: Vec<Vec<f64>> = (0..d).map(|j| lu.solve(&a0.iter().map(|r| r[j]).collect::<Vec<_>>())).collect();
    Ok(transpose(&cols))
}

fn rk4_riccati(a: &Mat, dt: f64) -> Mat {
    let f = |m: &Mat| -> Mat { matmul(m, m).into_iter().map(|r| r.into_iter().map(|v| -v).collect()).collect() };
    let comb = |m: &Mat, k: &Mat, s: f64| -> Mat {
        m.iter().zip(k).map(|(r, q)| r.iter().zip(q).map(|(a, b)| a + s * b).collect()).collect()
    };
    let k1 = f(a);
    let k2 = f(&comb(a, &k1, 0.5 * dt));
    let k3 = f(&comb(a, &k2, 0.5 * dt));
    let k4 = f(&comb(a, &k3, dt));
    let mut out = a.clone();
    for i in 0..a.len() {
        for j in 0..a.len() {
            out[i][j] += dt / 6.0 * (k1[i][j] + 2.0 * k2[i][j] + 2.0 * k3[i][j] + k4[i][j]);
        }
    }
    out
}

/// `A(t)` along one characteristic by three routes.
#[derive(Clone, Debug, PartialEq)]
pub struct GradientTrajectory {
    pub x: Vec<f64>,
    pub times: Vec<f64>,
    pub neumann: Vec<Mat>,
    pub resolvent: Vec<Mat>,
    /// RK4 integration of `Ȧ = -A²` from `A₀`.
    pub ode: Vec<Mat>,
    pub det_defect: f64,
    /// `max |neumann - resolvent|`.
    pub resolvent_gap: f64,
    /// `max |neumann - ode|`.
    pub ode_gap: f64,
}

impl GradientTrajectory {
    pub fn norms(&self) -> Vec<f64> {
        self.neumann.iter().map(row_sum_norm).collect()
    }
}

/// `times` must be non-negative and increasing; the label must have a
/// nilpotent gradient.
pub fn evolve_gradient(flow: &NilpotentFlow, x: &[f64], times: &[f64]) -> Result<GradientTrajectory> {
    let d = flow.dim();
    if x.len() != d {
        return Err(Error::InvalidArgument(format!("label has {} coordinates, flow has d = {d}", x.len())));
    }
    if times.iter().any(|t| !t.is_finite() || *t < 0.0) || times.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::InvalidArgument("times must be finite, non-negative and increasing".into()));
    }
    let a0 = flow.jacobian(x);
    let rep = check_nilpotent(flow, &[x.to_vec()], times);
    if !rep.passed {
        return Err(Error::InvalidArgument(format!(
            "gradient is not nilpotent at the label (‖A₀^d‖ = {:e})",
            rep.power_defect
        )));
    }
    let mut tr = GradientTrajectory {
        x: x.to_vec(),
        times: times.to_vec(),
        neumann: Vec::new(),
        resolvent: Vec::new(),
        ode: Vec::new(),
        det_defect: rep.det_defect,
        resolvent_gap: 0.0,
        ode_gap: 0.0,
    };
    let dt_max = 1e-3 / row_sum_norm(&a0).max(1.0);
    let mut a = a0.clone();
    let mut t_prev = 0.0;
    for &t in times {
        let steps = ((t - t_prev) / dt_max).ceil() as usize;
        for _ in 0..steps {
            a = rk4_riccati(&a, (t - t_prev) / steps as f64);
        }
        t_prev = t;
        let n = neumann_gradient(&a0, t);
        // singular only if the data were not nilpotent after all
        let r = resolvent_gradient(&a0, t)?;
        tr.resolvent_gap = tr.resolvent_gap.max(max_diff(&n, &r));
        tr.ode_gap = tr.ode_gap.max(max_diff(&n, &a));
        tr.neumann.push(n);
        tr.resolvent.push(r);
        tr.ode.push(a.clone());
    }
    Ok(tr)
}

/// Row-sum norm of `A(t)` for a chain, using the structure: the `m`-th power
/// of a superdiagonal matrix lives on the `m`-th superdiagonal, so row `i`
/// of `A(t)` has entries `(-t)^m c_i ⋯ c_{i+m}` with no cancellation.
pub fn chain_gradient_norm(slopes: &[f64], t: f64) -> f64 {
    let k = slopes.len();
    let mut best = 0.0f64;
    for i in 0..k {
        let (mut prod, mut tp, mut s) = (1.0, 1.0, 0.0);
        for &c in &slopes[i..] {
            prod *= c.abs();
            s += tp * prod;
            tp *= t;
        }
        best = best.max(s);
    }
    best
}

/// `(1 - t^{d-1})/(1 - t) = Σ_{m<d-1} t^m`.
pub fn family_norm_at_origin(d: usize, t: f64) -> f64 {
    (0..d - 1).map(|m| t.powi(m as i32)).sum()
}

#[derive(Clone, Debug, PartialEq)]
pub struct NormRow {
    pub d: usize,
    pub t: f64,
    pub norm_at_0: f64,
    /// Max over the low-discrepancy sample (which includes the origin).
    pub norm_global: f64,
    /// `‖A₀‖/(1 - t‖A₀‖)`, infinite past `1/‖A₀‖`.
    pub bound: f64,
}

/// Norm table for the `-sin` chain family.
pub fn blowup_family_curve(d_list: &[usize], times: &[f64], samples: usize) -> Result<Vec<NormRow>> {
    if d_list.iter().any(|&d| d < 2) || samples == 0 {
        return Err(Error::InvalidArgument("d >= 2 and at least one sample required".into()));
    }
    let mut rows = Vec::new();
    for &d in d_list {
        let flow = NilpotentFlow::chain(d)?;
        let NilpotentFlow::Chain { components } = &flow else { unreachable!() };
        let slopes: Vec<Vec<f64>> = sample_points(d, samples)
            .iter()
            .map(|x| components.iter().enumerate().map(|(i, c)| c.derivative(x[i + 1])).collect())
            .collect();
        let a0_norm = slopes.iter().map(|s| chain_gradient_norm(s, 0.0)).fold(0.0, f64::max);
        for &t in times {
            let norm_at_0 = chain_gradient_norm(&slopes[0], t);
            let norm_global = slopes.iter().map(|s| chain_gradient_norm(s, t)).fold(0.0, f64::max);
            let bound = if t * a0_norm < 1.0 {
                a0_norm / (1.0 - t * a0_norm)
            } else {
                f64::INFINITY
            };
            rows.push(NormRow {
                d,
                t,
                norm_at_0,
                norm_global,
                bound,
            });
        }
    }
    Ok(rows)
}

pub fn norm_table_csv(rows: &[NormRow]) -> String {
    let mut s = String::from("d,t,norm_at_0,norm_global,bound\n");
    for r in rows {
        let _ = writeln!(s, "{},{},{:.17e},{:.17e},{:.17e}", r.d, r.t, r.norm_at_0, r.norm_global, r.bound);
    }
    s
}

#[derive(Clone, Debug, PartialEq)]
pub struct LagrangianReport {
    pub mapped: Vec<Vec<f64>>,
    /// `max |det DΦ_t - 1|` from a fourth-order difference Jacobian.
    pub det_defect: f64,
    pub volume_preserved: bool,
}

pub const VOLUME_TOL: f64 = 1e-8;

/// Straight-line characteristics `Φ_t(x) = x + t u₀(x)`.
pub fn lagrangian_map(flow: &NilpotentFlow, points: &[Vec<f64>], t: f64) -> Result<LagrangianReport> {
    let d = flow.dim();
    if !t.is_finite() || points.iter().any(|p| p.len() != d) {
        return Err(Error::InvalidArgument("points must have d coordinates and t must be finite".into()));
    }
    let phi = |x: &[f64]| -> Vec<f64> { x.iter().zip(flow.velocity(x)).map(|(x, u)| x + t * u).collect() };
    let h = 1e-3;
    let mut det_defect = 0.0f64;
    let mut mapped = Vec::with_capacity(points.len());
    for x in points {
        mapped.push(phi(x));
        let mut jac = vec![vec![0.0; d]; d];
        for j in 0..d {
            let shift = |s: f64| {
                let mut y = x.clone();
                y[j] += s * h;
                phi(&y)
            };
            let (m2, m1, p1, p2) = (shift(-2.0), shift(-1.0), shift(1.0), shift(2.0));
            for i in 0..d {
                jac[i][j] = (m2[i] - 8.0 * m1[i] + 8.0 * p1[i] - p2[i]) / (12.0 * h);
            }
        }
        det_defect = det_defect.max((det(&jac) - 1.0).abs());
    }
    Ok(LagrangianReport {
        mapped,
        det_defect,
        volume_preserved: det_defect < VOLUME_TOL,
    })
}

/// Flows used by the verification suites.
pub fn shipped_flows() -> Vec<(&'static str, NilpotentFlow)> {
    let mixed = NilpotentFlow::chain_from(vec![
        Sine {
            amp: 0.5,
            freq: 2.0,
            phase: 0.3,
        },
        Sine::NEG_SIN,
        Sine {
            amp: -0.8,
            freq: 1.0,
            phase: 1.1,
        },
    ])
    .expect("static chain");
    vec![
        ("chain-d2", NilpotentFlow::chain(2).expect("static chain")),
        ("chain-d3", NilpotentFlow::chain(3).expect("static chain")),
        ("chain-d5", NilpotentFlow::chain(5).expect("static chain")),
        ("chain-mixed-d4", mixed),
    ]
}

/// Random chain with `|amp·freq| ≤ 1`.
pub fn random_chain<R: rand::Rng>(d: usize, rng: &mut R) -> Result<NilpotentFlow> {
    let comps = (1..d)
        .map(|_| {
            let freq = rng.gen_range(0.5..2.0);
            Sine {
                amp: rng.gen_range(-1.0..1.0) / freq,
                freq,
                phase: rng.gen_range(0.0..std::f64::consts::TAU),
            }
        })
        .collect();
    NilpotentFlow::chain_from(comps)
}
