//! Self-similar profiles for `∂t f = f² + εN(f)` on the half line.
//!
//! Profiles `f = (1-t)^{-1} F(x/(1-t)^{1+δ})` solve
//! `F + (1+δ) z F' = F² + εN(F)`; writing `F = F₀ + g` with `F₀ = 1/(1+z)`
//! gives `𝓛g = -δ z F₀' - δ z g' + g² + εN(F₀ + g)` where
//! `𝓛g = g + z g' - 2g/(1+z)`. Everything is collocated on Chebyshev–Lobatto
//! nodes in `s = z/(1+z)`, where `z∂z = s(1-s)∂s` and `2/(1+z) = 2(1-s)`.
//! The kernel of `𝓛` is spanned by `z/(1+z)² = s(1-s)`.

use crate::axisym::{l12, PolarField};
use crate::banded::DenseLu;
use crate::chebyshev::{barycentric_weights, clenshaw_curtis_unit, diff_matrix, interpolate, lobatto_unit};
use crate::error::{check_finite, Error, Result};
use crate::quad::gauss_legendre;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::sync::Arc;

/// Nodes, differentiation and quadrature on `s ∈ [0, 1]`.
#[derive(Debug)]
pub struct Collocation {
    pub s: Vec<f64>,
    pub d: Vec<Vec<f64>>,
    pub cc: Vec<f64>,
    bary: Vec<f64>,
}

impl Collocation {
    pub fn new(n: usize) -> Result<Arc<Self>> {
        if n < 9 {
            return Err(Error::InvalidGrid(format!("collocation needs n >= 9, got {n}")));
        }
        let s = lobatto_unit(n);
        Ok(Arc::new(Collocation {
            d: diff_matrix(&s),
            cc: clenshaw_curtis_unit(n),
            bary: barycentric_weights(&s),
            s,
        }))
    }

    pub fn n(&self) -> usize {
        self.s.len()
    }

    pub fn diff(&self, v: &[f64]) -> Vec<f64> {
        self.d.iter().map(|row| row.iter().zip(v).map(|(a, b)| a * b).sum()).collect()
    }

    pub fn integrate(&self, v: &[f64]) -> f64 {
        self.cc.iter().zip(v).map(|(w, v)| w * v).sum()
    }

    /// Matrix of `∫_{s_i}^{1} ℓ_j(s) ds`.
    fn tail_integration_matrix(&self) -> Vec<Vec<f64>> {
        let n = self.n();
        let (gx, gw) = gauss_legendre(n / 2 + 2);
        let mut cell = vec![vec![0.0; n]; n];
        for i in 0..n - 1 {
            let (a, b) = (self.s[i], self.s[i + 1]);
            let (c, h) = (0.5 * (a + b), 0.5 * (b - a));
            for (&t, &w) in gx.iter().zip(&gw) {
                let x = c + h * t;
                let basis = self.basis_at(x);
                for j in 0..n {
                    cell[i][j] += w * h * basis[j];
                }
            }
        }
        let mut q = vec![vec![0.0; n]; n];
        for i in (0..n - 1).rev() {
            for j in 0..n {
                q[i][j] = q[i + 1][j] + cell[i][j];
            }
        }
        q
    }

    fn basis_at(&self, x: f64) -> Vec<f64> {
        let n = self.n();
        let mut out = vec![0.0; n];
        if let Some(k) = self.s.iter().position(|&s| s == x) {
            out[k] = 1.0;
            return out;
        }
        let mut den = 0.0;
        for j in 0..n {
            out[j] = self.bary[j] / (x - self.s[j]);
            den += out[j];
        }
        out.iter_mut().for_each(|v| *v /= den);
        out
    }
}

/// Decay of a half-line function at `z = ∞`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Decay {
    /// `g(∞) = c ≠ 0`.
    Constant(f64),
    /// `g ~ a/z`.
    InverseZ(f64),
}

/// Samples of `g(z)` at the collocation nodes (`s = 1` is `z = ∞`), with the
/// boundary jet `(g(0), g'(0))`.
#[derive(Clone, Debug)]
pub struct HalfLineFn {
    colloc: Arc<Collocation>,
    pub values: Vec<f64>,
    pub jet: (f64, f64),
}

impl HalfLineFn {
    pub fn new(colloc: &Arc<Collocation>, values: Vec<f64>) -> Result<Self> {
        if values.len() != colloc.n() {
            return Err(Error::InvalidGrid(format!("{} values for {} nodes", values.len(), colloc.n())));
        }
        check_finite(&values)?;
        let d = colloc.diff(&values);
        // ds/dz = 1 at z = 0
        let jet = (values[0], d[0]);
        Ok(HalfLineFn {
            colloc: colloc.clone(),
            values,
            jet,
        })
    }

    pub fn from_fn<F: Fn(f64) -> f64>(colloc: &Arc<Collocation>, f: F, at_infinity: f64) -> Result<Self> {
        let values = colloc
            .s
            .iter()
            .map(|&s| if s >= 1.0 { at_infinity } else { f(s / (1.0 - s)) })
            .collect();
        Self::new(colloc, values)
    }

    /// Samples as a function of `s`.
    pub fn from_s_fn<F: Fn(f64) -> f64>(colloc: &Arc<Collocation>, f: F) -> Result<Self> {
        Self::new(colloc, colloc.s.iter().map(|&s| f(s)).collect())
    }

    pub fn zeros(colloc: &Arc<Collocation>) -> Self {
        HalfLineFn {
            colloc: colloc.clone(),
            values: vec![0.0; colloc.n()],
            jet: (0.0, 0.0),
        }
    }

    pub fn collocation(&self) -> &Arc<Collocation> {
        &self.colloc
    }

    pub fn n(&self) -> usize {
        self.values.len()
    }

    pub fn s(&self) -> &[f64] {
        &self.colloc.s
    }

    fn with(&self, values: Vec<f64>) -> Self {
        let d = self.colloc.diff(&values);
        HalfLineFn {
            jet: (values[0], d[0]),
            colloc: self.colloc.clone(),
            values,
        }
    }

    pub fn d_s(&self) -> Vec<f64> {
        self.colloc.diff(&self.values)
    }

    /// `z ∂z g`.
    pub fn d_z(&self) -> Self {
        let d = self.d_s();
        self.with(self.colloc.s.iter().zip(&d).map(|(s, d)| s * (1.0 - s) * d).collect())
    }

    pub fn value_at(&self, z: f64) -> f64 {
        let s = if z.is_infinite() { 1.0 } else { z / (1.0 + z) };
        interpolate(&self.colloc.s, &self.colloc.bary, &self.values, s)
    }

    pub fn max_abs(&self) -> f64 {
        crate::stats::max_abs(&self.values)
    }

    pub fn decay(&self) -> Decay {
        let n = self.n();
        let at_inf = self.values[n - 1];
        if at_inf.abs() > 1e-12 * (1.0 + self.max_abs()) {
            Decay::Constant(at_inf)
        } else {
            // g ≈ a(1-s) near s = 1 and (1-s) ≈ 1/z
            Decay::InverseZ(-self.d_s()[n - 1])
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        self.with(self.values.iter().zip(&other.values).map(|(a, b)| a + b).collect())
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.with(self.values.iter().zip(&other.values).map(|(a, b)| a - b).collect())
    }

    pub fn scale(&self, a: f64) -> Self {
        self.with(self.values.iter().map(|v| a * v).collect())
    }

    /// Discrete `H²`-type norm `(Σ_{k≤2} ∫ (z∂z)^k g)² ds)^{1/2}`.
    pub fn h2_norm(&self) -> f64 {
        let d1 = self.d_z();
        let d2 = d1.d_z();
        [&self.values, &d1.values, &d2.values]
            .iter()
            .map(|v| self.colloc.integrate(&v.iter().map(|x| x * x).collect::<Vec<_>>()))
            .sum::<f64>()
            .sqrt()
    }
}

/// `F₀(z) = 1/(1+z)`.
pub fn f0(colloc: &Arc<Collocation>) -> HalfLineFn {
    HalfLineFn::from_s_fn(colloc, |s| 1.0 - s).expect("finite")
}

/// `z/(1+z)²`, the kernel of the toy operator.
pub fn kernel_element(colloc: &Arc<Collocation>) -> HalfLineFn {
    HalfLineFn::from_s_fn(colloc, |s| s * (1.0 - s)).expect("finite")
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LVariant {
    /// `g + z g' - 2g/(1+z)`.
    Toy,
    /// The toy operator minus `z/(1+z)² L(g)`, `L(g) = ∫_z^∞ g(t)/t dt`
    /// (θ-independent part of the fundamental-model linearization).
    Nonlocal,
}

fn toy_matrix(c: &Collocation) -> Vec<Vec<f64>> {
    let n = c.n();
    let mut a = vec![vec![0.0; n]; n];
    for i in 0..n {
        let s = c.s[i];
        for j in 0..n {
            a[i][j] = s * (1.0 - s) * c.d[i][j];
        }
        a[i][i] += 1.0 - 2.0 * (1.0 - s);
    }
    a
}

/// `∫_z^∞ g(t)/t dt` on the collocation grid; needs `g(0) = 0`.
pub fn tail_l(g: &HalfLineFn) -> Result<HalfLineFn> {
    let c = &g.colloc;
    let n = g.n();
    if g.values[0].abs() > 1e-12 * (1.0 + g.max_abs()) {
        return Err(Error::InvalidArgument("L(g) diverges unless g(0) = 0".into()));
    }
    // g/t dt = g/(s(1-s)) ds; endpoint limits from derivatives
    let d = g.d_s();
    let mut h = vec![0.0; n];
    for i in 1..n - 1 {
        h[i] = g.values[i] / (c.s[i] * (1.0 - c.s[i]));
    }
    h[0] = d[0];
    h[n - 1] = if g.values[n - 1].abs() > 1e-12 * (1.0 + g.max_abs()) {
        return Err(Error::NonDecaying("g(∞) ≠ 0".into()));
    } else {
        -d[n - 1]
    };
    let q = c.tail_integration_matrix();
    Ok(g.with(q.iter().map(|row| row.iter().zip(&h).map(|(a, b)| a * b).sum()).collect()))
}

pub fn apply_l(g: &HalfLineFn, variant: LVariant) -> Result<HalfLineFn> {
    let c = &g.colloc;
    let d = g.d_s();
    let mut out: Vec<f64> = (0..g.n())
        .map(|i| {
            let s = c.s[i];
            g.values[i] + s * (1.0 - s) * d[i] - 2.0 * (1.0 - s) * g.values[i]
        })
        .collect();
    if variant == LVariant::Nonlocal {
        let l = tail_l(g)?;
        for i in 0..g.n() {
            let s = c.s[i];
            out[i] -= s * (1.0 - s) * l.values[i];
        }
    }
    Ok(g.with(out))
}

/// Bordered solver for `𝓛g + τ e_∞ = f`, `g'(0) = slope`, where `e_∞` is
/// the unit vector of the `z = ∞` node. That row is the slack: for `δ ≠ 0`
/// profiles decay like `z^{-1/(1+δ)}`, which is not smooth in `s` at `s = 1`.
struct Inverter {
    lu: DenseLu,
    n: usize,
}

impl Inverter {
    fn new(c: &Collocation) -> Result<Self> {
        Self::from_matrix(c, toy_matrix(c))
    }

    /// Same bordering around `I + dt·𝓛`.
    fn implicit(c: &Collocation, dt: f64) -> Result<Self> {
        let mut a = toy_matrix(c);
        for (i, row) in a.iter_mut().enumerate() {
            for v in row.iter_mut() {
                *v *= dt;
            }
            row[i] += 1.0;
        }
        Self::from_matrix(c, a)
    }

    fn from_matrix(c: &Collocation, a: Vec<Vec<f64>>) -> Result<Self> {
        let n = c.n();
        let mut m = vec![vec![0.0; n + 1]; n + 1];
        for i in 0..n {
            m[i][..n].copy_from_slice(&a[i]);
        }
        m[n - 1][n] = 1.0;
        m[n][..n].copy_from_slice(&c.d[0]);
        Ok(Inverter { lu: DenseLu::new(&m)?, n })
    }

    fn solve(&self, f: &[f64], slope: f64) -> (Vec<f64>, f64) {
        let mut b = f.to_vec();
        b.push(slope);
        let mut x = self.lu.solve(&b);
        let tau = x.pop().unwrap();
        debug_assert_eq!(x.len(), self.n);
        (x, tau)
    }
}

/// `f'(0) + 2f(0)`; `𝓛g = f` has a C¹ solution only when this vanishes.
pub fn compatibility_defect(f: &HalfLineFn) -> f64 {
    f.jet.1 + 2.0 * f.jet.0
}

/// Solves `𝓛g = f` (toy operator) with `g'(0) = 0`.
pub fn invert_l(f: &HalfLineFn, tol: f64) -> Result<HalfLineFn> {
    invert_l_with_slope(f, 0.0, tol)
}

/// Solves `𝓛g = f` with `g'(0) = slope` (the free kernel coordinate).
pub fn invert_l_with_slope(f: &HalfLineFn, slope: f64, tol: f64) -> Result<HalfLineFn> {
    let defect = compatibility_defect(f);
    if defect.abs() > tol {
        return Err(Error::Incompatible { defect });
    }
    let inv = Inverter::new(&f.colloc)?;
    let (g, _) = inv.solve(&f.values, slope);
    HalfLineFn::new(&f.colloc, g)
}

/// Closed form of the inverse with `g'(0) = 0` evaluated by adaptive
/// quadrature (independent of the collocation).
pub fn invert_l_closed_form<F: Fn(f64) -> f64>(f: F, z: f64) -> f64 {
    let f0 = f(0.0);
    if z == 0.0 {
        return -f0;
    }
    // integrand (t+1)²/t² (f(t) + f(0)(t-1)/(t+1)) has a removable double zero
    let big_f = |t: f64| f(t) + f0 * (t - 1.0) / (t + 1.0);
    let integrand = |t: f64| (t + 1.0).powi(2) / (t * t) * big_f(t);
    // near 0 the integrand is a cancellation; integrate an interpolant
    // sampled away from the origin instead
    let a = 1e-3f64.min(z);
    let nodes: Vec<f64> = (0..8)
        .map(|k| a * (2.0 - (std::f64::consts::PI * (k as f64 + 0.5) / 8.0).cos()))
        .collect();
    let w = crate::quad::lagrange_integral_weights(&nodes, 0.0, a);
    let head: f64 = w.iter().zip(&nodes).map(|(w, &t)| w * integrand(t)).sum();
    let integral = head + crate::quad::integrate(integrand, a, z, 1e-11);
    -f0 + z / (z + 1.0).powi(2) * integral
}

/// Degree-2 nonlinearities acting pointwise on `(z, f, z f')`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Nonlinearity {
    /// `f²`.
    Square,
    /// `f² z/(1+z)`.
    WeightedSquare,
    /// `(z f')²/(1+z)²`.
    WeightedGradientSquare,
    /// `(z f')²`.
    GradientSquare,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NonlinearityInfo {
    pub degree: u32,
    /// `N(f(a·)) = N(f)(a·)`.
    pub dilation_equivariant: bool,
    /// Why `N` (or `𝓛⁻¹N`) stays bounded on the working space.
    pub bound: &'static str,
}

impl Nonlinearity {
    pub const ALL: [Nonlinearity; 4] = [
        Nonlinearity::Square,
        Nonlinearity::WeightedSquare,
        Nonlinearity::WeightedGradientSquare,
        Nonlinearity::GradientSquare,
    ];

    pub fn info(&self) -> NonlinearityInfo {
        let (dilation_equivariant, bound) = match self {
            Nonlinearity::Square => (true, "|f²| ≤ |f|∞ |f|"),
            Nonlinearity::WeightedSquare => (false, "z/(1+z) ≤ 1"),
            Nonlinearity::WeightedGradientSquare => (false, "1/(1+z)² ≤ 1, needs z f' bounded"),
            Nonlinearity::GradientSquare => (true, "needs z f' bounded"),
        };
        NonlinearityInfo {
            degree: 2,
            dilation_equivariant,
            bound,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Nonlinearity::Square => "square",
            Nonlinearity::WeightedSquare => "weighted-square",
            Nonlinearity::WeightedGradientSquare => "weighted-gradient-square",
            Nonlinearity::GradientSquare => "gradient-square",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|n| n.name() == s)
    }

    /// `N` at a point in terms of `z`, `f(z)` and `z f'(z)`.
    pub fn pointwise(&self, z: f64, f: f64, zdf: f64) -> f64 {
        match self {
            Nonlinearity::Square => f * f,
            Nonlinearity::WeightedSquare => {
                let w = if z.is_infinite() { 1.0 } else { z / (1.0 + z) };
                f * f * w
            }
            Nonlinearity::WeightedGradientSquare => {
                let w = if z.is_infinite() { 0.0 } else { 1.0 / (1.0 + z).powi(2) };
                zdf * zdf * w
            }
            Nonlinearity::GradientSquare => zdf * zdf,
        }
    }

    pub fn eval(&self, f: &HalfLineFn) -> HalfLineFn {
        let dz = f.d_z();
        let vals = f
            .s()
            .iter()
            .zip(&f.values)
            .zip(&dz.values)
            .map(|((&s, &v), &d)| {
                let z = if s >= 1.0 { f64::INFINITY } else { s / (1.0 - s) };
                self.pointwise(z, v, d)
            })
            .collect();
        f.with(vals)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MetadataReport {
    pub scaling_defect: f64,
    pub equivariance_defect: f64,
}

/// Checks `N(af) = a²N(f)` and `N(f(a·)) = N(f)(a·)` on random rational
/// test functions `f = Σ c_k/(1 + b_k z)`.
pub fn check_metadata(nl: Nonlinearity, samples: usize, seed: u64) -> MetadataReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rep = MetadataReport {
        scaling_defect: 0.0,
        equivariance_defect: 0.0,
    };
    for _ in 0..samples {
        let terms: Vec<(f64, f64)> = (0..3).map(|_| (rng.gen_range(-1.0..1.0), rng.gen_range(0.2..3.0))).collect();
        let f = |z: f64| terms.iter().map(|(c, b)| c / (1.0 + b * z)).sum::<f64>();
        let zdf = |z: f64| terms.iter().map(|(c, b)| -c * b * z / (1.0 + b * z).powi(2)).sum::<f64>();
        let a: f64 = rng.gen_range(0.3..3.0);
        let z: f64 = rng.gen_range(0.0..10.0);
        let base = nl.pointwise(z, f(z), zdf(z));
        let scaled = nl.pointwise(z, a * f(z), a * zdf(z));
        rep.scaling_defect = rep.scaling_defect.max((scaled - a * a * base).abs());
        // f(a·) at z has value f(az) and z-derivative-weighted value (z f')(az)
        let dilated = nl.pointwise(z, f(a * z), zdf(a * z));
        let moved = nl.pointwise(a * z, f(a * z), zdf(a * z));
        rep.equivariance_defect = rep.equivariance_defect.max((dilated - moved).abs());
    }
    rep
}

#[derive(Clone, Debug, PartialEq)]
pub struct ProfileConfig {
    pub n: usize,
    pub tol: f64,
    pub max_iter: usize,
    /// Kernel coordinate `g'(0)` imposed by the fixed-point solver.
    pub slope: f64,
    /// Fake-time step of the compactness flow (backward Euler).
    pub fake_dt: f64,
}

impl Default for ProfileConfig {
    fn default() -> Self {
        ProfileConfig {
            n: 65,
            tol: 1e-10,
            max_iter: 500,
            slope: 0.0,
            fake_dt: 5.0,
        }
    }
}

#[derive(Clone, Debug)]
pub struct FixedPointProfile {
    pub g: HalfLineFn,
    pub delta: f64,
    pub iterations: usize,
    /// Ratio of the last two successive differences.
    pub lipschitz: f64,
}

impl FixedPointProfile {
    pub fn profile(&self) -> HalfLineFn {
        f0(&self.g.colloc).add(&self.g)
    }
}

/// Iterates `g ↦ 𝓛⁻¹(-δ z F₀' - δ z g' + g² + εN(F₀ + g))` from `g = 0`,
/// with `δ` fixed each step by the (discrete) compatibility condition.
pub fn fixed_point_profile(nl: Nonlinearity, eps: f64, cfg: &ProfileConfig) -> Result<FixedPointProfile> {
    let c = Collocation::new(cfg.n)?;
    let inv = Inverter::new(&c)?;
    let base = f0(&c);
    let zf0 = base.d_z();
    let mut g = kernel_element(&c).scale(cfg.slope);
    let mut prev_diff = f64::INFINITY;
    let mut growth = 0;
    let mut lipschitz = 0.0;
    for it in 1..=cfg.max_iter {
        let full = base.add(&g);
        let nf = nl.eval(&full);
        let zg = g.d_z();
        let r0: Vec<f64> = (0..c.n()).map(|i| g.values[i].powi(2) + eps * nf.values[i]).collect();
        let r1: Vec<f64> = (0..c.n()).map(|i| -zf0.values[i] - zg.values[i]).collect();
        let da = compatibility_defect(&g.with(r0.clone()));
        let db = compatibility_defect(&g.with(r1.clone()));
        if db == 0.0 {
            return Err(Error::Singular);
        }
        let delta = -da / db;
        let (ga, _) = inv.solve(&r0, cfg.slope);
        let (gb, _) = inv.solve(&r1, 0.0);
        let next = g.with(ga.iter().zip(&gb).map(|(a, b)| a + delta * b).collect());
        check_finite(&next.values)?;
        let diff = next.sub(&g).h2_norm();
        if it > 1 && prev_diff > 0.0 {
            lipschitz = diff / prev_diff;
        }
        g = next;
        if diff < cfg.tol {
            return Ok(FixedPointProfile {
                g,
                delta,
                iterations: it,
                lipschitz,
            });
        }
        growth = if diff > prev_diff { growth + 1 } else { 0 };
        if growth >= 5 {
            return Err(Error::NotContracting { lipschitz });
        }
        prev_diff = diff;
    }
    Err(Error::NotContracting { lipschitz })
}

/// Max-norm residual of `F + (1+δ) z F' - F² - εN(F)` on the finite nodes
/// (the equation degenerates at `z = ∞`).
pub fn profile_equation_residual(f: &HalfLineFn, delta: f64, nl: Nonlinearity, eps: f64) -> f64 {
    let zf = f.d_z();
    let nf = nl.eval(f);
    (0..f.n() - 1)
        .map(|i| (f.values[i] + (1.0 + delta) * zf.values[i] - f.values[i].powi(2) - eps * nf.values[i]).abs())
        .fold(0.0, f64::max)
}

#[derive(Clone, Debug)]
pub struct CompactnessProfile {
    pub g: HalfLineFn,
    pub mu: f64,
    pub lambda: f64,
    pub steps: usize,
    /// Final `‖∂τ g‖`.
    pub residual: f64,
}

impl CompactnessProfile {
    /// `(F₀ + g)/(1+μ)`, a solution of the δ-profile equation with `δ = λ`.
    pub fn normalized_profile(&self) -> HalfLineFn {
        f0(&self.g.colloc).add(&self.g).scale(1.0 / (1.0 + self.mu))
    }
}

/// Fake-time flow `∂τ g + 𝓛g = RHS(g; μ, λ)` with `μ`, `λ` chosen every
/// step so that `RHS(0) = RHS'(0) = 0`, where
/// `RHS = -μF₀ - κ zF₀' + g² - μg - κ z g' + εN(F₀+g)`, `κ = μ + λ + μλ`.
pub fn compactness_profile(nl: Nonlinearity, eps: f64, cfg: &ProfileConfig) -> Result<CompactnessProfile> {
    let c = Collocation::new(cfg.n)?;
    let n = c.n();
    let dt = cfg.fake_dt;
    if !(dt > 0.0) || (dt - 1.0).abs() < 1e-6 {
        return Err(Error::InvalidArgument("fake_dt must be positive and away from 1".into()));
    }
    let inv = Inverter::implicit(&c, dt)?;
    let base = f0(&c);
    let zf0 = base.d_z();
    let mut g = HalfLineFn::zeros(&c);
    let mut best = f64::INFINITY;
    let mut since_best = 0;
    for step in 1..=cfg.max_iter.max(1) * 10 {
        let full = base.add(&g);
        let nf = nl.eval(&full);
        let (g0, g1) = g.jet;
        let (n0, n1) = nf.jet;
        let mu = (g0 * g0 + eps * n0) / (1.0 + g0);
        let kappa = (-mu * (1.0 - g1) - 2.0 * g0 * g1 - eps * n1) / (1.0 - g1);
        let lambda = (kappa - mu) / (1.0 + mu);
        let zg = g.d_z();
        let b: Vec<f64> = (0..n)
            .map(|i| {
                let rhs = -mu * base.values[i] - kappa * zf0.values[i] + g.values[i].powi(2) - mu * g.values[i]
                    - kappa * zg.values[i]
                    + eps * nf.values[i];
                g.values[i] + dt * rhs
            })
            .collect();
        // the kernel direction is neutral under the implicit step; pin g'(0) = 0
        let next = g.with(inv.solve(&b, 0.0).0);
        check_finite(&next.values)?;
        let residual = next.sub(&g).h2_norm() / dt;
        g = next;
        if residual < cfg.tol {
            return Ok(CompactnessProfile {
                g,
                mu,
                lambda,
                steps: step,
                residual,
            });
        }
        if residual < 0.5 * best {
            best = residual;
            since_best = 0;
        } else {
            since_best += 1;
            if since_best > 200 {
                return Err(Error::Stagnated { residual, steps: step });
            }
        }
    }
    Err(Error::Stagnated {
        residual: best,
        steps: cfg.max_iter * 10,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Weight {
    /// `dz`.
    Plain,
    /// `(1+z)⁴/z⁴ dz`.
    Hardy,
    /// Hardy weight times `sin(2θ)^{-(1+δ)}` (polar functions).
    HardyAngular,
}

/// `(f,g)_X = (f,g)_w + c₁(z∂z f, z∂z g)_w + c₂((z∂z)²f, (z∂z)²g)_w` for
/// radial functions; for polar functions the angular weight adds the
/// `sin(2θ)∂θ` term in place of the constant one.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WeightedNorm {
    pub weight: Weight,
    pub delta: f64,
    pub c1: f64,
    pub c2: f64,
}

impl Default for WeightedNorm {
    fn default() -> Self {
        WeightedNorm {
            weight: Weight::Hardy,
            delta: 0.125,
            c1: 0.1,
            c2: 0.01,
        }
    }
}

impl WeightedNorm {
    pub fn validate(&self) -> Result<()> {
        if !(self.delta > 0.0 && self.delta <= 0.25) {
            return Err(Error::InvalidArgument(format!("δ must lie in (0, 1/4], got {}", self.delta)));
        }
        if !(self.c1 > 0.0 && self.c2 > 0.0) {
            return Err(Error::InvalidArgument("c1 and c2 must be positive".into()));
        }
        Ok(())
    }

    /// `f·sqrt(w dz/ds)` at the nodes, with endpoint limits; `None` when
    /// `f` is not in the weighted space.
    fn root(&self, f: &HalfLineFn) -> Option<Vec<f64>> {
        let s = f.s();
        let n = f.n();
        let d = f.d_s();
        let scale = 1e-10 * (1.0 + f.max_abs());
        if f.values[n - 1].abs() > scale {
            return None;
        }
        let mut r = vec![0.0; n];
        match self.weight {
            Weight::Plain => {
                for i in 0..n - 1 {
                    r[i] = f.values[i] / (1.0 - s[i]);
                }
            }
            Weight::Hardy | Weight::HardyAngular => {
                if f.values[0].abs() > scale || d[0].abs() > scale {
                    return None;
                }
                let d2 = f.colloc.diff(&d);
                r[0] = 0.5 * d2[0];
                for i in 1..n - 1 {
                    r[i] = f.values[i] / (s[i] * s[i] * (1.0 - s[i]));
                }
            }
        }
        r[n - 1] = -d[n - 1];
        Some(r)
    }

    /// `(f, g)_w`; infinite when either function leaves the space.
    pub fn weighted_l2(&self, f: &HalfLineFn, g: &HalfLineFn) -> f64 {
        match (self.root(f), self.root(g)) {
            (Some(a), Some(b)) => f.colloc.integrate(&a.iter().zip(&b).map(|(x, y)| x * y).collect::<Vec<_>>()),
            _ => f64::INFINITY,
        }
    }

    pub fn inner(&self, f: &HalfLineFn, g: &HalfLineFn) -> f64 {
        let (f1, g1) = (f.d_z(), g.d_z());
        let (f2, g2) = (f1.d_z(), g1.d_z());
        self.weighted_l2(f, g) + self.c1 * self.weighted_l2(&f1, &g1) + self.c2 * self.weighted_l2(&f2, &g2)
    }

    pub fn norm(&self, f: &HalfLineFn) -> f64 {
        self.inner(f, f).sqrt()
    }

    /// `(D_θf, D_θg)_w + c₁(f,g)_w + c₂(D_z f, D_z g)_w` for polar samples on
    /// a compactified radial grid, `w = w_z w_θ`.
    pub fn inner_polar(&self, f: &PolarField, g: &PolarField) -> Result<f64> {
        if self.weight != Weight::HardyAngular {
            return Err(Error::InvalidArgument("polar inner product needs the angular weight".into()));
        }
        self.validate()?;
        let grid = &f.grid;
        if !grid.is_compactified() || f.values.len() != g.values.len() {
            return Err(Error::InvalidGrid("matching compactified polar fields required".into()));
        }
        let nr = grid.n();
        let nt = f.n_theta;
        let theta = f.theta();
        let h = theta[1] - theta[0];
        let s = grid.s();
        let rw = crate::quad::CumulativeRule::new(s, 6).total_weights();
        let tw = crate::quad::CumulativeRule::new(&theta, 6).total_weights();
        let dth = |p: &PolarField| -> Vec<f64> {
            let mut out = vec![0.0; p.values.len()];
            for i in 0..nr {
                for j in 0..nt {
                    let lo = j.saturating_sub(3).min(nt - 7);
                    let nodes: Vec<f64> = (lo..lo + 7).map(|k| k as f64 * h).collect();
                    let c = crate::quad::fornberg(theta[j], &nodes, 1);
                    let d: f64 = (0..7).map(|k| c[1][k] * p.at(i, lo + k)).sum();
                    out[i * nt + j] = (2.0 * theta[j]).sin() * d;
                }
            }
            out
        };
        let dz = |p: &PolarField| -> Vec<f64> {
            let mut out = vec![0.0; p.values.len()];
            for j in 0..nt {
                let col: Vec<f64> = (0..nr).map(|i| p.at(i, j)).collect();
                let d = grid.r_dr(&col, 7);
                for i in 0..nr {
                    out[i * nt + j] = d[i];
                }
            }
            out
        };
        let pair = |a: &[f64], b: &[f64]| -> f64 {
            let mut sum = 0.0;
            for i in 1..nr - 1 {
                // w_z dz = ds/(s⁴(1-s)²)
                let wr = 1.0 / (s[i].powi(4) * (1.0 - s[i]).powi(2));
                for j in 1..nt - 1 {
                    let wt = (2.0 * theta[j]).sin().powf(-(1.0 + self.delta));
                    sum += rw[i] * tw[j] * wr * wt * a[i * nt + j] * b[i * nt + j];
                }
            }
            sum
        };
        Ok(pair(&dth(f), &dth(g)) + self.c1 * pair(&f.values, &g.values) + self.c2 * pair(&dz(f), &dz(g)))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CoercivityReport {
    /// `min (𝓛g, g)_X / ‖g‖_X²` over the samples.
    pub c: f64,
    pub ratios: Vec<f64>,
}

/// Random test functions `s²(1-s)·p(s)` with `p` of degree ≤ 5: smooth,
/// vanishing quadratically at `z = 0` and decaying like `1/z`.
pub fn random_test_function(colloc: &Arc<Collocation>, rng: &mut impl Rng) -> HalfLineFn {
    let coef: Vec<f64> = (0..6).map(|_| rng.gen_range(-1.0..1.0)).collect();
    HalfLineFn::from_s_fn(colloc, |s| {
        let p = coef.iter().rev().fold(0.0, |acc, c| acc * s + c);
        s * s * (1.0 - s) * p
    })
    .expect("finite")
}

/// Numerical coercivity audit of the toy operator in the `X` norm.
pub fn coercivity_audit(norm: &WeightedNorm, samples: usize, n: usize, seed: u64) -> Result<CoercivityReport> {
    norm.validate()?;
    let c = Collocation::new(n)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut ratios = Vec::with_capacity(samples);
    for _ in 0..samples {
        let g = random_test_function(&c, &mut rng);
        let lg = apply_l(&g, LVariant::Toy)?;
        ratios.push(norm.inner(&lg, &g) / norm.inner(&g, &g));
    }
    Ok(CoercivityReport {
        c: ratios.iter().cloned().fold(f64::INFINITY, f64::min),
        ratios,
    })
}

/// The fundamental-model linearization
/// `g + z∂zg - 2g/(1+z) - z/(1+z)² L₁₂(g) + 3/(2(1+z)) sin(2θ)∂θg`
/// on a polar field over a compactified radial grid.
pub fn apply_l_extended(g: &PolarField) -> Result<PolarField> {
    let grid = &g.grid;
    if !grid.is_compactified() {
        return Err(Error::InvalidGrid("extended operator needs a compactified radial grid".into()));
    }
    let l = l12(g)?;
    let nr = grid.n();
    let nt = g.n_theta;
    let theta = g.theta();
    let h = theta[1] - theta[0];
    let s = grid.s();
    let mut out = vec![0.0; g.values.len()];
    for j in 0..nt {
        let col: Vec<f64> = (0..nr).map(|i| g.at(i, j)).collect();
        let zd = grid.r_dr(&col, 9);
        for i in 0..nr {
            out[i * nt + j] = col[i] + zd[i] - 2.0 * (1.0 - s[i]) * col[i] - s[i] * (1.0 - s[i]) * l.values[i];
        }
    }
    for i in 0..nr {
        for j in 0..nt {
            let lo = j.saturating_sub(3).min(nt - 7);
            let nodes: Vec<f64> = (lo..lo + 7).map(|k| k as f64 * h).collect();
            let c = crate::quad::fornberg(theta[j], &nodes, 1);
            let d: f64 = (0..7).map(|k| c[1][k] * g.at(i, lo + k)).sum();
            out[i * nt + j] += 1.5 * (1.0 - s[i]) * (2.0 * theta[j]).sin() * d;
        }
    }
    PolarField::new(grid.clone(), nt, out)
}
