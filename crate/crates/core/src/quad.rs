//! Quadrature and finite-difference weight generators.

/// Gauss–Legendre nodes and weights on [-1, 1].
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut pp = 1.0;
        for _ in 0..100 {
            let (mut p1, mut p2) = (1.0, 0.0);
            for j in 1..=n {
                let p3 = p2;
                p2 = p1;
                p1 = ((2 * j - 1) as f64 * z * p2 - (j - 1) as f64 * p3) / j as f64;
            }
            pp = n as f64 * (z * p1 - p2) / (z * z - 1.0);
            let z1 = z;
            z = z1 - p1 / pp;
            if (z - z1).abs() < 1e-15 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        let wi = 2.0 / ((1.0 - z * z) * pp * pp);
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    (x, w)
}

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut rk = WGK[7] * fc;
    let mut rg = WG[3] * fc;
    for j in 0..7 {
        let dx = h * XGK[j];
        let s = f(c - dx) + f(c + dx);
        rk += WGK[j] * s;
        if j % 2 == 1 {
            rg += WG[j / 2] * s;
        }
    }
    (rk * h, ((rk - rg) * h).abs())
}

/// Adaptive Gauss–Kronrod (7/15) integration of `f` over `[a, b]`.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> f64 {
    fn rec<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64, depth: usize) -> f64 {
        let (v, err) = gk15(f, a, b);
        if err <= tol.max(1e-15 * v.abs()) || depth == 0 {
            return v;
        }
        let m = 0.5 * (a + b);
        rec(f, a, m, 0.5 * tol, depth - 1) + rec(f, m, b, 0.5 * tol, depth - 1)
    }
    if a == b {
        return 0.0;
    }
    rec(&f, a, b, tol, 48)
}

/// Integral over `[a, ∞)` via the substitution `x = a + t/(1-t)`.
pub fn integrate_to_infinity<F: Fn(f64) -> f64>(f: F, a: f64, tol: f64) -> f64 {
    integrate(
        |t: f64| {
            if t >= 1.0 {
                return 0.0;
            }
            let x = a + t / (1.0 - t);
            let j = 1.0 / ((1.0 - t) * (1.0 - t));
            let v = f(x) * j;
            if v.is_finite() {
                v
            } else {
                0.0
            }
        },
        0.0,
        1.0,
        tol,
    )
}

/// Fornberg's algorithm: weights `c[k][j]` such that
/// `f^(k)(z) ≈ Σ_j c[k][j] f(x_j)` for `k = 0..=m`.
pub fn fornberg(z: f64, x: &[f64], m: usize) -> Vec<Vec<f64>> {
    let n = x.len();
    let mut c = vec![vec![0.0; n]; m + 1];
    let mut c1 = 1.0;
    let mut c4 = x[0] - z;
    c[0][0] = 1.0;
    for i in 1..n {
        let mn = i.min(m);
        let mut c2 = 1.0;
        let c5 = c4;
        c4 = x[i] - z;
        for j in 0..i {
            let c3 = x[i] - x[j];
            c2 *= c3;
            if j == i - 1 {
                for k in (1..=mn).rev() {
                    c[k][i] = c1 * (k as f64 * c[k - 1][i - 1] - c5 * c[k][i - 1]) / c2;
                }
                c[0][i] = -c1 * c5 * c[0][i - 1] / c2;
            }
            for k in (1..=mn).rev() {
                c[k][j] = (c4 * c[k][j] - k as f64 * c[k - 1][j]) / c3;
            }
            c[0][j] = c4 * c[0][j] / c3;
        }
        c1 = c2;
    }
    c
}

/// `∫_a^b ℓ_k(x) dx` for the Lagrange basis on `nodes`.
pub fn lagrange_integral_weights(nodes: &[f64], a: f64, b: f64) -> Vec<f64> {
    let p = nodes.len();
    let (gx, gw) = gauss_legendre(p.div_ceil(2) + 1);
    let mut w = vec![0.0; p];
    let (c, h) = (0.5 * (a + b), 0.5 * (b - a));
    for (&t, &wt) in gx.iter().zip(&gw) {
        let x = c + h * t;
        for k in 0..p {
            let mut l = 1.0;
            for j in 0..p {
                if j != k {
                    l *= (x - nodes[j]) / (nodes[k] - nodes[j]);
                }
            }
            w[k] += wt * h * l;
        }
    }
    w
}

/// Piecewise high-order integration on an arbitrary increasing grid: each
/// interval is integrated with the interpolant through `order` nearby nodes.
#[derive(Clone, Debug)]
pub struct CumulativeRule {
    starts: Vec<usize>,
    weights: Vec<Vec<f64>>,
    n: usize,
}

impl CumulativeRule {
    pub fn new(x: &[f64], order: usize) -> Self {
        let n = x.len();
        let p = order.min(n);
        let mut starts = Vec::with_capacity(n.saturating_sub(1));
        let mut weights = Vec::with_capacity(n.saturating_sub(1));
        for i in 0..n.saturating_sub(1) {
            let lo = (i as i64 - (p as i64 / 2 - 1)).clamp(0, (n - p) as i64) as usize;
            starts.push(lo);
            weights.push(lagrange_integral_weights(&x[lo..lo + p], x[i], x[i + 1]));
        }
        CumulativeRule { starts, weights, n }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// Integral over interval `i`, i.e. `[x_i, x_{i+1}]`.
    pub fn interval(&self, f: &[f64], i: usize) -> f64 {
        let s = self.starts[i];
        self.weights[i]
            .iter()
            .zip(&f[s..])
            .map(|(w, v)| w * v)
            .sum()
    }

    /// `out[i] = ∫_{x_i}^{x_last} f`.
    pub fn from_right(&self, f: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n];
        for i in (0..self.n - 1).rev() {
            out[i] = out[i + 1] + self.interval(f, i);
        }
        out
    }

    /// `out[i] = ∫_{x_0}^{x_i} f`.
    pub fn from_left(&self, f: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n];
        for i in 1..self.n {
            out[i] = out[i - 1] + self.interval(f, i - 1);
        }
        out
    }

    /// Weights of the full-interval rule.
    pub fn total_weights(&self) -> Vec<f64> {
        let mut w = vec![0.0; self.n];
        for (s, ws) in self.starts.iter().zip(&self.weights) {
            for (k, v) in ws.iter().enumerate() {
                w[s + k] += v;
            }
        }
        w
    }
}

pub fn trapezoid(x: &[f64], f: &[f64]) -> f64 {
    x.windows(2)
        .zip(f.windows(2))
        .map(|(xw, fw)| 0.5 * (xw[1] - xw[0]) * (fw[0] + fw[1]))
        .sum()
}
