//! Chebyshev–Lobatto collocation on `[0, 1]`.

use std::f64::consts::PI;

/// Increasing Lobatto nodes `s_k = (1 - cos(πk/(n-1)))/2`.
pub fn lobatto_unit(n: usize) -> Vec<f64> {
    let m = (n - 1) as f64;
    (0..n)
        .map(|k| {
            // sin² form keeps the ends exact and symmetric
            let a = 0.5 * PI * k as f64 / m;
            a.sin().powi(2)
        })
        .collect()
}

/// Dense differentiation matrix on the nodes `x` (barycentric formula,
/// diagonal by negative row sums).
pub fn diff_matrix(x: &[f64]) -> Vec<Vec<f64>> {
    let n = x.len();
    let w = barycentric_weights(x);
    let mut d = vec![vec![0.0; n]; n];
    for i in 0..n {
        let mut diag = 0.0;
        for j in 0..n {
            if i != j {
                d[i][j] = w[j] / w[i] / (x[i] - x[j]);
                diag -= d[i][j];
            }
        }
        d[i][i] = diag;
    }
    d
}

pub fn barycentric_weights(x: &[f64]) -> Vec<f64> {
    let n = x.len();
    let mut w = vec![1.0; n];
    for j in 0..n {
        for k in 0..n {
            if k != j {
                w[j] /= x[j] - x[k];
            }
        }
    }
    // rescale to avoid under/overflow for large n
    let m = w.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    w.iter().map(|v| v / m).collect()
}

/// Barycentric interpolation of nodal values at `t`.
pub fn interpolate(x: &[f64], w: &[f64], f: &[f64], t: f64) -> f64 {
    let (mut num, mut den) = (0.0, 0.0);
    for j in 0..x.len() {
        let d = t - x[j];
        if d == 0.0 {
            return f[j];
        }
        let c = w[j] / d;
        num += c * f[j];
        den += c;
    }
    num / den
}

/// Clenshaw–Curtis weights for the Lobatto nodes on `[0, 1]`.
pub fn clenshaw_curtis_unit(n: usize) -> Vec<f64> {
    let m = n - 1;
    let mut w = vec![0.0; n];
    for (k, wk) in w.iter_mut().enumerate() {
        let theta = PI * k as f64 / m as f64;
        let mut s = 0.0;
        for j in 0..=m / 2 {
            let b = if j == 0 || 2 * j == m { 1.0 } else { 2.0 };
            let denom = 1.0 - 4.0 * (j * j) as f64;
            s += b / denom * (2.0 * j as f64 * theta).cos();
        }
        let c = if k == 0 || k == m { 1.0 } else { 2.0 };
        // on [-1,1] the weight is c/m · s; halve for [0,1]
        *wk = 0.5 * c / m as f64 * s;
    }
    w
}
