//! Small statistics helpers and the named-metric record shared by all solvers.

/// A time-stamped set of named scalar metrics.
#[derive(Clone, Debug, PartialEq)]
pub struct DiagnosticRecord {
    pub t: f64,
    pub metrics: Vec<(String, f64)>,
}

impl DiagnosticRecord {
    pub fn new(t: f64) -> Self {
        DiagnosticRecord {
            t,
            metrics: Vec::new(),
        }
    }

    pub fn push(&mut self, name: &str, value: f64) {
        self.metrics.push((name.to_string(), value));
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        self.metrics
            .iter()
            .find(|(k, _)| k == name)
            .map(|(_, v)| *v)
    }

    pub fn names(&self) -> Vec<&str> {
        self.metrics.iter().map(|(k, _)| k.as_str()).collect()
    }
}

/// Least-squares line `y = a + b x`; returns `(a, b)`.
pub fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    let b = sxy / sxx;
    (my - b * mx, b)
}

/// Slope of `ln y` against `ln x`.
pub fn loglog_slope(x: &[f64], y: &[f64]) -> f64 {
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    linear_fit(&lx, &ly).1
}

pub fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .fold(0.0f64, |m, (x, y)| m.max((x - y).abs()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fits_exact_line() {
        let x = [0.0, 1.0, 2.0, 3.0];
        let y: Vec<f64> = x.iter().map(|v| 2.0 - 0.5 * v).collect();
        let (a, b) = linear_fit(&x, &y);
        assert!((a - 2.0).abs() < 1e-14 && (b + 0.5).abs() < 1e-14);
        let y2: Vec<f64> = [1.0f64, 2.0, 4.0].iter().map(|v| 3.0 * v.powf(1.5)).collect();
        assert!((loglog_slope(&[1.0, 2.0, 4.0], &y2) - 1.5).abs() < 1e-12);
    }
}

/// How a time integration ended.
#[derive(Clone, Debug, PartialEq)]
pub enum RunStatus {
    Completed,
    /// The blow-up guard stopped the run.
    ResolutionExceeded { t: f64, max: f64 },
}

/// Blow-up time from a linear fit of `1/max` against `t`, restricted to
/// samples with `lo ≤ max ≤ hi`. Needs at least three samples.
pub fn fit_blowup_time(series: &[(f64, f64)], lo: f64, hi: f64) -> Option<f64> {
    let (t, inv): (Vec<f64>, Vec<f64>) = series
        .iter()
        .filter(|(_, m)| *m >= lo && *m <= hi)
        .map(|(t, m)| (*t, 1.0 / m))
        .unzip();
    if t.len() < 3 {
        return None;
    }
    let (a, b) = linear_fit(&t, &inv);
    (b < 0.0).then(|| -a / b)
}
