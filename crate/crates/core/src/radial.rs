//! Radial grids on `[0, ∞]` and sampled radial profiles.
//!
//! Algebraic and Chebyshev grids use the compactifying coordinate
//! `s ∈ [0, 1]`, `R = s/(1 - s)`, so `R·d/dR = s(1 - s)·d/ds` and the node
//! `s = 1` stands for `R = ∞`. The log-uniform grid uses `x = ln R`.

use crate::error::{check_finite, Error, Result};
use crate::quad::fornberg;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum RadialMap {
    Algebraic,
    LogUniform { ln_min: f64, ln_max: f64 },
    Chebyshev,
}

impl RadialMap {
    /// Identifier written to snapshot headers.
    pub fn id(&self) -> u8 {
        match self {
            RadialMap::Algebraic => 1,
            RadialMap::LogUniform { .. } => 2,
            RadialMap::Chebyshev => 3,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RadialGrid {
    map: RadialMap,
    /// Computational coordinate (`s` or `ln R`).
    s: Vec<f64>,
    r: Vec<f64>,
}

impl RadialGrid {
    /// `n` uniform nodes in `s ∈ [0, 1]`, both ends included.
    pub fn algebraic(n: usize) -> Result<Self> {
        if n < 9 {
            return Err(Error::InvalidGrid(format!("algebraic radial grid needs n >= 9, got {n}")));
        }
        let s: Vec<f64> = (0..n).map(|i| i as f64 / (n - 1) as f64).collect();
        Ok(Self::from_s(RadialMap::Algebraic, s))
    }

    /// Chebyshev–Lobatto nodes in `s ∈ [0, 1]`, increasing.
    pub fn chebyshev(n: usize) -> Result<Self> {
        if n < 5 {
            return Err(Error::InvalidGrid(format!("Chebyshev radial grid needs n >= 5, got {n}")));
        }
        let s = crate::chebyshev::lobatto_unit(n);
        Ok(Self::from_s(RadialMap::Chebyshev, s))
    }

    pub fn log_uniform(n: usize, r_min: f64, r_max: f64) -> Result<Self> {
        if n < 9 || !(r_min > 0.0) || !(r_max > r_min) {
            return Err(Error::InvalidGrid(format!(
                "log grid needs n >= 9 and 0 < r_min < r_max (n={n}, [{r_min}, {r_max}])"
            )));
        }
        let (a, b) = (r_min.ln(), r_max.ln());
        let s: Vec<f64> = (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect();
        let r = s.iter().map(|x| x.exp()).collect();
        Ok(RadialGrid {
            map: RadialMap::LogUniform { ln_min: a, ln_max: b },
            s,
            r,
        })
    }

    fn from_s(map: RadialMap, s: Vec<f64>) -> Self {
        let r = s
            .iter()
            .map(|&s| if s >= 1.0 { f64::INFINITY } else { s / (1.0 - s) })
            .collect();
        RadialGrid { map, s, r }
    }

    pub fn map(&self) -> RadialMap {
        self.map
    }

    pub fn n(&self) -> usize {
        self.s.len()
    }

    pub fn s(&self) -> &[f64] {
        &self.s
    }

    pub fn r(&self) -> &[f64] {
        &self.r
    }

    pub fn is_compactified(&self) -> bool {
        !matches!(self.map, RadialMap::LogUniform { .. })
    }

    /// Local finite-difference weights for derivative order `m` at node `i`
    /// using `width` neighbouring nodes (shifted near the ends).
    pub fn fd_weights(&self, i: usize, m: usize, width: usize) -> (usize, Vec<f64>) {
        let n = self.n();
        let w = width.min(n);
        let lo = (i as i64 - (w / 2) as i64).clamp(0, (n - w) as i64) as usize;
        let c = fornberg(self.s[i], &self.s[lo..lo + w], m);
        (lo, c[m].clone())
    }

    /// Derivative in the computational coordinate.
    pub fn derivative(&self, f: &[f64], width: usize) -> Vec<f64> {
        (0..self.n())
            .map(|i| {
                let (lo, w) = self.fd_weights(i, 1, width);
                w.iter().zip(&f[lo..]).map(|(w, v)| w * v).sum()
            })
            .collect()
    }

    /// `R·f'(R)` at every node.
    pub fn r_dr(&self, f: &[f64], width: usize) -> Vec<f64> {
        let d = self.derivative(f, width);
        if self.is_compactified() {
            d.iter().zip(&self.s).map(|(d, s)| s * (1.0 - s) * d).collect()
        } else {
            d
        }
    }

    /// Value at the end node `i ∈ {0, n-1}` extrapolated from the next
    /// `width` interior nodes.
    pub fn extrapolate_end(&self, f: &[f64], at_start: bool, width: usize) -> f64 {
        let n = self.n();
        let w = width.min(n - 1);
        let (z, nodes, vals) = if at_start {
            (self.s[0], &self.s[1..=w], &f[1..=w])
        } else {
            (self.s[n - 1], &self.s[n - 1 - w..n - 1], &f[n - 1 - w..n - 1])
        };
        let c = fornberg(z, nodes, 0);
        c[0].iter().zip(vals).map(|(c, v)| c * v).sum()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Profile1D {
    pub grid: RadialGrid,
    pub values: Vec<f64>,
}

impl Profile1D {
    pub fn new(grid: RadialGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.n() {
            return Err(Error::InvalidGrid(format!(
                "profile has {} values for {} nodes",
                values.len(),
                grid.n()
            )));
        }
        check_finite(&values)?;
        Ok(Profile1D { grid, values })
    }

    /// Samples `f(R)`; the node at `R = ∞` takes `at_infinity`.
    pub fn from_fn<F: Fn(f64) -> f64>(grid: &RadialGrid, f: F, at_infinity: f64) -> Result<Self> {
        let values = grid
            .r()
            .iter()
            .map(|&r| if r.is_finite() { f(r) } else { at_infinity })
            .collect();
        Self::new(grid.clone(), values)
    }

    pub fn zeros(grid: &RadialGrid) -> Self {
        Profile1D {
            grid: grid.clone(),
            values: vec![0.0; grid.n()],
        }
    }

    pub fn max_abs(&self) -> f64 {
        crate::stats::max_abs(&self.values)
    }
}
