//! Keys cubic-convolution interpolation (a = -1/2) on doubly periodic grids.
//! The kernel reproduces quadratics exactly, so interpolated gradients of
//! quadratic data are exact too.

const A: f64 = -0.5;

fn kernel(s: f64) -> f64 {
    let t = s.abs();
    if t <= 1.0 {
        ((A + 2.0) * t - (A + 3.0)) * t * t + 1.0
    } else if t < 2.0 {
        ((A * t - 5.0 * A) * t + 8.0 * A) * t - 4.0 * A
    } else {
        0.0
    }
}

fn kernel_deriv(s: f64) -> f64 {
    let t = s.abs();
    let g = if t <= 1.0 {
        (3.0 * (A + 2.0) * t - 2.0 * (A + 3.0)) * t
    } else if t < 2.0 {
        (3.0 * A * t - 10.0 * A) * t + 8.0 * A
    } else {
        0.0
    };
    g * s.signum()
}

/// Sample layout for interpolation: node (i, j) sits at (x0 + i dx, y0 + j dy),
/// values stored row-major with period `nx` in x and `ny` in y.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PeriodicLattice {
    pub nx: usize,
    pub ny: usize,
    pub x0: f64,
    pub y0: f64,
    pub dx: f64,
    pub dy: f64,
}

impl PeriodicLattice {
    fn locate(&self, x: f64, y: f64) -> (i64, f64, i64, f64) {
        let fx = (x - self.x0) / self.dx;
        let fy = (y - self.y0) / self.dy;
        let ix = fx.floor();
        let iy = fy.floor();
        (ix as i64, fx - ix, iy as i64, fy - iy)
    }

    fn at(&self, v: &[f64], i: i64, j: i64) -> f64 {
        let i = i.rem_euclid(self.nx as i64) as usize;
        let j = j.rem_euclid(self.ny as i64) as usize;
        v[j * self.nx + i]
    }

    pub fn value(&self, v: &[f64], x: f64, y: f64) -> f64 {
        let (ix, tx, iy, ty) = self.locate(x, y);
        let mut s = 0.0;
        for b in -1..=2 {
            let wy = kernel(ty - b as f64);
            let mut row = 0.0;
            for a in -1..=2 {
                row += kernel(tx - a as f64) * self.at(v, ix + a, iy + b);
            }
            s += wy * row;
        }
        s
    }

    /// Value and gradient (∂x, ∂y) of the interpolant.
    pub fn value_grad(&self, v: &[f64], x: f64, y: f64) -> (f64, f64, f64) {
        let (ix, tx, iy, ty) = self.locate(x, y);
        let (mut s, mut gx, mut gy) = (0.0, 0.0, 0.0);
        for b in -1..=2 {
            let wy = kernel(ty - b as f64);
            let dwy = kernel_deriv(ty - b as f64);
            for a in -1..=2 {
                let f = self.at(v, ix + a, iy + b);
                let wx = kernel(tx - a as f64);
                let dwx = kernel_deriv(tx - a as f64);
                s += wx * wy * f;
                gx += dwx * wy * f;
                gy += wx * dwy * f;
            }
        }
        (s, gx / self.dx, gy / self.dy)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reproduces_nodes_and_quadratics() {
        let lat = PeriodicLattice {
            nx: 32,
            ny: 32,
            x0: -1.0,
            y0: -1.0,
            dx: 0.0625,
            dy: 0.0625,
        };
        let mut v = vec![0.0; 32 * 32];
        for j in 0..32 {
            for i in 0..32 {
                let x = -1.0 + i as f64 * 0.0625;
                let y = -1.0 + j as f64 * 0.0625;
                v[j * 32 + i] = 0.5 * x * x + x * y - 0.25 * y * y + 0.1;
            }
        }
        assert!((lat.value(&v, -1.0 + 3.0 * 0.0625, -1.0 + 5.0 * 0.0625) - v[5 * 32 + 3]).abs() < 1e-15);
        let (x, y) = (0.123, -0.311);
        let (f, fx, fy) = lat.value_grad(&v, x, y);
        assert!((f - (0.5 * x * x + x * y - 0.25 * y * y + 0.1)).abs() < 1e-13);
        assert!((fx - (x + y)).abs() < 1e-12);
        assert!((fy - (x - 0.5 * y)).abs() < 1e-12);
    }
}
