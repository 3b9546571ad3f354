use crate::error::{Error, Result};
use crate::grid::Grid2D;
use crate::interp::PeriodicLattice;

type Point = [f64; 2];

/// Velocity sampled on the periodic computational grid at one instant.
#[derive(Clone, Debug, PartialEq)]
pub struct VelocitySnapshot {
    pub t: f64,
    pub grid: Grid2D,
    pub u: Vec<f64>,
    pub v: Vec<f64>,
    lattice: PeriodicLattice,
}

impl VelocitySnapshot {
    /// `u`, `v` are given on `nx × ext_rows` nodes (reflected rows included
    /// for the channel).
    pub fn new(grid: Grid2D, t: f64, u: Vec<f64>, v: Vec<f64>) -> Self {
        let lattice = PeriodicLattice {
            nx: grid.nx,
            ny: grid.ext_rows(),
            x0: grid.x0,
            y0: grid.y0,
            dx: grid.dx(),
            dy: grid.dy(),
        };
        VelocitySnapshot { t, grid, u, v, lattice }
    }

    /// Snapshot of an analytic velocity field.
    pub fn from_fn<F: Fn(f64, f64) -> (f64, f64)>(grid: Grid2D, t: f64, f: F) -> Self {
        let (nx, nye) = (grid.nx, grid.ext_rows());
        let mut u = vec![0.0; nx * nye];
        let mut v = vec![0.0; nx * nye];
        for j in 0..nye {
            let (y, sign) = if grid.is_channel() && j > grid.ny {
                (grid.y0 + (2 * grid.ny - j) as f64 * grid.dy(), -1.0)
            } else {
                (grid.y(j), 1.0)
            };
            for i in 0..nx {
                let (a, b) = f(grid.x(i), y);
                u[j * nx + i] = a;
                v[j * nx + i] = sign * b;
            }
        }
        Self::new(grid, t, u, v)
    }

    pub fn velocity(&self, p: Point) -> Point {
        [
            self.lattice.value(&self.u, p[0], p[1]),
            self.lattice.value(&self.v, p[0], p[1]),
        ]
    }
}

/// Classical RK4 over `[s0.t, s1.t]` using `mid` for the two middle stages.
pub fn advect_markers(
    points: &mut [Point],
    s0: &VelocitySnapshot,
    mid: &VelocitySnapshot,
    s1: &VelocitySnapshot,
) {
    let h = s1.t - s0.t;
    for p in points.iter_mut() {
        let k1 = s0.velocity(*p);
        let k2 = mid.velocity([p[0] + 0.5 * h * k1[0], p[1] + 0.5 * h * k1[1]]);
        let k3 = mid.velocity([p[0] + 0.5 * h * k2[0], p[1] + 0.5 * h * k2[1]]);
        let k4 = s1.velocity([p[0] + h * k3[0], p[1] + h * k3[1]]);
        p[0] += h / 6.0 * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0]);
        p[1] += h / 6.0 * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1]);
    }
}

fn clamp_to_channel(points: &mut [Point], grid: &Grid2D, tol: f64) -> Result<()> {
    if !grid.is_channel() {
        return Ok(());
    }
    let (lo, hi) = (grid.y0, grid.y0 + grid.ly());
    for p in points.iter_mut() {
        let excess = (lo - p[1]).max(p[1] - hi);
        if excess > tol {
            return Err(Error::MarkerEscaped { excess });
        }
        p[1] = p[1].clamp(lo, hi);
    }
    Ok(())
}

/// Inserts Catmull–Rom midpoints until no segment exceeds `max_len`.
fn refine(curve: &mut Vec<Point>, max_len: f64, max_markers: usize) {
    loop {
        let n = curve.len();
        if n < 2 || n >= max_markers {
            return;
        }
        let mut out = Vec::with_capacity(n * 2);
        let mut changed = false;
        for i in 0..n - 1 {
            let p1 = curve[i];
            let p2 = curve[i + 1];
            out.push(p1);
            let len = ((p2[0] - p1[0]).powi(2) + (p2[1] - p1[1]).powi(2)).sqrt();
            if len > max_len && out.len() + (n - i) < max_markers {
                let p0 = if i > 0 { curve[i - 1] } else { p1 };
                let p3 = if i + 2 < n { curve[i + 2] } else { p2 };
                let m = [
                    (-p0[0] + 9.0 * p1[0] + 9.0 * p2[0] - p3[0]) / 16.0,
                    (-p0[1] + 9.0 * p1[1] + 9.0 * p2[1] - p3[1]) / 16.0,
                ];
                out.push(m);
                changed = true;
            }
        }
        out.push(curve[n - 1]);
        *curve = out;
        if !changed {
            return;
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CurveHistory {
    pub times: Vec<f64>,
    pub curves: Vec<Vec<Point>>,
}

/// Streaming marker advection: feed velocity snapshots at uniform spacing;
/// each pair of new snapshots advances the curves by one RK4 step.
#[derive(Clone, Debug)]
pub struct CurveTracker {
    pub curves: Vec<Vec<Point>>,
    pub t: f64,
    pub max_segment: Option<f64>,
    pub wall_tol: f64,
    pub max_markers: usize,
    prev: Option<VelocitySnapshot>,
    mid: Option<VelocitySnapshot>,
}

impl CurveTracker {
    pub fn new(curves: Vec<Vec<Point>>, max_segment: Option<f64>) -> Self {
        CurveTracker {
            curves,
            t: f64::NAN,
            max_segment,
            wall_tol: 1e-6,
            max_markers: 200_000,
            prev: None,
            mid: None,
        }
    }

    /// Returns `true` when the curves were advanced to the snapshot's time.
    pub fn push(&mut self, s: VelocitySnapshot) -> Result<bool> {
        match (&self.prev, &self.mid) {
            (None, _) => {
                self.t = s.t;
                self.prev = Some(s);
                Ok(true)
            }
            (Some(_), None) => {
                self.mid = Some(s);
                Ok(false)
            }
            (Some(p), Some(m)) => {
                let h1 = m.t - p.t;
                let h2 = s.t - m.t;
                if (h1 - h2).abs() > 1e-9 * h1.abs().max(1.0) {
                    return Err(Error::InvalidArgument(format!(
                        "tracer snapshots must be equally spaced ({h1} vs {h2})"
                    )));
                }
                for c in self.curves.iter_mut() {
                    advect_markers(c, p, m, &s);
                    clamp_to_channel(c, &s.grid, self.wall_tol)?;
                    if let Some(len) = self.max_segment {
                        refine(c, len, self.max_markers);
                    }
                }
                self.t = s.t;
                self.prev = Some(s);
                self.mid = None;
                Ok(true)
            }
        }
    }
}

/// Advects `curve` through a uniformly spaced velocity history with an odd
/// number of snapshots; positions are returned at every other snapshot.
pub fn advect_curve(
    history: &[VelocitySnapshot],
    curve: &[Point],
    max_segment: Option<f64>,
) -> Result<CurveHistory> {
    if history.is_empty() || history.len() % 2 == 0 {
        return Err(Error::InvalidArgument(
            "velocity history must contain an odd number of snapshots".into(),
        ));
    }
    if let Some(g) = history.first().map(|s| s.grid) {
        if g.is_channel() {
            let (lo, hi) = (g.y0, g.y0 + g.ly());
            if curve.iter().any(|p| p[1] < lo - 1e-12 || p[1] > hi + 1e-12) {
                return Err(Error::InvalidArgument("curve starts outside the channel".into()));
            }
        }
    }
    let mut tracker = CurveTracker::new(vec![curve.to_vec()], max_segment);
    let mut out = CurveHistory {
        times: Vec::new(),
        curves: Vec::new(),
    };
    for s in history {
        if tracker.push(s.clone())? {
            out.times.push(tracker.t);
            out.curves.push(tracker.curves[0].clone());
        }
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CurveDistance {
    pub distance: f64,
    pub point_a: Point,
    pub point_b: Point,
}

fn point_segment(p: Point, a: Point, b: Point) -> (f64, Point) {
    let (dx, dy) = (b[0] - a[0], b[1] - a[1]);
    let l2 = dx * dx + dy * dy;
    let t = if l2 == 0.0 {
        0.0
    } else {
        (((p[0] - a[0]) * dx + (p[1] - a[1]) * dy) / l2).clamp(0.0, 1.0)
    };
    let q = [a[0] + t * dx, a[1] + t * dy];
    (((p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2)).sqrt(), q)
}

fn segment_segment(p1: Point, p2: Point, q1: Point, q2: Point) -> (f64, Point, Point) {
    let r = [p2[0] - p1[0], p2[1] - p1[1]];
    let s = [q2[0] - q1[0], q2[1] - q1[1]];
    let den = r[0] * s[1] - r[1] * s[0];
    if den != 0.0 {
        let qp = [q1[0] - p1[0], q1[1] - p1[1]];
        let t = (qp[0] * s[1] - qp[1] * s[0]) / den;
        let u = (qp[0] * r[1] - qp[1] * r[0]) / den;
        if (0.0..=1.0).contains(&t) && (0.0..=1.0).contains(&u) {
            let x = [p1[0] + t * r[0], p1[1] + t * r[1]];
            return (0.0, x, x);
        }
    }
    let mut best = (f64::INFINITY, p1, q1);
    for (pt, a, b, first) in [(p1, q1, q2, true), (p2, q1, q2, true), (q1, p1, p2, false), (q2, p1, p2, false)] {
        let (d, q) = point_segment(pt, a, b);
        if d < best.0 {
            best = if first { (d, pt, q) } else { (d, q, pt) };
        }
    }
    best
}

fn bbox(a: Point, b: Point) -> [f64; 4] {
    [a[0].min(b[0]), a[0].max(b[0]), a[1].min(b[1]), a[1].max(b[1])]
}

/// Minimal distance between two polylines, over all x-translates of `b` by
/// multiples of `period_x` when given (distance on the periodic cover).
pub fn curve_distance(a: &[Point], b: &[Point], period_x: Option<f64>) -> CurveDistance {
    let range = |c: &[Point]| {
        c.iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| (lo.min(p[0]), hi.max(p[0])))
    };
    let shifts: Vec<f64> = match period_x {
        Some(l) => {
            let (amin, amax) = range(a);
            let (bmin, bmax) = range(b);
            let k0 = ((amin - bmax) / l).floor() as i64 - 1;
            let k1 = ((amax - bmin) / l).ceil() as i64 + 1;
            (k0..=k1).map(|k| k as f64 * l).collect()
        }
        None => vec![0.0],
    };
    let mut best = CurveDistance {
        distance: f64::INFINITY,
        point_a: a[0],
        point_b: b[0],
    };
    let boxes_a: Vec<[f64; 4]> = a.windows(2).map(|w| bbox(w[0], w[1])).collect();
    for &sh in &shifts {
        let bs: Vec<Point> = b.iter().map(|p| [p[0] + sh, p[1]]).collect();
        let boxes_b: Vec<[f64; 4]> = bs.windows(2).map(|w| bbox(w[0], w[1])).collect();
        for (ia, ba) in boxes_a.iter().enumerate() {
            for (ib, bb) in boxes_b.iter().enumerate() {
                let gap_x = (bb[0] - ba[1]).max(ba[0] - bb[1]);
                let gap_y = (bb[2] - ba[3]).max(ba[2] - bb[3]);
                if gap_x >= best.distance || gap_y >= best.distance {
                    continue;
                }
                let (d, pa, pb) = segment_segment(a[ia], a[ia + 1], bs[ib], bs[ib + 1]);
                if d < best.distance {
                    best = CurveDistance {
                        distance: d,
                        point_a: pa,
                        point_b: pb,
                    };
                }
            }
        }
    }
    best
}
