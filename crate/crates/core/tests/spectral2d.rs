use std::f64::consts::PI;
use vortexlab::grid::{Field2D, Grid2D};
use vortexlab::quad::integrate;
use vortexlab::spectral2d::*;
use vortexlab::stats::max_abs_diff;

fn torus(n: usize) -> Grid2D {
    Grid2D::torus(2.0 * PI, 2.0 * PI, n, n).unwrap()
}

fn smooth_random(grid: Grid2D, seed: u64) -> Field2D {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut modes = Vec::new();
    for kx in -3i32..=3 {
        for ky in -3i32..=3 {
            if kx == 0 && ky == 0 {
                continue;
            }
            let amp = rng.gen_range(-1.0..1.0) / (1.0 + (kx * kx + ky * ky) as f64);
            let ph = rng.gen_range(0.0..2.0 * PI);
            modes.push((kx as f64, ky as f64, amp, ph));
        }
    }
    Field2D::from_fn(grid, |x, y| {
        modes.iter().map(|&(a, b, c, p)| c * (a * x + b * y + p).cos()).sum()
    })
}

#[test]
fn cellular_biot_savart_matches_closed_form() {
    let g = torus(32);
    let w = Field2D::from_fn(g, |x, y| 2.0 * x.sin() * y.sin());
    let v = biot_savart(&w).unwrap();
    let psi = Field2D::from_fn(g, |x, y| -x.sin() * y.sin());
    let u = Field2D::from_fn(g, |x, y| x.sin() * y.cos());
    let vv = Field2D::from_fn(g, |x, y| -x.cos() * y.sin());
    assert!(max_abs_diff(&v.psi.values, &psi.values) < 1e-13);
    assert!(max_abs_diff(&v.u.values, &u.values) < 1e-13);
    assert!(max_abs_diff(&v.v.values, &vv.values) < 1e-13);
}

#[test]
fn zero_vorticity_gives_zero_flow() {
    let v = biot_savart(&Field2D::zeros(torus(16))).unwrap();
    assert_eq!(v.psi.max_abs(), 0.0);
    assert_eq!(v.u.max_abs(), 0.0);
    assert_eq!(v.v.max_abs(), 0.0);
}

#[test]
fn laplacian_round_trip() {
    let g = torus(32);
    let w = Field2D::from_fn(g, |x, y| (3.0 * x).sin() * (2.0 * y).sin());
    let v = biot_savart(&w).unwrap();
    let expected = Field2D::from_fn(g, |x, y| -(3.0 * x).sin() * (2.0 * y).sin() / 13.0);
    assert!(max_abs_diff(&v.psi.values, &expected.values) < 1e-14);
    let back = laplacian(&v.psi);
    assert!(max_abs_diff(&back.values, &w.values) < 1e-12);
}

#[test]
fn rejects_bad_vorticity() {
    let g = torus(16);
    let w = Field2D::from_fn(g, |x, _| 1.0 + x.sin());
    assert!(matches!(biot_savart(&w), Err(vortexlab::Error::NotMeanFree { .. })));
    let mut w = Field2D::zeros(g);
    w.values[3] = f64::NAN;
    assert!(matches!(biot_savart(&w), Err(vortexlab::Error::NonFinite)));
    let c = Grid2D::channel(2.0 * PI, 1.0, 16, 16).unwrap();
    let w = Field2D::from_fn(c, |x, _| x.cos());
    assert!(matches!(biot_savart(&w), Err(vortexlab::Error::NotSineRepresentable { .. })));
}

#[test]
fn channel_stream_function_vanishes_on_walls() {
    let g = Grid2D::channel(2.0 * PI, 1.0, 32, 32).unwrap();
    let w = Field2D::from_fn(g, |x, y| (PI * y).sin() * (1.0 + x.cos()) + (3.0 * PI * y).sin());
    let v = biot_savart(&w).unwrap();
    let nx = g.nx;
    for i in 0..nx {
        assert!(v.psi.values[i].abs() < 1e-14);
        assert!(v.psi.values[g.ny * nx + i].abs() < 1e-14);
        assert!(v.v.values[g.ny * nx + i].abs() < 1e-13);
    }
    let back = laplacian(&v.psi);
    assert!(max_abs_diff(&back.values, &w.values) < 1e-12);
}

#[test]
fn steady_states_have_zero_tendency() {
    let cfg = SolverConfig::default();
    let g = torus(64);
    let s = EulerState::new(Field2D::from_fn(g, |x, y| -2.0 * x.sin() * y.sin())).unwrap();
    assert!(tendency(&s, &cfg).unwrap().field.max_abs() < 1e-10);
    let s = EulerState::new(Field2D::from_fn(g, |_, y| y.sin())).unwrap();
    assert!(tendency(&s, &cfg).unwrap().field.max_abs() < 1e-10);
    let s = EulerState::new(Field2D::zeros(g)).unwrap();
    assert_eq!(tendency(&s, &cfg).unwrap().field.max_abs(), 0.0);
}

#[test]
fn cfl_violation_is_recorded_not_fatal() {
    let g = torus(32);
    let s = EulerState::new(Field2D::from_fn(g, |x, y| 2.0 * x.sin() * y.sin())).unwrap();
    let cfg = SolverConfig { dt: 0.5, ..Default::default() };
    let t = tendency(&s, &cfg).unwrap();
    assert!(t.cfl > 1.0 && t.warning.is_some());
}

#[test]
fn cellular_state_stays_put() {
    let g = torus(32);
    let w0 = Field2D::from_fn(g, |x, y| -2.0 * x.sin() * y.sin());
    let s = EulerState::new(w0.clone()).unwrap();
    let cfg = SolverConfig { dt: 1e-3, end_time: 1.0, ..Default::default() };
    let mut solver = EulerSolver::new(&s, cfg).unwrap();
    for _ in 0..1000 {
        solver.step().unwrap();
    }
    let st = solver.state();
    assert!(max_abs_diff(&st.omega.values, &w0.values) < 1e-8);
    assert!((st.t - 1.0).abs() < 1e-12);
}

#[test]
fn inviscid_run_conserves_invariants_and_mean_velocity() {
    let g = torus(64);
    let s = EulerState::new(smooth_random(g, 7)).unwrap().with_mean_velocity([0.3, -0.2]);
    let cfg = SolverConfig { dt: 2e-3, end_time: 0.5, ..Default::default() };
    let dcfg = DiagnosticsConfig { holder_pairs: 1000, ..Default::default() };
    let d0 = diagnostics(&s, &dcfg).unwrap();
    let sup0 = spectral_max_abs(&s.omega);
    let mut solver = EulerSolver::new(&s, cfg).unwrap();
    for _ in 0..250 {
        solver.step().unwrap();
    }
    let st = solver.state();
    assert_eq!(st.mean_velocity[0].to_bits(), 0.3f64.to_bits());
    assert_eq!(st.mean_velocity[1].to_bits(), (-0.2f64).to_bits());
    let d1 = diagnostics(&st, &dcfg).unwrap();
    for name in ["energy", "enstrophy", "casimir"] {
        let (a, b) = (d0.get(name).unwrap(), d1.get(name).unwrap());
        assert!(((b - a) / a).abs() < 1e-6, "{name}: {a} -> {b}");
    }
    assert!(spectral_max_abs(&st.omega) <= sup0 * (1.0 + 1e-6));
    assert!(d1.get("bkm_integral").unwrap() > 0.0);
}

#[test]
fn energy_drift_converges_at_fourth_order() {
    let g = torus(32);
    let s = EulerState::new(smooth_random(g, 3)).unwrap();
    let dcfg = DiagnosticsConfig { holder_pairs: 0, ..Default::default() };
    let e0 = diagnostics(&s, &dcfg).unwrap().get("energy").unwrap();
    let drift = |dt: f64| {
        let cfg = SolverConfig { dt, end_time: 1.0, ..Default::default() };
        let mut solver = EulerSolver::new(&s, cfg.clone()).unwrap();
        for _ in 0..cfg.steps() {
            solver.step().unwrap();
        }
        let e1 = diagnostics(&solver.state(), &dcfg).unwrap().get("energy").unwrap();
        ((e1 - e0) / e0).abs()
    };
    let (a, b) = (drift(0.1), drift(0.05));
    let slope = (a / b).log2();
    assert!(slope >= 3.5, "drift {a:e} -> {b:e}, slope {slope}");
}

#[test]
fn viscous_enstrophy_never_increases() {
    let g = torus(32);
    let s = EulerState::new(smooth_random(g, 11)).unwrap();
    let cfg = SolverConfig { dt: 5e-3, nu: 1e-2, end_time: 0.5, ..Default::default() };
    let dcfg = DiagnosticsConfig { holder_pairs: 0, ..Default::default() };
    let mut solver = EulerSolver::new(&s, cfg).unwrap();
    let mut prev = diagnostics(&s, &dcfg).unwrap().get("enstrophy").unwrap();
    for _ in 0..100 {
        solver.step().unwrap();
        let z = diagnostics(&solver.state(), &dcfg).unwrap().get("enstrophy").unwrap();
        assert!(z <= prev);
        prev = z;
    }
}

#[test]
fn blowup_guard_trips() {
    let g = torus(16);
    let s = EulerState::new(smooth_random(g, 1)).unwrap();
    let cfg = SolverConfig { dt: 1e-2, blowup_factor: 1.0 + 1e-12, ..Default::default() };
    let mut solver = EulerSolver::new(&s, cfg).unwrap();
    let mut err = None;
    for _ in 0..200 {
        if let Err(e) = solver.step() {
            err = Some(e);
            break;
        }
    }
    assert!(matches!(err, Some(vortexlab::Error::ResolutionExceeded { .. })));
}

#[test]
fn shear_energy_matches_quadrature() {
    let g = torus(32);
    let s = EulerState::new(Field2D::from_fn(g, |_, y| y.sin())).unwrap();
    let d = diagnostics(&s, &DiagnosticsConfig::default()).unwrap();
    let oracle = 0.5 * 2.0 * PI * integrate(|y: f64| y.cos().powi(2), 0.0, 2.0 * PI, 1e-14);
    assert!((d.get("energy").unwrap() - oracle).abs() < 1e-12);
    let z = diagnostics(&EulerState::new(Field2D::zeros(g)).unwrap(), &DiagnosticsConfig::default()).unwrap();
    for (name, v) in &z.metrics {
        assert_eq!(*v, 0.0, "{name}");
    }
}

#[test]
fn casimir_table_matches_power() {
    let t = Casimir::table_from_fn(-3.0, 3.0, 2001, |s| s.powi(4));
    for s in [-2.9, -1.234, 0.0, 0.77, 2.5] {
        assert!((t.eval(s) - s.powi(4)).abs() < 1e-6);
    }
}

#[test]
fn couette_line_tilts_linearly() {
    let g = Grid2D::channel(2.0 * PI, 1.0, 32, 16).unwrap();
    let s = EulerState::new(Field2D::zeros(g)).unwrap().with_background_shear(1.0);
    let cfg = SolverConfig { dt: 0.01, end_time: 2.0, ..Default::default() };
    let mut solver = EulerSolver::new(&s, cfg).unwrap();
    let line: Vec<[f64; 2]> = (0..=16).map(|k| [-PI / 2.0, k as f64 / 16.0]).collect();
    let mut history = vec![solver.velocity_snapshot()];
    for _ in 0..200 {
        solver.step().unwrap();
        history.push(solver.velocity_snapshot());
    }
    let out = advect_curve(&history, &line, None).unwrap();
    let last = out.curves.last().unwrap();
    let t = *out.times.last().unwrap();
    assert!((t - 2.0).abs() < 1e-12);
    assert!(((last[16][0] - last[0][0]) - t).abs() < 1e-10);
    for p in last {
        assert!((p[0] - (-PI / 2.0 + t * p[1])).abs() < 1e-10);
    }
    let still = advect_curve(
        &[0.0, 0.5, 1.0].map(|t| VelocitySnapshot::from_fn(g, t, |_, _| (0.0, 0.0))),
        &line,
        None,
    )
    .unwrap();
    assert_eq!(still.curves[1], line);
}

#[test]
fn curve_distance_on_periodic_cover() {
    let a = vec![[0.0, 0.0], [0.0, 1.0]];
    let b = vec![[5.9, 0.0], [5.9, 1.0]];
    let d = curve_distance(&a, &b, Some(2.0 * PI));
    assert!((d.distance - (2.0 * PI - 5.9)).abs() < 1e-12);
    let d = curve_distance(&a, &b, None);
    assert!((d.distance - 5.9).abs() < 1e-12);
}

#[test]
fn cellular_pressure_hessian_bound() {
    let g = torus(32);
    let s = EulerState::new(Field2D::from_fn(g, |x, y| 2.0 * x.sin() * y.sin())).unwrap();
    let p = pressure(&s).unwrap();
    let expected = Field2D::from_fn(g, |x, y| ((2.0 * x).cos() + (2.0 * y).cos()) / 4.0);
    assert!(max_abs_diff(&p.values, &expected.values) < 1e-12);
}
