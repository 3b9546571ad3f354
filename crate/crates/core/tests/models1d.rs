use proptest::prelude::*;
use std::f64::consts::PI;
use vortexlab::models1d::*;
use vortexlab::Error;

fn field(n: usize, f: impl Fn(f64) -> f64) -> CircleField {
    CircleField::from_fn(n, f).unwrap()
}

fn max_diff(a: &CircleField, b: &CircleField) -> f64 {
    a.values.iter().zip(&b.values).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn cfg(dt: f64, end: f64) -> Evolve1dConfig {
    Evolve1dConfig {
        dt,
        end_time: end,
        snapshot_every: 50,
        ..Default::default()
    }
}

#[test]
fn p1_examples() {
    let (lam, u) = project_p1(&field(64, f64::sin));
    assert!((lam - 1.0).abs() < 1e-14);
    assert!(max_diff(&u, &field(64, f64::sin)) < 1e-14);
    let (lam, _) = project_p1(&field(64, f64::cos));
    assert!(lam.abs() < 1e-14);
    let (lam, u) = project_p1(&field(64, |x| 3.0 * x.sin() + (5.0 * x).cos()));
    assert!((lam - 3.0).abs() < 1e-13);
    assert!(max_diff(&u, &field(64, |x| 3.0 * x.sin())) < 1e-13);
}

#[test]
fn circle_field_rejects_bad_sizes() {
    assert!(matches!(CircleField::new(vec![0.0; 10]), Err(Error::InvalidGrid(_))));
    assert!(matches!(CircleField::new(vec![0.0; 17]), Err(Error::InvalidGrid(_))));
    let mut v = vec![0.0; 16];
    v[3] = f64::NAN;
    assert!(CircleField::new(v).is_err());
}

#[test]
fn sine_is_steady_for_projection_a_and_de_gregorio() {
    let w0 = field(64, f64::sin);
    for closure in [Closure::ProjectionA, Closure::DeGregorio] {
        let h = evolve_1d(&w0, closure, &cfg(1e-2, 1.0)).unwrap();
        assert_eq!(h.status, RunStatus::Completed);
        assert!((h.times.last().unwrap() - 1.0).abs() < 1e-12);
        for f in &h.fields {
            assert!(max_diff(f, &w0) < 1e-10, "{closure:?}");
        }
    }
}

#[test]
fn hilbert_convention() {
    let (u, ux) = velocity(&field(32, f64::sin), Closure::DeGregorio);
    assert!(max_diff(&u, &field(32, |x| -x.sin())) < 1e-14);
    assert!(max_diff(&ux, &field(32, |x| -x.cos())) < 1e-14);
}

#[test]
fn oracle_sine_is_linear_and_zero_is_trivial() {
    let c = OracleConfig {
        dt: 0.01,
        end_time: 1.0,
        ..Default::default()
    };
    let o = lambda_oracle(&field(64, f64::sin), Closure::ProjectionA, &c).unwrap();
    for (t, l) in o.times.iter().zip(&o.big_lambda) {
        assert!((l - t).abs() < 1e-12, "{t} {l}");
    }
    assert!(o.rate.iter().all(|r| (r - 1.0).abs() < 1e-12));
    let o = lambda_oracle(&field(64, |_| 0.0), Closure::ProjectionA, &c).unwrap();
    assert!(o.big_lambda.iter().all(|&l| l == 0.0));
    assert!(lambda_oracle(&field(64, f64::sin), Closure::DeGregorio, &c).is_err());
}

#[test]
fn oracle_reconstruction_matches_transport_formula() {
    // At Λ = 0 the reconstruction is the identity.
    let w0 = field(64, |x| x.sin() + 0.4 * (2.0 * x).cos());
    let o = lambda_oracle(&w0, Closure::ProjectionB, &OracleConfig { end_time: 0.0, ..Default::default() }).unwrap();
    for j in 0..64 {
        let x = CircleField::node(j, 64);
        assert!((o.omega_given_lambda(x, 0.0) - w0.values[j]).abs() < 1e-12);
    }
}

fn smooth_a(x: f64) -> f64 {
    x.sin() + 0.5 * (2.0 * x).cos() + 0.2 * (x - 1.0).cos().exp()
}

#[test]
fn projection_a_solver_matches_oracle() {
    let n = 256;
    let w0 = field(n, smooth_a);
    let h = evolve_1d(
        &w0,
        Closure::ProjectionA,
        &Evolve1dConfig {
            dt: 1e-3,
            end_time: 0.5,
            snapshot_every: 50,
            ..Default::default()
        },
    )
    .unwrap();
    let o = lambda_oracle(
        &w0,
        Closure::ProjectionA,
        &OracleConfig {
            dt: 1e-3,
            end_time: 0.5,
            ..Default::default()
        },
    )
    .unwrap();
    let mut worst = 0.0f64;
    for ((t, f), big) in h.times.iter().zip(&h.fields).zip(&h.big_lambda) {
        let ob = o.lambda_at(*t);
        assert!((ob - big).abs() < 1e-9, "Λ mismatch at {t}: {ob} vs {big}");
        for j in 0..n {
            let x = CircleField::node(j, n);
            worst = worst.max((o.omega_given_lambda(x, ob) - f.values[j]).abs());
        }
    }
    assert!(worst < 1e-6, "L∞ error {worst}");
}

#[test]
fn projection_b_exact_blowup() {
    // ω₀ = 1 + sin x gives ω = (1 + sin x)/(1 - t).
    let w0 = field(128, |x| 1.0 + x.sin());
    let o = lambda_oracle(
        &w0,
        Closure::ProjectionB,
        &OracleConfig {
            dt: 1e-3,
            end_time: 2.0,
            max_increment: 0.01,
            ..Default::default()
        },
    )
    .unwrap();
    let ts = o.t_star.expect("divergence");
    assert!((ts - 1.0).abs() < 1e-6, "T* = {ts}");
    for (t, l) in o.times.iter().zip(&o.big_lambda) {
        let tol = if *t < 0.99 { 1e-8 } else { 1e-6 };
        if *t < 0.999 {
            assert!((l + (1.0 - t).ln()).abs() < tol, "t = {t}");
        }
    }
    let h = evolve_1d(
        &w0,
        Closure::ProjectionB,
        &Evolve1dConfig {
            dt: 1e-3,
            end_time: 2.0,
            snapshot_every: 10,
            adaptive_cfl: Some(0.05),
            blowup_factor: 1e3,
            dealias: true,
        },
    )
    .unwrap();
    let RunStatus::ResolutionExceeded { t, .. } = h.status else {
        panic!("no divergence")
    };
    assert!(t < 1.0 && t > 0.99);
    for (t, m) in &h.max_series {
        assert!((m * (1.0 - t) / 2.0 - 1.0).abs() < 1e-6, "{t} {m}");
    }
}

#[test]
fn projection_b_generic_analytic_data_tracks_oracle() {
    let f = |x: f64| (1.0 + x.sin()) * (1.0 + 0.3 * x.cos());
    let w0 = field(512, f);
    let o = lambda_oracle(
        &w0,
        Closure::ProjectionB,
        &OracleConfig {
            dt: 1e-3,
            end_time: 3.0,
            ..Default::default()
        },
    )
    .unwrap();
    let ts = o.t_star.expect("divergence");
    let h = evolve_1d(
        &w0,
        Closure::ProjectionB,
        &Evolve1dConfig {
            dt: 1e-3,
            end_time: 3.0,
            snapshot_every: 1,
            adaptive_cfl: Some(0.05),
            blowup_factor: 1e3 / w0.max_abs(),
            dealias: true,
        },
    )
    .unwrap();
    assert!(matches!(h.status, RunStatus::ResolutionExceeded { .. }));
    let t_end = *h.times.last().unwrap();
    assert!(t_end < ts);
    for (t, big) in h.times.iter().zip(&h.big_lambda) {
        let ob = o.lambda_at(*t);
        assert!((ob - big).abs() < 1e-4 * (1.0 + big.abs()), "t = {t}: {ob} vs {big}");
    }
}

#[test]
fn holder_data_drive_divergence_with_rate_bound() {
    let alpha = 0.5;
    let o = lambda_oracle_fn(
        holder_cusp(alpha),
        Closure::ProjectionA,
        &OracleConfig {
            dt: 1e-2,
            end_time: 50.0,
            lambda_cap: 25.0,
            ..Default::default()
        },
    )
    .unwrap();
    assert!(o.t_star.is_some(), "Λ did not diverge");
    let ratios: Vec<f64> = o
        .big_lambda
        .iter()
        .zip(&o.rate)
        .map(|(l, r)| r / ((1.0 - alpha) * l).exp())
        .collect();
    let c = ratios.iter().cloned().fold(f64::INFINITY, f64::min);
    assert!(c > 0.0);
    let late = ratios.iter().rev().take(10).cloned().fold(f64::INFINITY, f64::min);
    assert!(late > 0.5 * ratios[ratios.len() / 2].min(ratios[0]), "{ratios:?}");
}

#[test]
fn c1_data_keep_lambda_bounded() {
    // C¹ data with a |x|^{1.5} kink: smooth enough for global existence.
    let f = holder_cusp(1.5);
    let o = lambda_oracle_fn(
        f,
        Closure::ProjectionA,
        &OracleConfig {
            dt: 0.05,
            end_time: 40.0,
            ..Default::default()
        },
    )
    .unwrap();
    assert!(o.t_star.is_none());
    // ‖ω₀‖_{C¹} ≥ 1; the rate stays below a modest multiple.
    let late = &o.rate[o.rate.len() / 2..];
    let m = o.max_rate();
    assert!(m.is_finite() && m < 2.0, "max Λ' = {m}");
    assert!(late.iter().all(|r| r.abs() <= m));
}

#[test]
fn parity_preserved_for_de_gregorio_and_clm() {
    let w0 = field(128, |x| x.sin() + 0.3 * (2.0 * x).sin() + 0.1 * (3.0 * x).sin());
    for closure in [Closure::DeGregorio, Closure::Clm] {
        let h = evolve_1d(&w0, closure, &cfg(1e-3, 0.5)).unwrap();
        for f in &h.fields {
            let n = f.n();
            let odd = (0..n).map(|j| (f.values[j] + f.values[(n - j) % n]).abs()).fold(0.0, f64::max);
            assert!(odd < 1e-10, "{closure:?}: {odd}");
        }
    }
}

#[test]
fn closure_metadata() {
    assert_eq!(Closure::DeGregorio.info().symbol_degree, Some(-1));
    assert_eq!(Closure::ScaleInvariantEuler.info().symbol_degree, Some(-2));
    assert!(!Closure::ProjectionB.info().preserves_odd);
    assert!(!Closure::Clm.info().has_transport);
    for c in [Closure::ProjectionA, Closure::Burgers, Closure::Clm] {
        assert_eq!(Closure::parse(c.name()), Some(c));
    }
}

#[test]
fn burgers_sine() {
    let n = 4096;
    let u0 = field(n, f64::sin);
    let run = burgers_1d(
        &u0,
        &Evolve1dConfig {
            dt: 5e-4,
            end_time: 0.9,
            snapshot_every: 200,
            ..Default::default()
        },
    )
    .unwrap();
    assert!((run.t_star - 1.0).abs() < 1e-12);
    let (_, first) = run.gradient_norms[0];
    let (t_last, last) = *run.gradient_norms.last().unwrap();
    assert!((t_last - 0.9).abs() < 1e-12);
    assert!((last[0] - first[0]).abs() < 1e-3, "TV drift {} -> {}", first[0], last[0]);
    // L^{3/2} grows monotonically and matches the characteristic quadrature.
    let p15: Vec<f64> = run.gradient_norms.iter().map(|(_, v)| v[3]).collect();
    assert!(p15.windows(2).all(|w| w[1] >= w[0] - 1e-12));
    let exact = burgers_characteristic_norm(f64::cos, 0.9, 1.5, 1 << 16);
    assert!((p15.last().unwrap() - exact).abs() < 1e-6 * exact);
    let last_field = run.history.fields.last().unwrap();
    // Conservation of ∫u and ∫u².
    let m0 = u0.integral();
    let e0: f64 = u0.lp_norm(2.0).powi(2);
    let m1 = last_field.integral();
    let e1 = last_field.lp_norm(2.0).powi(2);
    assert!((m1 - m0).abs() < 1e-10);
    assert!((e1 - e0).abs() < 1e-6 * e0, "{e0} {e1}");
}

#[test]
fn burgers_max_gradient_at_point_nine() {
    let n = 4096;
    let run = burgers_1d(
        &field(n, f64::sin),
        &Evolve1dConfig {
            dt: 5e-4,
            end_time: 0.9,
            snapshot_every: 1800,
            ..Default::default()
        },
    )
    .unwrap();
    let u = run.history.fields.last().unwrap();
    let m = crate::max_abs(&spectral_derivative(&u.values));
    assert!((m - 10.0).abs() < 1e-4, "max|u_x| = {m}");
    assert!((burgers_characteristic_gradient(-1.0, 0.9).abs() - 10.0).abs() < 1e-12);
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

fn spectral_derivative(v: &[f64]) -> Vec<f64> {
    let ti = TrigInterpolant::new(v);
    let n = v.len();
    (0..n).map(|j| ti.eval_d2(CircleField::node(j, n)).1).collect()
}

#[test]
fn burgers_constant_and_post_shock() {
    let run = burgers_1d(&field(32, |_| 0.7), &cfg(1e-2, 1.0)).unwrap();
    assert!(run.t_star.is_infinite());
    for f in &run.history.fields {
        assert!(f.values.iter().all(|v| (v - 0.7).abs() < 1e-14));
    }
    assert!(matches!(
        burgers_1d(&field(64, f64::sin), &cfg(1e-3, 1.2)),
        Err(Error::PostShock { .. })
    ));
}

#[test]
fn scale_invariant_euler_cases() {
    let h = scale_invariant_euler(&field(64, |_| 2.0), 3, &cfg(1e-2, 1.0)).unwrap();
    assert!(h.fields.iter().all(|f| f.values.iter().all(|v| (v - 2.0).abs() < 1e-13)));
    let g = solve_g(&field(64, |_| 2.0));
    assert!(g.values.iter().all(|v| (v - 0.5).abs() < 1e-14));

    let g0 = field(512, |t| (3.0 * t).cos());
    let gg = solve_g(&g0);
    assert!(max_diff(&gg, &field(512, |t| (3.0 * t).cos() / (4.0 - 9.0))) < 1e-14);
    let h = scale_invariant_euler(&g0, 3, &cfg(1e-3, 1.0)).unwrap();
    for f in &h.fields {
        assert!((f.spectral_max_abs() - 1.0).abs() < 1e-8, "{}", f.spectral_max_abs());
        assert!(f.values.iter().all(|&v| v >= -1.0 - 1e-8));
    }
    // The angular flow compresses: L^p norms on the circle are not invariant.
    let last = h.fields.last().unwrap();
    assert!((g0.lp_norm(1.0) - last.lp_norm(1.0)).abs() > 1e-2);
    assert!(matches!(scale_invariant_euler(&field(64, |t| (2.0 * t).cos()), 2, &cfg(1e-2, 1.0)), Err(Error::InvalidArgument(_))));
    assert!(scale_invariant_euler(&field(64, |t| (2.0 * t).cos() + (3.0 * t).cos()), 3, &cfg(1e-2, 1.0)).is_err());
}

proptest! {
    #[test]
    fn p1_is_linear_idempotent_projection(a in -3.0f64..3.0, b in -3.0f64..3.0, c in -3.0f64..3.0, k in 2usize..7) {
        let w = field(64, |x| a * x.sin() + b * x.cos() + c * (k as f64 * x).sin());
        let (lam, u) = project_p1(&w);
        prop_assert!((lam - a).abs() < 1e-12);
        let (lam2, u2) = project_p1(&u);
        prop_assert!((lam2 - lam).abs() < 1e-12);
        prop_assert!(max_diff(&u, &u2) < 1e-12);
        prop_assert!((p1_coefficient(&w) * PI - w.values.iter().enumerate().map(|(j, v)| v * CircleField::node(j, 64).sin()).sum::<f64>() * 2.0 * PI / 64.0).abs() < 1e-12);
    }

    #[test]
    fn trig_interpolant_reproduces_samples(coef in proptest::collection::vec(-1.0f64..1.0, 6)) {
        let f = |x: f64| coef.iter().enumerate().map(|(k, c)| c * ((k + 1) as f64 * x + k as f64).cos()).sum::<f64>();
        let w = field(32, f);
        let ti = w.interpolant();
        for x in [0.1, 1.3, 2.9, 5.5] {
            prop_assert!((ti.eval(x) - f(x)).abs() < 1e-12);
        }
    }
}
