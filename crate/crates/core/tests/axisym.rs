use proptest::prelude::*;
use vortexlab::axisym::*;
use vortexlab::radial::{Profile1D, RadialGrid};
use vortexlab::stats::RunStatus;
use vortexlab::Error;

fn f_profile(z: f64) -> f64 {
    z / (1.0 + z).powi(2)
}

#[test]
fn kernel_integrates_to_one() {
    for n in [65, 129, 257] {
        let k = L12Kernel::new(n).unwrap();
        assert!((k.total() - 1.0).abs() < 1e-12, "n = {n}: {}", k.total() - 1.0);
    }
}

#[test]
fn l12_of_self_similar_profile() {
    let g = RadialGrid::algebraic(201).unwrap();
    let w = PolarField::from_fn(&g, 33, |r, _| f_profile(r)).unwrap();
    let l = l12(&w).unwrap();
    for (r, v) in g.r().iter().zip(&l.values) {
        let exact = if r.is_finite() { 1.0 / (1.0 + r) } else { 0.0 };
        assert!((v - exact).abs() < 1e-8, "R = {r}: {v} vs {exact}");
    }
    let z = PolarField::from_fn(&g, 33, |_, _| 0.0).unwrap();
    assert!(l12(&z).unwrap().values.iter().all(|&v| v == 0.0));
}

#[test]
fn l12_of_k_orthogonal_angular_part_vanishes() {
    // ∫ K(θ)(1 - 3 sin²θ... ) dθ: build Γ = 1 - c·sin θ with c fixed by ∫KΓ = 0.
    // ∫K sinθ = 3∫cos²θ sin²θ = 3π/16, so c = 16/(3π).
    let c = 16.0 / (3.0 * std::f64::consts::PI);
    let g = RadialGrid::algebraic(101).unwrap();
    let w = PolarField::from_fn(&g, 129, |r, t| f_profile(r) * (1.0 - c * t.sin())).unwrap();
    let l = l12(&w).unwrap();
    assert!(l.max_abs() < 1e-10, "{}", l.max_abs());
}

#[test]
fn l12_rejects_non_decaying_and_axis_mass() {
    let g = RadialGrid::algebraic(201).unwrap();
    let w = PolarField::from_fn(&g, 17, |r, _| r / (1.0 + r)).unwrap();
    assert!(matches!(l12(&w), Err(Error::NonDecaying(_))));
    let w = PolarField::from_fn(&g, 17, |r, _| 1.0 / (1.0 + r).powi(2)).unwrap();
    assert!(matches!(l12(&w), Err(Error::InvalidArgument(_))));
    let lg = RadialGrid::log_uniform(64, 1e-3, 1e3).unwrap();
    let w = PolarField::from_fn(&lg, 17, |r, _| f_profile(r)).unwrap();
    assert!(l12(&w).is_err());
}

#[test]
fn profile_residuals() {
    let g = RadialGrid::algebraic(101).unwrap();
    let local = Profile1D::from_fn(&g, |z| 1.0 / (1.0 + z), 0.0).unwrap();
    assert!(profile_residual(&local, ProfileEquation::Local).unwrap() < 1e-10);
    let f = Profile1D::from_fn(&g, f_profile, 0.0).unwrap();
    let r = profile_residual(&f, ProfileEquation::Nonlocal { amplitude: 2.0 }).unwrap();
    assert!(r < 1e-10, "{r}");
    // Any other amplitude leaves an O(1) residual.
    let r1 = profile_residual(&f, ProfileEquation::Nonlocal { amplitude: 1.0 }).unwrap();
    assert!(r1 > 0.1);
    let z = Profile1D::zeros(&g);
    assert_eq!(profile_residual(&z, ProfileEquation::Local).unwrap(), 0.0);
    assert_eq!(profile_residual(&z, ProfileEquation::Nonlocal { amplitude: 2.0 }).unwrap(), 0.0);
}

fn cfg(end: f64) -> FundamentalConfig {
    FundamentalConfig {
        dt: 1e-3,
        end_time: end,
        snapshot_every: 100,
        ..Default::default()
    }
}

#[test]
fn exact_self_similar_blowup_is_tracked() {
    let g = RadialGrid::algebraic(401).unwrap();
    let p0 = Profile1D::from_fn(&g, |r| 2.0 * f_profile(r), 0.0).unwrap();
    let w0 = PolarField::from_profile(&p0, 65).unwrap();
    let fixed = FundamentalConfig {
        cfl: f64::INFINITY,
        ..cfg(0.9)
    };
    let h = evolve_fundamental(&w0, &fixed).unwrap();
    assert_eq!(h.status, RunStatus::Completed);
    for (t, f) in h.times.iter().zip(&h.fields) {
        let mut err = 0.0f64;
        let mut scale = 0.0f64;
        for (i, &r) in g.r().iter().enumerate() {
            let ex = if r.is_finite() { exact_blowup(r, *t) } else { 0.0 };
            scale = scale.max(ex.abs());
            for j in 0..65 {
                err = err.max((f.at(i, j) - ex).abs());
            }
        }
        assert!(err / scale < 1e-4, "t = {t}: rel err {}", err / scale);
    }
    // The 1D reduction agrees with the full solver.
    let r = evolve_radial(&p0, &fixed).unwrap();
    assert_eq!(r.times.len(), h.times.len());
    for (p, f) in r.profiles.iter().zip(&h.fields) {
        for i in 0..g.n() {
            for j in 0..65 {
                assert!((p.values[i] - f.at(i, j)).abs() < 1e-8);
            }
        }
    }
}

#[test]
fn blowup_time_fit() {
    let g = RadialGrid::algebraic(801).unwrap();
    let p0 = Profile1D::from_fn(&g, |r| 2.0 * f_profile(r), 0.0).unwrap();
    let r = evolve_radial(&p0, &cfg(2.0)).unwrap();
    assert!(matches!(r.status, RunStatus::ResolutionExceeded { .. }));
    let ts = r.t_star.expect("fit");
    assert!((0.99..=1.01).contains(&ts), "T* = {ts}");
}

#[test]
fn zero_stays_zero() {
    let g = RadialGrid::algebraic(41).unwrap();
    let w0 = PolarField::from_fn(&g, 17, |_, _| 0.0).unwrap();
    let h = evolve_fundamental(&w0, &cfg(0.5)).unwrap();
    assert!(h.fields.iter().all(|f| f.values.iter().all(|&v| v == 0.0)));
}

fn angular_data(r: f64, t: f64) -> f64 {
    2.0 * f_profile(r) * t.sin().powi(2)
}

fn vanishing_both_ends(r: f64, t: f64) -> f64 {
    2.0 * f_profile(r) * (2.0 * t).sin().powi(2)
}

#[test]
fn data_vanishing_at_both_ends_stay_regular() {
    let g = RadialGrid::algebraic(101).unwrap();
    let w0 = PolarField::from_fn(&g, 65, vanishing_both_ends).unwrap();
    let h = evolve_fundamental(
        &w0,
        &FundamentalConfig {
            dt: 1e-2,
            end_time: 10.0,
            snapshot_every: 100,
            ..Default::default()
        },
    )
    .unwrap();
    assert_eq!(h.status, RunStatus::Completed);
    let m0 = w0.max_abs();
    let m = h.max_series.iter().map(|p| p.1).fold(0.0, f64::max);
    assert!(m < 50.0 * m0);
    // Sign preservation.
    for f in &h.fields {
        assert!(f.values.iter().all(|&v| v >= -1e-12), "{}", f.values.iter().cloned().fold(0.0, f64::min));
    }
}

#[test]
fn data_nonvanishing_at_half_pi_blow_up() {
    // sin²θ vanishes at θ = 0 but not at θ = π/2, where the angular flow
    // has a stagnation point and cannot deplete the stretching.
    let g = RadialGrid::algebraic(101).unwrap();
    let w0 = PolarField::from_fn(&g, 65, angular_data).unwrap();
    let h = evolve_fundamental(
        &w0,
        &FundamentalConfig {
            dt: 1e-2,
            end_time: 10.0,
            ..Default::default()
        },
    )
    .unwrap();
    assert!(matches!(h.status, RunStatus::ResolutionExceeded { .. }));
}

#[test]
fn pure_transport_conserves_row_sup() {
    let g = RadialGrid::algebraic(41).unwrap();
    let w0 = PolarField::from_fn(&g, 129, angular_data).unwrap();
    let h = evolve_fundamental(
        &w0,
        &FundamentalConfig {
            dt: 1e-2,
            end_time: 1.0,
            stretching: false,
            snapshot_every: 10,
            ..Default::default()
        },
    )
    .unwrap();
    let s0 = w0.row_sup();
    for f in &h.fields {
        for (a, b) in s0.iter().zip(f.row_sup()) {
            assert!((a - b).abs() < 1e-6 * (1.0 + a.abs()), "{a} {b}");
        }
    }
}

proptest! {
    #[test]
    fn theta_independent_data_stay_theta_independent(a in 0.5f64..3.0, b in 0.5f64..2.0) {
        let g = RadialGrid::algebraic(61).unwrap();
        let p0 = Profile1D::from_fn(&g, |r| a * r / (1.0 + b * r).powi(3), 0.0).unwrap();
        let w0 = PolarField::from_profile(&p0, 17).unwrap();
        let h = evolve_fundamental(&w0, &FundamentalConfig { dt: 1e-2, end_time: 0.2, ..Default::default() }).unwrap();
        let f = h.fields.last().unwrap();
        for i in 0..g.n() {
            let row = f.row(i);
            for v in row {
                prop_assert!((v - row[0]).abs() < 1e-12 * (1.0 + row[0].abs()));
            }
        }
    }

    #[test]
    fn l12_is_monotone_for_nonnegative_data(a in 0.1f64..4.0, c in 0.0f64..1.0) {
        let g = RadialGrid::algebraic(81).unwrap();
        let w = PolarField::from_fn(&g, 33, |r, t| a * r / (1.0 + r).powi(3) * (c + t.cos())).unwrap();
        let l = l12(&w).unwrap();
        for p in l.values.windows(2) {
            prop_assert!(p[1] <= p[0] + 1e-12);
        }
    }
}
