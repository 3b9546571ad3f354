use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use vortexlab::pressureless::*;

fn random_orthogonal<R: Rng>(d: usize, rng: &mut R) -> Mat {
    // Gram–Schmidt on a random matrix
    let mut q: Mat = Vec::new();
    while q.len() < d {
        let mut v: Vec<f64> = (0..d).map(|_| rng.gen_range(-1.0..1.0)).collect();
        for u in &q {
            let dot: f64 = u.iter().zip(&v).map(|(a, b)| a * b).sum();
            for (vi, ui) in v.iter_mut().zip(u) {
                *vi -= dot * ui;
            }
        }
        let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if n > 1e-3 {
            q.push(v.into_iter().map(|x| x / n).collect());
        }
    }
    q
}

fn times() -> Vec<f64> {
    (0..=20).map(|k| k as f64 * 0.25).collect()
}

#[test]
fn chain_is_nilpotent() {
    let flow = NilpotentFlow::chain(3).unwrap();
    let rep = check_nilpotent(&flow, &sample_points(3, 200), &times());
    assert!(rep.passed);
    assert!(rep.power_defect < 1e-14);
    assert!(rep.det_defect < 1e-12);
}

#[test]
fn rotation_is_not_nilpotent() {
    let flow = NilpotentFlow::rotation(3);
    let rep = check_nilpotent(&flow, &sample_points(3, 10), &[1.0]);
    assert!(!rep.passed);
    // A₀³ = -A₀ for the rotation block; det(I + A₀) = 2
    assert!((rep.power_defect - 1.0).abs() < 1e-14);
    assert!((rep.det_defect - 1.0).abs() < 1e-14);
    assert!(evolve_gradient(&flow, &[0.0; 3], &[0.0, 1.0]).is_err());
}

#[test]
fn conjugated_chain_passes() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for d in [3, 4, 6] {
        let q = random_orthogonal(d, &mut rng);
        let flow = NilpotentFlow::chain(d).unwrap().conjugated(q);
        let rep = check_nilpotent(&flow, &sample_points(d, 100), &times());
        assert!(rep.passed, "d={d}: {rep:?}");
        assert!(rep.det_defect < 1e-10, "d={d}: {rep:?}");
    }
}

#[test]
fn two_dimensional_gradient_is_frozen() {
    let flow = NilpotentFlow::chain(2).unwrap();
    let x = [0.3, 1.1];
    let tr = evolve_gradient(&flow, &x, &times()).unwrap();
    let a0 = flow.jacobian(&x);
    for a in &tr.neumann {
        assert_eq!(a, &a0);
    }
}

#[test]
fn chain_three_norm_at_origin() {
    let flow = NilpotentFlow::chain(3).unwrap();
    let tr = evolve_gradient(&flow, &[0.0; 3], &times()).unwrap();
    for (t, n) in tr.times.iter().zip(tr.norms()) {
        assert!((n - (1.0 + t)).abs() < 1e-12, "t={t}: {n}");
    }
    assert_eq!(tr.neumann[0], flow.jacobian(&[0.0; 3]));
}

#[test]
fn three_routes_agree_on_shipped_and_random_flows() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut flows: Vec<NilpotentFlow> = shipped_flows().into_iter().map(|f| f.1).collect();
    for _ in 0..100 {
        let d = rng.gen_range(2..=7);
        flows.push(random_chain(d, &mut rng).unwrap());
    }
    let ts: Vec<f64> = (0..=8).map(|k| k as f64 * 0.5).collect();
    for flow in &flows {
        let d = flow.dim();
        let x: Vec<f64> = (0..d).map(|_| rng.gen_range(0.0..6.3)).collect();
        let tr = evolve_gradient(flow, &x, &ts).unwrap();
        let scale = tr.neumann.iter().map(row_sum_norm).fold(1.0, f64::max);
        assert!(tr.resolvent_gap < 1e-12 * scale, "{flow:?}: {}", tr.resolvent_gap);
        assert!(tr.ode_gap < 1e-9 * scale, "{flow:?}: {}", tr.ode_gap);
        assert!(tr.det_defect < 1e-12 * scale.powi(d as i32).max(1.0), "{}", tr.det_defect);
    }
}

#[test]
fn gradient_bound_holds() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for _ in 0..100 {
        let d = rng.gen_range(2..=8);
        let flow = random_chain(d, &mut rng).unwrap();
        let x: Vec<f64> = (0..d).map(|_| rng.gen_range(0.0..6.3)).collect();
        let n0 = row_sum_norm(&flow.jacobian(&x));
        if n0 == 0.0 {
            continue;
        }
        let ts: Vec<f64> = (0..20).map(|k| k as f64 / 20.0 / n0).collect();
        let tr = evolve_gradient(&flow, &x, &ts).unwrap();
        for (t, n) in ts.iter().zip(tr.norms()) {
            assert!(n <= n0 / (1.0 - t * n0) * (1.0 + 1e-14), "t={t}");
        }
    }
}

#[test]
fn structured_norm_matches_matrix_sum() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for d in 2..=7 {
        let flow = random_chain(d, &mut rng).unwrap();
        let x: Vec<f64> = (0..d).map(|_| rng.gen_range(0.0..6.3)).collect();
        let a0 = flow.jacobian(&x);
        let slopes: Vec<f64> = (0..d - 1).map(|i| a0[i][i + 1]).collect();
        for t in [0.0, 0.3, 0.9, 2.0] {
            let m = row_sum_norm(&neumann_gradient(&a0, t));
            assert!((chain_gradient_norm(&slopes, t) - m).abs() < 1e-13 * m.max(1.0));
        }
    }
}

#[test]
fn family_curve_values() {
    let rows = blowup_family_curve(&[5], &[0.0, 0.5], 100).unwrap();
    assert!((rows[0].norm_at_0 - 1.0).abs() < 1e-15);
    assert!((rows[1].norm_at_0 - 1.875).abs() < 1e-14);
    assert!((family_norm_at_origin(5, 0.5) - 1.875).abs() < 1e-15);

    let ds = [4, 8, 16, 32, 64];
    let rows = blowup_family_curve(&ds, &[0.9], 10_000).unwrap();
    let mut prev = 0.0;
    for (r, &d) in rows.iter().zip(&ds) {
        assert!(r.norm_at_0 > prev && r.norm_at_0 < 10.0);
        prev = r.norm_at_0;
        // geometric-series gap to the d → ∞ limit
        let gap = 0.9f64.powi(d as i32 - 1) / 0.1;
        assert!(((10.0 - r.norm_at_0) - gap).abs() < 1e-12, "d={d}");
        // the origin is the extremizer and the bound is 1/(1 - t)
        assert!((r.norm_global - r.norm_at_0).abs() < 1e-12);
        assert!((r.bound - 10.0).abs() < 1e-12);
        assert!(r.norm_global <= r.bound);
    }
}

#[test]
fn family_curve_t_zero_and_csv() {
    let rows = blowup_family_curve(&[4, 8], &[0.0, 0.99, 1.5], 50).unwrap();
    for r in &rows {
        if r.t == 0.0 {
            assert_eq!(r.norm_at_0, 1.0);
        }
        if r.t >= 1.0 {
            assert!(r.bound.is_infinite());
        }
        assert!((r.norm_at_0 - family_norm_at_origin(r.d, r.t)).abs() < 1e-12 * r.norm_at_0);
    }
    let csv = norm_table_csv(&rows);
    assert_eq!(csv.lines().count(), rows.len() + 1);
    assert!(csv.starts_with("d,t,norm_at_0,norm_global,bound"));
    assert!(blowup_family_curve(&[1], &[0.5], 10).is_err());
}

#[test]
fn lagrangian_map_identity_and_volume() {
    let flow = NilpotentFlow::chain(3).unwrap();
    let lattice: Vec<Vec<f64>> = (0..6)
        .flat_map(|i| (0..6).flat_map(move |j| (0..6).map(move |k| vec![i as f64, j as f64, k as f64])))
        .collect();
    let id = lagrangian_map(&flow, &lattice, 0.0).unwrap();
    assert_eq!(id.mapped, lattice);
    let rep = lagrangian_map(&flow, &lattice, 2.0).unwrap();
    assert!(rep.volume_preserved, "{}", rep.det_defect);
    assert!(rep.det_defect < 1e-8);
    // straight lines
    for (x, y) in lattice.iter().zip(&rep.mapped) {
        let u = flow.velocity(x);
        for i in 0..3 {
            assert!((y[i] - x[i] - 2.0 * u[i]).abs() < 1e-15);
        }
    }
    let rot = lagrangian_map(&NilpotentFlow::rotation(3), &lattice, 0.5).unwrap();
    assert!(!rot.volume_preserved);
    assert!((rot.det_defect - 0.25).abs() < 1e-8);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn orthogonal_conjugation_invariance(seed in 0u64..10_000, d in 2usize..7, t in 0.0f64..5.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let flow = random_chain(d, &mut rng).unwrap();
        let q = random_orthogonal(d, &mut rng);
        let conj = flow.conjugated(q.clone());
        let x: Vec<f64> = (0..d).map(|_| rng.gen_range(0.0..6.3)).collect();
        let y: Vec<f64> = q.iter().map(|r| r.iter().zip(&x).map(|(a, b)| a * b).sum()).collect();
        let rep = check_nilpotent(&conj, &[y.clone()], &[t]);
        prop_assert!(rep.passed && rep.det_defect < 1e-10);
        // A(t) transforms by the same conjugation
        let a = neumann_gradient(&flow.jacobian(&x), t);
        let b = neumann_gradient(&conj.jacobian(&y), t);
        let qaqt = matmul(&matmul(&q, &a), &transpose(&q));
        let err = qaqt.iter().zip(&b).flat_map(|(r, s)| r.iter().zip(s).map(|(p, q)| (p - q).abs())).fold(0.0, f64::max);
        prop_assert!(err < 1e-10 * (1.0 + row_sum_norm(&a)));
    }

    #[test]
    fn neumann_equals_resolvent(seed in 0u64..10_000, d in 2usize..9, t in 0.0f64..10.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let flow = random_chain(d, &mut rng).unwrap();
        let x: Vec<f64> = (0..d).map(|_| rng.gen_range(0.0..6.3)).collect();
        let a0 = flow.jacobian(&x);
        let n = neumann_gradient(&a0, t);
        let r = resolvent_gradient(&a0, t).unwrap();
        let scale = row_sum_norm(&n).max(1.0);
        for i in 0..d {
            for j in 0..d {
                prop_assert!((n[i][j] - r[i][j]).abs() < 1e-12 * scale);
            }
        }
    }
}
