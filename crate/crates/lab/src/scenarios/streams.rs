use super::{Output, Summary};
use crate::config::ScenarioConfig;
use crate::error::LabResult;
use crate::formats::Table;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;
use vortexlab::geometry::{isochronality_defect, travel_time, TravelTimeConfig, Window};
use vortexlab::grid::{Field2D, Grid2D};
use vortexlab::pressureless::{
    blowup_family_curve, evolve_gradient, family_norm_at_origin, norm_table_csv, random_chain, row_sum_norm,
    shipped_flows, NilpotentFlow,
};

pub(super) fn run_pressureless(cfg: &ScenarioConfig, out: &mut Output, summary: &mut Summary) -> LabResult<()> {
    let d_list = cfg.ints("family", "d");
    let rows = blowup_family_curve(&d_list, &cfg.floats("family", "times"), cfg.usize("family", "samples"))?;
    out.text("family.csv", &norm_table_csv(&rows))?;
    let origin_err = rows
        .iter()
        .map(|r| (r.norm_at_0 - family_norm_at_origin(r.d, r.t)).abs() / family_norm_at_origin(r.d, r.t))
        .fold(0.0, f64::max);
    summary.push("family_origin_rel_error", origin_err);
    summary.push(
        "family_bound_violations",
        rows.iter().filter(|r| r.norm_global > r.bound).count() as f64,
    );

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut flows: Vec<NilpotentFlow> = shipped_flows().into_iter().map(|f| f.1).collect();
    let max_dim = cfg.usize("routes", "max_dim");
    for _ in 0..cfg.usize("routes", "random_flows") {
        let d = rng.gen_range(2..=max_dim);
        flows.push(random_chain(d, &mut rng)?);
    }
    let times = cfg.floats("routes", "times");
    let mut t = Table::new(&["flow", "d", "scale", "resolvent_gap", "ode_gap", "det_defect"]);
    let (mut worst_res, mut worst_ode, mut worst_det) = (0.0f64, 0.0f64, 0.0f64);
    for (k, flow) in flows.iter().enumerate() {
        let d = flow.dim();
        let x: Vec<f64> = (0..d).map(|_| rng.gen_range(0.0..2.0 * PI)).collect();
        let tr = evolve_gradient(flow, &x, &times)?;
        let scale = tr.neumann.iter().map(row_sum_norm).fold(1.0, f64::max);
        worst_res = worst_res.max(tr.resolvent_gap / scale);
        worst_ode = worst_ode.max(tr.ode_gap / scale);
        worst_det = worst_det.max(tr.det_defect / scale.powi(d as i32));
        t.push(vec![k as f64, d as f64, scale, tr.resolvent_gap, tr.ode_gap, tr.det_defect]);
    }
    out.csv("routes.csv", &t)?;
    summary.push("flows", flows.len() as f64);
    summary.push("max_resolvent_gap_rel", worst_res);
    summary.push("max_ode_gap_rel", worst_ode);
    summary.push("max_det_defect_rel", worst_det);
    Ok(())
}

/// Arithmetic-geometric mean.
fn agm(mut a: f64, mut b: f64) -> f64 {
    while (a - b).abs() > 1e-15 * a {
        (a, b) = (0.5 * (a + b), (a * b).sqrt());
    }
    a
}

/// Closed-form travel time of the shipped stream functions at level `c`.
pub fn exact_travel_time(kind: &str, a: f64, b: f64, c: f64) -> f64 {
    match kind {
        "ellipse" => 2.0 * PI * a * b,
        "cellular" => 2.0 * PI / agm(1.0, c),
        _ => PI / c.sqrt(),
    }
}

pub fn geometry_field(kind: &str, n: usize, half: f64, a: f64, b: f64) -> vortexlab::Result<(Field2D, Option<Window>)> {
    if kind == "cellular" {
        let g = Grid2D::torus(2.0 * PI, 2.0 * PI, n, n)?;
        let w = Window {
            x_min: 0.0,
            x_max: PI,
            y_min: 0.0,
            y_max: PI,
        };
        return Ok((Field2D::from_fn(g, |x, y| x.sin() * y.sin()), Some(w)));
    }
    let g = Grid2D::torus(2.0 * half, 2.0 * half, n, n)?.with_origin(-half, -half);
    let f = if kind == "ellipse" {
        Field2D::from_fn(g, |x, y| 0.5 * ((x / a).powi(2) + (y / b).powi(2)))
    } else {
        Field2D::from_fn(g, |x, y| (x * x + y * y).powi(2) / 4.0)
    };
    Ok((f, None))
}

pub(super) fn run_geometry(cfg: &ScenarioConfig, out: &mut Output, summary: &mut Summary) -> LabResult<()> {
    let kind = cfg.str("field", "kind");
    let (a, b) = (cfg.f64("field", "a"), cfg.f64("field", "b"));
    let (psi, window) = geometry_field(kind, cfg.usize("field", "n"), cfg.f64("field", "half_width"), a, b)?;
    let tcfg = TravelTimeConfig {
        window,
        area_delta: cfg.f64("travel", "area_delta"),
        critical_eps: cfg.f64("travel", "critical_eps"),
    };
    let levels = cfg.floats("travel", "levels");
    let table = travel_time(&psi, &levels, &tcfg)?;
    out.text("travel_time.csv", &table.to_csv())?;
    let mut t = Table::new(&["level", "mu_contour", "mu_area", "mu_exact"]);
    let mut worst = 0.0f64;
    for r in &table.rows {
        let e = exact_travel_time(kind, a, b, r.level);
        worst = worst.max((r.contour - e).abs() / e).max((r.area_derivative - e).abs() / e);
        t.push(vec![r.level, r.contour, r.area_derivative, e]);
    }
    out.csv("travel_time_exact.csv", &t)?;
    summary.push("levels_measured", table.rows.len() as f64);
    summary.push("levels_skipped", table.skipped.len() as f64);
    summary.push("max_rel_error_exact", worst);
    if table.rows.len() >= 2 {
        summary.push("isochronality_defect", isochronality_defect(&psi, &levels, &tcfg)?);
    }
    Ok(())
}
