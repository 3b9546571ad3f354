use super::{Output, Summary};
use crate::config::ScenarioConfig;
use crate::error::LabResult;
use crate::formats::Table;
use vortexlab::elliptic::{
    bsalpha_grid, r_norm_audit, regular_estimate_constant, singular_split, solve_mode, ModeProfile,
};
use vortexlab::radial::Profile1D;
use vortexlab::selfsimilar::{
    compactness_profile, fixed_point_profile, profile_equation_residual, HalfLineFn, Nonlinearity, ProfileConfig,
};
use vortexlab::stats::loglog_slope;

fn max_diff(a: &HalfLineFn, b: &HalfLineFn) -> f64 {
    a.values.iter().zip(&b.values).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

pub(super) fn run_selfsimilar(cfg: &ScenarioConfig, out: &mut Output, summary: &mut Summary) -> LabResult<()> {
    let nl = Nonlinearity::parse(cfg.str("profile", "nonlinearity")).expect("validated nonlinearity");
    let pcfg = ProfileConfig {
        n: cfg.usize("profile", "n"),
        tol: cfg.f64("profile", "tol"),
        max_iter: cfg.usize("profile", "max_iter"),
        ..Default::default()
    };
    let eps_list = cfg.floats("profile", "eps");
    let compact = cfg.bool("compactness", "enabled");
    let mut t = Table::new(&[
        "eps",
        "delta",
        "g_h2",
        "iterations",
        "lipschitz",
        "residual",
        "compactness_profile_diff",
        "compactness_delta_diff",
    ]);
    let mut last = None;
    for &eps in eps_list {
        let fp = fixed_point_profile(nl, eps, &pcfg)?;
        let residual = profile_equation_residual(&fp.profile(), fp.delta, nl, eps);
        let (pd, dd) = if compact {
            let cp = compactness_profile(nl, eps, &pcfg)?;
            let aligned = fixed_point_profile(
                nl,
                eps,
                &ProfileConfig {
                    slope: cp.mu / (1.0 + cp.mu),
                    ..pcfg.clone()
                },
            )?;
            (
                max_diff(&aligned.profile(), &cp.normalized_profile()),
                (aligned.delta - cp.lambda).abs(),
            )
        } else {
            (f64::NAN, f64::NAN)
        };
        t.push(vec![
            eps,
            fp.delta,
            fp.g.h2_norm(),
            fp.iterations as f64,
            fp.lipschitz,
            residual,
            pd,
            dd,
        ]);
        last = Some(fp);
    }
    out.csv("scaling.csv", &t)?;

    if let Some(fp) = last {
        let f = fp.profile();
        let mut p = Table::new(&["s", "z", "profile", "g"]);
        for (k, &s) in f.s().iter().enumerate() {
            let z = if s < 1.0 { s / (1.0 - s) } else { f64::INFINITY };
            p.push(vec![s, z, f.values[k], fp.g.values[k]]);
        }
        out.csv("profile.csv", &p)?;
    }

    let rows: Vec<&Vec<f64>> = t.rows.iter().filter(|r| r[0] > 0.0).collect();
    if rows.len() >= 2 {
        let e: Vec<f64> = rows.iter().map(|r| r[0]).collect();
        let d: Vec<f64> = rows.iter().map(|r| r[1].abs()).collect();
        let g: Vec<f64> = rows.iter().map(|r| r[2]).collect();
        summary.push("delta_slope", loglog_slope(&e, &d));
        summary.push("g_slope", loglog_slope(&e, &g));
    }
    let worst = |k: usize| t.rows.iter().map(|r| r[k]).fold(0.0, f64::max);
    summary.push("max_residual", worst(5));
    if compact {
        summary.push("max_compactness_profile_diff", worst(6));
        summary.push("max_compactness_delta_diff", worst(7));
    }
    Ok(())
}

/// Mode-two test profile `1/(1+R)²`.
fn mode_two_datum(r: f64) -> f64 {
    1.0 / (1.0 + r).powi(2)
}

pub(super) fn run_bsalpha(cfg: &ScenarioConfig, out: &mut Output, summary: &mut Summary) -> LabResult<()> {
    let samples = cfg.usize("audit", "samples");
    let mut audit = Table::new(&["alpha", "max_ratio", "stated_bound", "sharp_bound"]);
    let mut worst_stated = 0.0f64;
    let mut worst_sharp = 0.0f64;
    for &alpha in cfg.floats("audit", "alphas") {
        let a = r_norm_audit(alpha, samples, cfg.seed)?;
        worst_stated = worst_stated.max(a.max_ratio / a.stated_bound);
        worst_sharp = worst_sharp.max(a.max_ratio / a.sharp_bound);
        audit.push(vec![alpha, a.max_ratio, a.stated_bound, a.sharp_bound]);
    }
    out.csv("r_audit.csv", &audit)?;
    summary.push("r_ratio_over_stated", worst_stated);
    summary.push("r_ratio_over_sharp", worst_sharp);

    let alphas = cfg.floats("modes", "alphas");
    let mut modes = Table::new(&["alpha", "bvp_vs_split_rel"]);
    let mut regular = Table::new(&["alpha", "constant"]);
    let mut worst_mode = 0.0f64;
    let mut consts = Vec::new();
    for &alpha in alphas {
        let grid = bsalpha_grid(alpha)?;
        let prof = Profile1D::from_fn(&grid, mode_two_datum, 0.0)?;
        let psi = solve_mode(&ModeProfile::new(2, prof.clone(), alpha)?)?;
        let split = singular_split(&prof, alpha)?.mode_two_solution();
        let err = psi
            .values
            .iter()
            .zip(&split.values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
            / split.max_abs();
        worst_mode = worst_mode.max(err);
        modes.push(vec![alpha, err]);
        let c = regular_estimate_constant(alpha, cfg.usize("modes", "regular_samples"), cfg.seed)?;
        consts.push(c);
        regular.push(vec![alpha, c]);
    }
    out.csv("mode2.csv", &modes)?;
    out.csv("regular.csv", &regular)?;
    summary.push("mode2_max_rel_error", worst_mode);
    if !consts.is_empty() {
        let lo = consts.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = consts.iter().cloned().fold(0.0, f64::max);
        summary.push("regular_constant_max", hi);
        summary.push("regular_constant_spread", hi / lo);
    }
    Ok(())
}
