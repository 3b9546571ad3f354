use super::{Output, Summary};
use crate::config::ScenarioConfig;
use crate::error::LabResult;
use crate::formats::Table;
use vortexlab::axisym::{evolve_fundamental, exact_blowup, FundamentalConfig, PolarField};
use vortexlab::models1d::{
    burgers_1d, evolve_1d, holder_cusp, lambda_oracle, scale_invariant_euler, CircleField, Closure,
    Evolve1dConfig, History1D, OracleConfig, BURGERS_P,
};
use vortexlab::radial::{Profile1D, RadialGrid};
use vortexlab::stats::RunStatus;

pub fn initial_1d(kind: &str, n: usize, amplitude: f64, holder_alpha: f64) -> vortexlab::Result<CircleField> {
    let a = amplitude;
    match kind {
        "sine" => CircleField::from_fn(n, |x| a * x.sin()),
        "one-plus-sine" => CircleField::from_fn(n, |x| a * (1.0 + x.sin())),
        "smooth" => CircleField::from_fn(n, |x| {
            a * (x.sin() + 0.5 * (2.0 * x).cos() + 0.2 * (x - 1.0).cos().exp())
        }),
        "analytic" => CircleField::from_fn(n, |x| a * (1.0 + x.sin()) * (1.0 + 0.3 * x.cos())),
        "holder" => {
            let f = holder_cusp(holder_alpha);
            CircleField::from_fn(n, move |x| a * f(x))
        }
        _ => CircleField::from_fn(n, |x| a * (3.0 * x).cos()),
    }
}

fn status_code(s: &RunStatus) -> f64 {
    match s {
        RunStatus::Completed => 0.0,
        RunStatus::ResolutionExceeded { .. } => 1.0,
    }
}

fn history_table(h: &History1D) -> Table {
    let projection = matches!(h.closure, Closure::ProjectionA | Closure::ProjectionB);
    let mut t = if projection {
        Table::new(&["t", "max_abs", "lambda", "big_lambda"])
    } else {
        Table::new(&["t", "max_abs"])
    };
    for (k, (time, f)) in h.times.iter().zip(&h.fields).enumerate() {
        let mut row = vec![*time, f.max_abs()];
        if projection {
            row.push(h.lambda[k]);
            row.push(h.big_lambda[k]);
        }
        t.push(row);
    }
    t
}

pub(super) fn run_model1d(cfg: &ScenarioConfig, out: &mut Output, summary: &mut Summary) -> LabResult<()> {
    let closure = Closure::parse(cfg.str("model", "closure")).expect("validated closure");
    let n = cfg.usize("model", "n");
    let w0 = initial_1d(
        cfg.str("model", "initial"),
        n,
        cfg.f64("model", "amplitude"),
        cfg.f64("model", "holder_alpha"),
    )?;
    let cfl = cfg.f64("solver", "adaptive_cfl");
    let ecfg = Evolve1dConfig {
        dt: cfg.f64("solver", "dt"),
        end_time: cfg.f64("solver", "end_time"),
        snapshot_every: cfg.usize("solver", "snapshot_every"),
        adaptive_cfl: (cfl > 0.0).then_some(cfl),
        blowup_factor: cfg.f64("solver", "blowup_factor"),
        dealias: cfg.bool("solver", "dealias"),
    };
    match closure {
        Closure::Burgers => {
            let run = burgers_1d(&w0, &ecfg)?;
            let mut cols = vec!["t".to_string()];
            cols.extend(BURGERS_P.iter().map(|p| format!("ux_l{p}")));
            let cols: Vec<&str> = cols.iter().map(|s| s.as_str()).collect();
            let mut t = Table::new(&cols);
            for (time, v) in &run.gradient_norms {
                let mut row = vec![*time];
                row.extend(v);
                t.push(row);
            }
            out.csv("gradient_norms.csv", &t)?;
            out.csv("history.csv", &history_table(&run.history))?;
            summary.push("t_star", run.t_star);
            summary.push("status", status_code(&run.history.status));
        }
        Closure::ScaleInvariantEuler => {
            let h = scale_invariant_euler(&w0, cfg.usize("model", "symmetry"), &ecfg)?;
            out.csv("history.csv", &history_table(&h))?;
            summary.push("status", status_code(&h.status));
        }
        _ => {
            let h = evolve_1d(&w0, closure, &ecfg)?;
            out.csv("history.csv", &history_table(&h))?;
            summary.push("status", status_code(&h.status));
            summary.push("final_time", *h.times.last().unwrap_or(&0.0));
            if matches!(closure, Closure::ProjectionA | Closure::ProjectionB) && cfg.bool("oracle", "enabled") {
                let o = lambda_oracle(
                    &w0,
                    closure,
                    &OracleConfig {
                        dt: ecfg.dt,
                        end_time: ecfg.end_time,
                        h: cfg.f64("oracle", "h"),
                        max_increment: cfg.f64("oracle", "max_increment"),
                        ..Default::default()
                    },
                )?;
                let mut t = Table::new(&["t", "big_lambda_solver", "big_lambda_oracle", "linf_error"]);
                let mut worst = 0.0f64;
                for ((time, f), big) in h.times.iter().zip(&h.fields).zip(&h.big_lambda) {
                    let ob = o.lambda_at(*time);
                    let err = (0..n)
                        .map(|j| (o.omega_given_lambda(CircleField::node(j, n), ob) - f.values[j]).abs())
                        .fold(0.0, f64::max);
                    worst = worst.max(err);
                    t.push(vec![*time, *big, ob, err]);
                }
                out.csv("oracle.csv", &t)?;
                summary.push("oracle_linf_error", worst);
                summary.push("oracle_t_star", o.t_star.unwrap_or(f64::INFINITY));
            }
        }
    }
    Ok(())
}

pub(super) fn run_fundamental(cfg: &ScenarioConfig, out: &mut Output, summary: &mut Summary) -> LabResult<()> {
    let grid = RadialGrid::algebraic(cfg.usize("grid", "n_r"))?;
    let nt = cfg.usize("grid", "n_theta");
    let a = cfg.f64("initial", "amplitude");
    let kind = cfg.str("initial", "kind");
    let prof = |r: f64| r / (1.0 + r).powi(2);
    let w0 = match kind {
        "self-similar" => PolarField::from_profile(&Profile1D::from_fn(&grid, |r| a * prof(r), 0.0)?, nt)?,
        "vanishing-both-ends" => PolarField::from_fn(&grid, nt, |r, t| a * prof(r) * (2.0 * t).sin().powi(2))?,
        _ => PolarField::from_fn(&grid, nt, |r, t| a * prof(r) * t.sin().powi(2))?,
    };
    let cfl = cfg.f64("solver", "cfl");
    let fcfg = FundamentalConfig {
        dt: cfg.f64("solver", "dt"),
        end_time: cfg.f64("solver", "end_time"),
        snapshot_every: cfg.usize("solver", "snapshot_every"),
        cfl: if cfl > 0.0 { cfl } else { f64::INFINITY },
        transport: cfg.bool("solver", "transport"),
        stretching: cfg.bool("solver", "stretching"),
        blowup_factor: cfg.f64("solver", "blowup_factor"),
        ..Default::default()
    };
    let h = evolve_fundamental(&w0, &fcfg)?;
    // The exact solution exists for the self-similar datum with amplitude 2.
    let exact = kind == "self-similar" && a == 2.0 && fcfg.transport && fcfg.stretching;
    let mut t = Table::new(&["t", "max_abs", "rel_error_exact"]);
    let mut worst = 0.0f64;
    for (time, f) in h.times.iter().zip(&h.fields) {
        let err = if exact {
            let mut e = 0.0f64;
            let mut scale = 0.0f64;
            for (i, &r) in grid.r().iter().enumerate() {
                let ex = if r.is_finite() { exact_blowup(r, *time) } else { 0.0 };
                scale = scale.max(ex.abs());
                for j in 0..nt {
                    e = e.max((f.at(i, j) - ex).abs());
                }
            }
            e / scale
        } else {
            f64::NAN
        };
        worst = worst.max(err);
        t.push(vec![*time, f.max_abs(), err]);
    }
    out.csv("history.csv", &t)?;
    summary.push("status", status_code(&h.status));
    summary.push("t_star", h.t_star.unwrap_or(f64::NAN));
    if exact {
        summary.push("max_rel_error_exact", worst);
    }
    Ok(())
}
