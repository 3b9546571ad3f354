use super::{Output, Summary};
use crate::config::ScenarioConfig;
use crate::error::LabResult;
use crate::formats::{pgm_bytes, Snapshot, Table};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;
use vortexlab::grid::{Field2D, Grid2D};
use vortexlab::spectral2d::{
    diagnostics, fit_growth_envelope, Casimir, Dealias, DiagnosticsConfig, EnvelopeFit, EulerSolver, EulerState,
    SolverConfig,
};

const METRICS: [&str; 11] = [
    "energy",
    "enstrophy",
    "max_vorticity",
    "max_grad_vorticity",
    "holder_quotient",
    "bkm_integral",
    "y_norm",
    "y_norm_tail_bound",
    "x_norm",
    "x_norm_tail_bound",
    "casimir",
];

/// Initial vorticity and its steady background part (subtracted for
/// perturbation heatmaps).
pub fn euler_initial(kind: &str, grid: Grid2D, amplitude: f64, modes: usize, seed: u64) -> (Field2D, Field2D) {
    let a = amplitude;
    let zero = Field2D::zeros(grid);
    match kind {
        "cellular" => {
            let f = Field2D::from_fn(grid, |x, y| a * x.sin() * y.sin());
            (f.clone(), f)
        }
        "shear" => {
            let f = Field2D::from_fn(grid, |_, y| a * y.sin());
            (f.clone(), f)
        }
        "spiral" => {
            let bump = |x: f64, y: f64| {
                let c = (x.cos() * y.cos()).powi(2) - 0.25;
                (-100.0 * c * c).exp()
            };
            let base = Field2D::from_fn(grid, |x, y| a * x.sin() * y.sin());
            let f = Field2D::from_fn(grid, |x, y| a * x.sin() * y.sin() * (1.0 + bump(x, y)));
            (f, base)
        }
        "random" => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let m = modes as i64;
            let (kx0, ky0) = (2.0 * PI / grid.lx(), 2.0 * PI / grid.ly());
            let mut terms = Vec::new();
            for kx in -m..=m {
                for ky in -m..=m {
                    if kx == 0 && ky == 0 {
                        continue;
                    }
                    let amp = rng.gen_range(-1.0..1.0) / (1.0 + (kx * kx + ky * ky) as f64);
                    let ph = rng.gen_range(0.0..2.0 * PI);
                    terms.push((kx as f64 * kx0, ky as f64 * ky0, amp, ph));
                }
            }
            let f = Field2D::from_fn(grid, |x, y| {
                a * terms.iter().map(|&(p, q, c, ph)| c * (p * x + q * y + ph).cos()).sum::<f64>()
            });
            (f, zero)
        }
        _ => (zero.clone(), zero),
    }
}

pub struct Euler2dRun {
    pub table: Table,
    pub frames: Vec<(f64, Field2D)>,
    pub base: Field2D,
    pub envelope: Option<EnvelopeFit>,
    pub mean_velocity_constant: bool,
    pub error: Option<vortexlab::Error>,
}

/// Runs the solver and gathers diagnostics without touching the disk.
pub fn simulate(cfg: &ScenarioConfig) -> LabResult<Euler2dRun> {
    let grid = Grid2D::torus(
        cfg.f64("grid", "lx"),
        cfg.f64("grid", "ly"),
        cfg.usize("grid", "nx"),
        cfg.usize("grid", "ny"),
    )?;
    let (omega, base) = euler_initial(
        cfg.str("initial", "kind"),
        grid,
        cfg.f64("initial", "amplitude"),
        cfg.usize("initial", "modes"),
        cfg.seed,
    );
    let mean = [cfg.f64("initial", "mean_u"), cfg.f64("initial", "mean_v")];
    let state = EulerState::new(omega)?.with_mean_velocity(mean);
    let nu = cfg.f64("solver", "nu");
    let scfg = SolverConfig {
        dt: cfg.f64("solver", "dt"),
        nu,
        dealias: if cfg.str("solver", "dealias") == "none" {
            Dealias::None
        } else {
            Dealias::TwoThirds
        },
        end_time: cfg.f64("solver", "end_time"),
        snapshot_every: cfg.usize("solver", "snapshot_every"),
        blowup_factor: cfg.f64("solver", "blowup_factor"),
    };
    let dcfg = DiagnosticsConfig {
        alpha: cfg.f64("diagnostics", "alpha"),
        p_max: cfg.usize("diagnostics", "p_max"),
        casimir: Casimir::Power(cfg.f64("diagnostics", "casimir_power")),
        holder_pairs: cfg.usize("diagnostics", "holder_pairs"),
        seed: cfg.seed,
    };
    let keep_frames = cfg.bool("output", "snapshots") || cfg.bool("output", "heatmaps");

    let mut columns = vec!["t"];
    columns.extend(METRICS);
    columns.extend(["tendency_max", "cfl"]);
    let mut table = Table::new(&columns);
    let mut frames = Vec::new();
    let mut mean_ok = true;
    let mut solver = EulerSolver::new(&state, scfg)?;
    let result = solver.run(|s| {
        let st = s.state();
        let tend = s.tendency();
        let rec = diagnostics(&st, &dcfg)?;
        let mut row = vec![st.t];
        row.extend(METRICS.iter().map(|m| rec.get(m).unwrap_or(f64::NAN)));
        row.push(tend.field.max_abs());
        row.push(tend.cfl);
        table.push(row);
        mean_ok &= st.mean_velocity[0].to_bits() == mean[0].to_bits()
            && st.mean_velocity[1].to_bits() == mean[1].to_bits();
        if keep_frames {
            frames.push((st.t, st.omega));
        }
        Ok(())
    });
    let envelope = if nu == 0.0 && table.rows.len() >= 2 {
        let t = table.column("t").unwrap();
        let sup = table.column("max_vorticity").unwrap();
        // C^α norm = sup + Hölder seminorm
        let norm: Vec<f64> = sup.iter().zip(table.column("holder_quotient").unwrap()).map(|(s, h)| s + h).collect();
        (sup[0] > 0.0).then(|| fit_growth_envelope(&t, &norm, sup[0], dcfg.alpha))
    } else {
        None
    };
    Ok(Euler2dRun {
        table,
        frames,
        base,
        envelope,
        mean_velocity_constant: mean_ok,
        error: result.err(),
    })
}

fn relative_drift(v: &[f64]) -> f64 {
    let v0 = v[0];
    let scale = if v0 != 0.0 { v0.abs() } else { 1.0 };
    v.iter().map(|x| (x - v0).abs() / scale).fold(0.0, f64::max)
}

pub(super) fn run(cfg: &ScenarioConfig, out: &mut Output, summary: &mut Summary) -> LabResult<()> {
    let r = simulate(cfg)?;
    out.csv("diagnostics.csv", &r.table)?;
    let col = |n: &str| r.table.column(n).unwrap();
    if !r.table.rows.is_empty() {
        summary.push("final_time", *col("t").last().unwrap());
        summary.push("energy_drift", relative_drift(&col("energy")));
        summary.push("enstrophy_drift", relative_drift(&col("enstrophy")));
        summary.push("casimir_drift", relative_drift(&col("casimir")));
        summary.push("tendency_max", col("tendency_max").iter().cloned().fold(0.0, f64::max));
        let z = col("enstrophy");
        summary.push("enstrophy_nonincreasing", z.windows(2).all(|w| w[1] <= w[0]) as u8 as f64);
        let g = col("max_grad_vorticity");
        summary.push("grad_nondecreasing", g.windows(2).all(|w| w[1] >= w[0]) as u8 as f64);
    }
    summary.push("mean_velocity_constant", r.mean_velocity_constant as u8 as f64);
    if let Some(e) = &r.envelope {
        summary.push("envelope_c", e.c);
        summary.push("envelope_ratio0", e.ratio0);
        summary.push("envelope_worst", e.worst);
    }
    let snapshots = cfg.bool("output", "snapshots");
    let heatmaps = cfg.bool("output", "heatmaps");
    let perturbation = cfg.str("output", "heatmap_field") == "perturbation";
    for (k, (t, f)) in r.frames.iter().enumerate() {
        if snapshots {
            let p = out.path(&format!("snap_{k:04}.fld"));
            Snapshot::from_field(f, *t).write(&p)?;
            out.record(p);
        }
        if heatmaps {
            let vals: Vec<f64> = if perturbation {
                f.values.iter().zip(&r.base.values).map(|(a, b)| a - b).collect()
            } else {
                f.values.clone()
            };
            let p = out.path(&format!("heat_{k:04}.pgm"));
            std::fs::write(&p, pgm_bytes(f.grid.nx, f.grid.rows(), &vals))
                .map_err(|e| crate::error::LabError::io(&p, e))?;
            out.record(p);
        }
    }
    match r.error {
        Some(e) => Err(e.into()),
        None => Ok(()),
    }
}
