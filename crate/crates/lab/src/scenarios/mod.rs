//! Scenario runners. Each run writes `manifest.toml` (the resolved
//! configuration), its CSV tables and a `summary.csv` of scalar results into
//! the run directory.

mod channel;
mod euler2d;
mod models;
mod profiles;
mod streams;

pub use channel::{channel_growth, ChannelGrowth, ChannelRow};
pub use euler2d::{euler_initial, simulate, Euler2dRun};
pub use streams::{exact_travel_time, geometry_field};
pub use models::initial_1d;

use crate::config::{Scenario, ScenarioConfig};
use crate::error::{LabError, LabResult};
use crate::formats::{write_text, Table};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

/// Run directory with a record of every file written to it.
pub struct Output {
    pub dir: PathBuf,
    pub files: Vec<PathBuf>,
}

impl Output {
    pub fn new(dir: &Path) -> LabResult<Self> {
        std::fs::create_dir_all(dir).map_err(|e| LabError::io(dir, e))?;
        Ok(Output {
            dir: dir.to_path_buf(),
            files: Vec::new(),
        })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    pub fn text(&mut self, name: &str, text: &str) -> LabResult<()> {
        let p = self.path(name);
        write_text(&p, text)?;
        self.files.push(p);
        Ok(())
    }

    pub fn csv(&mut self, name: &str, t: &Table) -> LabResult<()> {
        self.text(name, &t.to_csv())
    }

    pub fn record(&mut self, path: PathBuf) {
        self.files.push(path);
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Summary {
    pub entries: Vec<(String, f64)>,
}

impl Summary {
    pub fn push(&mut self, name: &str, v: f64) {
        self.entries.push((name.to_string(), v));
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        self.entries.iter().find(|(k, _)| k == name).map(|(_, v)| *v)
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("metric,value\n");
        for (k, v) in &self.entries {
            let _ = writeln!(s, "{k},{}", crate::formats::fmt_f64(*v));
        }
        s
    }
}

#[derive(Debug)]
pub struct RunReport {
    pub scenario: Scenario,
    pub dir: PathBuf,
    pub files: Vec<PathBuf>,
    pub summary: Summary,
}

/// Runs a validated configuration. On a runtime failure the tables gathered
/// so far are still written before the error is returned.
pub fn run(cfg: &ScenarioConfig) -> LabResult<RunReport> {
    let mut out = Output::new(&cfg.output)?;
    out.text("manifest.toml", &cfg.manifest())?;
    let mut summary = Summary::default();
    let result = match cfg.scenario {
        Scenario::Euler2d => euler2d::run(cfg, &mut out, &mut summary),
        Scenario::ChannelGrowth => channel::run(cfg, &mut out, &mut summary),
        Scenario::Model1d => models::run_model1d(cfg, &mut out, &mut summary),
        Scenario::Fundamental => models::run_fundamental(cfg, &mut out, &mut summary),
        Scenario::SelfSimilar => profiles::run_selfsimilar(cfg, &mut out, &mut summary),
        Scenario::BsAlpha => profiles::run_bsalpha(cfg, &mut out, &mut summary),
        Scenario::Pressureless => streams::run_pressureless(cfg, &mut out, &mut summary),
        Scenario::Geometry => streams::run_geometry(cfg, &mut out, &mut summary),
    };
    out.text("summary.csv", &summary.to_csv())?;
    result?;
    Ok(RunReport {
        scenario: cfg.scenario,
        dir: out.dir,
        files: out.files,
        summary,
    })
}
