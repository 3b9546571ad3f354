use clap::{Parser, Subcommand};
use lab::config::{Scenario, ScenarioConfig};
use lab::criteria::{run_suite, Suite};
use lab::error::{LabError, LabResult};
use lab::formats::{write_pgm, Snapshot};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

/// Experiment runner for the vortexlab solvers.
#[derive(Parser)]
#[command(name = "lab", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario configuration. The run directory defaults to
    /// `$LAB_OUTPUT_DIR/<name>` (or `lab-output/<name>`).
    Run { config: PathBuf },
    /// Evaluate a verification suite and print one line per criterion.
    Verify {
        #[arg(value_parser = Suite::NAMES)]
        suite: String,
    },
    /// Convert an FLD1 snapshot to a PGM heatmap.
    Render {
        snapshot: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// List the scenario ids.
    ListScenarios,
}

fn output_root() -> PathBuf {
    std::env::var_os("LAB_OUTPUT_DIR")
        .filter(|v| !v.is_empty())
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from("lab-output"))
}

fn run(config: &Path) -> LabResult<()> {
    let cfg = ScenarioConfig::load(config, &output_root())?;
    let report = lab::scenarios::run(&cfg)?;
    println!("scenario {} -> {}", report.scenario.id(), report.dir.display());
    for (k, v) in &report.summary.entries {
        println!("  {k} = {v:e}");
    }
    println!("  {} files written", report.files.len());
    Ok(())
}

fn render(snapshot: &Path, out: &Path) -> LabResult<()> {
    let s = Snapshot::read(snapshot)?;
    write_pgm(out, s.nx, s.ny, &s.values)
}

fn fail(e: LabError) -> ExitCode {
    eprintln!("error: {e}");
    ExitCode::from(e.exit_code() as u8)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Run { config } => match run(&config) {
            Ok(()) => ExitCode::SUCCESS,
            Err(e) => fail(e),
        },
        Command::Verify { suite } => {
            let suite = Suite::parse(&suite).expect("restricted by clap");
            let results = run_suite(suite, |c| println!("{}", c.line()));
            let failed = results.iter().filter(|c| !c.pass).count();
            println!("suite={} criteria={} failed={failed}", suite_name(suite), results.len());
            if failed == 0 {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(3)
            }
        }
        Command::Render { snapshot, out } => match render(&snapshot, &out) {
            Ok(()) => ExitCode::SUCCESS,
            Err(e) => fail(e),
        },
        Command::ListScenarios => {
            for s in Scenario::ALL {
                println!("{:<16}{}", s.id(), s.description());
            }
            ExitCode::SUCCESS
        }
    }
}

fn suite_name(s: Suite) -> &'static str {
    match s {
        Suite::Conservation => "conservation",
        Suite::Oracles => "oracles",
        Suite::Bounds => "bounds",
        Suite::All => "all",
    }
}
