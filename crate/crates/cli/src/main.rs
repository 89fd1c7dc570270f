//! Command-line entry point for the experiment harness.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use bdisac_cli::{
    apply_overrides, load_spec, preset, run, run_beampattern, run_compare, ExperimentSpec,
    RunMode, Scheme, PRESET_NAMES,
};

#[derive(Parser)]
#[command(
    name = "bdisac",
    version,
    about = "BD-IRS aided uplink ISAC: reflection optimization experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct CommonArgs {
    /// Experiment TOML file (unit-aware scenario schema).
    #[arg(long, conflicts_with = "preset")]
    config: Option<PathBuf>,
    /// Named preset scenario.
    #[arg(long)]
    preset: Option<String>,
    /// Comma-separated seed list overriding the spec.
    #[arg(long, value_delimiter = ',')]
    seed: Vec<u64>,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
    /// Worker threads for sweep cells (0 = automatic).
    #[arg(long, default_value_t = 0)]
    workers: usize,
    /// key=value overrides on the loaded spec (dotted paths, internal units),
    /// e.g. --override scenario.gamma_pcrb=1e-3 --override pdd.max_outer=40
    #[arg(long = "override", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

#[derive(Subcommand)]
enum Command {
    /// PCRB-only designs (no communication constraint).
    Sensing(CommonArgs),
    /// Joint design: max-min rate under the PCRB threshold.
    Isac(CommonArgs),
    /// Time-division scheme with per-stage designs and optimal split.
    Tdma(CommonArgs),
    /// SDMA-versus-TDMA table over a PCRB-threshold grid.
    Compare(CommonArgs),
    /// Sensing-power beampattern export for the benchmark schemes.
    Beampattern {
        #[command(flatten)]
        common: CommonArgs,
        /// Grid points over [0, pi).
        #[arg(long, default_value_t = 360)]
        resolution: usize,
    },
    /// List the available presets.
    PresetList,
}

fn load(common: &CommonArgs) -> Result<ExperimentSpec, String> {
    let mut spec = match (&common.config, &common.preset) {
        (Some(path), None) => {
            let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
            load_spec(&text)?
        }
        (None, Some(name)) => preset(name)?,
        (None, None) => return Err("provide either --config or --preset".into()),
        (Some(_), Some(_)) => unreachable!("clap conflicts_with"),
    };
    if !common.seed.is_empty() {
        spec.seeds = common.seed.clone();
    }
    apply_overrides(&spec, &common.overrides)
}

fn dispatch() -> Result<(), String> {
    let cli = Cli::parse();
    match cli.command {
        Command::Sensing(common) => {
            let spec = load(&common)?;
            let summary = run(RunMode::Sensing, &spec, &common.out, common.workers)?;
            println!(
                "wrote {} rows to {}",
                summary.cells.len(),
                summary.results_path.display()
            );
            Ok(())
        }
        Command::Isac(common) => {
            let spec = load(&common)?;
            let summary = run(RunMode::Isac, &spec, &common.out, common.workers)?;
            println!(
                "wrote {} rows to {}",
                summary.cells.len(),
                summary.results_path.display()
            );
            Ok(())
        }
        Command::Tdma(common) => {
            let mut spec = load(&common)?;
            spec.schemes = vec![Scheme::Tdma];
            let summary = run(RunMode::Isac, &spec, &common.out, common.workers)?;
            println!(
                "wrote {} rows to {}",
                summary.cells.len(),
                summary.results_path.display()
            );
            Ok(())
        }
        Command::Compare(common) => {
            let spec = load(&common)?;
            let path = run_compare(&spec, &common.out)?;
            println!("wrote {}", path.display());
            Ok(())
        }
        Command::Beampattern { common, resolution } => {
            let spec = load(&common)?;
            let path = run_beampattern(&spec, &common.out, resolution)?;
            println!("wrote {}", path.display());
            Ok(())
        }
        Command::PresetList => {
            for name in PRESET_NAMES {
                println!("{name}");
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    match dispatch() {
        Ok(()) => ExitCode::SUCCESS,
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::FAILURE
        }
    }
}
