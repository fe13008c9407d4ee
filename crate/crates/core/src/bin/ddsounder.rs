use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use ddsounder::cli::{self, EvaluateArgs, SimulateArgs};
use ddsounder::presets::PresetName;
use ddsounder::Error;

#[derive(Parser)]
#[command(name = "ddsounder", version, about = "Dynamic double-directional 28 GHz channel sounding simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Synthesize a measurement campaign into a DDCS file.
    Simulate {
        #[arg(long)]
        scene: Option<PathBuf>,
        #[arg(long)]
        config: Option<PathBuf>,
        /// Built-in scenario instead of --scene.
        #[arg(long)]
        preset: Option<PresetName>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        bursts: Option<usize>,
        #[arg(long)]
        noiseless: bool,
    },
    /// Run the analysis chain on a DDCS file.
    Evaluate {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out_dir: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        /// Detection margin above the noise floor, dB.
        #[arg(long)]
        det_margin: Option<f64>,
        #[arg(long)]
        idle_bursts: Option<usize>,
    },
    /// Summarise an evaluation directory.
    Report {
        #[arg(long)]
        dir: PathBuf,
    },
    /// Write a built-in scenario as scene.toml + config.toml.
    ExportPreset {
        #[arg(long)]
        name: PresetName,
        #[arg(long)]
        dir: PathBuf,
        #[arg(long, default_value_t = 200)]
        bursts: usize,
    },
}

fn run(cli: Cli) -> ddsounder::Result<()> {
    match cli.command {
        Command::Simulate { scene, config, preset, seed, out, bursts, noiseless } => {
            let summary = cli::simulate(&SimulateArgs { scene, config, preset, seed, out: out.clone(), bursts, noiseless })?;
            println!("wrote {}\n{summary}", out.display());
        }
        Command::Evaluate { input, out_dir, config, det_margin, idle_bursts } => {
            let s = cli::evaluate(&EvaluateArgs { input, out_dir: out_dir.clone(), config, det_margin_db: det_margin, idle_bursts })?;
            println!("{} bursts, {} MPCs, {} tracks -> {}", s.bursts, s.mpcs, s.tracks, out_dir.display());
        }
        Command::Report { dir } => print!("{}", cli::report(&dir)?),
        Command::ExportPreset { name, dir, bursts } => {
            let (scene, config) = cli::export_preset(name, bursts, &dir)?;
            println!("wrote {} and {}", scene.display(), config.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if matches!(e, Error::Config { .. }) { 2 } else { 1 })
        }
    }
}
