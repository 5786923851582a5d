use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use dispersive_lab_cli::error::io;
use dispersive_lab_cli::{configure_threads, run_experiment, CliError, Experiment, RunConfig};

/// Run one dispersive-lab experiment and write its artifacts.
#[derive(Parser, Debug)]
#[command(name = "dispersive-lab", version)]
struct Args {
    /// solve | conserve | resonance | strichartz | envelope | bourgain_norms | threshold_table | global_demo
    experiment: String,
    /// `key = value` config file.
    #[arg(long)]
    config: PathBuf,
    /// Overrides `seed`.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides `output_dir`.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn run(args: Args) -> Result<(), CliError> {
    configure_threads()?;
    let experiment = Experiment::parse(&args.experiment)?;
    let text = std::fs::read_to_string(&args.config).map_err(io(&args.config))?;
    let mut cfg = RunConfig::from_text(&text, &args.config.display().to_string(), experiment)?;
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if let Some(out) = args.out {
        cfg.output_dir = out;
    }
    let manifest = run_experiment(&cfg)?;
    for f in &manifest.files {
        println!("{}  {}", f.sha256, cfg.output_dir.join(&f.name).display());
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Args::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.report());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
