use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use mapsim::experiment::{apply_overrides, load_config, run, Command, Overrides, RunError};

/// Markov additive process simulation and limit-theorem verification.
///
/// Exit status: 0 when every gated verdict passes, 1 on a failed verdict,
/// 2 when a required hypothesis does not hold, 3 on config or I/O errors.
#[derive(Debug, Parser)]
#[command(name = "mapsim", version)]
struct Cli {
    command: Command,
    /// Experiment config file.
    #[arg(long)]
    config: PathBuf,
    /// Replace the master seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Replace the number of paths.
    #[arg(long)]
    paths: Option<usize>,
    /// Replace the largest horizon.
    #[arg(long)]
    horizon: Option<f64>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads; results do not depend on this.
    #[arg(long)]
    threads: Option<usize>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(RunError::EXIT_CODE as u8) } else { ExitCode::SUCCESS };
        }
    };
    match execute(&cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(RunError::EXIT_CODE as u8)
        }
    }
}

fn execute(cli: &Cli) -> Result<i32, RunError> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| mapsim::error::MapError::InvalidArgument(format!("--threads: {e}")))?;
    }
    let mut cfg = load_config(&cli.config)?;
    let overrides = Overrides { seed: cli.seed, paths: cli.paths, horizon: cli.horizon, out: cli.out.clone() };
    apply_overrides(&mut cfg, &overrides)?;
    let outcome = run(cli.command, &cfg)?;
    let summary = std::path::Path::new(&cfg.experiment.out).join("summary.txt");
    if let Ok(text) = std::fs::read_to_string(summary) {
        print!("{text}");
    }
    Ok(outcome.exit_code())
}
