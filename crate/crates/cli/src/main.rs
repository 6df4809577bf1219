use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use ebqi_cli::{execute, CliError, Command, ExperimentConfig, Format};

/// Free-electron / qubit interaction experiments.
///
/// Exit codes: 0 success, 2 config error, 3 dispersive regime invalid under
/// --strict, 4 recovery solver did not converge (best iterate written).
#[derive(Debug, Parser)]
#[command(name = "ebqi", version)]
struct Args {
    #[arg(value_enum)]
    command: Command,
    /// TOML config, or a manifest.json from an earlier run.
    #[arg(long)]
    config: PathBuf,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    /// Monte-Carlo shots per readout point.
    #[arg(long)]
    shots: Option<u64>,
    #[arg(long, value_enum)]
    format: Option<Format>,
    /// Fail with exit code 3 outside the dispersive regime.
    #[arg(long)]
    strict: bool,
}

fn main() -> ExitCode {
    let args = Args::parse();
    let mut config = match ExperimentConfig::load(&args.config) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("{}", CliError::Config(e));
            return ExitCode::from(2);
        }
    };
    // flags override the file; the manifest records the merged values
    config.seed = args.seed.or(config.seed);
    config.shots = args.shots.or(config.shots);
    config.format = args.format.or(config.format);
    if args.strict {
        config.strict = Some(true);
    }

    match execute(args.command, &config, &args.out) {
        Ok(report) => {
            for note in &report.notes {
                eprintln!("{note}");
            }
            match &report.manifest {
                Some(m) => println!("{} finished; manifest at {}", args.command, m.display()),
                None => println!("config ok"),
            }
            ExitCode::from(report.status.exit_code() as u8)
        }
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
