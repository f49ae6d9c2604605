use std::path::PathBuf;
use std::process::ExitCode;

use clap::{ArgAction, Parser};
use log::{error, LevelFilter};
use sbnrg_cli::{execute, parse_config, CliError, Invocation, Mode};

/// Spin-boson NRG for a phase qubit on a transmission line.
#[derive(Debug, Parser)]
#[command(name = "sbnrg", version)]
struct Args {
    #[arg(value_enum)]
    mode: Mode,

    /// TOML configuration file.
    #[arg(long)]
    config: PathBuf,

    /// Output directory [default: ./out, or `out` from the config].
    #[arg(long)]
    out: Option<PathBuf>,

    /// Parallel sweep points [default: 1, or `workers` from the config].
    #[arg(long)]
    workers: Option<usize>,

    /// Reject unknown config keys.
    #[arg(long, default_value_t = true, action = ArgAction::Set)]
    strict: bool,

    /// More log output; repeat for debug.
    #[arg(short, long, action = ArgAction::Count)]
    verbose: u8,
}

fn main() -> ExitCode {
    let args = Args::parse();
    env_logger::Builder::new()
        .filter_level(match args.verbose {
            0 => LevelFilter::Warn,
            1 => LevelFilter::Info,
            _ => LevelFilter::Debug,
        })
        .format_timestamp(None)
        .init();
    match run(args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            error!("{e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn run(args: Args) -> Result<(), CliError> {
    let text = std::fs::read_to_string(&args.config).map_err(|e| CliError::io(&args.config, e))?;
    let config = parse_config(&text, args.strict)?;
    let out = args
        .out
        .or_else(|| config.out.clone())
        .unwrap_or_else(|| PathBuf::from("out"));
    let workers = args.workers.or(config.workers).unwrap_or(1);
    if workers == 0 {
        return Err(CliError::config("workers must be >= 1"));
    }
    let inv = Invocation {
        mode: args.mode,
        config,
        out,
        workers,
        strict: args.strict,
    };
    let manifest = execute(&inv)?;
    for f in &manifest.files {
        println!("{}", inv.out.join(&f.path).display());
    }
    Ok(())
}
