mod commands;
mod data;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use output::Format;

const DATA_HELP: &str = "\
Reference data:
  Model parameters default to the shipped per-channel fit of the resolution
  limit (baseline sensitivity, frequency slope, eccentricity slope) together
  with the sensitivity, cone contrast and pole chromaticities of the stimuli
  the thresholds were measured with. The population spread defaults to the
  shipped per-channel Gaussian spread of observer thresholds at 0, 10 and 20
  degrees. Both are embedded in the binary. RETINA_LIMIT_DATA_DIR names a
  directory whose reference_model.json and reference_population.json replace
  them; --model-file and --population-file take precedence over both.";

#[derive(Debug, Parser)]
#[command(name = "retina-limit", version, about = "Display resolution limits of human vision", after_help = DATA_HELP)]
struct Cli {
    /// Model parameter JSON replacing the reference model.
    #[arg(long, global = true, value_name = "PATH")]
    model_file: Option<PathBuf>,

    /// Population spread JSON replacing the reference table.
    #[arg(long, global = true, value_name = "PATH")]
    population_file: Option<PathBuf>,

    /// Output format.
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Check whether a display reaches the resolution limit for a viewer.
    #[command(after_help = DATA_HELP)]
    Calc(commands::calc::Args),
    /// Emit plot-ready curves of thresholds, required lines or pixel density.
    #[command(after_help = DATA_HELP)]
    Curves(commands::curves::Args),
    /// Fit the resolution-limit model to threshold or trial data.
    #[command(after_help = DATA_HELP)]
    Fit(commands::fit::Args),
    /// Run simulated QUEST sessions against a Weibull observer.
    #[command(after_help = DATA_HELP)]
    Simulate(commands::simulate::Args),
    /// Remove image content invisible at each pixel's eccentricity.
    #[command(after_help = DATA_HELP)]
    Foveate(commands::foveate::Args),
}

/// Error raised after parsing for flag combinations clap cannot express.
#[derive(Debug)]
pub struct UsageError(pub String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

pub fn usage(msg: impl Into<String>) -> anyhow::Error {
    UsageError(msg.into()).into()
}

/// A closed stdout (e.g. piped into `head`) is not a failure.
fn is_broken_pipe(e: &anyhow::Error) -> bool {
    e.chain().any(|c| {
        let io = c
            .downcast_ref::<std::io::Error>()
            .or_else(|| match c.downcast_ref::<csv::Error>()?.kind() {
                csv::ErrorKind::Io(io) => Some(io),
                _ => None,
            });
        io.is_some_and(|io| io.kind() == std::io::ErrorKind::BrokenPipe)
    })
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let data = data::DataSources {
        model_file: cli.model_file,
        population_file: cli.population_file,
        data_dir: std::env::var_os("RETINA_LIMIT_DATA_DIR").map(PathBuf::from),
    };
    let result = match cli.command {
        Command::Calc(a) => commands::calc::run(&a, &data, cli.format.unwrap_or(Format::Table)),
        Command::Curves(a) => commands::curves::run(&a, &data, cli.format.unwrap_or(Format::Csv)),
        Command::Fit(a) => commands::fit::run(&a, &data, cli.format.unwrap_or(Format::Json)),
        Command::Simulate(a) => commands::simulate::run(&a, &data, cli.format.unwrap_or(Format::Json)),
        Command::Foveate(a) => commands::foveate::run(&a, &data, cli.format.unwrap_or(Format::Table)),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) if is_broken_pipe(&e) => ExitCode::SUCCESS,
        Err(e) if e.is::<UsageError>() => {
            eprintln!("error: {e}");
            eprintln!("\nFor more information, try '--help'.");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
