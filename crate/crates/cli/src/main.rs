mod commands;
mod config;
mod error;
mod population;
mod table;

use std::ffi::OsString;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use commands::Globals;
use error::CliResult;

#[derive(Debug, Parser)]
#[command(name = "shapekit", version, about = "Body-shape measurement, regression, fitting and evaluation")]
struct Cli {
    /// TOML file of flag values; command-line flags take precedence.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Seed for every random choice.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Omit timestamps so outputs are byte-identical across runs.
    #[arg(long, global = true)]
    deterministic: bool,
    /// Worker threads for batch work; 0 uses all cores.
    #[arg(long, global = true, default_value_t = 0)]
    jobs: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Measure bodies given by β rows or mesh files.
    #[command(args_override_self = true)]
    Measure(commands::measure::MeasureArgs),
    /// Fit a polynomial mapper between attributes, measurements and β.
    #[command(args_override_self = true)]
    FitMapper(commands::mapper::FitMapperArgs),
    /// Apply a fitted mapper to a subject table.
    #[command(args_override_self = true)]
    Predict(commands::mapper::PredictArgs),
    /// Fit β to attribute and measurement targets.
    #[command(args_override_self = true)]
    FitShape(commands::fit::FitShapeArgs),
    /// Compare predicted and ground-truth bodies.
    #[command(args_override_self = true)]
    Eval(commands::eval::EvalArgs),
    /// Match identities across two embedding sources.
    #[command(args_override_self = true)]
    Dedup(commands::curation::DedupArgs),
    /// Balance or BMI-weight a subject list.
    #[command(args_override_self = true)]
    Curate(commands::curation::CurateArgs),
    /// Write the synthetic body model and population.
    #[command(args_override_self = true)]
    Fixture(commands::fixture::FixtureArgs),
    /// Render eval reports as a CSV or Markdown table.
    #[command(args_override_self = true)]
    Report(commands::report::ReportArgs),
}

const SUBCOMMANDS: [&str; 9] = [
    "measure",
    "fit-mapper",
    "predict",
    "fit-shape",
    "eval",
    "dedup",
    "curate",
    "fixture",
    "report",
];

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Measure(_) => "measure",
            Command::FitMapper(_) => "fit-mapper",
            Command::Predict(_) => "predict",
            Command::FitShape(_) => "fit-shape",
            Command::Eval(_) => "eval",
            Command::Dedup(_) => "dedup",
            Command::Curate(_) => "curate",
            Command::Fixture(_) => "fixture",
            Command::Report(_) => "report",
        }
    }
}

fn run(cli: &Cli) -> CliResult<()> {
    let g = Globals {
        seed: cli.seed,
        deterministic: cli.deterministic,
        jobs: cli.jobs,
    };
    match &cli.command {
        Command::Measure(a) => commands::measure::run(a, &g),
        Command::FitMapper(a) => commands::mapper::fit(a, &g),
        Command::Predict(a) => commands::mapper::predict(a, &g),
        Command::FitShape(a) => commands::fit::run(a, &g),
        Command::Eval(a) => commands::eval::run(a, &g),
        Command::Dedup(a) => commands::curation::dedup(a, &g),
        Command::Curate(a) => commands::curation::curate(a, &g),
        Command::Fixture(a) => commands::fixture::run(a, &g),
        Command::Report(a) => commands::report::run(a, &g),
    }
}

fn main() -> ExitCode {
    let argv: Vec<OsString> = std::env::args_os().collect();
    let argv = match config::expand(argv, &SUBCOMMANDS) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("{}", e.to_json());
            return ExitCode::from(1);
        }
    };
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(e.exit_code() as u8);
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.with("subcommand", cli.command.name()).to_json());
            ExitCode::from(1)
        }
    }
}
