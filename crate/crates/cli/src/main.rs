//! `ddg`: simulation, depth features, depth selection, classification,
//! Monte Carlo experiments and DD-plots from the command line.

mod commands;
mod ddplot;
mod error;
mod experiment;
mod inputs;

use clap::{Parser, Subcommand};

use error::CliResult;

#[derive(Debug, Parser)]
#[command(name = "ddg", version, about = "Depth-based classification of functional data")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Draw training and test samples from a simulation model.
    Simulate(commands::SimulateArgs),
    /// Compute depth features (the DD^G map) of functional data or points.
    Depth(commands::DepthArgs),
    /// Rank candidate depth features by distance correlation with the labels.
    Dcor(commands::DcorArgs),
    /// Fit a classifier on depth features.
    Train(commands::TrainArgs),
    /// Classify depth features with a saved model.
    Predict(commands::PredictArgs),
    /// Run a Monte Carlo experiment described by a TOML file.
    Experiment(experiment::ExperimentArgs),
    /// Draw a DD-plot with the decision regions of a classifier.
    Ddplot(ddplot::DdplotArgs),
}

/// Worker threads: `DDG_THREADS` when set, otherwise the physical cores.
fn init_threads() -> CliResult<()> {
    let threads = match std::env::var("DDG_THREADS") {
        Ok(v) => v
            .trim()
            .parse::<usize>()
            .ok()
            .filter(|&n| n > 0)
            .ok_or_else(|| error::CliError::usage(format!("DDG_THREADS must be a positive integer, got `{v}`")))?,
        Err(_) => num_cpus::get_physical().max(1),
    };
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| error::CliError::usage(e.to_string()))
}

fn run(cli: Cli) -> CliResult<()> {
    init_threads()?;
    match &cli.command {
        Command::Simulate(a) => commands::simulate(a),
        Command::Depth(a) => commands::depth(a),
        Command::Dcor(a) => commands::dcor(a),
        Command::Train(a) => commands::train(a),
        Command::Predict(a) => commands::predict(a),
        Command::Experiment(a) => experiment::experiment(a),
        Command::Ddplot(a) => ddplot::ddplot(a),
    }
}

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    if let Err(e) = run(cli) {
        eprintln!("error: {e}");
        std::process::exit(e.exit_code());
    }
}
