//! `bcreg` command-line front end: CSV ingestion, experiment dispatch and
//! result emission.

pub mod args;
pub mod commands;
pub mod csvio;
pub mod error;
pub mod output;

pub use args::{Cli, Command, OutputFormat};
pub use csvio::{parse_csv_dataset, write_csv_dataset};
pub use error::{CliError, Result};

/// Runs a parsed command line and writes its results.
pub fn run(cli: &Cli) -> Result<()> {
    let text = match cli.threads {
        Some(threads) => rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .map_err(|e| CliError::Argument(format!("--threads: {e}")))?
            .install(|| render(&cli.command))?,
        None => render(&cli.command)?,
    };
    output::emit(&text, out_path(&cli.command))
}

/// Executes `command` and renders its results in the requested format.
pub fn render(command: &Command) -> Result<String> {
    let outcome = commands::execute(command)?;
    output::render(command, &outcome, format(command))
}

fn format(command: &Command) -> OutputFormat {
    match command {
        Command::Fit(a) => a.output.format,
        Command::BiasVariance(a) => a.output.format,
        Command::Stream(a) => a.output.format,
        Command::KernelStream(a) => a.output.format,
        Command::Chunks(_) => OutputFormat::Json,
    }
}

fn out_path(command: &Command) -> Option<&std::path::Path> {
    match command {
        Command::Fit(a) => a.output.out.as_deref(),
        Command::BiasVariance(a) => a.output.out.as_deref(),
        Command::Stream(a) => a.output.out.as_deref(),
        Command::KernelStream(a) => a.output.out.as_deref(),
        Command::Chunks(_) => None,
    }
}
