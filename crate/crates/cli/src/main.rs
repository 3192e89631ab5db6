//! `kgtrace`: verify knowledge-graph statements against grounding documents,
//! build the BioRED-Verify dataset and run the evaluations.

mod commands;
mod config;
mod exit;
mod manifest;
mod wiring;

use std::fs;
use std::process::ExitCode;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;

use clap::{Parser, Subcommand};

use commands::dataset::BuildDatasetArgs;
use commands::evaluate::EvaluateArgs;
use commands::report::ReportArgs;
use commands::verify::{VerifyWikidataArgs, VerifyWikipediaArgs};
use commands::Outcome;
use config::{GlobalArgs, RunConfig};
use exit::{CliError, EXIT_INTERRUPTED, EXIT_OK};
use wiring::Context;

#[derive(Debug, Parser)]
#[command(name = "kgtrace", version, about = "Traceable verification of knowledge-graph statements")]
struct Cli {
    #[command(flatten)]
    global: GlobalArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Select unsourced statements of an entity and verify them through web search.
    VerifyWikidata(VerifyWikidataArgs),
    /// Verify statements through the sources cited by the entity's Wikipedia article.
    VerifyWikipedia(VerifyWikipediaArgs),
    /// Build BioRED-Verify from the BioRED corpus.
    BuildDataset(BuildDatasetArgs),
    /// Run an evaluation and print its tables.
    Evaluate(EvaluateArgs),
    /// Validate report XML and render it as HTML.
    Report(ReportArgs),
}

fn run(cli: Cli, stop: Arc<AtomicBool>) -> Result<Outcome, CliError> {
    let config = RunConfig::resolve(&cli.global)?;
    fs::create_dir_all(&config.out).map_err(|e| CliError::io(config.out.display(), e))?;
    if let Command::Report(args) = &cli.command {
        return commands::report::report(&config.out, args);
    }
    let ctx = Context::new(config, stop)?;
    let outcome = match &cli.command {
        Command::VerifyWikidata(args) => commands::verify::verify_wikidata(&ctx, args),
        Command::VerifyWikipedia(args) => commands::verify::verify_wikipedia(&ctx, args),
        Command::BuildDataset(args) => commands::dataset::build_dataset(&ctx, args),
        Command::Evaluate(args) => commands::evaluate::evaluate(&ctx, args),
        Command::Report(_) => unreachable!("handled above"),
    }?;
    if ctx.config.is_replay() && kgtrace::http::live_request_count() > 0 {
        return Err(CliError::Network("live network request issued during replay".into()));
    }
    Ok(outcome)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let stop = Arc::new(AtomicBool::new(false));
    let handler_flag = stop.clone();
    if let Err(e) = ctrlc::set_handler(move || {
        if handler_flag.swap(true, Ordering::SeqCst) {
            std::process::exit(EXIT_INTERRUPTED);
        }
        eprintln!("stopping after in-flight requests; press ctrl-c again to abort");
    }) {
        log::warn!("cannot install interrupt handler: {e}");
    }
    match run(cli, stop) {
        Ok(Outcome::Completed) => ExitCode::from(EXIT_OK as u8),
        Ok(Outcome::Interrupted) => ExitCode::from(EXIT_INTERRUPTED as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
