//! `deid`: de-identifies speech recordings from their transcripts and evaluates each stage.
//!
//! ```text
//! deid prep   --input corpus/ --folds 10 --seed 42 --out folds/
//! deid tag    --input transcript.txt --backend gazetteer:lexicon.tsv --entities-out ents.json
//! deid redact --wav rec.wav --textgrid rec.TextGrid --entities ents.json --out rec.redacted.wav
//! deid eval   pipeline --pred timed.json --gold gold.json -t 0.25
//! ```
//!
//! Any flag can be preset in a TOML file passed with `--config`; see [`config`].

mod config;
mod demo;
mod eval;
mod prep;
mod redact;
mod tag;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

#[derive(Parser, Debug)]
#[command(name = "deid", version, about = "Speech de-identification pipeline")]
struct Cli {
    /// TOML file presetting flags, one `[subcommand]` table per command; flags given on the
    /// command line take precedence.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,

    /// More log output on standard error (-v info, -vv debug).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Turn an annotated text corpus into k CoNLL fold files.
    Prep(prep::PrepArgs),
    /// Detect named entities in transcripts.
    Tag(tag::TagArgs),
    /// Replace the audio of entity intervals with a fill signal.
    Redact(redact::RedactArgs),
    /// Score forced alignment, text NER or the whole pipeline.
    Eval {
        #[command(subcommand)]
        command: eval::EvalCommand,
    },
    /// Write the bundled demo corpus.
    Demo(demo::DemoArgs),
}

fn main() -> ExitCode {
    let args = match config::expand_args(std::env::args_os().collect()) {
        Ok(args) => args,
        Err(e) => {
            eprintln!("error: {e:#}");
            return ExitCode::from(2);
        }
    };
    let cli = Cli::parse_from(args);
    let level = match cli.verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    env_logger::Builder::new()
        .filter_level(level)
        .parse_default_env()
        .format_timestamp(None)
        .init();

    let result = match cli.command {
        Command::Prep(a) => prep::run(a),
        Command::Tag(a) => tag::run(a),
        Command::Redact(a) => redact::run(a),
        Command::Eval { command } => eval::run(command),
        Command::Demo(a) => demo::run(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
