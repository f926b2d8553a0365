//! `asrprep`: batch front-end for feature extraction, masking, speaker
//! embeddings, n-gram language models and schedule replay.

mod cmd;
mod config;
mod error;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::config::PipelineConfig;
use crate::error::{exit, CliError};

const EXIT_HELP: &str = "\
Exit status:
  0  success
  2  usage, configuration or invalid-argument error
  3  missing or unreadable input, unwritable output
  4  malformed input file (WAV, FMX1, ARPA, labels, score log, model files)
  5  numerical failure during computation

Errors are reported on stderr as a single line: error[<kind>]: <message>";

#[derive(Debug, Parser)]
#[command(name = "asrprep", version, about, after_help = EXIT_HELP)]
struct Cli {
    /// JSON pipeline configuration.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,

    /// Random seed; overrides the configuration's `seed`.
    #[arg(long, global = true)]
    seed: Option<u64>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// WAV files to logmel FMX1 feature files.
    Extract(cmd::signal::ExtractArgs),
    /// Train LDA, background model and embedding projection.
    EmbedTrain(cmd::signal::EmbedTrainArgs),
    /// Per-recording speaker embeddings.
    Embed(cmd::signal::EmbedArgs),
    /// Chunk a feature file and apply time and feature masking.
    Augment(cmd::signal::AugmentArgs),
    /// Monte-Carlo masking statistics as CSV.
    MaskStats(cmd::signal::MaskStatsArgs),
    /// Train a Kneser-Ney n-gram model and write it as ARPA.
    LmTrain(cmd::lm::LmTrainArgs),
    /// Fit interpolation weights of ARPA models on a dev corpus.
    LmInterp(cmd::lm::LmInterpArgs),
    /// Perplexity of a model (ARPA or interpolation manifest) on a corpus.
    LmPpl(cmd::lm::LmPplArgs),
    /// Import an ARPA file and write it back in canonical form.
    LmArpa(cmd::lm::LmArpaArgs),
    /// Replay a dev-score log through the learning-rate schedule.
    SchedReplay(cmd::sched::SchedReplayArgs),
}

pub struct Context {
    pub cfg: PipelineConfig,
    pub seed: u64,
}

fn run(cli: Cli) -> Result<(), CliError> {
    let cfg = PipelineConfig::load(cli.config.as_deref())?;
    let ctx = Context {
        seed: cfg.seed(cli.seed),
        cfg,
    };
    match cli.command {
        Command::Extract(a) => cmd::signal::extract(&ctx, a),
        Command::EmbedTrain(a) => cmd::signal::embed_train(&ctx, a),
        Command::Embed(a) => cmd::signal::embed(&ctx, a),
        Command::Augment(a) => cmd::signal::augment(&ctx, a),
        Command::MaskStats(a) => cmd::signal::mask_stats(&ctx, a),
        Command::LmTrain(a) => cmd::lm::lm_train(&ctx, a),
        Command::LmInterp(a) => cmd::lm::lm_interp(&ctx, a),
        Command::LmPpl(a) => cmd::lm::lm_ppl(&ctx, a),
        Command::LmArpa(a) => cmd::lm::lm_arpa(&ctx, a),
        Command::SchedReplay(a) => cmd::sched::sched_replay(&ctx, a),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            // --help and --version
            let _ = e.print();
            return ExitCode::from(exit::OK as u8);
        }
        Err(e) => {
            let rendered = e.to_string();
            let first = rendered
                .lines()
                .next()
                .unwrap_or("invalid arguments")
                .trim_start_matches("error: ");
            eprintln!("error[usage]: {first}");
            return ExitCode::from(exit::USAGE as u8);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.line());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
