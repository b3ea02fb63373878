//! semtrace: build LSA-style semantic spaces from text corpora, query
//! them, replay corpus growth with gain attribution, compute PMI tables
//! and run the evaluation harnesses.

mod commands;
mod config;
mod lock;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use semtrace_core::CoreError;

#[derive(Parser)]
#[command(name = "semtrace", version, about = "semantic-space toolkit: build, query, trace, evaluate")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build a semantic space from a corpus and serialize it
    Build(BuildArgs),
    /// Print the cosine similarity of two words or texts
    Query(QueryArgs),
    /// Pointwise mutual information for word pairs over a corpus
    Pmi(PmiArgs),
    /// Replay corpus growth, attributing each pair's similarity change
    Trace(TraceArgs),
    /// Evaluation harnesses over a serialized space
    Eval(EvalArgs),
}

#[derive(clap::Args)]
struct BuildArgs {
    /// corpus file: UTF-8, one paragraph per non-blank line
    #[arg(long)]
    corpus: PathBuf,
    /// number of retained dimensions (default 400)
    #[arg(long)]
    dimensions: Option<usize>,
    /// weighting scheme: raw | log-entropy (default raw)
    #[arg(long)]
    weighting: Option<String>,
    /// output path for the binary space (default $SEMTRACE_OUT/space.bin)
    #[arg(long)]
    out: Option<PathBuf>,
    /// also export the space as JSON here
    #[arg(long)]
    json: Option<PathBuf>,
    /// TOML config file (flags take precedence)
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(clap::Args)]
struct QueryArgs {
    /// serialized space file
    #[arg(long)]
    space: PathBuf,
    /// first word or whitespace-separated text
    text1: String,
    /// second word or whitespace-separated text
    text2: String,
}

#[derive(clap::Args)]
struct PmiArgs {
    /// corpus file: UTF-8, one paragraph per non-blank line
    #[arg(long)]
    corpus: PathBuf,
    /// pairs file: two tab-separated words per line, # comments
    #[arg(long)]
    pairs: PathBuf,
}

#[derive(clap::Args)]
struct TraceArgs {
    /// corpus file: UTF-8, one paragraph per non-blank line
    #[arg(long)]
    corpus: PathBuf,
    /// pairs file: two tab-separated words per line, # comments
    #[arg(long)]
    pairs: PathBuf,
    /// paragraph count at which tracing begins (default 2000)
    #[arg(long)]
    start: Option<usize>,
    /// paragraph count at which tracing stops (default: whole corpus)
    #[arg(long)]
    end: Option<usize>,
    /// number of retained dimensions (default 400)
    #[arg(long)]
    dimensions: Option<usize>,
    /// weighting scheme: raw | log-entropy (default raw)
    #[arg(long)]
    weighting: Option<String>,
    /// step strategy: exact | incremental (default exact)
    #[arg(long)]
    mode: Option<String>,
    /// checkpoint interval in steps (default 100)
    #[arg(long)]
    checkpoint_every: Option<usize>,
    /// per-step cosine tolerance for incremental mode (default 1e-6)
    #[arg(long)]
    incremental_tolerance: Option<f64>,
    /// output directory (default $SEMTRACE_OUT)
    #[arg(long)]
    out: Option<PathBuf>,
    /// TOML config file (flags take precedence)
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(clap::Args)]
struct EvalArgs {
    #[command(subcommand)]
    harness: EvalHarness,
}

#[derive(Subcommand)]
enum EvalHarness {
    /// four-alternative vocabulary test (JSON items)
    Vocab {
        #[arg(long)]
        space: PathBuf,
        /// JSON array of {stem, correct, close, far, unrelated}
        #[arg(long)]
        items: PathBuf,
    },
    /// association-norm comparison (TSV norms)
    Assoc {
        #[arg(long)]
        space: PathBuf,
        /// TSV: inducing, associate, rank, frequency
        #[arg(long)]
        norms: PathBuf,
        /// restrict the correlation to the top fraction of words by
        /// corpus frequency (e.g. 0.2)
        #[arg(long)]
        freq_percentile: Option<f64>,
    },
}

fn exit_code_for(err: &CoreError) -> u8 {
    match err {
        CoreError::Parameter(_) => 2,
        CoreError::Lookup { .. } | CoreError::AllTokensOutOfVocabulary => 3,
        CoreError::Validation(_) => 4,
        CoreError::Format { .. } | CoreError::EmptyCorpus => 5,
        CoreError::State(_)
        | CoreError::Sequencing(_)
        | CoreError::UndefinedSimilarity
        | CoreError::Io(_) => 1,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Build(args) => commands::build(args),
        Command::Query(args) => commands::query(args),
        Command::Pmi(args) => commands::pmi(args),
        Command::Trace(args) => commands::trace(args),
        Command::Eval(args) => match args.harness {
            EvalHarness::Vocab { space, items } => commands::eval_vocab(&space, &items),
            EvalHarness::Assoc {
                space,
                norms,
                freq_percentile,
            } => commands::eval_assoc(&space, &norms, freq_percentile),
        },
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("semtrace: error: {e}");
            ExitCode::from(exit_code_for(&e))
        }
    }
}
