use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use kgcorpus::RoleChoice;

/// Build knowledge-graph training corpora and score closed-book QA.
#[derive(Debug, Parser)]
#[command(name = "kgcorpus", version)]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalOpts,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct GlobalOpts {
    /// Seed for every random choice.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Worker threads; output does not depend on it.
    #[arg(long, global = true, default_value_t = 1, value_parser = clap::value_parser!(u64).range(1..))]
    pub parallelism: u64,
    /// Abort with exit code 2 on the first malformed record.
    #[arg(long, global = true)]
    pub strict: bool,
    /// TOML or JSON file with defaults for any flag.
    #[arg(long, global = true, env = crate::config::CONFIG_ENV)]
    pub config: Option<PathBuf>,
    /// Where to write the JSON run report.
    #[arg(long, global = true)]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Validate a triple dump and write a clean copy.
    Ingest(IngestArgs),
    /// Count triples, entities and relations.
    Stats(StatsArgs),
    /// Find entity spans in aligned sentences.
    MatchKelm(MatchKelmArgs),
    /// Produce masked training examples.
    Mask(MaskArgs),
    /// Interleave sources at fixed ratios.
    Mix(MixArgs),
    /// Keep QA items answerable from the graph.
    MatchQa(MatchQaArgs),
    /// Split off the last fraction of a line file.
    Split(SplitArgs),
    /// Exact-match score predictions.
    Score(ScoreArgs),
    /// EM differences between two models.
    Delta(DeltaArgs),
    /// Run the built-in reference checks.
    Selftest,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Ingest(_) => "ingest",
            Command::Stats(_) => "stats",
            Command::MatchKelm(_) => "match-kelm",
            Command::Mask(_) => "mask",
            Command::Mix(_) => "mix",
            Command::MatchQa(_) => "match-qa",
            Command::Split(_) => "split",
            Command::Score(_) => "score",
            Command::Delta(_) => "delta",
            Command::Selftest => "selftest",
        }
    }
}

pub const SUBCOMMANDS: [&str; 10] =
    ["ingest", "stats", "match-kelm", "mask", "mix", "match-qa", "split", "score", "delta", "selftest"];

#[derive(Debug, Args)]
pub struct IngestArgs {
    /// Tab-separated triple dump.
    #[arg(long)]
    pub input: PathBuf,
    #[arg(short, long)]
    pub output: PathBuf,
    /// Drop repeated triples, keeping the first.
    #[arg(long)]
    pub dedup: bool,
}

#[derive(Debug, Args)]
pub struct StatsArgs {
    #[arg(long)]
    pub triples: PathBuf,
    /// Defaults to standard output.
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct MatchKelmArgs {
    #[arg(long)]
    pub kelm: PathBuf,
    #[arg(short, long)]
    pub output: PathBuf,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum RoleArg {
    Random,
    Subject,
    Object,
    Both,
}

impl From<RoleArg> for RoleChoice {
    fn from(r: RoleArg) -> Self {
        match r {
            RoleArg::Random => RoleChoice::Random,
            RoleArg::Subject => RoleChoice::Subject,
            RoleArg::Object => RoleChoice::Object,
            RoleArg::Both => RoleChoice::Both,
        }
    }
}

#[derive(Debug, Args)]
#[command(group(clap::ArgGroup::new("input").required(true).args(["triples", "kelm"])))]
pub struct MaskArgs {
    /// Mask serialized triples from a TSV dump.
    #[arg(long)]
    pub triples: Option<PathBuf>,
    /// Mask aligned sentences from a JSONL file.
    #[arg(long)]
    pub kelm: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = RoleArg::Random)]
    pub role: RoleArg,
    #[arg(long, default_value = kgcorpus::masker::DEFAULT_SENTINEL)]
    pub sentinel: String,
    #[arg(short, long)]
    pub output: PathBuf,
}

#[derive(Debug, Args)]
pub struct MixArgs {
    /// `id=path:weight`; repeat once per source.
    #[arg(long = "source", required = true)]
    pub sources: Vec<String>,
    /// Records per block; every block holds exact per-source counts.
    #[arg(long, default_value_t = 2)]
    pub block: usize,
    #[arg(short, long)]
    pub output: PathBuf,
}

#[derive(Debug, Args)]
pub struct MatchQaArgs {
    /// Triple dump the answers are checked against.
    #[arg(long)]
    pub kg: PathBuf,
    #[arg(long)]
    pub qa: PathBuf,
    #[arg(short, long)]
    pub output: PathBuf,
}

#[derive(Debug, Args)]
pub struct SplitArgs {
    #[arg(long)]
    pub input: PathBuf,
    /// Share of lines that go to the tail, e.g. `0.1` or `1/10`.
    #[arg(long, default_value = "0.1")]
    pub fraction: String,
    #[arg(long)]
    pub head: PathBuf,
    #[arg(long)]
    pub tail: PathBuf,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum EmModeArg {
    Normalized,
    Strict,
}

#[derive(Debug, Args)]
pub struct ScoreArgs {
    #[arg(long)]
    pub preds: PathBuf,
    /// QA items with gold answers.
    #[arg(long)]
    pub items: PathBuf,
    #[arg(long)]
    pub task: String,
    #[arg(long)]
    pub split: kgcorpus::eval::Split,
    #[arg(long)]
    pub model: String,
    #[arg(long, value_enum, default_value_t = EmModeArg::Normalized)]
    pub em_mode: EmModeArg,
    #[arg(short, long)]
    pub output: PathBuf,
}

#[derive(Debug, Args)]
pub struct DeltaArgs {
    /// `em.json` files; repeat to combine several.
    #[arg(long = "results", required = true)]
    pub results: Vec<PathBuf>,
    #[arg(long)]
    pub baseline: String,
    #[arg(long)]
    pub treatment: String,
    #[arg(short, long)]
    pub output: PathBuf,
}
