use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

mod commands;

#[derive(Parser, Debug)]
#[command(
    name = "morphlem",
    version,
    about = "Joint morphological tagging and lemmatization"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Train the tagger and a lemmatizer on jackknifed (or gold) tags.
    JackknifeTrain(TrainArgs),
    /// Tag and lemmatize a CoNLL-U file.
    Predict(PredictArgs),
    /// Score predicted lemmata against a gold file.
    Evaluate(EvaluateArgs),
    /// Histogram of the edits that turn wrong lemmata into gold ones.
    AnalyzeErrors(AnalyzeArgs),
    /// Accuracy of the joint model and a no-tag ablation on growing prefixes.
    LearningCurve(CurveArgs),
    /// Correlations of per-language tag and token counts with the accuracy gap.
    Correlate(CorrelateArgs),
}

#[derive(Args, Debug, Clone)]
pub struct Hyper {
    /// TOML file with `seed`, `[tagger]` and `[lemmatizer]` settings.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub tagger_epochs: Option<usize>,
    #[arg(long)]
    pub lemmatizer_epochs: Option<usize>,
    #[arg(long)]
    pub lr: Option<f64>,
}

#[derive(Args, Debug)]
pub struct TrainArgs {
    #[arg(long)]
    pub train: PathBuf,
    #[arg(long)]
    pub dev: Option<PathBuf>,
    #[arg(long, default_value_t = 10)]
    pub kappa: usize,
    /// Train the lemmatizer on the gold tags instead of jackknifed ones.
    #[arg(long)]
    pub gold_tags: bool,
    #[arg(long)]
    pub model: PathBuf,
    /// Also write the training corpus with the lemmatizer's training tags.
    #[arg(long)]
    pub silver: Option<PathBuf>,
    #[command(flatten)]
    pub hyper: Hyper,
}

#[derive(Args, Debug)]
pub struct PredictArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub test: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Crunch over the k most probable tags instead of decoding greedily.
    #[arg(long)]
    pub crunch: Option<usize>,
    #[arg(long, default_value_t = 4)]
    pub beam: usize,
}

#[derive(Args, Debug)]
pub struct EvaluateArgs {
    /// Predicted CoNLL-U file.
    #[arg(long)]
    pub pred: PathBuf,
    /// Gold CoNLL-U file.
    #[arg(long)]
    pub test: PathBuf,
    /// Training file, for the ambiguous / unseen / seen-unambiguous split.
    #[arg(long)]
    pub train: PathBuf,
    /// Second prediction file to test against with a paired permutation test.
    #[arg(long)]
    pub baseline: Option<PathBuf>,
    #[arg(long, default_value_t = 10_000)]
    pub replicates: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// CSV report path; a text summary goes to stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct AnalyzeArgs {
    #[arg(long)]
    pub pred: PathBuf,
    #[arg(long)]
    pub test: PathBuf,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Patterns shown in the text summary.
    #[arg(long, default_value_t = 10)]
    pub top: usize,
}

#[derive(Args, Debug)]
pub struct CurveArgs {
    #[arg(long)]
    pub train: PathBuf,
    #[arg(long)]
    pub dev: Option<PathBuf>,
    #[arg(long)]
    pub test: PathBuf,
    #[arg(long, value_delimiter = ',', default_values_t = [0.1, 0.25, 0.5, 1.0])]
    pub fractions: Vec<f64>,
    #[arg(long, default_value_t = 10)]
    pub kappa: usize,
    #[arg(long)]
    pub gold_tags: bool,
    #[arg(long, default_value_t = 4)]
    pub beam: usize,
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    pub hyper: Hyper,
}

#[derive(Args, Debug)]
pub struct CorrelateArgs {
    /// CSV with language,tokens,tags,ours,lematus,delta; the shipped table by default.
    #[arg(long)]
    pub table: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::JackknifeTrain(a) => commands::train(a),
        Command::Predict(a) => commands::predict(a),
        Command::Evaluate(a) => commands::evaluate(a),
        Command::AnalyzeErrors(a) => commands::analyze(a),
        Command::LearningCurve(a) => commands::curve(a),
        Command::Correlate(a) => commands::correlate(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
