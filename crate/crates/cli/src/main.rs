use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

mod commands;
mod input;

use commands::CliError;

#[derive(Parser, Debug)]
#[command(name = "cfm", version, about = "Convex factorization machines")]
struct Cli {
    /// Log progress to stderr (repeat for more detail).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Fit a model with the Frank-Wolfe trainer.
    Train(TrainArgs),
    /// Write one prediction per input sample.
    Predict(PredictArgs),
    /// Score a model on a dataset.
    Evaluate(EvaluateArgs),
    /// Generate noiseless synthetic quadratic data in libFM format.
    Synth(SynthArgs),
    /// Convert MovieLens ratings to libFM format.
    Convert(ConvertArgs),
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum DataFormat {
    /// `<target> <idx>:<val> ...`
    Libfm,
    /// `user<TAB>item<TAB>rating<TAB>timestamp`
    MovielensTab,
    /// `user::item::rating::timestamp`
    MovielensColon,
    /// CSV with header `view,row,col,value`
    Multiview,
}

#[derive(Args, Debug, Clone)]
pub struct DataArgs {
    /// Input dataset.
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long, value_enum, default_value = "libfm")]
    pub format: DataFormat,
    /// Feature dimension for libFM input (defaults to 1 + largest index).
    #[arg(long)]
    pub dim: Option<usize>,
    /// Split the data, keeping this fraction for training.
    #[arg(long)]
    pub split: Option<f64>,
    #[arg(long, default_value_t = 0)]
    pub split_seed: u64,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum StepArg {
    Harmonic,
    LineSearch,
}

#[derive(Args, Debug)]
pub struct TrainArgs {
    #[command(flatten)]
    pub data: DataArgs,
    /// Separate test set (same format); exclusive with --split.
    #[arg(long, conflicts_with = "split")]
    pub test: Option<PathBuf>,
    /// Where to write the fitted model.
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// Where to write the convergence trace CSV.
    #[arg(long)]
    pub trace: Option<PathBuf>,
    #[arg(long, default_value_t = 2000.0)]
    pub eta: f64,
    #[arg(long, default_value_t = 0.0)]
    pub lambda1: f64,
    #[arg(long, default_value_t = 100)]
    pub iters: usize,
    #[arg(long, value_enum, default_value = "line-search")]
    pub step: StepArg,
    #[arg(long, default_value_t = 1.0)]
    pub cf: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 1)]
    pub eval_every: usize,
    /// Stop once the Frank-Wolfe gap is at most this value.
    #[arg(long)]
    pub stop_gap: Option<f64>,
    /// Also fit the linear-only ridge baseline and report its RMSE.
    #[arg(long)]
    pub baseline: bool,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum SplitSide {
    Train,
    Test,
}

#[derive(Args, Debug)]
pub struct PredictArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[command(flatten)]
    pub data: DataArgs,
    /// Which side of --split to use.
    #[arg(long, value_enum, default_value = "test")]
    pub side: SplitSide,
    /// Output file (one prediction per line); stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum Metric {
    Rmse,
    RelativeMse,
}

#[derive(Args, Debug)]
pub struct EvaluateArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long, value_enum, default_value = "test")]
    pub side: SplitSide,
    #[arg(long, value_enum, default_value = "rmse")]
    pub metric: Metric,
}

#[derive(Args, Debug)]
pub struct SynthArgs {
    #[arg(long, default_value_t = 100)]
    pub d: usize,
    #[arg(long, default_value_t = 1000)]
    pub n: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct ConvertArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, value_enum, default_value = "movielens-tab")]
    pub format: DataFormat,
    #[arg(long)]
    pub out: PathBuf,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    env_logger::Builder::new().filter_level(level).parse_default_env().init();

    let result = match cli.command {
        Command::Train(a) => commands::train(&a),
        Command::Predict(a) => commands::predict(&a),
        Command::Evaluate(a) => commands::evaluate(&a),
        Command::Synth(a) => commands::synth(&a),
        Command::Convert(a) => commands::convert(&a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError { code, message }) => {
            eprintln!("error: {message}");
            ExitCode::from(code)
        }
    }
}
