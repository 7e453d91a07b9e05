mod commands;
mod settings;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use noisr_core::Error;

use settings::Settings;

#[derive(Parser, Debug)]
#[command(name = "noisr", version, about = "Noise-preserving super-resolution of grayscale images")]
struct Cli {
    /// Flat `key = value` file; flags given on the command line win.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Worker threads; 0 runs the single-threaded reference mode.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Write seeded synthetic grayscale scenes.
    Synth(SynthArgs),
    /// Build ground-truth / noisy / low-resolution triplets and a manifest.
    Dataset(DatasetArgs),
    /// Train the network on a manifest.
    Train(TrainArgs),
    /// Upsample one image with a trained checkpoint.
    Predict(PredictArgs),
    /// Score methods on the test split.
    Evaluate(EvaluateArgs),
    /// Residual histograms of a prediction and of the noisy target.
    Histogram(HistogramArgs),
    /// Summarize evaluation CSVs as a metrics-by-method table.
    Report(ReportArgs),
}

#[derive(Args, Debug)]
struct SynthArgs {
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    count: Option<usize>,
    #[arg(long)]
    size: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args, Debug)]
struct DatasetArgs {
    /// Directory of source images.
    #[arg(long)]
    src: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// gaussian or speckle.
    #[arg(long)]
    noise: Option<String>,
    #[arg(long)]
    sigma: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    mu: Option<f64>,
    #[arg(long)]
    factor: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    /// Image counts as train/val/test, e.g. 400/70/30.
    #[arg(long)]
    splits: Option<String>,
}

#[derive(Args, Debug)]
struct TrainArgs {
    /// Dataset manifest.
    #[arg(long)]
    src: Option<PathBuf>,
    /// Checkpoint to write; the trace goes next to it as `<stem>.trace.csv`.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, allow_hyphen_values = true)]
    lambda: Option<f64>,
    #[arg(long)]
    learning_rate: Option<f64>,
    #[arg(long)]
    max_epochs: Option<usize>,
    #[arg(long)]
    patience: Option<usize>,
    #[arg(long)]
    batch_size: Option<usize>,
    /// High-resolution crop side; 0 trains on whole images.
    #[arg(long)]
    patch_size: Option<usize>,
    #[arg(long)]
    patches_per_image: Option<usize>,
    /// rms, frobenius or mse.
    #[arg(long)]
    fit: Option<String>,
    /// Feature channels; defaults depend on the factor.
    #[arg(long)]
    width: Option<usize>,
    #[arg(long)]
    blocks: Option<usize>,
}

#[derive(Args, Debug)]
struct PredictArgs {
    #[arg(long)]
    checkpoint: Option<PathBuf>,
    /// Low-resolution input image.
    #[arg(long)]
    src: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Expected factor; refused when the checkpoint differs.
    #[arg(long)]
    factor: Option<String>,
}

#[derive(Args, Debug)]
struct EvaluateArgs {
    /// Dataset manifest.
    #[arg(long)]
    src: Option<PathBuf>,
    #[arg(long)]
    checkpoint: Option<PathBuf>,
    /// Comma-separated subset of our,cc,bilinear.
    #[arg(long)]
    methods: Option<String>,
    #[arg(long)]
    bins: Option<usize>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct HistogramArgs {
    #[arg(long)]
    prediction: Option<PathBuf>,
    #[arg(long)]
    ground_truth: Option<PathBuf>,
    #[arg(long)]
    noisy: Option<PathBuf>,
    #[arg(long)]
    bins: Option<usize>,
    /// Noise level used to size the histogram range.
    #[arg(long)]
    sigma: Option<f64>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct ReportArgs {
    /// Evaluation report CSV files.
    #[arg(long, num_args = 1.., value_delimiter = ',')]
    src: Vec<PathBuf>,
    /// Also write the table to this file.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug)]
enum CliError {
    Usage(String),
    Core(Error),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Core(e)
    }
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Core(e) => match e {
                Error::CorruptCheckpoint(_) | Error::VersionMismatch { .. } | Error::Malformed { .. } | Error::Decode { .. } => 3,
                Error::NonFinite(_) => 4,
                _ => 2,
            },
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) => f.write_str(m),
            CliError::Core(e) => write!(f, "{e}"),
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    let settings = match &cli.config {
        Some(path) => Settings::load(path)?,
        None => Settings::default(),
    };
    let threads = settings.opt(cli.threads, "threads")?;
    if let Some(n) = threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build_global()
            .map_err(|e| CliError::Usage(format!("cannot configure worker threads: {e}")))?;
    }
    match cli.command {
        Command::Synth(a) => commands::synth(a, &settings),
        Command::Dataset(a) => commands::dataset(a, &settings),
        Command::Train(a) => commands::train(a, &settings),
        Command::Predict(a) => commands::predict(a, &settings),
        Command::Evaluate(a) => commands::evaluate(a, &settings),
        Command::Histogram(a) => commands::histogram(a, &settings),
        Command::Report(a) => commands::report(a, &settings),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
