//! `rqa`: recurrence plots, RQA measures, and regime-shift study
//! pipelines over CSV time series.
//!
//! Exit codes: 0 success, 1 usage error, 2 data error.

mod commands;
mod output;
mod provenance;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

/// Anything that stops a run: a bad flag (exit 1) or bad data (exit 2).
#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Data(String),
}

impl CliError {
    pub fn usage(msg: impl Into<String>) -> Self {
        CliError::Usage(msg.into())
    }
}

impl From<rqa_core::Error> for CliError {
    fn from(e: rqa_core::Error) -> Self {
        CliError::Data(e.to_string())
    }
}

#[derive(Parser)]
#[command(
    name = "rqa",
    version,
    about = "Recurrence plots and recurrence quantification analysis for time series",
    disable_help_subcommand = true
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a synthetic series (sine, uniform noise, or Lorenz) to CSV
    Generate(GenerateArgs),
    /// Turn a nir/red/blue band CSV into an EVI series
    Evi(EviArgs),
    /// Suggest embedding delay (mutual information) and dimension (FNN)
    EmbedParams(EmbedParamsArgs),
    /// RQA measures of a series, or of every pixel of a stack
    Analyze(AnalyzeArgs),
    /// Sliding-window RQA measures of one series
    Window(WindowArgs),
    /// Sliding-window joint recurrence analysis of two series
    Jra(JraArgs),
    /// Three-step group study: full-series RQA, pre/post split, joint
    /// windows and disruption profiles
    Pipeline(PipelineArgs),
    /// Render the recurrence plot of a series as PGM or ASCII
    Render(RenderArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FormatArg {
    /// Detect from the header row
    Auto,
    Single,
    Wide,
    Long,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum NormArg {
    Max,
    Euclidean,
    Manhattan,
}

impl NormArg {
    pub fn to_core(self) -> rqa_core::Norm {
        match self {
            NormArg::Max => rqa_core::Norm::Max,
            NormArg::Euclidean => rqa_core::Norm::Euclidean,
            NormArg::Manhattan => rqa_core::Norm::Manhattan,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            NormArg::Max => "max",
            NormArg::Euclidean => "euclidean",
            NormArg::Manhattan => "manhattan",
        }
    }
}

/// Ingestion flags shared by every command that reads series CSVs.
#[derive(Args)]
pub struct IoOpts {
    /// CSV layout of the input
    #[arg(long, value_enum, default_value_t = FormatArg::Auto)]
    pub format: FormatArg,
    /// Multiply every value after parsing (e.g. 1e-4 for MODIS integers)
    #[arg(long, allow_negative_numbers = true)]
    pub scale: Option<f64>,
    /// Fill missing values: linear interpolation inside, constant at ends
    #[arg(long)]
    pub fill_missing: bool,
}

/// Embedding flags. Dimension and delay default per command: 3 and 1 on
/// full series, 1 and 1 for sliding windows.
#[derive(Args)]
pub struct EmbedOpts {
    /// Embedding dimension m
    #[arg(long)]
    pub embedding_dim: Option<usize>,
    /// Embedding delay tau, in samples
    #[arg(long)]
    pub delay: Option<usize>,
    /// Derive dimension and delay from the data (first MI minimum, then
    /// false nearest neighbors) instead of fixed values
    #[arg(long)]
    pub auto_embed: bool,
    /// Longest lag scanned by the MI delay search
    #[arg(long, default_value_t = 50)]
    pub max_lag: usize,
    /// MI histogram bins; 0 picks Sturges' rule
    #[arg(long, default_value_t = 0)]
    pub bins: usize,
    /// Largest dimension tried by the FNN search
    #[arg(long, default_value_t = 5)]
    pub m_max: usize,
}

/// Threshold flags. Without --epsilon or --target-rr the tool defaults to
/// a 0.30 recurrence-rate target, which is well-defined at any data scale.
#[derive(Args)]
pub struct ThresholdOpts {
    /// Fixed recurrence threshold
    #[arg(long, allow_negative_numbers = true, conflicts_with = "target_rr")]
    pub epsilon: Option<f64>,
    /// Choose epsilon per matrix so the recurrence rate reaches this value
    #[arg(long, allow_negative_numbers = true)]
    pub target_rr: Option<f64>,
    /// Distance norm
    #[arg(long, value_enum, default_value_t = NormArg::Max)]
    pub norm: NormArg,
    /// Half-width of the diagonal band excluded from line statistics
    #[arg(long, default_value_t = 0)]
    pub theiler: usize,
}

/// Line-length cutoffs for DET and LAM.
#[derive(Args)]
pub struct LineOpts {
    /// Minimum diagonal line length
    #[arg(long, default_value_t = 2)]
    pub lmin: usize,
    /// Minimum vertical line length
    #[arg(long, default_value_t = 2)]
    pub vmin: usize,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum KindArg {
    Sine,
    WhiteNoise,
    Lorenz,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ComponentArg {
    X,
    Y,
    Z,
    /// All three Lorenz components as a wide CSV
    All,
}

#[derive(Args)]
pub struct GenerateArgs {
    /// What to synthesize
    #[arg(long, value_enum)]
    pub kind: KindArg,
    /// Number of samples
    #[arg(long)]
    pub n: usize,
    /// Seed for the noise generator
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Sine period, in samples
    #[arg(long, default_value_t = 24.0, allow_negative_numbers = true)]
    pub period: f64,
    /// Sine phase, in radians
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub phase: f64,
    /// Lorenz sigma
    #[arg(long, default_value_t = 10.0, allow_negative_numbers = true)]
    pub sigma: f64,
    /// Lorenz rho
    #[arg(long, default_value_t = 28.0, allow_negative_numbers = true)]
    pub rho: f64,
    /// Lorenz beta
    #[arg(long, default_value_t = 8.0 / 3.0, allow_negative_numbers = true)]
    pub beta: f64,
    /// Lorenz integration step
    #[arg(long, default_value_t = 0.01, allow_negative_numbers = true)]
    pub dt: f64,
    /// Lorenz initial state "x,y,z"
    #[arg(long, default_value = "1,1,1", allow_hyphen_values = true)]
    pub initial: String,
    /// Lorenz RK4 steps discarded before sampling
    #[arg(long, default_value_t = 1000)]
    pub transient: usize,
    /// Keep every k-th Lorenz integration step
    #[arg(long, default_value_t = 1)]
    pub stride: usize,
    /// Which Lorenz component(s) to emit
    #[arg(long, value_enum, default_value_t = ComponentArg::All)]
    pub component: ComponentArg,
    /// Output CSV path
    #[arg(short, long)]
    pub output: PathBuf,
}

#[derive(Args)]
pub struct EviArgs {
    /// CSV with nir,red,blue columns (optional leading time column)
    pub input: PathBuf,
    /// Multiply band values before the index (e.g. 1e-4 for MODIS ints)
    #[arg(long, allow_negative_numbers = true)]
    pub scale: Option<f64>,
    /// Output CSV path; stdout when omitted
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

#[derive(Args)]
pub struct EmbedParamsArgs {
    /// Input series CSV (single layout)
    pub input: PathBuf,
    #[command(flatten)]
    pub io: IoOpts,
    /// Longest lag scanned by the MI delay search
    #[arg(long, default_value_t = 50)]
    pub max_lag: usize,
    /// MI histogram bins; 0 picks Sturges' rule
    #[arg(long, default_value_t = 0)]
    pub bins: usize,
    /// Largest dimension tried by the FNN search
    #[arg(long, default_value_t = 5)]
    pub m_max: usize,
    /// Write the MI and FNN curves to this CSV; stdout when omitted
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

#[derive(Args)]
pub struct AnalyzeArgs {
    /// Input series or stack CSV
    pub input: PathBuf,
    #[command(flatten)]
    pub io: IoOpts,
    #[command(flatten)]
    pub embed: EmbedOpts,
    #[command(flatten)]
    pub threshold: ThresholdOpts,
    #[command(flatten)]
    pub lines: LineOpts,
    /// In target-RR mode, resolve one epsilon from the pooled distances of
    /// the whole stack instead of per pixel
    #[arg(long)]
    pub shared_epsilon: bool,
    /// Worker threads (0 = all cores); never changes the output bytes
    #[arg(long, default_value_t = 0)]
    pub workers: usize,
    /// Output CSV path; stdout when omitted
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

#[derive(Args)]
pub struct WindowArgs {
    /// Input series CSV (single layout)
    pub input: PathBuf,
    #[command(flatten)]
    pub io: IoOpts,
    #[command(flatten)]
    pub embed: EmbedOpts,
    #[command(flatten)]
    pub threshold: ThresholdOpts,
    #[command(flatten)]
    pub lines: LineOpts,
    /// Window length in samples (46 = two years of 16-day composites)
    #[arg(long, default_value_t = 46)]
    pub window_len: usize,
    /// Window advance in samples
    #[arg(long, default_value_t = 1)]
    pub step: usize,
    /// Worker threads (0 = all cores); never changes the output bytes
    #[arg(long, default_value_t = 0)]
    pub workers: usize,
    /// Output CSV path; stdout when omitted
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

#[derive(Args)]
pub struct JraArgs {
    /// First series CSV (single layout)
    #[arg(short = 'a', long = "series-a")]
    pub series_a: PathBuf,
    /// Second series CSV (single layout)
    #[arg(short = 'b', long = "series-b")]
    pub series_b: PathBuf,
    #[command(flatten)]
    pub io: IoOpts,
    #[command(flatten)]
    pub embed: EmbedOpts,
    #[command(flatten)]
    pub threshold: ThresholdOpts,
    #[command(flatten)]
    pub lines: LineOpts,
    /// Window length in samples
    #[arg(long, default_value_t = 46)]
    pub window_len: usize,
    /// Window advance in samples
    #[arg(long, default_value_t = 1)]
    pub step: usize,
    /// Worker threads (0 = all cores); never changes the output bytes
    #[arg(long, default_value_t = 0)]
    pub workers: usize,
    /// Output CSV path; stdout when omitted
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

#[derive(Args)]
pub struct PipelineArgs {
    /// Labeled pixel stack, as label=path; repeatable
    #[arg(long = "stack", required = true)]
    pub stacks: Vec<String>,
    #[command(flatten)]
    pub io: IoOpts,
    /// Last sample index of the pre-event half (inclusive)
    #[arg(long)]
    pub split_pre_end: usize,
    /// First sample index of the post-event half
    #[arg(long)]
    pub split_post_start: usize,
    /// Sliding-window lengths for step 3
    #[arg(long, value_delimiter = ',', default_values_t = [46usize, 69])]
    pub window_lens: Vec<usize>,
    /// Window advance in samples
    #[arg(long, default_value_t = 1)]
    pub step: usize,
    /// Stack pair compared by joint recurrence, as a:b; repeatable
    #[arg(long = "pair")]
    pub pairs: Vec<String>,
    /// Full-series embedding dimension (step 1)
    #[arg(long, default_value_t = 3)]
    pub step1_dim: usize,
    /// Full-series embedding delay (step 1)
    #[arg(long, default_value_t = 1)]
    pub step1_delay: usize,
    /// Split-half and window embedding dimension (steps 2-3)
    #[arg(long, default_value_t = 1)]
    pub step2_dim: usize,
    /// Split-half and window embedding delay (steps 2-3)
    #[arg(long, default_value_t = 1)]
    pub step2_delay: usize,
    #[command(flatten)]
    pub threshold: ThresholdOpts,
    #[command(flatten)]
    pub lines: LineOpts,
    /// Smoothing width of disruption profiles, in columns
    #[arg(long, default_value_t = 5)]
    pub profile_band: usize,
    /// In target-RR mode, one epsilon per stack from pooled distances
    #[arg(long)]
    pub shared_epsilon: bool,
    /// Use Student's pooled-variance t-test instead of Welch's
    #[arg(long)]
    pub pooled: bool,
    /// Worker threads (0 = all cores); never changes the output bytes
    #[arg(long, default_value_t = 0)]
    pub workers: usize,
    /// Directory for the report files (created if absent)
    #[arg(long)]
    pub out_dir: PathBuf,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum RenderFormatArg {
    Pgm,
    Ascii,
}

#[derive(Args)]
pub struct RenderArgs {
    /// Input series CSV (single layout)
    pub input: PathBuf,
    #[command(flatten)]
    pub io: IoOpts,
    #[command(flatten)]
    pub embed: EmbedOpts,
    #[command(flatten)]
    pub threshold: ThresholdOpts,
    /// Plot encoding
    #[arg(long, value_enum, default_value_t = RenderFormatArg::Pgm)]
    pub plot_format: RenderFormatArg,
    /// Output path; ASCII may go to stdout when omitted
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return ExitCode::SUCCESS;
            }
            // one-line diagnostic, which names the offending flag
            let msg = e.to_string();
            eprintln!("{}", msg.lines().next().unwrap_or("invalid arguments"));
            return ExitCode::from(1);
        }
    };
    let result = match cli.command {
        Command::Generate(args) => commands::generate(&args),
        Command::Evi(args) => commands::evi(&args),
        Command::EmbedParams(args) => commands::embed_params(&args),
        Command::Analyze(args) => commands::analyze(&args),
        Command::Window(args) => commands::window(&args),
        Command::Jra(args) => commands::jra(&args),
        Command::Pipeline(args) => commands::pipeline(&args),
        Command::Render(args) => commands::render(&args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(CliError::Data(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
