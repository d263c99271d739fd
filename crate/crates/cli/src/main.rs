mod commands;
mod config;
mod error;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, CommandFactory, Parser, Subcommand};
use crpred_core::evaluation::DEFAULT_SEED;
use crpred_core::regression::ModelKind;

use crate::error::CliError;

#[derive(Parser, Debug)]
#[command(name = "crpred", version, about = "Predict lossy compression ratios from data statistics")]
pub struct Cli {
    /// TOML file whose keys mirror the long flags
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand, Debug)]
pub enum Cmd {
    /// Generate Gaussian random field samples with spec sidecars and a manifest
    Synth(SynthArgs),
    /// Compute predictor tables for every slice in a manifest
    Extract(ExtractArgs),
    /// Measure compression ratios for every slice, compressor and error bound
    Compress(CompressArgs),
    /// Fit one model per (compressor, error bound)
    Train(TrainArgs),
    /// Cross-validated prediction error report
    Evaluate(EvaluateArgs),
    /// Find the error bound that reaches a target compression ratio
    Search(SearchArgs),
    /// Rank compressors for one slice by predicted ratio
    Rank(RankArgs),
    /// synth, compress, extract, train and evaluate in one run
    Pipeline(PipelineArgs),
}

#[derive(Args, Debug, Clone)]
pub struct SynthParams {
    /// Sample type 1..=4
    #[arg(long = "type", default_value_t = 1)]
    pub sample_type: u8,
    #[arg(long, default_value_t = 30)]
    pub n: usize,
    /// `N` for a square grid or `MxN`
    #[arg(long, default_value = "128")]
    pub grid: String,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    /// Smallest base correlation range of the sweep
    #[arg(long, default_value_t = 4.0)]
    pub range_lo: f64,
    #[arg(long, default_value_t = 64.0)]
    pub range_hi: f64,
}

#[derive(Args, Debug)]
pub struct SynthArgs {
    #[command(flatten)]
    pub params: SynthParams,
    #[arg(long, short)]
    pub out: PathBuf,
}

#[derive(Args, Debug, Clone)]
pub struct InputArgs {
    /// Dataset manifest (`path dtype shape field [le|be]` per line)
    #[arg(long)]
    pub manifest: PathBuf,
    /// Slicing axis for fields with more than two dimensions
    #[arg(long, default_value_t = 0)]
    pub axis: usize,
}

#[derive(Args, Debug, Clone)]
pub struct CompressorArgs {
    /// Extra compressor as `name=command template`
    #[arg(long = "external", value_name = "NAME=TEMPLATE")]
    pub externals: Vec<String>,
}

#[derive(Args, Debug)]
pub struct ExtractArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[arg(long, value_delimiter = ',', default_values_t = crpred_core::codec::CANONICAL_EPS)]
    pub eps: Vec<f64>,
    #[arg(long, short)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct CompressArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[arg(long, value_delimiter = ',', default_values = ["predictive", "rounding"])]
    pub compressor: Vec<String>,
    #[arg(long, value_delimiter = ',', default_values_t = crpred_core::codec::CANONICAL_EPS)]
    pub eps: Vec<f64>,
    #[command(flatten)]
    pub compressors: CompressorArgs,
    /// Write zero wall times so reruns are byte-identical
    #[arg(long)]
    pub omit_timing: bool,
    #[arg(long, short)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct TableArgs {
    /// Predictor table written by `extract`
    #[arg(long)]
    pub predictors: PathBuf,
    /// Result table written by `compress`
    #[arg(long)]
    pub results: PathBuf,
}

#[derive(Args, Debug)]
pub struct TrainArgs {
    #[command(flatten)]
    pub tables: TableArgs,
    /// Defaults to every compressor in the result table
    #[arg(long, value_delimiter = ',')]
    pub compressor: Vec<String>,
    /// Defaults to every error bound in the result table
    #[arg(long, value_delimiter = ',')]
    pub eps: Vec<f64>,
    #[arg(long, default_value_t = ModelKind::Spline)]
    pub model: ModelKind,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    /// Directory receiving `<compressor>_<eps>.model` files
    #[arg(long, short)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct EvaluateArgs {
    #[command(flatten)]
    pub tables: TableArgs,
    #[arg(long, default_value_t = ModelKind::Spline)]
    pub model: ModelKind,
    /// Fold count; 8 below 80 samples, 10 otherwise when omitted
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    #[arg(long, short)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct SliceArgs {
    #[command(flatten)]
    pub input: InputArgs,
    /// Slice id as written by `extract`
    #[arg(long)]
    pub slice_id: String,
    /// Directory of models written by `train`
    #[arg(long)]
    pub models: PathBuf,
    #[command(flatten)]
    pub compressors: CompressorArgs,
}

#[derive(Args, Debug)]
pub struct SearchArgs {
    #[command(flatten)]
    pub slice: SliceArgs,
    #[arg(long)]
    pub compressor: String,
    #[arg(long)]
    pub target: f64,
    /// Percent
    #[arg(long, default_value_t = 5.0)]
    pub tolerance: f64,
    #[arg(long, default_value_t = 1e-5)]
    pub eps_lo: f64,
    #[arg(long, default_value_t = 1e-2)]
    pub eps_hi: f64,
    #[arg(long, default_value_t = 4)]
    pub max_real_evals: usize,
    #[arg(long, short)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct RankArgs {
    #[command(flatten)]
    pub slice: SliceArgs,
    #[arg(long, value_delimiter = ',', required = true)]
    pub compressor: Vec<String>,
    #[arg(long)]
    pub eps: f64,
    /// Run the top-ranked compressor and report its real ratio
    #[arg(long)]
    pub verify: bool,
    #[arg(long, short)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct PipelineArgs {
    #[command(flatten)]
    pub synth: SynthParams,
    #[arg(long, value_delimiter = ',', default_values = ["predictive", "rounding"])]
    pub compressor: Vec<String>,
    #[arg(long, value_delimiter = ',', default_values_t = crpred_core::codec::CANONICAL_EPS)]
    pub eps: Vec<f64>,
    #[arg(long, default_value_t = ModelKind::Spline)]
    pub model: ModelKind,
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long)]
    pub omit_timing: bool,
    #[arg(long, short)]
    pub out: PathBuf,
}

fn run() -> Result<(), CliError> {
    let argv = config::merge(std::env::args_os().collect(), &Cli::command())?;
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => {
            print!("{e}");
            return Ok(());
        }
        Err(e) => {
            let msg = e.to_string();
            let first = msg.lines().next().unwrap_or("invalid arguments");
            return Err(CliError::config(first.trim_start_matches("error: ")));
        }
    };
    match cli.command {
        Cmd::Synth(a) => commands::synth(&a.params, &a.out).map(|_| ()),
        Cmd::Extract(a) => commands::extract(&a),
        Cmd::Compress(a) => commands::compress(&a),
        Cmd::Train(a) => commands::train(&a),
        Cmd::Evaluate(a) => commands::evaluate(&a),
        Cmd::Search(a) => commands::search(&a),
        Cmd::Rank(a) => commands::rank(&a),
        Cmd::Pipeline(a) => commands::pipeline(&a),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"))
        .format_timestamp(None)
        .init();
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.line());
            ExitCode::from(e.class.exit_code() as u8)
        }
    }
}
