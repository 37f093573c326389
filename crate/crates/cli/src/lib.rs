//! The `wavenet` command line: Table-1 accounting, training with pruning,
//! post-training quantization, synthesis, and checkpoint reports.

pub mod commands;
pub mod error;
pub mod manifest;
pub mod tables;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use wavenet_core::model::ModelConfig;
use wavenet_core::numerics::FormatName;

pub use error::{exit, CliError, CliResult};
pub use manifest::RunManifest;
pub use tables::OutputFormat;

/// Environment variable naming the default dataset directory for `train`.
pub const DATA_DIR_ENV: &str = "WAVENET_DATA_DIR";

#[derive(Debug, Parser)]
#[command(name = "wavenet", version, about = "WaveNet vocoder compression toolkit")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Parameter counts per layer type.
    Params(TableArgs),
    /// Giga-operations per second of generated audio per layer type.
    Ops(TableArgs),
    /// Train from scratch, optionally with pruning.
    Train(TrainArgs),
    /// Post-training conversion of a checkpoint to another number format.
    Quantize(QuantizeArgs),
    /// Generate audio from a feature file.
    Synthesize(SynthesizeArgs),
    /// Compression ratios, theoretical speedups and per-layer sparsity.
    Report(ReportArgs),
    /// Check checkpoint invariants; exits nonzero on any failure.
    Verify(VerifyArgs),
    /// Write a synthetic tone corpus usable by `train`.
    SynthData(SynthDataArgs),
}

#[derive(Debug, Clone, Args)]
pub struct ConfigArgs {
    /// Preset (`paper`, `desk`, `tiny`) or path to a JSON model config.
    #[arg(long)]
    pub config: Option<String>,
    #[arg(long)]
    pub layers: Option<usize>,
    #[arg(long)]
    pub dilation_cycle: Option<usize>,
    #[arg(long)]
    pub skip_channels: Option<usize>,
    #[arg(long)]
    pub residual_channels: Option<usize>,
    #[arg(long)]
    pub audio_channels: Option<usize>,
}

impl ConfigArgs {
    /// Resolve the preset or file (falling back to `default`), apply the
    /// overrides and validate.
    pub fn resolve(&self, default: &str) -> CliResult<ModelConfig> {
        let name = self.config.as_deref().unwrap_or(default);
        let mut c = match name {
            "paper" => ModelConfig::paper(),
            "desk" => ModelConfig::desk(),
            "tiny" => ModelConfig::tiny(),
            path => {
                let text = std::fs::read_to_string(path)
                    .map_err(|e| CliError::config(format!("cannot read config `{path}`: {e}")))?;
                serde_json::from_str(&text)
                    .map_err(|e| CliError::config(format!("bad config `{path}`: {e}")))?
            }
        };
        if let Some(v) = self.layers {
            c.layers = v;
        }
        if let Some(v) = self.dilation_cycle {
            c.dilation_cycle = v;
        }
        if let Some(v) = self.skip_channels {
            c.skip_channels = v;
        }
        if let Some(v) = self.residual_channels {
            c.residual_channels = v;
        }
        if let Some(v) = self.audio_channels {
            c.audio_channels = v;
        }
        c.validate()?;
        Ok(c)
    }
}

#[derive(Debug, Clone, Args)]
pub struct TableArgs {
    #[command(flatten)]
    pub config: ConfigArgs,
    #[arg(long, value_enum, default_value = "table")]
    pub format: OutputFormat,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum PruneMode {
    Iterative,
    #[value(name = "2:4")]
    TwoFour,
}

#[derive(Debug, Clone, Args)]
pub struct TrainArgs {
    /// Model config; defaults to `desk`.
    #[command(flatten)]
    pub config: ConfigArgs,
    /// Dataset manifest, or a directory holding `manifest.txt`.
    #[arg(long, env = DATA_DIR_ENV)]
    pub data: Option<PathBuf>,
    #[arg(long, default_value_t = 1000)]
    pub steps: usize,
    #[arg(long, default_value_t = 16)]
    pub batch_size: usize,
    /// Samples per training segment (a multiple of 200).
    #[arg(long, default_value_t = 16_000)]
    pub segment_samples: usize,
    #[arg(long, default_value_t = 1e-3)]
    pub learning_rate: f64,
    /// Target compression ratio of the pruned layers (4 -> 75% sparsity).
    #[arg(long, conflicts_with = "sparsity")]
    pub prune_cr: Option<f64>,
    /// Target sparsity of the pruned layers, instead of `--prune-cr`.
    #[arg(long)]
    pub sparsity: Option<f64>,
    #[arg(long, value_enum, default_value = "iterative")]
    pub prune_mode: PruneMode,
    /// Steps between pruning events.
    #[arg(long, default_value_t = wavenet_core::compression::PRUNE_FREQUENCY)]
    pub prune_frequency: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
    /// Log a progress line every this many steps.
    #[arg(long, default_value_t = 50)]
    pub log_every: usize,
}

#[derive(Debug, Clone, Args)]
pub struct QuantizeArgs {
    #[arg(long)]
    pub checkpoint: PathBuf,
    #[arg(long, value_parser = parse_format)]
    pub format: FormatName,
    /// Feature files for INT8 calibration.
    #[arg(long, num_args = 1..)]
    pub calib: Vec<PathBuf>,
    /// Dataset manifest whose features are used for INT8 calibration.
    #[arg(long)]
    pub calib_data: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct SynthesizeArgs {
    #[arg(long)]
    pub checkpoint: PathBuf,
    #[arg(long)]
    pub features: PathBuf,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Execute in this format instead of the checkpoint's.
    #[arg(long, value_parser = parse_format)]
    pub format: Option<FormatName>,
    /// Also generate under this format and log the first differing sample.
    #[arg(long, value_parser = parse_format)]
    pub compare: Option<FormatName>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct ReportArgs {
    #[arg(long)]
    pub checkpoint: PathBuf,
    #[arg(long, value_enum, default_value = "table")]
    pub format: OutputFormat,
}

#[derive(Debug, Clone, Args)]
pub struct VerifyArgs {
    #[arg(long)]
    pub checkpoint: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct SynthDataArgs {
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 8)]
    pub clips: usize,
    /// Seconds per clip.
    #[arg(long, default_value_t = 1.0)]
    pub duration: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

fn parse_format(s: &str) -> Result<FormatName, String> {
    s.parse().map_err(|e: wavenet_core::Error| e.to_string())
}

/// Parse `args` (including the program name), run the command, and return
/// the process exit status. Command output goes to `stdout`.
pub fn run<I, T>(args: I, stdout: &mut dyn std::io::Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let argv: Vec<OsString> = args.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(&argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { exit::CONFIG } else { exit::OK };
        }
    };
    let argv: Vec<String> = argv.iter().map(|a| a.to_string_lossy().into_owned()).collect();
    match commands::dispatch(&cli.command, &argv, stdout) {
        Ok(()) => exit::OK,
        Err(e) => {
            eprintln!("error: {e}");
            e.code
        }
    }
}
