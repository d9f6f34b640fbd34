//! Command-line front end: thin argument parsing over the library's
//! `commands` module. Exit codes: 0 on success, 1 on runtime or data
//! errors, 2 on usage or config errors.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use clipgram::analysis::AnalysisDomain;
use clipgram::commands::{
    cmd_analyze, cmd_experiment, cmd_roc, cmd_spectrogram, AnalyzeArgs, RocArgs, SpectrogramArgs,
};
use clipgram::config::ExperimentConfig;
use clipgram::detector::Detector;
use clipgram::stft::{StftParams, WindowKind};

#[derive(Parser)]
#[command(
    name = "clipgram",
    version,
    about = "Spectrogram features with cone-clipping detectors: extraction, conditioning analysis, and evaluation"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compute a dB spectrogram feature file from a WAV recording
    Spectrogram {
        /// Input WAV path (16-bit PCM or 32-bit float)
        #[arg(long)]
        input: PathBuf,
        /// Output feature file path
        #[arg(long)]
        output: PathBuf,
        /// FFT size in samples (power of two)
        #[arg(long, default_value_t = 512)]
        fft_size: usize,
        /// Hop between frames in samples
        #[arg(long, default_value_t = 128)]
        hop: usize,
        /// Analysis window: hann, hamming, or rectangular
        #[arg(long, default_value = "hann", value_parser = parse_window)]
        window: WindowKind,
        /// Detector: magsq, clip, clip-rot, or clip-angle=<radians>
        #[arg(long, default_value = "clip", value_parser = parse_detector)]
        detector: Detector,
        /// dB floor for clipped and silent cells
        #[arg(long, default_value_t = -80.0, allow_negative_numbers = true)]
        db_floor: f64,
        /// Analysis length in seconds (input is padded or truncated)
        #[arg(long, default_value_t = 4.0)]
        duration: f64,
    },
    /// Compare conditioning of a baseline and a clipped feature file
    Analyze {
        /// Baseline (magnitude-square) feature file
        #[arg(long)]
        baseline: PathBuf,
        /// Clipped feature file of the same shape
        #[arg(long)]
        clipped: PathBuf,
        /// Relative threshold for the numerical rank
        #[arg(long, default_value_t = 1e-6)]
        rtol: f64,
        /// Comparison domain: db (above-floor) or linear
        #[arg(long, default_value = "db", value_parser = parse_domain)]
        domain: AnalysisDomain,
        /// Output report path
        #[arg(long, default_value = "report.json")]
        output: PathBuf,
    },
    /// Evaluate a score,label CSV: AUC, ROC points, bootstrap interval
    Roc {
        /// CSV file with header `score,label`
        #[arg(long)]
        scores: PathBuf,
        /// Number of bootstrap resamples
        #[arg(long, default_value_t = 1000)]
        bootstrap: usize,
        /// Confidence level in (0, 1)
        #[arg(long, default_value_t = 0.95)]
        level: f64,
        /// Bootstrap seed
        #[arg(long, default_value_t = 42)]
        seed: u64,
        /// Output report path
        #[arg(long, default_value = "roc.json")]
        output: PathBuf,
    },
    /// Run the full synthesize/gate/train/evaluate experiment
    Experiment {
        /// Experiment config JSON (see examples/desk.json)
        #[arg(long)]
        config: PathBuf,
        /// Directory for result artifacts
        #[arg(long)]
        out_dir: PathBuf,
    },
}

fn parse_window(s: &str) -> Result<WindowKind, String> {
    s.parse()
}

fn parse_detector(s: &str) -> Result<Detector, String> {
    s.parse()
}

fn parse_domain(s: &str) -> Result<AnalysisDomain, String> {
    s.parse()
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Spectrogram {
            input,
            output,
            fft_size,
            hop,
            window,
            detector,
            db_floor,
            duration,
        } => cmd_spectrogram(&SpectrogramArgs {
            input,
            output,
            params: StftParams {
                fft_size,
                hop,
                window,
            },
            detector,
            db_floor,
            duration,
        }),
        Command::Analyze {
            baseline,
            clipped,
            rtol,
            domain,
            output,
        } => cmd_analyze(&AnalyzeArgs {
            baseline,
            clipped,
            rtol,
            domain,
            output,
        })
        .map(|_| ()),
        Command::Roc {
            scores,
            bootstrap,
            level,
            seed,
            output,
        } => cmd_roc(&RocArgs {
            scores,
            n_bootstrap: bootstrap,
            level,
            seed,
            output,
        })
        .map(|_| ()),
        Command::Experiment { config, out_dir } => {
            let text = match std::fs::read_to_string(&config) {
                Ok(t) => t,
                Err(e) => {
                    eprintln!("error: reading {}: {e}", config.display());
                    return ExitCode::from(2);
                }
            };
            let parsed = match ExperimentConfig::from_json(&text) {
                Ok(c) => c,
                Err(e) => {
                    eprintln!("error: config {}: {e}", config.display());
                    return ExitCode::from(2);
                }
            };
            cmd_experiment(&parsed, &out_dir).map(|_| ())
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::FAILURE
        }
    }
}
