//! Subcommand bodies behind the CLI, written as plain library functions so
//! integration tests (and other callers) can drive them without a process
//! boundary. All outputs are deterministic functions of their inputs.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

use crate::analysis::{
    condition_report, condition_report_from_matrices, AnalysisDomain, ConditionSummary,
};
use crate::config::ExperimentConfig;
use crate::detector::{detect, detect_magsq, to_db, Detector};
use crate::eval::{auc, bootstrap_ci, roc_curve, run_experiment, EvalRun, LabeledScores};
use crate::featfile::{read_feature_file, write_feature_file, FeatureFile};
use crate::signal_io::{condition_length, gate_by_snr, read_wav, GateEntry};
use crate::stft::{stft_signal, StftParams};
use crate::util::median;

/// Arguments for the WAV → feature-file pipeline.
#[derive(Debug, Clone)]
pub struct SpectrogramArgs {
    pub input: PathBuf,
    pub output: PathBuf,
    pub params: StftParams,
    pub detector: Detector,
    pub db_floor: f64,
    /// Analysis length in seconds; the input is padded or truncated.
    pub duration: f64,
}

/// Reads a WAV file, conditions its length, and writes the dB spectrogram
/// under the chosen detector as a feature file.
pub fn cmd_spectrogram(args: &SpectrogramArgs) -> Result<()> {
    let signal = read_wav(&args.input)
        .with_context(|| format!("reading {}", args.input.display()))?;
    if !(args.duration > 0.0) {
        bail!("duration must be positive, got {}", args.duration);
    }
    let signal = condition_length(&signal, args.duration);
    let stft = stft_signal(&signal.samples, signal.sample_rate, &args.params)
        .context("computing STFT")?;
    let spec = detect(&stft, args.detector).context("applying detector")?;
    let db = to_db(&spec, args.db_floor).context("encoding dB")?;
    let file = FeatureFile::from_db(&db, signal.source_id.clone());
    write_feature_file(&args.output, &file)
        .with_context(|| format!("writing {}", args.output.display()))?;
    Ok(())
}

/// Arguments for the baseline-versus-clipped conditioning comparison.
#[derive(Debug, Clone)]
pub struct AnalyzeArgs {
    pub baseline: PathBuf,
    pub clipped: PathBuf,
    pub rtol: f64,
    pub domain: AnalysisDomain,
    pub output: PathBuf,
}

/// Compares two feature files and writes a conditioning report.
pub fn cmd_analyze(args: &AnalyzeArgs) -> Result<ConditionSummary> {
    let base = read_feature_file(&args.baseline)
        .with_context(|| format!("reading {}", args.baseline.display()))?;
    let clip = read_feature_file(&args.clipped)
        .with_context(|| format!("reading {}", args.clipped.display()))?;
    let prepare = |f: &FeatureFile| {
        let v = f.values_f64();
        match args.domain {
            AnalysisDomain::Db => crate::analysis::db_above_floor(&v, f.header.db_floor),
            AnalysisDomain::Linear => v.mapv(|x| 10f64.powf(x / 10.0)),
        }
    };
    let report = condition_report_from_matrices(&prepare(&base), &prepare(&clip), args.rtol)
        .context("comparing singular spectra")?;
    let summary = ConditionSummary::new(base.header.source_id.clone(), &report);
    write_json(&args.output, &summary)?;
    Ok(summary)
}

/// Arguments for scoring an exported CSV of classifier outputs.
#[derive(Debug, Clone)]
pub struct RocArgs {
    pub scores: PathBuf,
    pub n_bootstrap: usize,
    pub level: f64,
    pub seed: u64,
    pub output: PathBuf,
}

/// ROC/AUC report produced by [`cmd_roc`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RocReport {
    pub auc: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub n_bootstrap: usize,
    pub level: f64,
    pub seed: u64,
    pub n_scores: usize,
    pub roc_points: Vec<(f64, f64)>,
}

/// Parses a `score,label` CSV (labels 0/1, header required).
pub fn read_scores_csv(path: &Path) -> Result<LabeledScores> {
    let text =
        std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let mut lines = text.lines().map(str::trim);
    match lines.next() {
        Some("score,label") => {}
        other => bail!("expected header 'score,label', found {:?}", other.unwrap_or("")),
    }
    let mut scores = Vec::new();
    let mut labels = Vec::new();
    for (lineno, line) in lines.enumerate() {
        if line.is_empty() {
            continue;
        }
        let (s, l) = line
            .split_once(',')
            .with_context(|| format!("line {}: missing comma", lineno + 2))?;
        let score: f64 = s
            .trim()
            .parse()
            .with_context(|| format!("line {}: bad score '{s}'", lineno + 2))?;
        let label = match l.trim() {
            "0" => 0u8,
            "1" => 1u8,
            other => bail!("line {}: label must be 0 or 1, got '{other}'", lineno + 2),
        };
        scores.push(score);
        labels.push(label);
    }
    Ok(LabeledScores::new(scores, labels)?)
}

/// Writes labeled scores in the same `score,label` CSV format.
pub fn write_scores_csv(path: &Path, scores: &[f64], labels: &[u8]) -> Result<()> {
    let mut out = String::from("score,label\n");
    for (s, l) in scores.iter().zip(labels) {
        out.push_str(&format!("{s},{l}\n"));
    }
    std::fs::write(path, out).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

/// Evaluates a scores CSV: point AUC, ROC points, bootstrap interval.
pub fn cmd_roc(args: &RocArgs) -> Result<RocReport> {
    let data = read_scores_csv(&args.scores)?;
    let point = auc(&data).context("computing AUC")?;
    let roc_points = roc_curve(&data).context("computing ROC curve")?;
    let (ci_low, ci_high) = bootstrap_ci(&data, args.n_bootstrap, args.level, args.seed)
        .context("bootstrapping the AUC")?;
    let report = RocReport {
        auc: point,
        ci_low,
        ci_high,
        n_bootstrap: args.n_bootstrap,
        level: args.level,
        seed: args.seed,
        n_scores: data.scores.len(),
        roc_points,
    };
    write_json(&args.output, &report)?;
    Ok(report)
}

/// Per-detector batch of conditioning comparisons against the baseline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionBatch {
    pub detector: Detector,
    pub rtol: f64,
    pub median_sigma_max_reduction: f64,
    pub files: Vec<ConditionSummary>,
}

/// Everything `cmd_experiment` produced, also written to the output
/// directory as JSON/CSV artifacts.
#[derive(Debug, Clone)]
pub struct ExperimentOutcome {
    pub runs: Vec<EvalRun>,
    pub gate: Vec<GateEntry>,
    pub condition: Vec<ConditionBatch>,
    pub n_kept: usize,
    pub n_rejected: usize,
}

#[derive(Serialize)]
struct ManifestItem<'a> {
    source_id: &'a str,
    label: u8,
}

#[derive(Serialize)]
struct Manifest<'a> {
    synth: &'a crate::eval::SynthConfig,
    items: Vec<ManifestItem<'a>>,
}

/// Runs the full experiment: synthesize, gate, train/evaluate every
/// detector, and compare conditioning on a subset of files. Artifacts
/// written to `out_dir`:
///
/// * `manifest.json`: corpus item ids and labels plus the synth config;
/// * `gate_report.json`: one entry per signal with its SNR decision;
/// * `eval_runs.json`: the full [`EvalRun`] list;
/// * `scores_<i>_<detector>.csv`: test-set scores per detector;
/// * `condition_<i>_<detector>.json`: per-file conditioning comparisons
///   for every clipping detector against the magnitude-square baseline.
pub fn cmd_experiment(config: &ExperimentConfig, out_dir: &Path) -> Result<ExperimentOutcome> {
    std::fs::create_dir_all(out_dir)
        .with_context(|| format!("creating {}", out_dir.display()))?;

    let corpus = crate::eval::synth_dataset(&config.synth).context("synthesizing corpus")?;
    let manifest = Manifest {
        synth: &config.synth,
        items: corpus
            .iter()
            .map(|s| ManifestItem {
                source_id: &s.signal.source_id,
                label: s.label,
            })
            .collect(),
    };
    write_json(&out_dir.join("manifest.json"), &manifest)?;

    // SNR gate. Labels are carried through by source id lookup.
    let ingest = config.gate.to_ingest(config.synth.duration);
    let labels_by_id: std::collections::BTreeMap<String, u8> = corpus
        .iter()
        .map(|s| (s.signal.source_id.clone(), s.label))
        .collect();
    let outcome = gate_by_snr(corpus.into_iter().map(|s| s.signal).collect(), &ingest);
    write_json(&out_dir.join("gate_report.json"), &outcome.report)?;
    let n_kept = outcome.kept.len();
    let n_rejected = outcome.rejected.len();
    let kept: Vec<crate::eval::LabeledSignal> = outcome
        .kept
        .into_iter()
        .map(|signal| {
            let label = labels_by_id[&signal.source_id];
            crate::eval::LabeledSignal { signal, label }
        })
        .collect();

    let runs = run_experiment(&kept, &config.settings())
        .context("running the evaluation experiment")?;
    write_json(&out_dir.join("eval_runs.json"), &runs)?;
    for (i, run) in runs.iter().enumerate() {
        let path = out_dir.join(format!("scores_{i}_{}.csv", run.detector.kind_name()));
        write_scores_csv(&path, &run.scores, &run.labels)?;
    }

    // Conditioning comparisons on a budget-limited prefix of the corpus.
    let sample = &kept[..kept.len().min(config.condition.max_files)];
    let mut condition = Vec::new();
    for (i, &detector) in config.detectors.iter().enumerate() {
        if detector == Detector::MagSq {
            continue;
        }
        let mut files = Vec::with_capacity(sample.len());
        for item in sample {
            let x = stft_signal(&item.signal.samples, item.signal.sample_rate, &config.stft)
                .context("computing STFT for conditioning")?;
            let base_db = to_db(&detect_magsq(&x), config.db_floor)?;
            let clip_db = to_db(&detect(&x, detector)?, config.db_floor)?;
            let report = condition_report(&base_db, &clip_db, config.condition.rtol)
                .context("comparing singular spectra")?;
            files.push(ConditionSummary::new(item.signal.source_id.clone(), &report));
        }
        let mut reductions: Vec<f64> = files.iter().map(|f| f.sigma_max_reduction).collect();
        reductions.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let batch = ConditionBatch {
            detector,
            rtol: config.condition.rtol,
            median_sigma_max_reduction: if reductions.is_empty() {
                f64::NAN
            } else {
                median(&reductions)
            },
            files,
        };
        let path = out_dir.join(format!("condition_{i}_{}.json", detector.kind_name()));
        write_json(&path, &batch)?;
        condition.push(batch);
    }

    print_summary(&runs, &condition, n_kept, n_rejected, config.bootstrap.level);
    Ok(ExperimentOutcome {
        runs,
        gate: outcome.report,
        condition,
        n_kept,
        n_rejected,
    })
}

fn print_summary(
    runs: &[EvalRun],
    condition: &[ConditionBatch],
    n_kept: usize,
    n_rejected: usize,
    ci_level: f64,
) {
    println!("gate: kept {n_kept}, rejected {n_rejected}");
    let ci_label = format!("{:.0}% CI", 100.0 * ci_level);
    println!("{:<22} {:>8} {:>17} {:>14}", "detector", "AUC", ci_label, "med σ1 redux");
    for run in runs {
        let redux = condition
            .iter()
            .find(|c| c.detector == run.detector)
            .map(|c| format!("{:>14.4}", c.median_sigma_max_reduction))
            .unwrap_or_else(|| format!("{:>14}", "-"));
        println!(
            "{:<22} {:>8.4} [{:.4}, {:.4}] {}",
            run.detector.to_string(),
            run.auc,
            run.ci_low,
            run.ci_high,
            redux
        );
    }
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}
