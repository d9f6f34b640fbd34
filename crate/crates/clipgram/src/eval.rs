//! Desk-scale classification harness: synthetic reverberant corpus,
//! feature extraction, ridge regression, and ROC/AUC evaluation with
//! bootstrap confidence intervals.
//!
//! Class 1 signals are bursts of a few exponentially damped sinusoids;
//! class 0 signals are band-limited noise bursts with a matched energy
//! envelope. Every signal is passed through a random two-tap echo filter
//! (the multipath that makes spectrogram rows nearly linearly dependent),
//! scaled by a random per-signal level, and mixed with white Gaussian
//! noise at a configured SNR. Everything downstream of the corpus is a
//! pure function of its inputs and explicit seeds.

use ndarray::{Array1, Array2, Axis};
use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use thiserror::Error;

use crate::detector::{detect, to_db, Detector, DetectorError};
use crate::rng::{mix, standard_normal, stream_rng};
use crate::signal_io::InputSignal;
use crate::stft::{num_frames, stft_signal, StftError, StftParams};
use crate::util::quantile_sorted;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("invalid synth config: {0}")]
    InvalidConfig(String),
    #[error("inconsistent signals: {0}")]
    InconsistentSignals(String),
    #[error("degenerate training input: {0}")]
    DegenerateInput(String),
    #[error("ridge penalty must be positive, got {0}")]
    InvalidLambda(f64),
    #[error("scores and labels have different lengths ({scores} vs {labels})")]
    LengthMismatch { scores: usize, labels: usize },
    #[error("labels contain only one class")]
    SingleClass,
    #[error("too few samples: {0} (need at least 4)")]
    TooFewSamples(usize),
    #[error("bootstrap config invalid: {0}")]
    InvalidBootstrap(String),
    #[error("numerical failure: {0}")]
    NumericalFailure(String),
    #[error(transparent)]
    Stft(#[from] StftError),
    #[error(transparent)]
    Detector(#[from] DetectorError),
}

// ---------------------------------------------------------------------------
// Synthetic corpus
// ---------------------------------------------------------------------------

/// Parameters of the synthetic corpus generator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    pub n_per_class: usize,
    pub sample_rate: u32,
    /// Signal length in seconds.
    pub duration: f64,
    /// Echo tap delay, drawn uniformly from this inclusive range (samples).
    pub echo_delay_range: (usize, usize),
    /// Echo tap gain, drawn uniformly from this inclusive range; (0, 0)
    /// disables echoes.
    pub echo_gain_range: (f64, f64),
    /// SNR of the additive white noise, relative to the signal's own power.
    pub noise_snr_db: f64,
    /// Per-signal level jitter: the whole signal is scaled by a gain drawn
    /// from ±this many dB. A pure recording-level nuisance.
    #[serde(default)]
    pub level_jitter_db: f64,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            n_per_class: 100,
            sample_rate: 8000,
            duration: 2.0,
            echo_delay_range: (400, 1200),
            echo_gain_range: (0.92, 0.99),
            noise_snr_db: 12.0,
            level_jitter_db: 8.0,
            seed: 7,
        }
    }
}

impl SynthConfig {
    fn validate(&self) -> Result<(), EvalError> {
        if self.n_per_class < 1 {
            return Err(EvalError::InvalidConfig("n_per_class must be at least 1".into()));
        }
        if !(self.duration > 0.0) {
            return Err(EvalError::InvalidConfig("duration must be positive".into()));
        }
        if self.sample_rate == 0 {
            return Err(EvalError::InvalidConfig("sample_rate must be positive".into()));
        }
        let (g0, g1) = self.echo_gain_range;
        if !(0.0 <= g0 && g0 <= g1 && g1 < 1.0) {
            return Err(EvalError::InvalidConfig(
                "echo gains must satisfy 0 <= lo <= hi < 1".into(),
            ));
        }
        let (d0, d1) = self.echo_delay_range;
        if d0 > d1 {
            return Err(EvalError::InvalidConfig("echo delay range is reversed".into()));
        }
        if !(self.level_jitter_db >= 0.0) {
            return Err(EvalError::InvalidConfig("level_jitter_db must be non-negative".into()));
        }
        if !self.noise_snr_db.is_finite() {
            return Err(EvalError::InvalidConfig("noise_snr_db must be finite".into()));
        }
        Ok(())
    }
}

/// One corpus item: a signal plus its class label (1 = tonal, 0 = noise).
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledSignal {
    pub signal: InputSignal,
    pub label: u8,
}

/// Number of damped sinusoids in a class-1 signal, and of narrowband noise
/// clusters in a class-0 signal.
const TONE_COMPONENTS: usize = 3;
/// Sub-tones per class-0 noise cluster. Random offsets and phases inside a
/// narrow band turn each cluster into incoherent (fading) noise while its
/// time-averaged spectrum stays tone-like.
const CLUSTER_SUBTONES: usize = 16;
/// Half-bandwidth of a class-0 noise cluster, in Hz.
const CLUSTER_HALF_BW_HZ: f64 = 60.0;
/// Frequency band shared by both classes, in Hz.
const BAND_HZ: (f64, f64) = (200.0, 1200.0);
/// Nominal RMS level of the dry burst before jitter. Both classes are
/// normalized to equal energy, not equal peak: a many-component noise sum
/// has a far higher crest factor than three tones, and equal-peak scaling
/// would let the absolute level leak the label.
const BASE_LEVEL: f64 = 0.1;

/// Generates the labeled corpus. Item `i` of class `c` is produced from
/// its own RNG stream, so the corpus is bit-reproducible and any item can
/// be regenerated in isolation.
pub fn synth_dataset(config: &SynthConfig) -> Result<Vec<LabeledSignal>, EvalError> {
    config.validate()?;
    let mut out = Vec::with_capacity(2 * config.n_per_class);
    for i in 0..config.n_per_class {
        for label in [1u8, 0u8] {
            let stream = 2 * i as u64 + label as u64;
            let mut rng = stream_rng(config.seed, stream);
            let signal = synth_one(config, label, i, &mut rng);
            out.push(LabeledSignal { signal, label });
        }
    }
    Ok(out)
}

fn synth_one(config: &SynthConfig, label: u8, index: usize, rng: &mut impl Rng) -> InputSignal {
    let sr = config.sample_rate as f64;
    let n = (config.duration * sr).round() as usize;

    // Burst envelope: exponential decay with a randomized time constant.
    let tau = rng.gen_range(0.15..=0.4) * config.duration.clamp(0.2, 1.0);

    // Both classes place TONE_COMPONENTS spectral concentrations at random
    // in-band frequencies with matched power. Class 1 components are single
    // coherent sinusoids; class 0 components are narrow clusters of
    // incoherent sub-tones, i.e. band-limited noise whose per-frame spectrum
    // looks tone-like but whose amplitude fades over the burst. First-order
    // spectral statistics are thereby matched between classes; the label
    // lives in temporal coherence.
    let mut components: Vec<(f64, f64, f64)> = Vec::new();
    for _ in 0..TONE_COMPONENTS {
        let center = rng.gen_range(BAND_HZ.0..=BAND_HZ.1);
        let amp = rng.gen_range(0.5..=1.0);
        if label == 1 {
            let phase = rng.gen_range(0.0..2.0 * PI);
            components.push((center, phase, amp));
        } else {
            let sub_amp = amp / (CLUSTER_SUBTONES as f64).sqrt();
            for _ in 0..CLUSTER_SUBTONES {
                let freq =
                    center + rng.gen_range(-CLUSTER_HALF_BW_HZ..=CLUSTER_HALF_BW_HZ);
                let phase = rng.gen_range(0.0..2.0 * PI);
                components.push((freq, phase, sub_amp));
            }
        }
    }

    let mut x: Vec<f64> = (0..n)
        .map(|t| {
            let time = t as f64 / sr;
            let env = (-time / tau).exp();
            let sum: f64 = components
                .iter()
                .map(|&(f, p, a)| a * (2.0 * PI * f * time + p).sin())
                .sum();
            env * sum
        })
        .collect();

    // Normalize the dry burst to a nominal energy, then apply level jitter.
    let rms = (x.iter().map(|v| v * v).sum::<f64>() / n as f64).sqrt();
    let jitter_db = if config.level_jitter_db > 0.0 {
        rng.gen_range(-config.level_jitter_db..=config.level_jitter_db)
    } else {
        0.0
    };
    let gain = if rms > 0.0 {
        BASE_LEVEL * 10f64.powf(jitter_db / 20.0) / rms
    } else {
        0.0
    };
    for v in x.iter_mut() {
        *v *= gain;
    }

    // Sensor noise does not care about the room, so the noise level is set
    // against the dry burst. Echoes then raise the recorded energy above
    // that fixed carpet instead of dragging the carpet up with them.
    let dry_power = x.iter().map(|v| v * v).sum::<f64>() / n as f64;
    let noise_sigma = (dry_power / 10f64.powf(config.noise_snr_db / 10.0)).sqrt();

    // Two-tap echo: y[t] = x[t] + g·x[t−d].
    let delay = rng.gen_range(config.echo_delay_range.0..=config.echo_delay_range.1);
    let echo_gain = rng.gen_range(config.echo_gain_range.0..=config.echo_gain_range.1);
    if echo_gain > 0.0 && delay > 0 {
        for t in (delay..n).rev() {
            x[t] += echo_gain * x[t - delay];
        }
    }

    for v in x.iter_mut() {
        *v += noise_sigma * standard_normal(rng);
    }

    InputSignal::new(x, config.sample_rate, format!("synth-{label}-{index:04}"))
}

// ---------------------------------------------------------------------------
// Feature extraction
// ---------------------------------------------------------------------------

/// Runs every signal through STFT → detector → dB and flattens each dB
/// matrix (row-major) into one feature row. All signals must share length
/// and sample rate so the rows line up column for column.
pub fn extract_features(
    signals: &[InputSignal],
    params: &StftParams,
    detector: Detector,
    db_floor: f64,
) -> Result<Array2<f64>, EvalError> {
    let first = signals
        .first()
        .ok_or_else(|| EvalError::InconsistentSignals("no signals".into()))?;
    for s in signals {
        if s.samples.len() != first.samples.len() || s.sample_rate != first.sample_rate {
            return Err(EvalError::InconsistentSignals(format!(
                "'{}' has {} samples at {} Hz, expected {} at {}",
                s.source_id,
                s.samples.len(),
                s.sample_rate,
                first.samples.len(),
                first.sample_rate
            )));
        }
    }
    let frames = num_frames(first.samples.len(), params)?;
    let dim = (params.fft_size / 2) * frames;
    let mut features = Array2::zeros((signals.len(), dim));
    for (i, s) in signals.iter().enumerate() {
        let x = stft_signal(&s.samples, s.sample_rate, params)?;
        let db = to_db(&detect(&x, detector)?, db_floor)?;
        for (j, &v) in db.values.iter().enumerate() {
            features[(i, j)] = v;
        }
    }
    Ok(features)
}

// ---------------------------------------------------------------------------
// Ridge regression
// ---------------------------------------------------------------------------

/// Linear scorer fitted by ridge regression on column-standardized
/// features.
#[derive(Debug, Clone)]
pub struct RidgeModel {
    /// Weights on the standardized feature scale.
    pub weights: Vec<f64>,
    /// Per-column training means.
    pub mean: Vec<f64>,
    /// Per-column inverse standard deviations; 0 for constant columns.
    pub inv_scale: Vec<f64>,
}

impl RidgeModel {
    /// Scores one raw (unstandardized) feature row.
    pub fn score_row(&self, row: &[f64]) -> f64 {
        row.iter()
            .zip(&self.weights)
            .zip(self.mean.iter().zip(&self.inv_scale))
            .map(|((x, w), (m, s))| w * (x - m) * s)
            .sum()
    }

    /// Scores every row of a raw feature matrix.
    pub fn score_matrix(&self, features: &Array2<f64>) -> Vec<f64> {
        // score = x·(w∘s) − Σ w m s, folded into one matvec.
        let effective: Array1<f64> = self
            .weights
            .iter()
            .zip(&self.inv_scale)
            .map(|(w, s)| w * s)
            .collect();
        let offset: f64 = self
            .weights
            .iter()
            .zip(self.mean.iter().zip(&self.inv_scale))
            .map(|(w, (m, s))| w * m * s)
            .sum();
        features.dot(&effective).iter().map(|v| v - offset).collect()
    }
}

/// Fits ridge regression of ±1 labels on standardized features: the weight
/// vector solves `(GᵀG + λI)w = Gᵀy`. When there are fewer rows than
/// columns the system is solved in its dual form through the n×n Gram
/// matrix, which gives the identical solution. The solve is verified
/// against the normal equations to a relative residual of 1e-6.
pub fn train_ridge(
    features: &Array2<f64>,
    labels: &[u8],
    lambda: f64,
) -> Result<RidgeModel, EvalError> {
    let (n, d) = features.dim();
    if labels.len() != n {
        return Err(EvalError::LengthMismatch {
            scores: n,
            labels: labels.len(),
        });
    }
    if n < 2 {
        return Err(EvalError::DegenerateInput(format!("{n} training rows")));
    }
    if labels.iter().all(|&l| l == labels[0]) {
        return Err(EvalError::DegenerateInput("all labels identical".into()));
    }
    if !(lambda > 0.0) || !lambda.is_finite() {
        return Err(EvalError::InvalidLambda(lambda));
    }

    let y: Array1<f64> = labels.iter().map(|&l| if l == 1 { 1.0 } else { -1.0 }).collect();

    // Column standardization (population std); constant columns get an
    // inverse scale of zero and drop out of the model.
    let mean = features.mean_axis(Axis(0)).expect("n >= 2");
    let mut centered = features - &mean.view().insert_axis(Axis(0));
    let inv_scale: Array1<f64> = centered
        .axis_iter(Axis(1))
        .map(|col| {
            let var = col.iter().map(|v| v * v).sum::<f64>() / n as f64;
            let std = var.sqrt();
            if std > 1e-12 {
                1.0 / std
            } else {
                0.0
            }
        })
        .collect();
    for (mut col, &s) in centered.axis_iter_mut(Axis(1)).zip(inv_scale.iter()) {
        for v in col.iter_mut() {
            *v *= s;
        }
    }
    let g = centered;

    let w = if d <= n {
        solve_primal(&g, &y, lambda)?
    } else {
        solve_dual(&g, &y, lambda)?
    };

    // Residual of the normal equations, relative to ‖Gᵀy‖.
    let gty = g.t().dot(&y);
    let residual = {
        let gw = g.dot(&w);
        let atw = g.t().dot(&gw) + &(lambda * &w);
        (&atw - &gty).iter().map(|v| v * v).sum::<f64>().sqrt()
    };
    let scale = gty.iter().map(|v| v * v).sum::<f64>().sqrt().max(1e-30);
    if residual / scale >= 1e-6 {
        return Err(EvalError::NumericalFailure(format!(
            "ridge solve residual {:.3e} relative",
            residual / scale
        )));
    }

    Ok(RidgeModel {
        weights: w.to_vec(),
        mean: mean.to_vec(),
        inv_scale: inv_scale.to_vec(),
    })
}

/// Direct d×d solve of `(GᵀG + λI)w = Gᵀy`.
fn solve_primal(g: &Array2<f64>, y: &Array1<f64>, lambda: f64) -> Result<Array1<f64>, EvalError> {
    let d = g.ncols();
    let mut a = g.t().dot(g);
    for i in 0..d {
        a[(i, i)] += lambda;
    }
    let b = g.t().dot(y);
    cholesky_solve(a, &b)
}

/// Dual n×n solve: `(GGᵀ + λI)α = y`, then `w = Gᵀα`. Identical to the
/// primal solution by the push-through identity
/// `(GᵀG + λI)⁻¹Gᵀ = Gᵀ(GGᵀ + λI)⁻¹`.
fn solve_dual(g: &Array2<f64>, y: &Array1<f64>, lambda: f64) -> Result<Array1<f64>, EvalError> {
    let n = g.nrows();
    let mut k = g.dot(&g.t());
    for i in 0..n {
        k[(i, i)] += lambda;
    }
    let alpha = cholesky_solve(k, y)?;
    Ok(g.t().dot(&alpha))
}

/// Solves `A x = b` for symmetric positive definite `A` by an in-place
/// Cholesky factorization and two triangular substitutions.
fn cholesky_solve(mut a: Array2<f64>, b: &Array1<f64>) -> Result<Array1<f64>, EvalError> {
    let n = a.nrows();
    debug_assert_eq!(a.ncols(), n);
    debug_assert_eq!(b.len(), n);
    for j in 0..n {
        let mut diag = a[(j, j)];
        for k in 0..j {
            diag -= a[(j, k)] * a[(j, k)];
        }
        if !(diag > 0.0) {
            return Err(EvalError::NumericalFailure(format!(
                "matrix not positive definite at pivot {j}"
            )));
        }
        let diag = diag.sqrt();
        a[(j, j)] = diag;
        for i in (j + 1)..n {
            let mut s = a[(i, j)];
            for k in 0..j {
                s -= a[(i, k)] * a[(j, k)];
            }
            a[(i, j)] = s / diag;
        }
    }
    // Forward then back substitution with L and Lᵀ.
    let mut x = b.clone();
    for i in 0..n {
        let mut v = x[i];
        for k in 0..i {
            v -= a[(i, k)] * x[k];
        }
        x[i] = v / a[(i, i)];
    }
    for i in (0..n).rev() {
        let mut v = x[i];
        for k in (i + 1)..n {
            v -= a[(k, i)] * x[k];
        }
        x[i] = v / a[(i, i)];
    }
    Ok(x)
}

// ---------------------------------------------------------------------------
// ROC / AUC / bootstrap
// ---------------------------------------------------------------------------

/// Classifier scores aligned with their binary labels (1 = positive).
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledScores {
    pub scores: Vec<f64>,
    pub labels: Vec<u8>,
}

impl LabeledScores {
    pub fn new(scores: Vec<f64>, labels: Vec<u8>) -> Result<Self, EvalError> {
        if scores.len() != labels.len() {
            return Err(EvalError::LengthMismatch {
                scores: scores.len(),
                labels: labels.len(),
            });
        }
        Ok(Self { scores, labels })
    }

    fn class_counts(&self) -> Result<(usize, usize), EvalError> {
        let pos = self.labels.iter().filter(|&&l| l == 1).count();
        let neg = self.labels.len() - pos;
        if pos == 0 || neg == 0 {
            return Err(EvalError::SingleClass);
        }
        Ok((pos, neg))
    }
}

/// Area under the ROC curve as the Mann-Whitney statistic: the probability
/// that a random positive outscores a random negative, with half credit
/// for ties. Computed through average ranks in O(n log n).
pub fn auc(data: &LabeledScores) -> Result<f64, EvalError> {
    let (pos, neg) = data.class_counts()?;
    let n = data.scores.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        data.scores[a]
            .partial_cmp(&data.scores[b])
            .expect("non-finite score")
    });

    // Average ranks over tie runs, then sum the positive ranks.
    let mut rank_sum_pos = 0.0f64;
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && data.scores[order[j + 1]] == data.scores[order[i]] {
            j += 1;
        }
        let avg_rank = (i + j) as f64 / 2.0 + 1.0;
        for &idx in &order[i..=j] {
            if data.labels[idx] == 1 {
                rank_sum_pos += avg_rank;
            }
        }
        i = j + 1;
    }
    let p = pos as f64;
    Ok((rank_sum_pos - p * (p + 1.0) / 2.0) / (p * neg as f64))
}

/// ROC curve by descending-threshold sweep over the distinct score values.
/// The points start at (0, 0), end at (1, 1), and are non-decreasing in
/// both coordinates; their trapezoidal area equals [`auc`].
pub fn roc_curve(data: &LabeledScores) -> Result<Vec<(f64, f64)>, EvalError> {
    let (pos, neg) = data.class_counts()?;
    let n = data.scores.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        data.scores[b]
            .partial_cmp(&data.scores[a])
            .expect("non-finite score")
    });

    let mut points = vec![(0.0, 0.0)];
    let (mut tp, mut fp) = (0usize, 0usize);
    let mut i = 0;
    while i < n {
        // Consume the whole tie run before emitting a point.
        let threshold = data.scores[order[i]];
        while i < n && data.scores[order[i]] == threshold {
            if data.labels[order[i]] == 1 {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
        points.push((fp as f64 / neg as f64, tp as f64 / pos as f64));
    }
    debug_assert_eq!(points.last(), Some(&(1.0, 1.0)));
    Ok(points)
}

/// Trapezoidal area under a ROC polyline.
pub fn roc_area(points: &[(f64, f64)]) -> f64 {
    points
        .windows(2)
        .map(|w| (w[1].0 - w[0].0) * (w[1].1 + w[0].1) / 2.0)
        .sum()
}

/// Percentile bootstrap interval for the AUC. Draws `b` resamples of the
/// (score, label) pairs with replacement; resamples that lose a class are
/// redrawn. Each resample uses its own RNG stream derived from `seed`, so
/// the interval is reproducible and independent of evaluation order.
pub fn bootstrap_ci(
    data: &LabeledScores,
    b: usize,
    level: f64,
    seed: u64,
) -> Result<(f64, f64), EvalError> {
    data.class_counts()?;
    let n = data.scores.len();
    if n < 4 {
        return Err(EvalError::TooFewSamples(n));
    }
    if b < 100 {
        return Err(EvalError::InvalidBootstrap(format!("B = {b}, need at least 100")));
    }
    if !(level > 0.0 && level < 1.0) {
        return Err(EvalError::InvalidBootstrap(format!("level = {level}, need (0, 1)")));
    }

    let mut aucs = Vec::with_capacity(b);
    for resample in 0..b {
        let mut rng = stream_rng(seed, resample as u64);
        let value = loop {
            let mut scores = Vec::with_capacity(n);
            let mut labels = Vec::with_capacity(n);
            for _ in 0..n {
                let idx = rng.gen_range(0..n);
                scores.push(data.scores[idx]);
                labels.push(data.labels[idx]);
            }
            let drawn = LabeledScores { scores, labels };
            match auc(&drawn) {
                Ok(v) => break v,
                Err(EvalError::SingleClass) => continue,
                Err(e) => return Err(e),
            }
        };
        aucs.push(value);
    }
    aucs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let alpha = (1.0 - level) / 2.0;
    Ok((
        quantile_sorted(&aucs, alpha),
        quantile_sorted(&aucs, 1.0 - alpha),
    ))
}

// ---------------------------------------------------------------------------
// Experiment driver
// ---------------------------------------------------------------------------

/// Everything `run_experiment` needs besides the corpus itself.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSettings {
    pub stft: StftParams,
    pub detectors: Vec<Detector>,
    /// Ridge penalty, shared by every detector.
    pub lambda: f64,
    pub db_floor: f64,
    pub n_bootstrap: usize,
    pub ci_level: f64,
    /// Seeds the train/test split and, through it, the bootstrap.
    pub split_seed: u64,
}

/// Mirrors the desk experiment defaults; `config::desk_config().settings()`
/// is asserted equal to this in the config tests.
impl Default for ExperimentSettings {
    fn default() -> Self {
        Self {
            stft: StftParams::default(),
            detectors: vec![Detector::MagSq, Detector::Clip, Detector::ClipRotated],
            lambda: 1e1,
            db_floor: -6.0,
            n_bootstrap: 1000,
            ci_level: 0.95,
            split_seed: 42,
        }
    }
}

/// Result of evaluating one detector on the shared split.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalRun {
    pub detector: Detector,
    pub auc: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub roc_points: Vec<(f64, f64)>,
    pub n_bootstrap: usize,
    pub seed: u64,
    pub n_train: usize,
    pub n_test: usize,
    /// Test-set scores and labels, in corpus order of the test split.
    pub scores: Vec<f64>,
    pub labels: Vec<u8>,
}

/// Deterministic stratified split: within each class the indices are
/// shuffled by a class-specific stream of `split_seed` and the first 70%
/// go to training. Returned index lists are sorted ascending.
pub fn stratified_split(
    labels: &[u8],
    split_seed: u64,
) -> Result<(Vec<usize>, Vec<usize>), EvalError> {
    let mut train = Vec::new();
    let mut test = Vec::new();
    for class in [0u8, 1u8] {
        let mut idx: Vec<usize> = labels
            .iter()
            .enumerate()
            .filter(|(_, &l)| l == class)
            .map(|(i, _)| i)
            .collect();
        if idx.len() < 2 {
            return Err(EvalError::DegenerateInput(format!(
                "class {class} has {} items, need at least 2",
                idx.len()
            )));
        }
        let mut rng = stream_rng(split_seed, class as u64);
        idx.shuffle(&mut rng);
        let n_train = ((idx.len() * 7) / 10).clamp(1, idx.len() - 1);
        train.extend_from_slice(&idx[..n_train]);
        test.extend_from_slice(&idx[n_train..]);
    }
    train.sort_unstable();
    test.sort_unstable();
    Ok((train, test))
}

/// Internal stream tag separating the bootstrap RNG from the split RNG.
const BOOTSTRAP_STREAM: u64 = 0xB007_57A6;

/// Evaluates every detector on one shared stratified split of the corpus:
/// extract features, fit ridge on the training rows, score the test rows,
/// and summarize with AUC, ROC points, and a bootstrap interval. Runs for
/// identical detectors are identical; everything is a pure function of
/// (corpus, settings).
pub fn run_experiment(
    corpus: &[LabeledSignal],
    settings: &ExperimentSettings,
) -> Result<Vec<EvalRun>, EvalError> {
    if settings.detectors.is_empty() {
        return Err(EvalError::InvalidConfig("no detectors listed".into()));
    }
    let labels: Vec<u8> = corpus.iter().map(|s| s.label).collect();
    let signals: Vec<InputSignal> = corpus.iter().map(|s| s.signal.clone()).collect();
    let (train_idx, test_idx) = stratified_split(&labels, settings.split_seed)?;
    let bootstrap_seed = mix(settings.split_seed, BOOTSTRAP_STREAM);

    let mut runs = Vec::with_capacity(settings.detectors.len());
    for &detector in &settings.detectors {
        let features = extract_features(&signals, &settings.stft, detector, settings.db_floor)?;
        let take = |idx: &[usize]| -> (Array2<f64>, Vec<u8>) {
            let rows = Array2::from_shape_fn((idx.len(), features.ncols()), |(r, c)| {
                features[(idx[r], c)]
            });
            let labs = idx.iter().map(|&i| labels[i]).collect();
            (rows, labs)
        };
        let (train_x, train_y) = take(&train_idx);
        let (test_x, test_y) = take(&test_idx);

        let model = train_ridge(&train_x, &train_y, settings.lambda)?;
        let scores = model.score_matrix(&test_x);
        let data = LabeledScores::new(scores.clone(), test_y.clone())?;
        let point_auc = auc(&data)?;
        let roc_points = roc_curve(&data)?;
        let (ci_low, ci_high) =
            bootstrap_ci(&data, settings.n_bootstrap, settings.ci_level, bootstrap_seed)?;

        runs.push(EvalRun {
            detector,
            auc: point_auc,
            ci_low,
            ci_high,
            roc_points,
            n_bootstrap: settings.n_bootstrap,
            seed: settings.split_seed,
            n_train: train_idx.len(),
            n_test: test_idx.len(),
            scores,
            labels: test_y,
        });
    }
    Ok(runs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::{numerical_rank, singular_values};
    use crate::stft::WindowKind;

    fn tiny_synth(seed: u64) -> SynthConfig {
        SynthConfig {
            n_per_class: 6,
            sample_rate: 4000,
            duration: 0.4,
            echo_delay_range: (60, 120),
            echo_gain_range: (0.5, 0.8),
            noise_snr_db: 10.0,
            level_jitter_db: 3.0,
            seed,
        }
    }

    fn tiny_stft() -> StftParams {
        StftParams {
            fft_size: 128,
            hop: 64,
            window: WindowKind::Hann,
        }
    }

    #[test]
    fn corpus_is_deterministic_and_balanced() {
        let cfg = tiny_synth(5);
        let a = synth_dataset(&cfg).unwrap();
        let b = synth_dataset(&cfg).unwrap();
        assert_eq!(a.len(), 12);
        assert_eq!(a.iter().filter(|s| s.label == 1).count(), 6);
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(x.label, y.label);
            assert_eq!(x.signal.samples, y.signal.samples); // bitwise
        }
        let lengths: Vec<usize> = a.iter().map(|s| s.signal.samples.len()).collect();
        assert!(lengths.iter().all(|&l| l == 1600));
        assert!(a
            .iter()
            .all(|s| s.signal.samples.iter().all(|v| v.is_finite())));
    }

    #[test]
    fn different_seeds_differ() {
        let a = synth_dataset(&tiny_synth(5)).unwrap();
        let b = synth_dataset(&tiny_synth(6)).unwrap();
        assert_ne!(a[0].signal.samples, b[0].signal.samples);
    }

    #[test]
    fn synth_config_validation() {
        let mut cfg = tiny_synth(1);
        cfg.n_per_class = 0;
        assert!(matches!(synth_dataset(&cfg), Err(EvalError::InvalidConfig(_))));
        let mut cfg = tiny_synth(1);
        cfg.echo_gain_range = (0.5, 1.0);
        assert!(matches!(synth_dataset(&cfg), Err(EvalError::InvalidConfig(_))));
        let mut cfg = tiny_synth(1);
        cfg.echo_gain_range = (0.0, 0.0); // echoes disabled is allowed
        assert!(synth_dataset(&cfg).is_ok());
    }

    /// Echoes are there to inject near linear dependence; the stacked
    /// baseline feature matrix should be worse conditioned with them on.
    ///
    /// Conditioning is measured in the same floor-anchored dB domain the
    /// analysis side uses; raw dB is shift-sensitive, so extra echo energy
    /// would otherwise just slide every entry toward 0 dB and mask the
    /// structural change. The floor sits high enough that the comparison
    /// tracks burst structure, not the noise carpet, and the delays overlap
    /// the analysis window so the echo lifts shared support.
    #[test]
    fn echoes_worsen_feature_conditioning() {
        let params = tiny_stft();
        let floor = -25.0;
        let mut with_echo = Vec::new();
        let mut without = Vec::new();
        for seed in 0..10u64 {
            let cond_of = |cfg: &SynthConfig| {
                let corpus = synth_dataset(cfg).unwrap();
                let signals: Vec<InputSignal> =
                    corpus.into_iter().map(|s| s.signal).collect();
                let f = extract_features(&signals, &params, Detector::MagSq, floor).unwrap();
                let f = crate::analysis::db_above_floor(&f, floor);
                let s = singular_values(&f).unwrap();
                let r = numerical_rank(&s, 1e-6);
                s.values[0] / s.values[r - 1]
            };
            let mut cfg = SynthConfig {
                noise_snr_db: 30.0,
                echo_delay_range: (80, 100),
                seed: 100 + seed,
                ..tiny_synth(0)
            };
            cfg.echo_gain_range = (0.6, 0.9);
            with_echo.push(cond_of(&cfg));
            cfg.echo_gain_range = (0.0, 0.0);
            without.push(cond_of(&cfg));
        }
        let med = |v: &mut Vec<f64>| {
            v.sort_by(|a, b| a.partial_cmp(b).unwrap());
            v[v.len() / 2]
        };
        let echo_med = med(&mut with_echo);
        let flat_med = med(&mut without);
        // Demand a real margin, not a rounding accident.
        assert!(
            echo_med > 1.02 * flat_med,
            "echo median condition {echo_med:.2} vs no-echo {flat_med:.2}"
        );
    }

    #[test]
    fn feature_shapes_and_floor() {
        let silent = vec![
            InputSignal::new(vec![0.0; 2000], 4000, "a"),
            InputSignal::new(vec![0.0; 2000], 4000, "b"),
        ];
        let f = extract_features(&silent, &tiny_stft(), Detector::MagSq, -80.0).unwrap();
        // (2000 − 128)/64 + 1 = 30 frames, 64 bins.
        assert_eq!(f.dim(), (2, 64 * 30));
        assert!(f.iter().all(|&v| v == -80.0));
    }

    #[test]
    fn clipped_features_hit_the_floor_often() {
        let cfg = tiny_synth(9);
        let corpus = synth_dataset(&cfg).unwrap();
        let signals: Vec<InputSignal> = corpus.into_iter().map(|s| s.signal).collect();
        let f = extract_features(&signals, &tiny_stft(), Detector::Clip, -80.0).unwrap();
        let at_floor = f.iter().filter(|&&v| v == -80.0).count();
        let frac = at_floor as f64 / f.len() as f64;
        assert!(frac >= 0.25, "floor fraction {frac:.3}");
        let base = extract_features(
            &synth_dataset(&cfg)
                .unwrap()
                .into_iter()
                .map(|s| s.signal)
                .collect::<Vec<_>>(),
            &tiny_stft(),
            Detector::MagSq,
            -80.0,
        )
        .unwrap();
        let base_floor = base.iter().filter(|&&v| v == -80.0).count();
        assert!(base_floor < at_floor);
    }

    #[test]
    fn inconsistent_signals_rejected() {
        let bad = vec![
            InputSignal::new(vec![0.0; 2000], 4000, "a"),
            InputSignal::new(vec![0.0; 1000], 4000, "b"),
        ];
        assert!(matches!(
            extract_features(&bad, &tiny_stft(), Detector::MagSq, -80.0),
            Err(EvalError::InconsistentSignals(_))
        ));
    }

    #[test]
    fn huge_lambda_shrinks_weights_to_zero() {
        let f = Array2::from_shape_fn((10, 4), |(i, j)| ((i * 7 + j * 3) % 5) as f64);
        let labels = [1, 0, 1, 0, 1, 0, 1, 0, 1, 0];
        let model = train_ridge(&f, &labels, 1e12).unwrap();
        let norm: f64 = model.weights.iter().map(|w| w * w).sum::<f64>().sqrt();
        assert!(norm < 1e-6, "‖w‖ = {norm:e}");
    }

    #[test]
    fn separable_1d_gets_positive_weight() {
        let f = Array2::from_shape_vec((2, 1), vec![-1.0, 1.0]).unwrap();
        let model = train_ridge(&f, &[0, 1], 0.1).unwrap();
        assert!(model.weights[0] > 0.0);
        assert!(model.score_row(&[1.0]) > model.score_row(&[-1.0]));
    }

    #[test]
    fn primal_and_dual_agree() {
        let mut rng = stream_rng(60, 0);
        let g = Array2::from_shape_fn((20, 50), |_| standard_normal(&mut rng));
        let y: Array1<f64> = (0..20).map(|i| if i % 2 == 0 { 1.0 } else { -1.0 }).collect();
        let wp = solve_primal(&g, &y, 3.7).unwrap();
        let wd = solve_dual(&g, &y, 3.7).unwrap();
        let scale: f64 = wp.iter().map(|v| v * v).sum::<f64>().sqrt();
        for (a, b) in wp.iter().zip(wd.iter()) {
            assert!((a - b).abs() < 1e-6 * scale.max(1e-12), "{a} vs {b}");
        }
    }

    #[test]
    fn ridge_input_validation() {
        let f = Array2::zeros((1, 3));
        assert!(matches!(
            train_ridge(&f, &[1], 1.0),
            Err(EvalError::DegenerateInput(_))
        ));
        let f = Array2::zeros((4, 3));
        assert!(matches!(
            train_ridge(&f, &[1, 1, 1, 1], 1.0),
            Err(EvalError::DegenerateInput(_))
        ));
        assert!(matches!(
            train_ridge(&f, &[1, 0, 1, 0], 0.0),
            Err(EvalError::InvalidLambda(_))
        ));
    }

    /// Literal pairwise Mann-Whitney count, the quadratic definition the
    /// rank implementation must reproduce.
    fn pairwise_auc(data: &LabeledScores) -> f64 {
        let mut wins = 0.0;
        let mut pairs = 0.0;
        for (i, &li) in data.labels.iter().enumerate() {
            if li != 1 {
                continue;
            }
            for (j, &lj) in data.labels.iter().enumerate() {
                if lj != 0 {
                    continue;
                }
                pairs += 1.0;
                if data.scores[i] > data.scores[j] {
                    wins += 1.0;
                } else if data.scores[i] == data.scores[j] {
                    wins += 0.5;
                }
            }
        }
        wins / pairs
    }

    fn random_scores(seed: u64, n: usize, quantize: bool) -> LabeledScores {
        let mut rng = stream_rng(seed, 1);
        let scores: Vec<f64> = (0..n)
            .map(|_| {
                let v = standard_normal(&mut rng);
                if quantize {
                    (v * 4.0).round() / 4.0 // force ties
                } else {
                    v
                }
            })
            .collect();
        let labels: Vec<u8> = (0..n)
            .map(|i| if standard_normal(&mut rng) + scores[i] * 0.5 > 0.0 { 1 } else { 0 })
            .collect();
        // Ensure both classes appear.
        let mut labels = labels;
        labels[0] = 0;
        labels[n - 1] = 1;
        LabeledScores { scores, labels }
    }

    #[test]
    fn auc_known_cases() {
        let perfect = LabeledScores::new(vec![0.9, 0.8, 0.2, 0.1], vec![1, 1, 0, 0]).unwrap();
        assert_eq!(auc(&perfect).unwrap(), 1.0);
        let reversed = LabeledScores::new(vec![0.9, 0.8, 0.2, 0.1], vec![0, 0, 1, 1]).unwrap();
        assert_eq!(auc(&reversed).unwrap(), 0.0);
        let ties = LabeledScores::new(vec![0.5; 6], vec![1, 0, 1, 0, 1, 0]).unwrap();
        assert_eq!(auc(&ties).unwrap(), 0.5);
        let single = LabeledScores::new(vec![0.1, 0.2], vec![1, 1]).unwrap();
        assert!(matches!(auc(&single), Err(EvalError::SingleClass)));
    }

    #[test]
    fn auc_matches_pairwise_count() {
        for seed in 0..50u64 {
            let data = random_scores(seed, 60, seed % 2 == 0);
            let fast = auc(&data).unwrap();
            let slow = pairwise_auc(&data);
            assert!((fast - slow).abs() < 1e-12, "seed {seed}: {fast} vs {slow}");
        }
    }

    #[test]
    fn auc_invariant_under_monotone_transforms() {
        let data = random_scores(77, 80, false);
        let base = auc(&data).unwrap();
        let transformed = LabeledScores {
            scores: data.scores.iter().map(|s| (s * 0.3).atan() * 2.0 + 5.0).collect(),
            labels: data.labels.clone(),
        };
        assert_eq!(auc(&transformed).unwrap(), base);
    }

    #[test]
    fn permuted_labels_score_near_half() {
        let mut rng = stream_rng(78, 0);
        let data = random_scores(78, 200, false);
        let mut sum = 0.0;
        for _ in 0..100 {
            let mut labels = data.labels.clone();
            labels.shuffle(&mut rng);
            let shuffled = LabeledScores {
                scores: data.scores.clone(),
                labels,
            };
            sum += auc(&shuffled).unwrap();
        }
        let mean = sum / 100.0;
        assert!((mean - 0.5).abs() < 0.05, "mean permuted AUC {mean:.3}");
    }

    #[test]
    fn roc_known_cases() {
        let perfect = LabeledScores::new(vec![0.9, 0.8, 0.2, 0.1], vec![1, 1, 0, 0]).unwrap();
        let pts = roc_curve(&perfect).unwrap();
        assert_eq!(pts.first(), Some(&(0.0, 0.0)));
        assert_eq!(pts.last(), Some(&(1.0, 1.0)));
        assert!(pts.contains(&(0.0, 1.0)));
        assert_eq!(roc_area(&pts), 1.0);

        let flat = LabeledScores::new(vec![0.5; 4], vec![1, 0, 1, 0]).unwrap();
        let pts = roc_curve(&flat).unwrap();
        assert_eq!(pts, vec![(0.0, 0.0), (1.0, 1.0)]);
        assert_eq!(roc_area(&pts), 0.5);
    }

    #[test]
    fn roc_area_equals_auc() {
        for seed in 200..300u64 {
            let data = random_scores(seed, 100, seed % 3 == 0);
            let pts = roc_curve(&data).unwrap();
            for w in pts.windows(2) {
                assert!(w[1].0 >= w[0].0 && w[1].1 >= w[0].1);
            }
            let area = roc_area(&pts);
            let direct = auc(&data).unwrap();
            assert!((area - direct).abs() < 1e-12, "seed {seed}");
        }
    }

    #[test]
    fn bootstrap_basics() {
        let perfect = LabeledScores::new(
            vec![0.9, 0.85, 0.8, 0.2, 0.15, 0.1],
            vec![1, 1, 1, 0, 0, 0],
        )
        .unwrap();
        assert_eq!(bootstrap_ci(&perfect, 200, 0.95, 1).unwrap(), (1.0, 1.0));

        let data = random_scores(5, 40, false);
        let a = bootstrap_ci(&data, 300, 0.9, 9).unwrap();
        let b = bootstrap_ci(&data, 300, 0.9, 9).unwrap();
        assert_eq!(a, b);
        let c = bootstrap_ci(&data, 300, 0.9, 10).unwrap();
        assert_ne!(a, c);

        assert!(matches!(
            bootstrap_ci(&data, 50, 0.95, 1),
            Err(EvalError::InvalidBootstrap(_))
        ));
        let tiny = LabeledScores::new(vec![0.1, 0.9], vec![0, 1]).unwrap();
        assert!(matches!(
            bootstrap_ci(&tiny, 200, 0.95, 1),
            Err(EvalError::TooFewSamples(2))
        ));
    }

    #[test]
    fn bootstrap_interval_brackets_point_estimate() {
        for seed in 0..100u64 {
            let data = random_scores(1000 + seed, 40, false);
            let point = auc(&data).unwrap();
            let (lo, hi) = bootstrap_ci(&data, 200, 0.95, seed).unwrap();
            assert!(lo <= point && point <= hi, "seed {seed}: {lo} {point} {hi}");
            assert!((0.0..=1.0).contains(&lo) && (0.0..=1.0).contains(&hi));
        }
    }

    #[test]
    fn split_is_stratified_and_deterministic() {
        let labels: Vec<u8> = (0..20).map(|i| (i % 2) as u8).collect();
        let (train, test) = stratified_split(&labels, 3).unwrap();
        assert_eq!(train.len(), 14);
        assert_eq!(test.len(), 6);
        let count = |idx: &[usize], class: u8| idx.iter().filter(|&&i| labels[i] == class).count();
        assert_eq!(count(&train, 0), 7);
        assert_eq!(count(&train, 1), 7);
        let again = stratified_split(&labels, 3).unwrap();
        assert_eq!((train.clone(), test.clone()), again);
        let other = stratified_split(&labels, 4).unwrap();
        assert_ne!((train, test), other);
    }

    fn tiny_settings() -> ExperimentSettings {
        ExperimentSettings {
            stft: tiny_stft(),
            detectors: vec![Detector::MagSq, Detector::Clip],
            lambda: 100.0,
            db_floor: -80.0,
            n_bootstrap: 150,
            ci_level: 0.95,
            split_seed: 11,
        }
    }

    #[test]
    fn experiment_structure_and_determinism() {
        let corpus = synth_dataset(&tiny_synth(30)).unwrap();
        let runs = run_experiment(&corpus, &tiny_settings()).unwrap();
        assert_eq!(runs.len(), 2);
        assert_eq!(runs[0].n_test, runs[1].n_test);
        assert_eq!(runs[0].seed, runs[1].seed);
        for run in &runs {
            assert!(run.ci_low <= run.auc + 1e-12 && run.auc <= run.ci_high + 1e-12);
            assert_eq!(run.roc_points.first(), Some(&(0.0, 0.0)));
            assert_eq!(run.roc_points.last(), Some(&(1.0, 1.0)));
            assert_eq!(run.scores.len(), run.n_test);
        }
        let again = run_experiment(&corpus, &tiny_settings()).unwrap();
        assert_eq!(runs, again);
    }

    #[test]
    fn identical_detectors_give_identical_runs() {
        let corpus = synth_dataset(&tiny_synth(31)).unwrap();
        let settings = ExperimentSettings {
            detectors: vec![Detector::Clip, Detector::Clip],
            ..tiny_settings()
        };
        let runs = run_experiment(&corpus, &settings).unwrap();
        assert_eq!(runs[0].auc, runs[1].auc);
        assert_eq!(runs[0].scores, runs[1].scores);
        assert_eq!(runs[0].ci_low, runs[1].ci_low);
        assert_eq!(runs[0].ci_high, runs[1].ci_high);
    }
}
