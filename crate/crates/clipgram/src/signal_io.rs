//! Audio ingestion: WAV decode, fixed-length conditioning, SNR gating.
//!
//! Recordings are normalized to a fixed analysis length and screened by an
//! estimated signal-to-noise ratio before feature extraction, so the
//! downstream pipeline only sees inputs of a known size and quality. The SNR
//! estimator is a frame-power quantile ratio: it needs no voice-activity
//! detection, is deterministic, and is invariant under amplitude scaling.

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::util::quantile_sorted;

/// Fixed-rate real audio vector with provenance.
#[derive(Debug, Clone, PartialEq)]
pub struct InputSignal {
    /// Amplitude samples, nominally in `[-1, 1]`.
    pub samples: Vec<f64>,
    pub sample_rate: u32,
    pub source_id: String,
}

impl InputSignal {
    pub fn new(samples: Vec<f64>, sample_rate: u32, source_id: impl Into<String>) -> Self {
        Self {
            samples,
            sample_rate,
            source_id: source_id.into(),
        }
    }

    pub fn duration_secs(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate as f64
    }
}

/// Ingestion and gating parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IngestConfig {
    /// Analysis length every signal is padded/truncated to, in seconds.
    pub target_duration: f64,
    /// Signals with estimated SNR at or below this are rejected.
    /// `f64::NEG_INFINITY` disables gating.
    pub snr_threshold_db: f64,
    /// SNR estimator frame length in samples (25 ms at 8 kHz by default).
    pub snr_frame_len: usize,
    /// Frame-power quantile treated as the noise floor.
    pub noise_percentile: f64,
    /// Frame-power quantile treated as the signal level.
    pub signal_percentile: f64,
}

impl Default for IngestConfig {
    fn default() -> Self {
        Self {
            target_duration: 4.0,
            snr_threshold_db: 15.0,
            snr_frame_len: 200,
            noise_percentile: 0.1,
            signal_percentile: 0.9,
        }
    }
}

impl IngestConfig {
    fn validate(&self) -> Result<(), SignalIoError> {
        if !(self.target_duration > 0.0) {
            return Err(SignalIoError::InvalidConfig("target_duration must be positive".into()));
        }
        if self.snr_frame_len == 0 {
            return Err(SignalIoError::InvalidConfig("snr_frame_len must be positive".into()));
        }
        let (lo, hi) = (self.noise_percentile, self.signal_percentile);
        if !(lo > 0.0 && hi < 1.0 && lo < hi) {
            return Err(SignalIoError::InvalidConfig(
                "percentiles must satisfy 0 < noise < signal < 1".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Error)]
pub enum SignalIoError {
    #[error("malformed WAV: {0}")]
    MalformedWav(String),
    #[error("unsupported WAV encoding: {0}")]
    UnsupportedEncoding(String),
    #[error("silent signal: noise power below 1e-12")]
    SilentSignal,
    #[error("signal too short: {len} samples, need at least {need}")]
    TooShort { len: usize, need: usize },
    #[error("invalid ingest config: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

// ---------------------------------------------------------------------------
// WAV codec (RIFF/WAVE, PCM16 or float32, little endian)
// ---------------------------------------------------------------------------

const WAVE_FORMAT_PCM: u16 = 0x0001;
const WAVE_FORMAT_IEEE_FLOAT: u16 = 0x0003;
const WAVE_FORMAT_EXTENSIBLE: u16 = 0xFFFE;

struct FmtChunk {
    format: u16,
    channels: u16,
    sample_rate: u32,
    bits_per_sample: u16,
}

fn read_u16(bytes: &[u8], at: usize) -> Result<u16, SignalIoError> {
    bytes
        .get(at..at + 2)
        .map(|b| u16::from_le_bytes([b[0], b[1]]))
        .ok_or_else(|| SignalIoError::MalformedWav("truncated chunk".into()))
}

fn read_u32(bytes: &[u8], at: usize) -> Result<u32, SignalIoError> {
    bytes
        .get(at..at + 4)
        .map(|b| u32::from_le_bytes([b[0], b[1], b[2], b[3]]))
        .ok_or_else(|| SignalIoError::MalformedWav("truncated chunk".into()))
}

fn parse_fmt(body: &[u8]) -> Result<FmtChunk, SignalIoError> {
    if body.len() < 16 {
        return Err(SignalIoError::MalformedWav("fmt chunk shorter than 16 bytes".into()));
    }
    let mut format = read_u16(body, 0)?;
    let channels = read_u16(body, 2)?;
    let sample_rate = read_u32(body, 4)?;
    let bits_per_sample = read_u16(body, 14)?;
    if format == WAVE_FORMAT_EXTENSIBLE {
        // Real format code is the first word of the SubFormat GUID.
        if body.len() < 26 {
            return Err(SignalIoError::MalformedWav("truncated WAVE_FORMAT_EXTENSIBLE header".into()));
        }
        format = read_u16(body, 24)?;
    }
    Ok(FmtChunk {
        format,
        channels,
        sample_rate,
        bits_per_sample,
    })
}

fn decode_samples(fmt: &FmtChunk, data: &[u8]) -> Result<Vec<f64>, SignalIoError> {
    let bytes_per_sample = match (fmt.format, fmt.bits_per_sample) {
        (WAVE_FORMAT_PCM, 16) => 2,
        (WAVE_FORMAT_IEEE_FLOAT, 32) => 4,
        (f, b) => {
            return Err(SignalIoError::UnsupportedEncoding(format!(
                "format code {f}, {b} bits per sample (only 16-bit PCM and 32-bit float)"
            )))
        }
    };
    let channels = fmt.channels as usize;
    let frame_len = bytes_per_sample * channels;
    if !data.len().is_multiple_of(frame_len) {
        return Err(SignalIoError::MalformedWav(
            "data chunk length is not a whole number of frames".into(),
        ));
    }
    let n_frames = data.len() / frame_len;
    let mut out = Vec::with_capacity(n_frames);
    for frame in data.chunks_exact(frame_len) {
        let mut acc = 0.0;
        for ch in frame.chunks_exact(bytes_per_sample) {
            let v = match bytes_per_sample {
                2 => i16::from_le_bytes([ch[0], ch[1]]) as f64 / 32768.0,
                _ => f32::from_le_bytes([ch[0], ch[1], ch[2], ch[3]]) as f64,
            };
            acc += v;
        }
        let v = acc / channels as f64;
        if !v.is_finite() {
            return Err(SignalIoError::MalformedWav("non-finite sample value".into()));
        }
        out.push(v);
    }
    Ok(out)
}

/// Reads a PCM WAV file. 16-bit samples are scaled by `1/32768`; 32-bit
/// float samples pass through unscaled. Multichannel audio is averaged to
/// mono. The source id is the file stem.
pub fn read_wav(path: impl AsRef<Path>) -> Result<InputSignal, SignalIoError> {
    let path = path.as_ref();
    let bytes = std::fs::read(path)?;
    let signal = decode_wav_bytes(&bytes)?;
    let source_id = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    Ok(InputSignal { source_id, ..signal })
}

/// Decodes WAV bytes already in memory; the source id is left empty.
pub fn decode_wav_bytes(bytes: &[u8]) -> Result<InputSignal, SignalIoError> {
    if bytes.len() < 12 || &bytes[0..4] != b"RIFF" || &bytes[8..12] != b"WAVE" {
        return Err(SignalIoError::MalformedWav("missing RIFF/WAVE header".into()));
    }
    let mut fmt: Option<FmtChunk> = None;
    let mut data: Option<&[u8]> = None;
    let mut at = 12;
    while at + 8 <= bytes.len() {
        let id = &bytes[at..at + 4];
        let size = read_u32(bytes, at + 4)? as usize;
        let body_start = at + 8;
        let body_end = body_start + size;
        if body_end > bytes.len() {
            // Header promises more payload than the file holds.
            return Err(SignalIoError::MalformedWav(format!(
                "chunk '{}' declares {} bytes but only {} remain",
                String::from_utf8_lossy(id),
                size,
                bytes.len() - body_start
            )));
        }
        let body = &bytes[body_start..body_end];
        match id {
            b"fmt " => fmt = Some(parse_fmt(body)?),
            b"data" => data = Some(body),
            _ => {}
        }
        // Chunks are word aligned.
        at = body_end + (size & 1);
    }
    let fmt = fmt.ok_or_else(|| SignalIoError::MalformedWav("missing fmt chunk".into()))?;
    let data = data.ok_or_else(|| SignalIoError::MalformedWav("missing data chunk".into()))?;
    if fmt.channels == 0 {
        return Err(SignalIoError::MalformedWav("zero channels".into()));
    }
    if fmt.sample_rate == 0 {
        return Err(SignalIoError::MalformedWav("zero sample rate".into()));
    }
    let samples = decode_samples(&fmt, data)?;
    if samples.is_empty() {
        return Err(SignalIoError::MalformedWav("empty data chunk".into()));
    }
    Ok(InputSignal::new(samples, fmt.sample_rate, ""))
}

/// Writes a mono 16-bit PCM WAV file.
pub fn write_wav(path: impl AsRef<Path>, signal: &InputSignal) -> Result<(), SignalIoError> {
    let n = signal.samples.len();
    let data_len = (n * 2) as u32;
    let mut bytes = Vec::with_capacity(44 + n * 2);
    bytes.extend_from_slice(b"RIFF");
    bytes.extend_from_slice(&(36 + data_len).to_le_bytes());
    bytes.extend_from_slice(b"WAVE");
    bytes.extend_from_slice(b"fmt ");
    bytes.extend_from_slice(&16u32.to_le_bytes());
    bytes.extend_from_slice(&WAVE_FORMAT_PCM.to_le_bytes());
    bytes.extend_from_slice(&1u16.to_le_bytes());
    bytes.extend_from_slice(&signal.sample_rate.to_le_bytes());
    bytes.extend_from_slice(&(signal.sample_rate * 2).to_le_bytes());
    bytes.extend_from_slice(&2u16.to_le_bytes());
    bytes.extend_from_slice(&16u16.to_le_bytes());
    bytes.extend_from_slice(b"data");
    bytes.extend_from_slice(&data_len.to_le_bytes());
    for &s in &signal.samples {
        let v = (s.clamp(-1.0, 1.0) * 32767.0).round() as i16;
        bytes.extend_from_slice(&v.to_le_bytes());
    }
    std::fs::write(path, bytes)?;
    Ok(())
}

// ---------------------------------------------------------------------------
// Length conditioning and SNR gating
// ---------------------------------------------------------------------------

/// Pads with trailing zeros or truncates so the output holds exactly
/// `round(target_duration * sample_rate)` samples. Idempotent, and the
/// common prefix with the input is preserved exactly.
pub fn condition_length(signal: &InputSignal, target_duration: f64) -> InputSignal {
    debug_assert!(target_duration > 0.0);
    let target_len = (target_duration * signal.sample_rate as f64).round() as usize;
    let mut samples = signal.samples.clone();
    samples.resize(target_len, 0.0);
    InputSignal {
        samples,
        sample_rate: signal.sample_rate,
        source_id: signal.source_id.clone(),
    }
}

/// Frame-power quantile SNR estimate in dB.
///
/// The signal is split into non-overlapping frames of `snr_frame_len`
/// samples; the noise power is a low quantile of the per-frame mean powers
/// and the signal power a high quantile. Scaling the signal by any positive
/// constant leaves the estimate unchanged.
pub fn estimate_snr(signal: &InputSignal, config: &IngestConfig) -> Result<f64, SignalIoError> {
    config.validate()?;
    let frame = config.snr_frame_len;
    if signal.samples.len() < 2 * frame {
        return Err(SignalIoError::TooShort {
            len: signal.samples.len(),
            need: 2 * frame,
        });
    }
    let mut powers: Vec<f64> = signal
        .samples
        .chunks_exact(frame)
        .map(|c| c.iter().map(|x| x * x).sum::<f64>() / frame as f64)
        .collect();
    powers.sort_by(|a, b| a.partial_cmp(b).expect("non-finite frame power"));
    let noise = quantile_sorted(&powers, config.noise_percentile);
    let sig = quantile_sorted(&powers, config.signal_percentile);
    if noise < 1e-12 {
        return Err(SignalIoError::SilentSignal);
    }
    Ok(10.0 * (sig / noise).log10())
}

/// One line of the gate report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GateEntry {
    pub source_id: String,
    pub snr_db: Option<f64>,
    pub kept: bool,
    pub reason: Option<String>,
}

/// Result of gating a batch of signals.
#[derive(Debug, Clone)]
pub struct GateOutcome {
    pub kept: Vec<InputSignal>,
    pub rejected: Vec<InputSignal>,
    /// One entry per input signal, in input order.
    pub report: Vec<GateEntry>,
}

/// Splits `signals` into those with estimated SNR strictly above
/// `config.snr_threshold_db` and the rest. Signals the estimator cannot
/// score (silent, too short) are rejected with a reason tag; input order is
/// preserved on both sides.
pub fn gate_by_snr(signals: Vec<InputSignal>, config: &IngestConfig) -> GateOutcome {
    let mut out = GateOutcome {
        kept: Vec::new(),
        rejected: Vec::new(),
        report: Vec::with_capacity(signals.len()),
    };
    for signal in signals {
        match estimate_snr(&signal, config) {
            Ok(snr) => {
                let kept = snr > config.snr_threshold_db;
                out.report.push(GateEntry {
                    source_id: signal.source_id.clone(),
                    snr_db: Some(snr),
                    kept,
                    reason: (!kept).then(|| "below_threshold".to_string()),
                });
                if kept {
                    out.kept.push(signal);
                } else {
                    out.rejected.push(signal);
                }
            }
            Err(err) => {
                let reason = match err {
                    SignalIoError::SilentSignal => "silent",
                    SignalIoError::TooShort { .. } => "too_short",
                    _ => "error",
                };
                out.report.push(GateEntry {
                    source_id: signal.source_id.clone(),
                    snr_db: None,
                    kept: false,
                    reason: Some(reason.to_string()),
                });
                out.rejected.push(signal);
            }
        }
    }
    out
}
