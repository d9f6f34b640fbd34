//! Binary feature-file format for dB spectrograms.
//!
//! Layout: the magic bytes `CSPC`, a one-byte format version, a
//! little-endian u32 header length, a UTF-8 JSON header, then the payload
//! as row-major little-endian f32 values. The JSON header makes the file
//! self-describing; the fixed-width payload keeps reads trivial and
//! round-trips bit-exact. Values are stored as f32 because dB features
//! need far less than f32's precision; all in-memory math stays f64.

use std::path::Path;

use ndarray::Array2;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::detector::{Detector, SpectrogramDb};

pub const MAGIC: [u8; 4] = *b"CSPC";
pub const VERSION: u8 = 1;

#[derive(Debug, Error)]
pub enum FeatFileError {
    #[error("bad magic bytes (not a feature file)")]
    BadMagic,
    #[error("unsupported feature-file version {0}")]
    UnsupportedVersion(u8),
    #[error("file truncated: {0}")]
    Truncated(String),
    #[error("header is not valid JSON: {0}")]
    HeaderJson(#[from] serde_json::Error),
    #[error("payload holds {got} bytes, header promises {expected}")]
    PayloadSizeMismatch { expected: usize, got: usize },
    #[error("unsupported dtype '{0}' (only f32)")]
    UnsupportedDtype(String),
    #[error("header shape {rows}x{cols} does not match value matrix {actual:?}")]
    ShapeMismatch {
        rows: usize,
        cols: usize,
        actual: (usize, usize),
    },
    #[error("detector '{0}' in header needs an angle but phi is null")]
    MissingAngle(String),
    #[error("unknown detector '{0}' in header")]
    UnknownDetector(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// JSON header carried inside a feature file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureHeader {
    pub rows: usize,
    pub cols: usize,
    pub dtype: String,
    /// Detector kind name (`magsq`, `clip`, `clip-rot`, `clip-angle`).
    pub detector: String,
    /// Cone angle in radians for `clip-angle`, otherwise null.
    pub phi: Option<f64>,
    pub fft_size: usize,
    pub hop: usize,
    pub window: crate::stft::WindowKind,
    pub sample_rate: u32,
    pub db_floor: f64,
    pub source_id: String,
}

impl FeatureHeader {
    /// Reconstructs the detector this file was produced with.
    pub fn detector_enum(&self) -> Result<Detector, FeatFileError> {
        match self.detector.as_str() {
            "magsq" => Ok(Detector::MagSq),
            "clip" => Ok(Detector::Clip),
            "clip-rot" => Ok(Detector::ClipRotated),
            "clip-angle" => self
                .phi
                .map(Detector::ClipAngle)
                .ok_or_else(|| FeatFileError::MissingAngle(self.detector.clone())),
            other => Err(FeatFileError::UnknownDetector(other.to_string())),
        }
    }
}

/// In-memory feature file: header plus the dB value matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureFile {
    pub header: FeatureHeader,
    pub values: Array2<f32>,
}

impl FeatureFile {
    /// Packages a dB spectrogram for serialization.
    pub fn from_db(db: &SpectrogramDb, source_id: impl Into<String>) -> Self {
        let (rows, cols) = db.values.dim();
        let header = FeatureHeader {
            rows,
            cols,
            dtype: "f32".into(),
            detector: db.detector.kind_name().into(),
            phi: db.detector.angle(),
            fft_size: db.params.fft_size,
            hop: db.params.hop,
            window: db.params.window,
            sample_rate: db.sample_rate,
            db_floor: db.floor,
            source_id: source_id.into(),
        };
        FeatureFile {
            header,
            values: db.values.mapv(|v| v as f32),
        }
    }

    /// The value matrix widened back to f64 for analysis.
    pub fn values_f64(&self) -> Array2<f64> {
        self.values.mapv(f64::from)
    }
}

/// Serializes a feature file to bytes. Encoding the same file twice yields
/// identical bytes.
pub fn encode_feature_file(file: &FeatureFile) -> Result<Vec<u8>, FeatFileError> {
    let (rows, cols) = file.values.dim();
    if rows != file.header.rows || cols != file.header.cols {
        return Err(FeatFileError::ShapeMismatch {
            rows: file.header.rows,
            cols: file.header.cols,
            actual: (rows, cols),
        });
    }
    let header_json = serde_json::to_vec(&file.header)?;
    let mut out = Vec::with_capacity(9 + header_json.len() + rows * cols * 4);
    out.extend_from_slice(&MAGIC);
    out.push(VERSION);
    out.extend_from_slice(&(header_json.len() as u32).to_le_bytes());
    out.extend_from_slice(&header_json);
    for &v in file.values.iter() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    Ok(out)
}

/// Parses feature-file bytes, verifying magic, version, dtype, and that
/// the payload length matches the header's shape.
pub fn decode_feature_file(bytes: &[u8]) -> Result<FeatureFile, FeatFileError> {
    if bytes.len() < 4 {
        return Err(FeatFileError::Truncated("missing magic".into()));
    }
    if bytes[0..4] != MAGIC {
        return Err(FeatFileError::BadMagic);
    }
    let version = *bytes
        .get(4)
        .ok_or_else(|| FeatFileError::Truncated("missing version".into()))?;
    if version != VERSION {
        return Err(FeatFileError::UnsupportedVersion(version));
    }
    let header_len = bytes
        .get(5..9)
        .map(|b| u32::from_le_bytes([b[0], b[1], b[2], b[3]]) as usize)
        .ok_or_else(|| FeatFileError::Truncated("missing header length".into()))?;
    let header_bytes = bytes
        .get(9..9 + header_len)
        .ok_or_else(|| FeatFileError::Truncated("header shorter than declared".into()))?;
    let header: FeatureHeader = serde_json::from_slice(header_bytes)?;
    if header.dtype != "f32" {
        return Err(FeatFileError::UnsupportedDtype(header.dtype));
    }
    let payload = &bytes[9 + header_len..];
    let expected = header.rows * header.cols * 4;
    if payload.len() != expected {
        return Err(FeatFileError::PayloadSizeMismatch {
            expected,
            got: payload.len(),
        });
    }
    let values: Vec<f32> = payload
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
        .collect();
    let values = Array2::from_shape_vec((header.rows, header.cols), values)
        .expect("length checked against shape");
    Ok(FeatureFile { header, values })
}

pub fn write_feature_file(path: impl AsRef<Path>, file: &FeatureFile) -> Result<(), FeatFileError> {
    std::fs::write(path, encode_feature_file(file)?)?;
    Ok(())
}

pub fn read_feature_file(path: impl AsRef<Path>) -> Result<FeatureFile, FeatFileError> {
    decode_feature_file(&std::fs::read(path)?)
}
