//! Detectors: maps from complex STFT values to non-negative spectrogram
//! values, plus dB encoding.
//!
//! The baseline detector is the magnitude square `|z|²`. The clipping
//! detectors keep `|z|²` only inside a double cone in the complex plane and
//! output zero elsewhere, the two-dimensional analogue of ReLU's half-line
//! support:
//!
//! * `clip` keeps the cone around the real axis, `|Im z| ≤ |Re z|`
//!   (boundary included);
//! * `clip-rot` keeps the complementary cone around the imaginary axis,
//!   `|Im z| > |Re z|` (boundary excluded), so the two clipped outputs sum
//!   to the magnitude square exactly;
//! * `clip-angle=φ` rotates the measurement frame by `φ` before the cone
//!   test: `z` is kept when `|Im(e^{-jφ} z)| ≤ |Re(e^{-jφ} z)|`. `φ = 0`
//!   reproduces `clip` bit for bit; `φ = π/2` reproduces `clip-rot`
//!   everywhere off the cone boundary.

use ndarray::Array2;
use num_complex::Complex64;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::stft::{StftMatrix, StftParams};

#[derive(Debug, Error, PartialEq)]
pub enum DetectorError {
    #[error("cone angle must be finite, got {0}")]
    NonFiniteAngle(f64),
    #[error("dB floor must be finite and negative, got {0}")]
    InvalidFloor(f64),
    #[error("matrix is empty")]
    EmptyMatrix,
}

/// A detector choice, including the rotation angle for the generalized
/// cone. The canonical string forms are `magsq`, `clip`, `clip-rot`, and
/// `clip-angle=<radians>`; `Display`, `FromStr`, and serde all use them.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Detector {
    MagSq,
    Clip,
    ClipRotated,
    ClipAngle(f64),
}

impl Detector {
    /// Kind name without any angle payload.
    pub fn kind_name(&self) -> &'static str {
        match self {
            Detector::MagSq => "magsq",
            Detector::Clip => "clip",
            Detector::ClipRotated => "clip-rot",
            Detector::ClipAngle(_) => "clip-angle",
        }
    }

    /// Rotation angle for `clip-angle`, `None` for the fixed detectors.
    pub fn angle(&self) -> Option<f64> {
        match self {
            Detector::ClipAngle(phi) => Some(*phi),
            _ => None,
        }
    }

    /// Entrywise detector response.
    pub fn apply(&self, z: Complex64) -> f64 {
        match self {
            Detector::MagSq => power(z),
            Detector::Clip => clip_value(z),
            Detector::ClipRotated => clip_rotated_value(z),
            Detector::ClipAngle(phi) => {
                let trig = ConeTrig::new(*phi);
                trig.value(z)
            }
        }
    }
}

impl std::fmt::Display for Detector {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Detector::ClipAngle(phi) => write!(f, "clip-angle={phi}"),
            other => f.write_str(other.kind_name()),
        }
    }
}

impl std::str::FromStr for Detector {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "magsq" => return Ok(Detector::MagSq),
            "clip" => return Ok(Detector::Clip),
            "clip-rot" => return Ok(Detector::ClipRotated),
            _ => {}
        }
        if let Some(raw) = s.strip_prefix("clip-angle=") {
            let phi: f64 = raw
                .parse()
                .map_err(|_| format!("bad angle '{raw}' in detector spec"))?;
            if !phi.is_finite() {
                return Err(format!("cone angle must be finite, got {phi}"));
            }
            return Ok(Detector::ClipAngle(phi));
        }
        Err(format!(
            "unknown detector '{s}' (expected magsq, clip, clip-rot, or clip-angle=<radians>)"
        ))
    }
}

impl Serialize for Detector {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Detector {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// `Re² + Im²`. Every detector in the family emits either this value or
/// zero, which is what makes the clip/clip-rot partition identity exact.
#[inline]
fn power(z: Complex64) -> f64 {
    z.re * z.re + z.im * z.im
}

#[inline]
fn clip_value(z: Complex64) -> f64 {
    if z.im.abs() <= z.re.abs() {
        power(z)
    } else {
        0.0
    }
}

#[inline]
fn clip_rotated_value(z: Complex64) -> f64 {
    if z.im.abs() > z.re.abs() {
        power(z)
    } else {
        0.0
    }
}

/// Precomputed rotation coefficients for the angled cone test.
///
/// Sine and cosine values within `1e-12` of zero are snapped to exactly
/// zero, so quarter-turn angles produce bit-exact axis swaps: `φ = 0` and
/// `φ = π` reproduce `clip`, and `φ = π/2`, `φ = 3π/2` test the rotated
/// cone with the same inclusive boundary.
#[derive(Debug, Clone, Copy)]
struct ConeTrig {
    cos: f64,
    sin: f64,
}

impl ConeTrig {
    fn new(phi: f64) -> Self {
        let snap = |v: f64| if v.abs() < 1e-12 { 0.0 } else { v };
        Self {
            cos: snap(phi.cos()),
            sin: snap(phi.sin()),
        }
    }

    #[inline]
    fn value(&self, z: Complex64) -> f64 {
        // e^{-jφ}(re + j·im) = (c·re + s·im) + j(c·im − s·re)
        let re = self.cos * z.re + self.sin * z.im;
        let im = self.cos * z.im - self.sin * z.re;
        if im.abs() <= re.abs() {
            power(z)
        } else {
            0.0
        }
    }
}

/// Non-negative spectrogram with the detector and transform parameters that
/// produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrogram {
    pub values: Array2<f64>,
    pub detector: Detector,
    pub params: StftParams,
    pub sample_rate: u32,
}

/// Spectrogram after dB encoding. Every entry is at least `floor`, and
/// entries whose linear value was at most `10^(floor/10)` (including the
/// exact zeros produced by clipping) sit at `floor` exactly.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectrogramDb {
    pub values: Array2<f64>,
    pub floor: f64,
    pub detector: Detector,
    pub params: StftParams,
    pub sample_rate: u32,
}

fn map_stft(x: &StftMatrix, detector: Detector, f: impl Fn(Complex64) -> f64) -> Spectrogram {
    Spectrogram {
        values: x.data.mapv(f),
        detector,
        params: x.params,
        sample_rate: x.sample_rate,
    }
}

/// Baseline detector: entrywise `|X|²`.
pub fn detect_magsq(x: &StftMatrix) -> Spectrogram {
    map_stft(x, Detector::MagSq, power)
}

/// Cone detector around the real axis: `|X|²` where `|Im| ≤ |Re|`, else 0.
pub fn detect_clip(x: &StftMatrix) -> Spectrogram {
    map_stft(x, Detector::Clip, clip_value)
}

/// Complementary cone around the imaginary axis: `|X|²` where
/// `|Im| > |Re|`, else 0.
pub fn detect_clip_rotated(x: &StftMatrix) -> Spectrogram {
    map_stft(x, Detector::ClipRotated, clip_rotated_value)
}

/// Cone detector rotated by `phi` radians.
pub fn detect_clip_angle(x: &StftMatrix, phi: f64) -> Result<Spectrogram, DetectorError> {
    if !phi.is_finite() {
        return Err(DetectorError::NonFiniteAngle(phi));
    }
    let trig = ConeTrig::new(phi);
    Ok(map_stft(x, Detector::ClipAngle(phi), |z| trig.value(z)))
}

/// Applies whichever detector `detector` names.
pub fn detect(x: &StftMatrix, detector: Detector) -> Result<Spectrogram, DetectorError> {
    match detector {
        Detector::MagSq => Ok(detect_magsq(x)),
        Detector::Clip => Ok(detect_clip(x)),
        Detector::ClipRotated => Ok(detect_clip_rotated(x)),
        Detector::ClipAngle(phi) => detect_clip_angle(x, phi),
    }
}

/// Encodes a spectrogram in decibels: entrywise `max(10·log10(y), floor)`.
pub fn to_db(y: &Spectrogram, floor: f64) -> Result<SpectrogramDb, DetectorError> {
    if !floor.is_finite() || floor >= 0.0 {
        return Err(DetectorError::InvalidFloor(floor));
    }
    Ok(SpectrogramDb {
        values: y.values.mapv(|v| (10.0 * v.log10()).max(floor)),
        floor,
        detector: y.detector,
        params: y.params,
        sample_rate: y.sample_rate,
    })
}

/// Fraction of spectrogram entries that are non-zero.
pub fn support_fraction(y: &Spectrogram) -> Result<f64, DetectorError> {
    support_fraction_of(&y.values)
}

/// Fraction of strictly positive entries in any non-negative matrix.
pub fn support_fraction_of(values: &Array2<f64>) -> Result<f64, DetectorError> {
    if values.is_empty() {
        return Err(DetectorError::EmptyMatrix);
    }
    let nonzero = values.iter().filter(|&&v| v > 0.0).count();
    Ok(nonzero as f64 / values.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{standard_normal, stream_rng};
    use crate::stft::WindowKind;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn z(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn toy_stft(entries: Vec<Complex64>, rows: usize, cols: usize) -> StftMatrix {
        StftMatrix {
            data: Array2::from_shape_vec((rows, cols), entries).unwrap(),
            params: StftParams {
                fft_size: rows * 2,
                hop: rows,
                window: WindowKind::Hann,
            },
            sample_rate: 8000,
        }
    }

    fn random_values(seed: u64, n: usize) -> Vec<Complex64> {
        let mut rng = stream_rng(seed, 0);
        (0..n)
            .map(|_| z(standard_normal(&mut rng), standard_normal(&mut rng)))
            .collect()
    }

    #[test]
    fn magsq_known_values() {
        assert_eq!(Detector::MagSq.apply(z(3.0, 1.0)), 10.0);
        assert_eq!(Detector::MagSq.apply(z(0.0, 0.0)), 0.0);
    }

    #[test]
    fn clip_known_values() {
        assert_eq!(Detector::Clip.apply(z(3.0, 1.0)), 10.0);
        assert_eq!(Detector::Clip.apply(z(1.0, 3.0)), 0.0);
        assert_eq!(Detector::Clip.apply(z(1.0, 1.0)), 2.0); // boundary kept
        assert_eq!(Detector::Clip.apply(z(-2.0, -1.0)), 5.0);
    }

    #[test]
    fn clip_rotated_known_values() {
        assert_eq!(Detector::ClipRotated.apply(z(3.0, 1.0)), 0.0);
        assert_eq!(Detector::ClipRotated.apply(z(1.0, 3.0)), 10.0);
        assert_eq!(Detector::ClipRotated.apply(z(1.0, 1.0)), 0.0); // boundary dropped
    }

    #[test]
    fn clip_angle_known_values() {
        assert_eq!(Detector::ClipAngle(0.0).apply(z(3.0, 1.0)), 10.0);
        assert_eq!(Detector::ClipAngle(PI / 2.0).apply(z(1.0, 3.0)), 10.0);
        // On the rotated cone axis: e^{-jπ/4}(1+j) = √2.
        assert_eq!(Detector::ClipAngle(PI / 4.0).apply(z(1.0, 1.0)), 2.0);
    }

    #[test]
    fn partition_identity_is_exact() {
        let entries = random_values(21, 64 * 9);
        let x = toy_stft(entries, 64, 9);
        let base = detect_magsq(&x);
        let a = detect_clip(&x);
        let b = detect_clip_rotated(&x);
        for ((i, j), &m) in base.values.indexed_iter() {
            assert_eq!(a.values[(i, j)] + b.values[(i, j)], m); // bitwise
        }
    }

    #[test]
    fn four_fold_symmetry_exact() {
        let quarter_turns = [0.0, PI / 2.0, PI, 3.0 * PI / 2.0];
        for value in random_values(22, 2000) {
            let images = [
                value,
                -value,
                value.conj(),
                -value.conj(),
            ];
            for det in [Detector::MagSq, Detector::Clip, Detector::ClipRotated] {
                let f0 = det.apply(images[0]);
                for &w in &images[1..] {
                    assert_eq!(det.apply(w), f0, "{det} at {value}");
                }
            }
            for phi in quarter_turns {
                let det = Detector::ClipAngle(phi);
                let f0 = det.apply(images[0]);
                for &w in &images[1..] {
                    assert_eq!(det.apply(w), f0, "phi={phi} at {value}");
                }
            }
        }
    }

    /// At a generic angle the cone is not conjugation-symmetric, only
    /// point-symmetric; f(z) = f(−z) still holds.
    #[test]
    fn generic_angle_keeps_point_symmetry() {
        let det = Detector::ClipAngle(0.7);
        for value in random_values(23, 500) {
            assert_eq!(det.apply(value), det.apply(-value));
        }
        // And conjugation symmetry genuinely fails off the quarter turns:
        // e^{jπ/8} sits inside the π/4-rotated cone, its conjugate outside.
        let probe = Complex64::from_polar(1.0, PI / 8.0);
        let rotated = Detector::ClipAngle(PI / 4.0);
        assert!(rotated.apply(probe) > 0.0);
        assert_eq!(rotated.apply(probe.conj()), 0.0);
    }

    #[test]
    fn angle_zero_matches_clip_bitwise() {
        let entries = random_values(24, 32 * 5);
        let x = toy_stft(entries, 32, 5);
        let direct = detect_clip(&x);
        let angled = detect_clip_angle(&x, 0.0).unwrap();
        assert_eq!(direct.values, angled.values);
    }

    #[test]
    fn angle_quarter_turn_matches_rotated_off_boundary() {
        let entries: Vec<Complex64> = random_values(25, 32 * 5)
            .into_iter()
            .map(|v| if v.im.abs() == v.re.abs() { v + z(0.1, 0.0) } else { v })
            .collect();
        let x = toy_stft(entries, 32, 5);
        let direct = detect_clip_rotated(&x);
        let angled = detect_clip_angle(&x, PI / 2.0).unwrap();
        assert_eq!(direct.values, angled.values);
    }

    #[test]
    fn angle_is_pi_periodic() {
        for phi in [0.3, 1.1, 2.9, -0.6] {
            let a = Detector::ClipAngle(phi);
            let b = Detector::ClipAngle(phi + PI);
            for value in random_values(26, 300) {
                assert_eq!(a.apply(value), b.apply(value), "phi={phi}");
            }
        }
    }

    #[test]
    fn non_finite_angle_rejected() {
        let x = toy_stft(vec![z(1.0, 0.0)], 1, 1);
        let err = detect_clip_angle(&x, f64::NAN).unwrap_err();
        assert!(matches!(err, DetectorError::NonFiniteAngle(a) if a.is_nan()));
        assert!(matches!(
            detect_clip_angle(&x, f64::INFINITY).unwrap_err(),
            DetectorError::NonFiniteAngle(_)
        ));
        assert!("clip-angle=inf".parse::<Detector>().is_err());
    }

    proptest! {
        #[test]
        fn detector_bounds_and_scaling(re in -1e6f64..1e6, im in -1e6f64..1e6, c in 1e-3f64..1e3) {
            let v = z(re, im);
            for det in [Detector::MagSq, Detector::Clip, Detector::ClipRotated, Detector::ClipAngle(0.37)] {
                let f = det.apply(v);
                prop_assert!(f >= 0.0);
                prop_assert!(f <= power(v));
                // Scale equivariance: cone membership is scale-invariant,
                // the kept value scales by c².
                let scaled = det.apply(z(c * re, c * im));
                let expect = c * c * f;
                prop_assert!((scaled - expect).abs() <= 1e-9 * expect.abs().max(1e-300));
            }
        }

        #[test]
        fn partition_holds_everywhere(re in -1e12f64..1e12, im in -1e12f64..1e12) {
            let v = z(re, im);
            prop_assert_eq!(
                Detector::Clip.apply(v) + Detector::ClipRotated.apply(v),
                Detector::MagSq.apply(v)
            );
        }
    }

    #[test]
    fn detect_dispatch_matches_direct_calls() {
        let x = toy_stft(random_values(27, 16 * 3), 16, 3);
        assert_eq!(detect(&x, Detector::MagSq).unwrap(), detect_magsq(&x));
        assert_eq!(detect(&x, Detector::Clip).unwrap(), detect_clip(&x));
        assert_eq!(
            detect(&x, Detector::ClipRotated).unwrap(),
            detect_clip_rotated(&x)
        );
        assert_eq!(
            detect(&x, Detector::ClipAngle(1.0)).unwrap(),
            detect_clip_angle(&x, 1.0).unwrap()
        );
    }

    #[test]
    fn db_encoding_contract() {
        let x = toy_stft(
            vec![z(1.0, 0.0), z(10.0, 0.0), z(0.0, 0.0), z(1e-5, 0.0)],
            2,
            2,
        );
        let y = detect_magsq(&x);
        let db = to_db(&y, -80.0).unwrap();
        assert_eq!(db.values[(0, 0)], 0.0); // power 1 → 0 dB
        assert_eq!(db.values[(0, 1)], 20.0); // power 100 → 20 dB
        assert_eq!(db.values[(1, 0)], -80.0); // zero → floor exactly
        // power (1e-5)² = 1e-10 → −100 dB, under the floor, so it clamps:
        assert_eq!(db.values[(1, 1)], -80.0);
        assert!(db.values.iter().all(|&v| v >= -80.0));
    }

    #[test]
    fn db_floor_validation() {
        let y = detect_magsq(&toy_stft(vec![z(1.0, 0.0)], 1, 1));
        assert_eq!(to_db(&y, 0.0).unwrap_err(), DetectorError::InvalidFloor(0.0));
        assert_eq!(to_db(&y, 3.0).unwrap_err(), DetectorError::InvalidFloor(3.0));
        assert!(to_db(&y, f64::NEG_INFINITY).is_err());
    }

    #[test]
    fn support_fraction_cases() {
        let zeros = detect_magsq(&toy_stft(vec![z(0.0, 0.0); 6], 3, 2));
        assert_eq!(support_fraction(&zeros).unwrap(), 0.0);
        let generic = detect_magsq(&toy_stft(random_values(28, 6), 3, 2));
        assert_eq!(support_fraction(&generic).unwrap(), 1.0);
        assert_eq!(
            support_fraction_of(&Array2::<f64>::zeros((0, 4))).unwrap_err(),
            DetectorError::EmptyMatrix
        );
    }

    /// For circularly symmetric Gaussian z the two cones are equiprobable,
    /// so clip keeps half the entries.
    #[test]
    fn clip_support_on_gaussian_is_half() {
        let n = 100_000;
        let x = toy_stft(random_values(29, n), 250, n / 250);
        let clipped = detect_clip(&x);
        let frac = support_fraction(&clipped).unwrap();
        assert!((frac - 0.5).abs() < 0.01, "support fraction {frac}");
    }

    #[test]
    fn detector_string_round_trip() {
        let cases = [
            Detector::MagSq,
            Detector::Clip,
            Detector::ClipRotated,
            Detector::ClipAngle(0.0),
            Detector::ClipAngle(PI / 2.0),
            Detector::ClipAngle(-1.25),
        ];
        for det in cases {
            let s = det.to_string();
            assert_eq!(s.parse::<Detector>().unwrap(), det, "{s}");
            let json = serde_json::to_string(&det).unwrap();
            assert_eq!(serde_json::from_str::<Detector>(&json).unwrap(), det);
        }
        assert_eq!("clip-angle=1.5707963267948966".parse::<Detector>().unwrap(),
            Detector::ClipAngle(PI / 2.0));
        assert!("soft-clip".parse::<Detector>().is_err());
    }

    #[test]
    fn spectrogram_carries_source_metadata() {
        let x = toy_stft(random_values(30, 8), 4, 2);
        let y = detect_clip(&x);
        assert_eq!(y.params, x.params);
        assert_eq!(y.sample_rate, 8000);
        let db = to_db(&y, -60.0).unwrap();
        assert_eq!(db.floor, -60.0);
        assert_eq!(db.detector, Detector::Clip);
    }
}
