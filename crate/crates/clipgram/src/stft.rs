//! Short-time Fourier transform with a fixed frame grid.
//!
//! A signal of length `L` analyzed with frame length `K` and hop `H` yields
//! `M + 1 = floor((L - K) / H) + 1` frames; frame `n` covers samples
//! `n*H .. n*H + K`. Only the first `K/2` frequency bins are kept (real
//! input, so the upper half is conjugate-redundant), giving a complex
//! matrix of shape `(K/2, M + 1)` with frequency down the rows and time
//! across the columns.

use ndarray::Array2;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum StftError {
    #[error("frame length must be a power of two, got {0}")]
    NotPowerOfTwo(usize),
    #[error("frame length must be at least 2, got {0}")]
    FrameTooSmall(usize),
    #[error("hop must be positive")]
    ZeroHop,
    #[error("signal too short: {len} samples but one frame needs {frame}")]
    SignalTooShort { len: usize, frame: usize },
    #[error("window length {window} does not match frame length {frame}")]
    WindowMismatch { window: usize, frame: usize },
}

/// Analysis window shape. All windows are the periodic variant (denominator
/// `K`, not `K - 1`), matching the transform length.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WindowKind {
    Hann,
    Hamming,
    Rectangular,
}

impl WindowKind {
    pub fn name(&self) -> &'static str {
        match self {
            WindowKind::Hann => "hann",
            WindowKind::Hamming => "hamming",
            WindowKind::Rectangular => "rectangular",
        }
    }
}

impl std::fmt::Display for WindowKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for WindowKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "hann" => Ok(WindowKind::Hann),
            "hamming" => Ok(WindowKind::Hamming),
            "rectangular" | "rect" => Ok(WindowKind::Rectangular),
            other => Err(format!(
                "unknown window '{other}' (expected hann, hamming, or rectangular)"
            )),
        }
    }
}

/// STFT analysis parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StftParams {
    /// Frame and transform length `K`; must be a power of two, at least 2.
    pub fft_size: usize,
    /// Hop `H` between frame starts, in samples.
    pub hop: usize,
    pub window: WindowKind,
}

impl Default for StftParams {
    fn default() -> Self {
        Self {
            fft_size: 512,
            hop: 128,
            window: WindowKind::Hann,
        }
    }
}

impl StftParams {
    pub fn validate(&self) -> Result<(), StftError> {
        if self.fft_size < 2 {
            return Err(StftError::FrameTooSmall(self.fft_size));
        }
        if !self.fft_size.is_power_of_two() {
            return Err(StftError::NotPowerOfTwo(self.fft_size));
        }
        if self.hop == 0 {
            return Err(StftError::ZeroHop);
        }
        Ok(())
    }
}

/// Complex STFT output plus the parameters that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct StftMatrix {
    /// Shape `(fft_size / 2, num_frames)`: bin `k` holds frequency
    /// `k * sample_rate / fft_size`.
    pub data: Array2<Complex64>,
    pub params: StftParams,
    pub sample_rate: u32,
}

impl StftMatrix {
    pub fn num_bins(&self) -> usize {
        self.data.nrows()
    }

    pub fn num_frames(&self) -> usize {
        self.data.ncols()
    }

    /// Center frequency of bin `k` in Hz.
    pub fn bin_frequency(&self, k: usize) -> f64 {
        k as f64 * self.sample_rate as f64 / self.params.fft_size as f64
    }

    /// Start time of frame `n` in seconds.
    pub fn frame_time(&self, n: usize) -> f64 {
        n as f64 * self.params.hop as f64 / self.sample_rate as f64
    }
}

/// Samples a length-`len` analysis window.
pub fn make_window(kind: WindowKind, len: usize) -> Vec<f64> {
    let k = len as f64;
    (0..len)
        .map(|m| {
            let phase = 2.0 * PI * m as f64 / k;
            match kind {
                WindowKind::Hann => 0.5 * (1.0 - phase.cos()),
                WindowKind::Hamming => 0.54 - 0.46 * phase.cos(),
                WindowKind::Rectangular => 1.0,
            }
        })
        .collect()
}

/// Number of frames produced for a signal of length `len`:
/// `floor((len - fft_size) / hop) + 1`. Errors if even one frame does not
/// fit.
pub fn num_frames(len: usize, params: &StftParams) -> Result<usize, StftError> {
    params.validate()?;
    if len < params.fft_size {
        return Err(StftError::SignalTooShort {
            len,
            frame: params.fft_size,
        });
    }
    Ok((len - params.fft_size) / params.hop + 1)
}

/// In-place iterative radix-2 decimation-in-time FFT.
///
/// `twiddles[j] = exp(-2πi j / n)` for `j < n / 2`, as produced by
/// [`fft_twiddles`].
fn fft_in_place(buf: &mut [Complex64], twiddles: &[Complex64]) {
    let n = buf.len();
    debug_assert!(n.is_power_of_two() && twiddles.len() == n / 2);

    // Bit-reversal permutation.
    let mut j = 0usize;
    for i in 0..n {
        if i < j {
            buf.swap(i, j);
        }
        let mut mask = n >> 1;
        while mask > 0 && j & mask != 0 {
            j &= !mask;
            mask >>= 1;
        }
        j |= mask;
    }

    // Butterfly passes, doubling the block size each time.
    let mut block = 2;
    while block <= n {
        let half = block / 2;
        let stride = n / block;
        for start in (0..n).step_by(block) {
            for (i, pair) in (start..start + half).enumerate() {
                let w = twiddles[i * stride];
                let lo = buf[pair];
                let hi = buf[pair + half] * w;
                buf[pair] = lo + hi;
                buf[pair + half] = lo - hi;
            }
        }
        block *= 2;
    }
}

fn fft_twiddles(n: usize) -> Vec<Complex64> {
    (0..n / 2)
        .map(|j| Complex64::from_polar(1.0, -2.0 * PI * j as f64 / n as f64))
        .collect()
}

/// Full-length DFT of one real frame: `X[k] = Σ_m frame[m] e^{-2πi k m / K}`
/// for all `K` bins. The frame length must be a power of two.
pub fn dft(frame: &[f64]) -> Result<Vec<Complex64>, StftError> {
    let n = frame.len();
    if n < 2 {
        return Err(StftError::FrameTooSmall(n));
    }
    if !n.is_power_of_two() {
        return Err(StftError::NotPowerOfTwo(n));
    }
    let mut buf: Vec<Complex64> = frame.iter().map(|&x| Complex64::new(x, 0.0)).collect();
    fft_in_place(&mut buf, &fft_twiddles(n));
    Ok(buf)
}

/// Windowed STFT of a real signal. Each frame is multiplied by the analysis
/// window, transformed, and the lower `fft_size / 2` bins are stored as one
/// column of the output.
pub fn stft(samples: &[f64], params: &StftParams) -> Result<StftMatrixData, StftError> {
    params.validate()?;
    let k = params.fft_size;
    let frames = num_frames(samples.len(), params)?;
    let window = make_window(params.window, k);
    let twiddles = fft_twiddles(k);

    let mut data = Array2::zeros((k / 2, frames));
    let mut buf = vec![Complex64::new(0.0, 0.0); k];
    for n in 0..frames {
        let start = n * params.hop;
        for (m, slot) in buf.iter_mut().enumerate() {
            *slot = Complex64::new(samples[start + m] * window[m], 0.0);
        }
        fft_in_place(&mut buf, &twiddles);
        for (kbin, value) in buf[..k / 2].iter().enumerate() {
            data[(kbin, n)] = *value;
        }
    }
    Ok(data)
}

/// Raw STFT array, shape `(fft_size / 2, num_frames)`.
pub type StftMatrixData = Array2<Complex64>;

/// Convenience wrapper that bundles the transform with its parameters and
/// sample rate, which downstream consumers need for axis labeling and
/// serialization.
pub fn stft_signal(
    samples: &[f64],
    sample_rate: u32,
    params: &StftParams,
) -> Result<StftMatrix, StftError> {
    Ok(StftMatrix {
        data: stft(samples, params)?,
        params: *params,
        sample_rate,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream_rng;
    use rand::Rng;

    /// Direct O(K²) double loop over the transform definition, kept as an
    /// independent check on the fast path.
    fn naive_dft(frame: &[f64]) -> Vec<Complex64> {
        let k = frame.len();
        (0..k)
            .map(|bin| {
                let mut acc = Complex64::new(0.0, 0.0);
                for (m, &x) in frame.iter().enumerate() {
                    let phase = -2.0 * PI * bin as f64 * m as f64 / k as f64;
                    acc += x * Complex64::from_polar(1.0, phase);
                }
                acc
            })
            .collect()
    }

    #[test]
    fn hann_window_known_points() {
        let w = make_window(WindowKind::Hann, 8);
        assert!((w[0] - 0.0).abs() < 1e-15);
        assert!((w[2] - 0.5).abs() < 1e-15);
        assert!((w[4] - 1.0).abs() < 1e-15);
        assert!((w[6] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn hamming_window_known_points() {
        let w = make_window(WindowKind::Hamming, 8);
        assert!((w[0] - 0.08).abs() < 1e-15);
        assert!((w[4] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn rectangular_window_is_ones() {
        assert_eq!(make_window(WindowKind::Rectangular, 4), vec![1.0; 4]);
    }

    #[test]
    fn window_kind_round_trips_through_str() {
        for kind in [WindowKind::Hann, WindowKind::Hamming, WindowKind::Rectangular] {
            assert_eq!(kind.name().parse::<WindowKind>().unwrap(), kind);
        }
        assert!("blackman".parse::<WindowKind>().is_err());
    }

    #[test]
    fn dft_impulse_is_flat() {
        let mut frame = vec![0.0; 8];
        frame[0] = 1.0;
        for x in dft(&frame).unwrap() {
            assert!((x - Complex64::new(1.0, 0.0)).norm() < 1e-12);
        }
    }

    #[test]
    fn dft_constant_concentrates_at_dc() {
        let out = dft(&[1.0; 4]).unwrap();
        assert!((out[0] - Complex64::new(4.0, 0.0)).norm() < 1e-12);
        for x in &out[1..] {
            assert!(x.norm() < 1e-12);
        }
    }

    #[test]
    fn dft_matches_naive_definition() {
        let mut rng = stream_rng(11, 0);
        for _ in 0..20 {
            let frame: Vec<f64> = (0..16).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let fast = dft(&frame).unwrap();
            let slow = naive_dft(&frame);
            for (a, b) in fast.iter().zip(&slow) {
                assert!((a - b).norm() < 1e-10, "{a} vs {b}");
            }
        }
    }

    #[test]
    fn dft_rejects_non_power_of_two() {
        assert_eq!(dft(&[0.0; 12]), Err(StftError::NotPowerOfTwo(12)));
        assert_eq!(dft(&[0.0; 1]), Err(StftError::FrameTooSmall(1)));
    }

    #[test]
    fn dft_parseval() {
        let mut rng = stream_rng(12, 0);
        let frame: Vec<f64> = (0..64).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let spectrum = dft(&frame).unwrap();
        let time_energy: f64 = frame.iter().map(|x| x * x).sum();
        let freq_energy: f64 = spectrum.iter().map(|x| x.norm_sqr()).sum();
        assert!((freq_energy - 64.0 * time_energy).abs() < 1e-9 * freq_energy.max(1.0));
    }

    #[test]
    fn frame_count_follows_floor_formula() {
        let p = StftParams {
            fft_size: 256,
            hop: 128,
            window: WindowKind::Hann,
        };
        assert_eq!(num_frames(1024, &p).unwrap(), 7);
        assert_eq!(num_frames(256, &p).unwrap(), 1);
        assert_eq!(num_frames(383, &p).unwrap(), 1);
        assert_eq!(num_frames(384, &p).unwrap(), 2);
        assert_eq!(
            num_frames(255, &p),
            Err(StftError::SignalTooShort { len: 255, frame: 256 })
        );
    }

    #[test]
    fn stft_shape_contract() {
        let p = StftParams {
            fft_size: 128,
            hop: 64,
            window: WindowKind::Hann,
        };
        let signal = vec![0.0; 512];
        let out = stft(&signal, &p).unwrap();
        assert_eq!(out.dim(), (64, 7));
        assert!(out.iter().all(|z| z.norm() == 0.0));
    }

    #[test]
    fn rect_window_cosine_lands_in_one_bin() {
        // Exactly k0 cycles per frame with a rectangular window puts
        // magnitude K/2 in bin k0 and leaves every other bin empty.
        let k = 64;
        let k0 = 4;
        let signal: Vec<f64> = (0..k)
            .map(|m| (2.0 * PI * k0 as f64 * m as f64 / k as f64).cos())
            .collect();
        let p = StftParams {
            fft_size: k,
            hop: k,
            window: WindowKind::Rectangular,
        };
        let out = stft(&signal, &p).unwrap();
        assert_eq!(out.dim(), (32, 1));
        for bin in 0..32 {
            let mag = out[(bin, 0)].norm();
            if bin == k0 {
                assert!((mag - 32.0).abs() < 1e-9, "peak bin magnitude {mag}");
            } else {
                assert!(mag < 1e-9, "bin {bin} leaked {mag}");
            }
        }
    }

    #[test]
    fn stft_is_linear() {
        let mut rng = stream_rng(13, 0);
        let n = 300;
        let a: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let b: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let sum: Vec<f64> = a.iter().zip(&b).map(|(x, y)| 2.0 * x - 0.5 * y).collect();
        let p = StftParams {
            fft_size: 64,
            hop: 32,
            window: WindowKind::Hamming,
        };
        let sa = stft(&a, &p).unwrap();
        let sb = stft(&b, &p).unwrap();
        let ssum = stft(&sum, &p).unwrap();
        for ((i, j), z) in ssum.indexed_iter() {
            let expect = 2.0 * sa[(i, j)] - 0.5 * sb[(i, j)];
            assert!((z - expect).norm() < 1e-9);
        }
    }

    /// Frame-by-frame naive restatement of the whole transform: window one
    /// frame at a time and run the quadratic DFT on it.
    #[test]
    fn stft_matches_naive_framewise_transform() {
        let mut rng = stream_rng(14, 0);
        let signal: Vec<f64> = (0..200).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let p = StftParams {
            fft_size: 32,
            hop: 8,
            window: WindowKind::Hann,
        };
        let fast = stft(&signal, &p).unwrap();
        let window = make_window(p.window, p.fft_size);
        let frames = num_frames(signal.len(), &p).unwrap();
        assert_eq!(fast.dim(), (16, frames));
        for n in 0..frames {
            let frame: Vec<f64> = (0..p.fft_size)
                .map(|m| signal[n * p.hop + m] * window[m])
                .collect();
            let slow = naive_dft(&frame);
            for k in 0..p.fft_size / 2 {
                assert!((fast[(k, n)] - slow[k]).norm() < 1e-10);
            }
        }
    }

    #[test]
    fn stft_signal_carries_metadata() {
        let p = StftParams::default();
        let out = stft_signal(&vec![0.0; 2048], 8000, &p).unwrap();
        assert_eq!(out.num_bins(), 256);
        assert_eq!(out.num_frames(), 13);
        assert_eq!(out.bin_frequency(256), 4000.0);
        assert!((out.frame_time(2) - 0.032).abs() < 1e-12);
    }

    #[test]
    fn params_validation() {
        let bad = StftParams {
            fft_size: 500,
            hop: 128,
            window: WindowKind::Hann,
        };
        assert_eq!(bad.validate(), Err(StftError::NotPowerOfTwo(500)));
        let bad = StftParams {
            fft_size: 512,
            hop: 0,
            window: WindowKind::Hann,
        };
        assert_eq!(bad.validate(), Err(StftError::ZeroHop));
    }
}
