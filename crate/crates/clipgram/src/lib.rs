//! Spectrogram features with cone-clipping detectors.
//!
//! The usual spectrogram maps each complex STFT value `z` to its magnitude
//! square `|z|²`. The detectors here additionally gate on the *phase* of
//! `z`: a value is kept only when it falls inside a double cone around the
//! real axis (`|Im z| ≤ |Re z|`), and set to zero otherwise, a
//! two-dimensional cousin of ReLU. The library provides:
//!
//! * [`stft`]: a from-scratch short-time Fourier transform with a radix-2
//!   FFT, checked against the naive transform definition in its tests;
//! * [`detector`]: the magnitude-square baseline, the cone and
//!   rotated-cone clipping detectors, a generalized rotation-angle cone,
//!   and dB encoding;
//! * [`analysis`]: one-sided Jacobi singular values and
//!   baseline-versus-clipped conditioning reports;
//! * [`eval`]: a synthetic reverberant corpus, ridge-regression training,
//!   and ROC/AUC evaluation with bootstrap confidence intervals;
//! * [`signal_io`]: WAV decode/encode, length conditioning, and SNR
//!   gating;
//! * [`featfile`], [`config`], [`commands`]: the on-disk feature format,
//!   experiment configuration, and the subcommand implementations behind
//!   the `clipgram` binary.
//!
//! Every random choice flows from explicit seeds through a documented
//! generator ([`rng`]), so corpora, splits, and bootstrap intervals are
//! bit-reproducible. Start with the `examples/` directory; each example is
//! a runnable tour of one capability.

// Validation deliberately writes `!(x > 0.0)` instead of `x <= 0.0`: the
// negated form also rejects NaN, which is the point of those checks.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod commands;
pub mod config;
pub mod detector;
pub mod eval;
pub mod featfile;
pub mod rng;
pub mod signal_io;
pub mod stft;
mod util;

pub use analysis::{condition_report, singular_values, ConditionReport, SingularSpectrum};
pub use detector::{
    detect, detect_clip, detect_clip_angle, detect_clip_rotated, detect_magsq, to_db, Detector,
    Spectrogram, SpectrogramDb,
};
pub use eval::{auc, bootstrap_ci, roc_curve, run_experiment, EvalRun, SynthConfig};
pub use signal_io::InputSignal;
pub use stft::{stft, stft_signal, StftMatrix, StftParams, WindowKind};
