//! Singular-value analysis of spectrograms.
//!
//! Clipping detectors zero out roughly half of a spectrogram, and the
//! interesting question is what that does to its conditioning: the spread
//! between the largest singular value and the rest. This module computes
//! singular spectra with a one-sided Jacobi iteration and produces
//! baseline-versus-clipped comparison reports.
//!
//! Comparisons run on the matrix the downstream model actually consumes,
//! which is dB-encoded. Raw dB values are shifted to "dB above the floor"
//! (`max(v − floor, 0)`) first, so silence and clipped cells contribute
//! zero rather than a large negative constant; without the shift the floor
//! value itself dominates every singular value of a sparse matrix.

use ndarray::Array2;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::detector::{support_fraction_of, Spectrogram, SpectrogramDb};

/// Numerical-rank threshold used by the CLI when none is given.
pub const DEFAULT_RTOL: f64 = 1e-6;

#[derive(Debug, Error, PartialEq)]
pub enum AnalysisError {
    #[error("matrix is empty")]
    EmptyMatrix,
    #[error("matrix contains a non-finite entry")]
    NonFiniteEntry,
    #[error("shape mismatch: {a:?} vs {b:?}")]
    ShapeMismatch { a: (usize, usize), b: (usize, usize) },
}

/// Descending singular values of one matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SingularSpectrum {
    /// Non-negative, non-increasing; length = `min(rows, cols)`.
    pub values: Vec<f64>,
    pub source_shape: (usize, usize),
}

impl SingularSpectrum {
    pub fn sigma_max(&self) -> f64 {
        self.values.first().copied().unwrap_or(0.0)
    }
}

/// Singular values by one-sided Jacobi iteration.
///
/// The matrix is oriented so columns are the short side, then column pairs
/// are rotated until all pairwise inner products vanish relative to the
/// column norms; the singular values are the final column norms. Accuracy
/// is near machine precision for desk-scale inputs, far inside the 1e-8
/// relative tolerance the tests assert.
pub fn singular_values(a: &Array2<f64>) -> Result<SingularSpectrum, AnalysisError> {
    if a.is_empty() {
        return Err(AnalysisError::EmptyMatrix);
    }
    if a.iter().any(|v| !v.is_finite()) {
        return Err(AnalysisError::NonFiniteEntry);
    }
    let source_shape = a.dim();
    let (rows, cols) = source_shape;

    // Column-major working copy of A or Aᵀ, whichever is wider than tall,
    // so each column is one contiguous slice.
    let (m, n, transpose) = if rows >= cols {
        (rows, cols, false)
    } else {
        (cols, rows, true)
    };
    let mut col: Vec<Vec<f64>> = (0..n)
        .map(|j| {
            (0..m)
                .map(|i| if transpose { a[(j, i)] } else { a[(i, j)] })
                .collect()
        })
        .collect();

    let mut norms_sq: Vec<f64> = col.iter().map(|c| dot(c, c)).collect();
    let tol = 1e-14;
    // Columns this small relative to the matrix are numerically zero;
    // rotating against them only chases rounding noise.
    let negligible = {
        let frob_sq: f64 = norms_sq.iter().sum();
        frob_sq * (f64::EPSILON * f64::EPSILON)
    };
    let max_sweeps = 100;
    let mut converged = false;
    for _ in 0..max_sweeps {
        let mut rotated = false;
        for p in 0..n {
            for q in (p + 1)..n {
                if norms_sq[p] <= negligible || norms_sq[q] <= negligible {
                    continue;
                }
                let apq = dot(&col[p], &col[q]);
                let threshold = tol * (norms_sq[p] * norms_sq[q]).sqrt();
                if apq.abs() <= threshold {
                    continue;
                }
                rotated = true;
                // Jacobi rotation choosing tan θ that zeroes ⟨a_p, a_q⟩.
                let tau = (norms_sq[q] - norms_sq[p]) / (2.0 * apq);
                let t = tau.signum() / (tau.abs() + (1.0 + tau * tau).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                let (head, tail) = col.split_at_mut(q);
                let (cp, cq) = (&mut head[p], &mut tail[0]);
                for (x, y) in cp.iter_mut().zip(cq.iter_mut()) {
                    let xp = c * *x - s * *y;
                    let yq = s * *x + c * *y;
                    *x = xp;
                    *y = yq;
                }
                norms_sq[p] -= t * apq;
                norms_sq[q] += t * apq;
            }
        }
        // Cached norms drift slightly across rotations; refresh per sweep.
        for (j, c) in col.iter().enumerate() {
            norms_sq[j] = dot(c, c);
        }
        if !rotated {
            converged = true;
            break;
        }
    }
    debug_assert!(converged, "Jacobi sweep cap reached before convergence");

    let mut values: Vec<f64> = norms_sq.iter().map(|&v| v.max(0.0).sqrt()).collect();
    values.sort_by(|a, b| b.partial_cmp(a).expect("non-finite singular value"));
    Ok(SingularSpectrum {
        values,
        source_shape,
    })
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Count of singular values above `rtol` times the largest. A zero matrix
/// has rank 0. `rtol` must lie in (0, 1).
pub fn numerical_rank(s: &SingularSpectrum, rtol: f64) -> usize {
    debug_assert!(rtol > 0.0 && rtol < 1.0, "rtol {rtol} outside (0, 1)");
    let cutoff = rtol * s.sigma_max();
    s.values.iter().filter(|&&v| v > cutoff).count()
}

/// Baseline-versus-clipped conditioning comparison.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionReport {
    pub baseline: SingularSpectrum,
    pub clipped: SingularSpectrum,
    /// `1 − σ₁(clipped)/σ₁(baseline)`; 0 when the baseline is zero.
    pub sigma_max_reduction: f64,
    /// `(σᵢ(clipped) − σᵢ(baseline))/σᵢ(baseline)` for `i` up to the
    /// smaller of the two numerical ranks.
    pub per_sigma_relative_change: Vec<f64>,
    /// Condition number `σ₁/σ_r` of the baseline over that of the clipped
    /// matrix, at their respective numerical ranks `r`; `None` when either
    /// matrix has rank 0.
    pub condition_ratio: Option<f64>,
    /// Fraction of non-zero entries in the clipped comparison matrix.
    pub support_fraction_clipped: f64,
}

/// Core comparison on two equal-shape non-negative matrices, whatever
/// domain the caller prepared them in.
pub fn condition_report_from_matrices(
    baseline: &Array2<f64>,
    clipped: &Array2<f64>,
    rtol: f64,
) -> Result<ConditionReport, AnalysisError> {
    if baseline.dim() != clipped.dim() {
        return Err(AnalysisError::ShapeMismatch {
            a: baseline.dim(),
            b: clipped.dim(),
        });
    }
    let support_fraction_clipped =
        support_fraction_of(clipped).map_err(|_| AnalysisError::EmptyMatrix)?;
    let base = singular_values(baseline)?;
    let clip = singular_values(clipped)?;

    let sigma_max_reduction = if base.sigma_max() > 0.0 {
        1.0 - clip.sigma_max() / base.sigma_max()
    } else {
        0.0
    };

    let rank_base = numerical_rank(&base, rtol);
    let rank_clip = numerical_rank(&clip, rtol);
    let shared = rank_base.min(rank_clip);
    let per_sigma_relative_change: Vec<f64> = (0..shared)
        .map(|i| (clip.values[i] - base.values[i]) / base.values[i])
        .collect();

    let condition_ratio = if rank_base > 0 && rank_clip > 0 {
        let cond_base = base.values[0] / base.values[rank_base - 1];
        let cond_clip = clip.values[0] / clip.values[rank_clip - 1];
        Some(cond_base / cond_clip)
    } else {
        None
    };

    Ok(ConditionReport {
        baseline: base,
        clipped: clip,
        sigma_max_reduction,
        per_sigma_relative_change,
        condition_ratio,
        support_fraction_clipped,
    })
}

/// Shifts dB values to "dB above the floor": `max(v − floor, 0)`. Cells at
/// or below the floor become exactly zero.
pub fn db_above_floor(values: &Array2<f64>, floor: f64) -> Array2<f64> {
    values.mapv(|v| (v - floor).max(0.0))
}

/// Compares dB-encoded spectrograms in the dB-above-floor domain. Each
/// input is shifted by its own floor before the singular values are taken.
pub fn condition_report(
    baseline: &SpectrogramDb,
    clipped: &SpectrogramDb,
    rtol: f64,
) -> Result<ConditionReport, AnalysisError> {
    condition_report_from_matrices(
        &db_above_floor(&baseline.values, baseline.floor),
        &db_above_floor(&clipped.values, clipped.floor),
        rtol,
    )
}

/// Compares linear-power spectrograms directly, for callers that want the
/// pre-dB domain.
pub fn condition_report_linear(
    baseline: &Spectrogram,
    clipped: &Spectrogram,
    rtol: f64,
) -> Result<ConditionReport, AnalysisError> {
    condition_report_from_matrices(&baseline.values, &clipped.values, rtol)
}

/// Domain in which stored dB features are compared: `Db` shifts them to
/// dB-above-floor, `Linear` converts back to linear power
/// (`10^(v/10)`, so floored cells become `10^(floor/10)`, not zero).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AnalysisDomain {
    Db,
    Linear,
}

impl std::str::FromStr for AnalysisDomain {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "db" => Ok(AnalysisDomain::Db),
            "linear" => Ok(AnalysisDomain::Linear),
            other => Err(format!("unknown domain '{other}' (expected db or linear)")),
        }
    }
}

impl std::fmt::Display for AnalysisDomain {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            AnalysisDomain::Db => "db",
            AnalysisDomain::Linear => "linear",
        })
    }
}

/// Flat, serialization-friendly digest of a [`ConditionReport`], with the
/// singular spectra truncated to their leading values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionSummary {
    pub source_id: String,
    pub shape: (usize, usize),
    pub baseline_sigmas: Vec<f64>,
    pub clipped_sigmas: Vec<f64>,
    pub sigma_max_reduction: f64,
    pub condition_ratio: Option<f64>,
    pub support_fraction: f64,
}

/// Max singular values retained per side in a [`ConditionSummary`].
pub const SUMMARY_SIGMA_LIMIT: usize = 32;

impl ConditionSummary {
    pub fn new(source_id: impl Into<String>, report: &ConditionReport) -> Self {
        let take = |s: &SingularSpectrum| {
            s.values
                .iter()
                .take(SUMMARY_SIGMA_LIMIT)
                .copied()
                .collect::<Vec<f64>>()
        };
        Self {
            source_id: source_id.into(),
            shape: report.baseline.source_shape,
            baseline_sigmas: take(&report.baseline),
            clipped_sigmas: take(&report.clipped),
            sigma_max_reduction: report.sigma_max_reduction,
            condition_ratio: report.condition_ratio,
            support_fraction: report.support_fraction_clipped,
        }
    }
}
