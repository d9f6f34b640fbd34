// ROC/AUC evaluation on scores with a known ground truth: the Mann-Whitney
// AUC, the ROC polyline, and percentile bootstrap confidence intervals.
//
//     cargo run --example roc_bootstrap

use anyhow::Result;
use clipgram::eval::{auc, bootstrap_ci, roc_curve, LabeledScores};
use clipgram::rng::{standard_normal, stream_rng};

fn main() -> Result<()> {
    // Scores from two unit-variance Gaussians separated by d' = 1.25.
    // The population AUC for that model is Phi(d'/sqrt(2)) ~= 0.812.
    let d_prime = 1.25;
    let mut rng = stream_rng(31, 0);
    let n_per_class = 300;
    let mut scores = Vec::new();
    let mut labels = Vec::new();
    for _ in 0..n_per_class {
        scores.push(standard_normal(&mut rng) + d_prime);
        labels.push(1u8);
        scores.push(standard_normal(&mut rng));
        labels.push(0u8);
    }
    let data = LabeledScores::new(scores, labels)?;

    let point = auc(&data)?;
    let (lo, hi) = bootstrap_ci(&data, 2000, 0.95, 7)?;
    println!("samples: {} per class, separation d' = {d_prime}", n_per_class);
    println!("AUC = {point:.4} (population value 0.812), 95% CI [{lo:.4}, {hi:.4}]");

    // Same data and seed give the same interval; a different seed resamples
    // differently but lands nearby.
    let again = bootstrap_ci(&data, 2000, 0.95, 7)?;
    let other = bootstrap_ci(&data, 2000, 0.95, 8)?;
    println!("same seed reproduces the interval exactly: {}", again == (lo, hi));
    println!("different seed: [{:.4}, {:.4}]", other.0, other.1);

    // AUC only looks at the score ordering, so any strictly increasing
    // transform leaves it untouched.
    let squashed = LabeledScores::new(
        data.scores.iter().map(|s| (0.4 * s).tanh() * 3.0 - 1.0).collect(),
        data.labels.clone(),
    )?;
    println!("invariant under a monotone transform: {}", auc(&squashed)? == point);

    // Coarse ROC plot; the trapezoidal area under these points equals the
    // Mann-Whitney statistic to machine precision.
    let points = roc_curve(&data)?;
    println!("\nROC curve ({} points):", points.len());
    let width = 48;
    let height = 12;
    for row in (0..=height).rev() {
        let tpr_line = row as f64 / height as f64;
        let line: String = (0..=width)
            .map(|col| {
                let fpr = col as f64 / width as f64;
                // TPR achieved by the curve at this FPR.
                let tpr = points
                    .windows(2)
                    .find(|w| w[0].0 <= fpr && fpr <= w[1].0)
                    .map(|w| {
                        if w[1].0 == w[0].0 {
                            w[1].1
                        } else {
                            w[0].1 + (w[1].1 - w[0].1) * (fpr - w[0].0) / (w[1].0 - w[0].0)
                        }
                    })
                    .unwrap_or(1.0);
                if (tpr - tpr_line).abs() <= 0.5 / height as f64 {
                    '*'
                } else if col == 0 || row == 0 {
                    '+'
                } else if (fpr - tpr_line).abs() < 1e-9 {
                    '.' // chance diagonal
                } else {
                    ' '
                }
            })
            .collect();
        println!("  {line}");
    }
    println!("  (x = false positive rate, y = true positive rate, . = chance)");
    Ok(())
}
