// Singular-value analysis: what clipping does to one spectrogram's
// conditioning, and what echoes do to a stacked feature matrix.
//
//     cargo run --example conditioning_report

use anyhow::Result;
use clipgram::analysis::{condition_report, db_above_floor, numerical_rank, singular_values};
use clipgram::detector::{detect_clip, detect_magsq, to_db, Detector};
use clipgram::eval::{extract_features, synth_dataset, SynthConfig};
use clipgram::signal_io::InputSignal;
use clipgram::stft::{stft_signal, StftParams};

fn main() -> Result<()> {
    let synth = SynthConfig {
        n_per_class: 8,
        duration: 1.0,
        ..SynthConfig::default()
    };
    let params = StftParams::default();
    let corpus = synth_dataset(&synth)?;

    // Per-file comparison: baseline vs clipped dB spectrogram of the same
    // signal. The comparison runs in the dB-above-floor domain, where the
    // clipped matrix is dominated entrywise by the baseline, so its largest
    // singular value can only shrink.
    println!("per-file conditioning, clip vs magsq (floor -80 dB):");
    println!("{:>14} {:>10} {:>10} {:>11} {:>9}", "file", "sigma1 red", "cond ratio", "support", "rank b/c");
    for item in corpus.iter().take(4) {
        let x = stft_signal(&item.signal.samples, item.signal.sample_rate, &params)?;
        let base = to_db(&detect_magsq(&x), -80.0)?;
        let clip = to_db(&detect_clip(&x), -80.0)?;
        let report = condition_report(&base, &clip, 1e-6)?;
        let rank = |s| numerical_rank(s, 1e-6);
        println!(
            "{:>14} {:>10.3} {:>10.3} {:>11.3} {:>4}/{:<4}",
            item.signal.source_id,
            report.sigma_max_reduction,
            report.condition_ratio.unwrap_or(f64::NAN),
            report.support_fraction_clipped,
            rank(&report.baseline),
            rank(&report.clipped),
        );
    }

    // Leading singular values of one pair, to see the spectra themselves.
    let item = &corpus[0];
    let x = stft_signal(&item.signal.samples, item.signal.sample_rate, &params)?;
    let base = to_db(&detect_magsq(&x), -80.0)?;
    let clip = to_db(&detect_clip(&x), -80.0)?;
    let report = condition_report(&base, &clip, 1e-6)?;
    println!("\nleading singular values of '{}':", item.signal.source_id);
    println!("  baseline: {:?}", heads(&report.baseline.values));
    println!("  clipped:  {:?}", heads(&report.clipped.values));

    // Corpus-level effect: strong echoes push feature rows toward near
    // linear dependence, which raises the condition number of the stacked
    // baseline feature matrix. This is the structure the clipping detector
    // is supposed to help with. The effect is a property of the draw
    // distribution, not of every single draw, so compare medians over a
    // handful of seeds rather than one corpus.
    let floor = -25.0;
    let small = StftParams { fft_size: 128, hop: 64, ..params };
    let cond_of = |cfg: &SynthConfig| -> Result<f64> {
        let signals: Vec<InputSignal> =
            synth_dataset(cfg)?.into_iter().map(|s| s.signal).collect();
        let stacked = extract_features(&signals, &small, Detector::MagSq, floor)?;
        let s = singular_values(&db_above_floor(&stacked, floor))?;
        let r = numerical_rank(&s, 1e-6);
        Ok(s.values[0] / s.values[r - 1])
    };
    println!("\nstacked baseline feature matrix, 12 signals per corpus:");
    println!("{:>8} {:>12} {:>12}", "seed", "with echo", "no echo");
    let mut with_echo = Vec::new();
    let mut without = Vec::new();
    for offset in 0..10u64 {
        let mut cfg = SynthConfig {
            n_per_class: 6,
            sample_rate: 4000,
            duration: 0.4,
            echo_delay_range: (80, 100),
            echo_gain_range: (0.6, 0.9),
            noise_snr_db: 30.0,
            level_jitter_db: 3.0,
            seed: 100 + offset,
        };
        let a = cond_of(&cfg)?;
        cfg.echo_gain_range = (0.0, 0.0);
        let b = cond_of(&cfg)?;
        println!("{:>8} {:>12.1} {:>12.1}", cfg.seed, a, b);
        with_echo.push(a);
        without.push(b);
    }
    let med = |v: &mut Vec<f64>| {
        v.sort_by(|x, y| x.partial_cmp(y).unwrap());
        v[v.len() / 2]
    };
    println!(
        "{:>8} {:>12.1} {:>12.1}",
        "median",
        med(&mut with_echo),
        med(&mut without)
    );
    Ok(())
}

fn heads(values: &[f64]) -> Vec<f64> {
    values.iter().take(5).map(|v| (v * 10.0).round() / 10.0).collect()
}
