// End-to-end feature pipeline: synthesize a short recording, write it as a
// WAV file, then run WAV -> length conditioning -> STFT -> detector -> dB
// -> feature file, and prove the on-disk round trip is bit-exact.
//
//     cargo run --example spectrogram_pipeline

use anyhow::Result;
use clipgram::detector::{detect_clip, detect_magsq, support_fraction, to_db};
use clipgram::featfile::{read_feature_file, write_feature_file, FeatureFile};
use clipgram::rng::{standard_normal, stream_rng};
use clipgram::signal_io::{condition_length, read_wav, write_wav, InputSignal};
use clipgram::stft::{stft_signal, StftParams};
use std::f64::consts::PI;

fn main() -> Result<()> {
    let dir = std::env::temp_dir().join("clipgram-spectrogram-pipeline");
    std::fs::create_dir_all(&dir)?;

    // A 1.5 s two-tone burst with one echo tap and a little sensor noise,
    // the same kind of signal the synthetic corpus produces.
    let sr = 8000u32;
    let n = (1.5 * sr as f64) as usize;
    let mut rng = stream_rng(2024, 0);
    let mut samples: Vec<f64> = (0..n)
        .map(|t| {
            let time = t as f64 / sr as f64;
            let env = (-time / 0.35).exp();
            let tones = (2.0 * PI * 440.0 * time).sin() + 0.6 * (2.0 * PI * 870.0 * time).sin();
            0.12 * env * tones + 0.002 * standard_normal(&mut rng)
        })
        .collect();
    for t in (600..n).rev() {
        samples[t] += 0.7 * samples[t - 600]; // two-tap echo, 75 ms delay
    }

    let wav_path = dir.join("burst.wav");
    write_wav(&wav_path, &InputSignal::new(samples, sr, "burst"))?;
    println!("wrote {}", wav_path.display());

    // Ingest like the CLI does: decode, then pad/truncate to a fixed
    // analysis length so every recording yields the same feature shape.
    let signal = read_wav(&wav_path)?;
    let signal = condition_length(&signal, 2.0);
    println!(
        "read '{}': {} samples at {} Hz ({:.2} s after conditioning)",
        signal.source_id,
        signal.samples.len(),
        signal.sample_rate,
        signal.duration_secs()
    );

    let params = StftParams::default();
    let x = stft_signal(&signal.samples, signal.sample_rate, &params)?;
    println!(
        "STFT: {} bins x {} frames, bin spacing {:.2} Hz, frame hop {:.1} ms",
        x.num_bins(),
        x.num_frames(),
        x.bin_frequency(1),
        1e3 * (x.frame_time(1) - x.frame_time(0)),
    );

    let baseline = detect_magsq(&x);
    let clipped = detect_clip(&x);
    println!(
        "support: magsq {:.3}, clip {:.3} (the cone drops about half the cells)",
        support_fraction(&baseline)?,
        support_fraction(&clipped)?,
    );

    // Loudest bins of the middle frame, from the clipped spectrogram.
    let db = to_db(&clipped, -80.0)?;
    let mid = db.values.ncols() / 2;
    let mut by_level: Vec<(usize, f64)> = db
        .values
        .column(mid)
        .iter()
        .enumerate()
        .map(|(k, &v)| (k, v))
        .collect();
    by_level.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap());
    println!("loudest bins in frame {mid}:");
    for &(k, v) in by_level.iter().take(4) {
        println!("  bin {k:3} ({:6.1} Hz): {v:7.2} dB", x.bin_frequency(k));
    }

    // Package and round-trip through the binary feature format.
    let feat_path = dir.join("burst.cspc");
    let file = FeatureFile::from_db(&db, signal.source_id.clone());
    write_feature_file(&feat_path, &file)?;
    let back = read_feature_file(&feat_path)?;
    assert_eq!(back, file, "feature file round trip must be bit-exact");
    println!(
        "feature file {} ({} x {} f32 payload, detector '{}') round-tripped bit-exact",
        feat_path.display(),
        back.header.rows,
        back.header.cols,
        back.header.detector,
    );
    Ok(())
}
