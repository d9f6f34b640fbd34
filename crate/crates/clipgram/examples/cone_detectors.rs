// Tour of the detector family on raw complex values: where each cone sits
// in the plane, the exact partition identity, the rotation-angle
// generalization, and the half-support property on Gaussian input.
//
//     cargo run --example cone_detectors

use clipgram::detector::Detector;
use clipgram::rng::{standard_normal, stream_rng};
use num_complex::Complex64;
use std::f64::consts::PI;

fn main() {
    // Map of the complex plane: which detector keeps each point.
    // 'c' = clip (cone around the real axis), 'r' = clip-rot (cone around
    // the imaginary axis). Every non-zero point lands in exactly one.
    println!("cone membership over [-1, 1] x [-1, 1] (re right, im up):");
    let steps = 21i32;
    for row in 0..steps {
        let im = 1.0 - 2.0 * row as f64 / (steps - 1) as f64;
        let line: String = (0..steps)
            .map(|col| {
                let re = -1.0 + 2.0 * col as f64 / (steps - 1) as f64;
                let z = Complex64::new(re, im);
                if Detector::Clip.apply(z) > 0.0 {
                    'c'
                } else if Detector::ClipRotated.apply(z) > 0.0 {
                    'r'
                } else {
                    '.' // only the origin: |z|^2 = 0 either way
                }
            })
            .collect();
        println!("  {line}");
    }

    // The two cones partition the plane, so the clipped values sum back to
    // the magnitude square exactly, not just approximately.
    let mut rng = stream_rng(99, 0);
    let values: Vec<Complex64> = (0..200_000)
        .map(|_| Complex64::new(standard_normal(&mut rng), standard_normal(&mut rng)))
        .collect();
    let exact = values
        .iter()
        .all(|&z| Detector::Clip.apply(z) + Detector::ClipRotated.apply(z) == Detector::MagSq.apply(z));
    println!("\npartition identity clip + clip-rot == magsq on 200000 samples: {exact}");

    // clip-angle=phi rotates the measurement frame. phi = 0 is clip bit for
    // bit; phi = pi/2 matches clip-rot except on the cone boundary, which
    // clip-angle keeps (inclusive test) and clip-rot drops.
    let angle0 = Detector::ClipAngle(0.0);
    let quarter = Detector::ClipAngle(PI / 2.0);
    let zero_matches = values.iter().all(|&z| angle0.apply(z) == Detector::Clip.apply(z));
    let quarter_matches = values
        .iter()
        .filter(|z| z.im.abs() != z.re.abs())
        .all(|&z| quarter.apply(z) == Detector::ClipRotated.apply(z));
    println!("clip-angle=0 equals clip everywhere: {zero_matches}");
    println!("clip-angle=pi/2 equals clip-rot off the boundary: {quarter_matches}");
    let edge = Complex64::new(1.0, 1.0);
    println!(
        "  boundary point 1+1j: clip-angle=pi/2 -> {}, clip-rot -> {}",
        quarter.apply(edge),
        Detector::ClipRotated.apply(edge)
    );

    // Support fraction: for circularly symmetric Gaussian input the two
    // cones are equally likely, so clip keeps half the energy cells.
    let kept = values.iter().filter(|&&z| Detector::Clip.apply(z) > 0.0).count();
    println!(
        "\nGaussian support fraction under clip: {:.4} (analytic value 0.5)",
        kept as f64 / values.len() as f64
    );

    // Sweeping the cone angle against a fixed-phase ensemble shows the
    // detector responding to signal phase, which magsq cannot see.
    println!("\nkept fraction of a phase-0.3 rad ensemble vs cone angle:");
    let mut rng = stream_rng(99, 1);
    let directional: Vec<Complex64> = (0..50_000)
        .map(|_| {
            let mag = standard_normal(&mut rng).abs() + 0.1;
            let phase = 0.3 + 0.35 * standard_normal(&mut rng);
            Complex64::from_polar(mag, phase)
        })
        .collect();
    for step in 0..9 {
        let phi = step as f64 * PI / 8.0;
        let det = Detector::ClipAngle(phi);
        let frac = directional.iter().filter(|&&z| det.apply(z) > 0.0).count() as f64
            / directional.len() as f64;
        let bar = "#".repeat((40.0 * frac) as usize);
        println!("  phi = {:4.2} rad: {frac:.3} {bar}", phi);
    }
}
