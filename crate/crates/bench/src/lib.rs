//! Deterministic inputs shared by the benchmarks.

use asrprep_core::{AudioSignal, FeatureMatrix, SeededRng};

/// `seconds` of a noisy two-tone signal at 16 kHz.
pub fn synthetic_audio(seconds: usize, seed: u64) -> AudioSignal {
    let mut rng = SeededRng::new(seed);
    let samples = (0..16_000 * seconds)
        .map(|i| {
            let t = i as f64 / 16_000.0;
            0.3 * (2.0 * std::f64::consts::PI * 220.0 * t).sin()
                + 0.1 * (2.0 * std::f64::consts::PI * 1800.0 * t).sin()
                + 0.05 * (rng.unit_f64() - 0.5)
        })
        .collect();
    AudioSignal::new(samples, 16_000).expect("samples lie in [-1, 1]")
}

/// A `frames x dims` matrix of uniform values in [-1, 1).
pub fn random_features(frames: usize, dims: usize, seed: u64) -> FeatureMatrix {
    let mut rng = SeededRng::new(seed);
    let data = (0..frames * dims).map(|_| 2.0 * rng.unit_f64() - 1.0).collect();
    FeatureMatrix::new(data, frames, dims, 10.0, "bench").expect("shape matches data")
}

/// Sentences over `vocab` words with a skewed unigram distribution.
pub fn toy_text(sentences: usize, vocab: usize, seed: u64) -> Vec<Vec<String>> {
    let mut rng = SeededRng::new(seed);
    (0..sentences)
        .map(|_| {
            let len = rng.uniform_inclusive(1, 15);
            (0..len)
                .map(|_| {
                    let r = rng.unit_f64();
                    format!("w{}", ((vocab as f64).powf(r) as usize).min(vocab) - 1)
                })
                .collect()
        })
        .collect()
}
