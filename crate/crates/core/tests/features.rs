use std::f64::consts::PI;

use asrprep_core::features::{
    extract_logmel, frame_count, io, stack_context, AudioSignal, FeatureMatrix, LogmelConfig,
};
use proptest::prelude::*;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

const RATE: u32 = 16_000;

fn noise(len: usize, seed: u64) -> Vec<f64> {
    let mut rng = StdRng::seed_from_u64(seed);
    (0..len).map(|_| rng.random_range(-0.5..0.5)).collect()
}

/// Log mel energies of one frame by direct DFT and a separately built
/// filterbank.
fn naive_logmel_frame(frame: &[f64], rate: f64, bands: usize, lo_hz: f64) -> Vec<f64> {
    let n = frame.len();
    let fft = n.next_power_of_two();
    let windowed: Vec<f64> = frame
        .iter()
        .enumerate()
        .map(|(i, s)| s * (0.5 - 0.5 * (2.0 * PI * i as f64 / (n - 1) as f64).cos()))
        .collect();
    let power: Vec<f64> = (0..=fft / 2)
        .map(|k| {
            let (mut re, mut im) = (0.0, 0.0);
            for (i, x) in windowed.iter().enumerate() {
                let a = -2.0 * PI * (k * i) as f64 / fft as f64;
                re += x * a.cos();
                im += x * a.sin();
            }
            re * re + im * im
        })
        .collect();
    let mel = |f: f64| 1127.0 * (1.0 + f / 700.0).ln();
    let (m_lo, m_hi) = (mel(lo_hz), mel(rate / 2.0));
    let edges: Vec<f64> = (0..bands + 2)
        .map(|i| m_lo + (m_hi - m_lo) * i as f64 / (bands + 1) as f64)
        .collect();
    (0..bands)
        .map(|b| {
            let e: f64 = power
                .iter()
                .enumerate()
                .map(|(k, p)| {
                    let m = mel(k as f64 * rate / fft as f64);
                    let w = if m > edges[b] && m < edges[b + 1] {
                        (m - edges[b]) / (edges[b + 1] - edges[b])
                    } else if m >= edges[b + 1] && m < edges[b + 2] {
                        (edges[b + 2] - m) / (edges[b + 2] - edges[b + 1])
                    } else {
                        0.0
                    };
                    w * p
                })
                .sum();
            e.max(1e-10).ln()
        })
        .collect()
}

#[test]
fn matches_direct_dft_oracle() {
    let cfg = LogmelConfig::default();
    let samples = noise(2000, 3);
    let feats = extract_logmel(&AudioSignal::new(samples.clone(), RATE).unwrap(), &cfg).unwrap();
    assert_eq!(feats.num_dims(), 80);
    for t in [0, 5, feats.num_frames() - 1] {
        let want = naive_logmel_frame(&samples[t * 160..t * 160 + 400], f64::from(RATE), 80, 20.0);
        for (d, (g, w)) in feats.frame(t).iter().zip(&want).enumerate() {
            assert!((g - w).abs() < 1e-8, "frame {t} band {d}: {g} vs {w}");
        }
    }
}

#[test]
fn sine_peaks_in_its_band() {
    let cfg = LogmelConfig::default();
    let fb = cfg.filterbank(RATE).unwrap();
    for band in [20, 40, 60, 75] {
        let f = fb.center_hz(band);
        let samples: Vec<f64> = (0..4000)
            .map(|i| (2.0 * PI * f * i as f64 / f64::from(RATE)).sin())
            .collect();
        let feats = extract_logmel(&AudioSignal::new(samples, RATE).unwrap(), &cfg).unwrap();
        for frame in feats.frames() {
            let argmax = frame.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)).unwrap().0;
            assert_eq!(argmax, band, "{f} Hz");
        }
    }
}

#[test]
fn frame_count_matches_start_enumeration() {
    for len in 0..1200 {
        for (window, shift) in [(400, 160), (200, 80), (7, 3)] {
            let starts = (0..len)
                .filter(|s| s + window <= len)
                .filter(|s| s % shift == 0)
                .count();
            assert_eq!(frame_count(len, window, shift), starts);
        }
    }
}

#[test]
fn stacking_keeps_the_centre_frame() {
    let rows: Vec<Vec<f64>> = (0..12).map(|t| (0..4).map(|d| (t * 10 + d) as f64).collect()).collect();
    let feats = FeatureMatrix::from_rows(&rows, 10.0, "r").unwrap();
    let stacked = stack_context(&feats, 9).unwrap();
    assert_eq!(stacked.num_dims(), 36);
    for t in 0..12 {
        assert_eq!(&stacked.frame(t)[16..20], feats.frame(t));
        for (o, block) in stacked.frame(t).chunks(4).enumerate() {
            let src = (t as isize + o as isize - 4).clamp(0, 11) as usize;
            assert_eq!(block, feats.frame(src));
        }
    }
}

#[test]
fn fmx1_file_round_trip_is_f32_exact() {
    let feats = extract_logmel(
        &AudioSignal::new(noise(3000, 8), RATE).unwrap(),
        &LogmelConfig::default(),
    )
    .unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("a.fmx");
    io::write_fmx1_file(&feats, &path).unwrap();
    let back = io::read_fmx1_file(&path).unwrap();
    assert_eq!(
        (back.num_frames(), back.num_dims()),
        (feats.num_frames(), feats.num_dims())
    );
    for (a, b) in feats.data().iter().zip(back.data()) {
        assert_eq!(*a as f32 as f64, *b);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn scaling_shifts_every_value_by_two_ln_s(
        seed in any::<u64>(),
        len in 400usize..3000,
        s in prop::sample::select(vec![0.5, 2.0, 10.0]),
    ) {
        // amplitude 0.09 so that s = 10 stays inside [-1, 1]
        let base: Vec<f64> = noise(len, seed).iter().map(|x| x * 0.18).collect();
        let cfg = LogmelConfig::default();
        let a = extract_logmel(&AudioSignal::new(base.clone(), RATE).unwrap(), &cfg).unwrap();
        let b = extract_logmel(&AudioSignal::new(base.iter().map(|x| x * s).collect(), RATE).unwrap(), &cfg).unwrap();
        for (x, y) in a.data().iter().zip(b.data()) {
            prop_assert!((y - x - 2.0 * f64::ln(s)).abs() < 1e-6);
        }
    }
}
