use crate::error::{Error, Result};

/// Mel scale, natural-log form.
pub fn hz_to_mel(hz: f64) -> f64 {
    1127.0 * (1.0 + hz / 700.0).ln()
}

pub fn mel_to_hz(mel: f64) -> f64 {
    700.0 * ((mel / 1127.0).exp() - 1.0)
}

/// Triangular mel filters over the one-sided power spectrum of an
/// `fft_size`-point transform. Filters are not area-normalized: each
/// triangle peaks at 1.0 at its center frequency.
#[derive(Debug, Clone)]
pub struct MelFilterbank {
    weights: Vec<f64>,
    num_bands: usize,
    fft_size: usize,
    sample_rate_hz: u32,
    centers_hz: Vec<f64>,
    // [first, last) bins with non-zero weight, per band
    support: Vec<(usize, usize)>,
}

impl MelFilterbank {
    pub fn new(num_bands: usize, fft_size: usize, sample_rate_hz: u32, low_hz: f64, high_hz: f64) -> Result<Self> {
        if num_bands == 0 {
            return Err(Error::invalid("num_bands must be >= 1"));
        }
        if fft_size < 2 || sample_rate_hz == 0 {
            return Err(Error::invalid("fft_size >= 2 and sample_rate > 0 required"));
        }
        let nyquist = f64::from(sample_rate_hz) / 2.0;
        if !(0.0 <= low_hz && low_hz < high_hz && high_hz <= nyquist) {
            return Err(Error::invalid(format!(
                "mel band edges must satisfy 0 <= low ({low_hz}) < high ({high_hz}) <= nyquist ({nyquist})"
            )));
        }

        let num_bins = fft_size / 2 + 1;
        let mel_lo = hz_to_mel(low_hz);
        let mel_hi = hz_to_mel(high_hz);
        let step = (mel_hi - mel_lo) / (num_bands + 1) as f64;
        let edge = |i: usize| mel_lo + step * i as f64;
        let bin_mel: Vec<f64> = (0..num_bins)
            .map(|k| hz_to_mel(k as f64 * f64::from(sample_rate_hz) / fft_size as f64))
            .collect();

        let mut weights = vec![0.0; num_bands * num_bins];
        let mut support = Vec::with_capacity(num_bands);
        for b in 0..num_bands {
            let (left, center, right) = (edge(b), edge(b + 1), edge(b + 2));
            let row = &mut weights[b * num_bins..(b + 1) * num_bins];
            let (mut first, mut last) = (num_bins, 0);
            for (k, &m) in bin_mel.iter().enumerate() {
                let w = if m > left && m < center {
                    (m - left) / (center - left)
                } else if m >= center && m < right {
                    (right - m) / (right - center)
                } else {
                    0.0
                };
                if w > 0.0 {
                    row[k] = w;
                    first = first.min(k);
                    last = k + 1;
                }
            }
            if first >= last {
                return Err(Error::invalid(format!(
                    "mel band {b} contains no fft bin; use fewer bands or a larger fft"
                )));
            }
            support.push((first, last));
        }

        Ok(Self {
            weights,
            num_bands,
            fft_size,
            sample_rate_hz,
            centers_hz: (1..=num_bands).map(|i| mel_to_hz(edge(i))).collect(),
            support,
        })
    }

    pub fn num_bands(&self) -> usize {
        self.num_bands
    }

    pub fn fft_size(&self) -> usize {
        self.fft_size
    }

    pub fn num_bins(&self) -> usize {
        self.fft_size / 2 + 1
    }

    pub fn sample_rate_hz(&self) -> u32 {
        self.sample_rate_hz
    }

    pub fn center_hz(&self, band: usize) -> f64 {
        self.centers_hz[band]
    }

    /// Weights of one band across all fft bins.
    pub fn band(&self, band: usize) -> &[f64] {
        let n = self.num_bins();
        &self.weights[band * n..(band + 1) * n]
    }

    /// Band energies of a one-sided power spectrum, written into `out`.
    pub fn apply(&self, power: &[f64], out: &mut [f64]) {
        debug_assert_eq!(power.len(), self.num_bins());
        for (b, slot) in out.iter_mut().enumerate().take(self.num_bands) {
            let (first, last) = self.support[b];
            let row = self.band(b);
            *slot = (first..last).map(|k| row[k] * power[k]).sum();
        }
    }
}
