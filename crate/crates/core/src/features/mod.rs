//! Logmel front-end.
//!
//! PCM audio is framed with a Hann window, transformed to a one-sided power
//! spectrum and reduced to log mel-band energies. Defaults follow the usual
//! ASR front-end: 16 kHz input, 25 ms window, 10 ms shift, 80 bands.

mod filterbank;
pub mod io;

use std::f64::consts::PI;

use rustfft::{num_complex::Complex, FftPlanner};

use crate::embedding::SpeakerEmbedding;
use crate::error::{Error, Result};

pub use filterbank::{hz_to_mel, mel_to_hz, MelFilterbank};

pub const LOGMEL_DIMS: usize = 80;
pub const DEFAULT_LOG_FLOOR: f64 = 1e-10;

/// Mono PCM samples normalized to `[-1, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct AudioSignal {
    samples: Vec<f64>,
    sample_rate_hz: u32,
}

impl AudioSignal {
    pub fn new(samples: Vec<f64>, sample_rate_hz: u32) -> Result<Self> {
        if sample_rate_hz == 0 {
            return Err(Error::invalid("invalid audio: sample rate must be positive"));
        }
        if let Some(i) = samples.iter().position(|s| !s.is_finite() || s.abs() > 1.0) {
            return Err(Error::invalid(format!(
                "invalid audio: sample {i} is not a finite value in [-1, 1]"
            )));
        }
        Ok(Self {
            samples,
            sample_rate_hz,
        })
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn sample_rate_hz(&self) -> u32 {
        self.sample_rate_hz
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }
}

/// Frames × dims grid of finite reals, stored row-major (one row per frame).
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    data: Vec<f64>,
    num_frames: usize,
    num_dims: usize,
    frame_shift_ms: f64,
    source_id: String,
}

impl FeatureMatrix {
    pub fn new(
        data: Vec<f64>,
        num_frames: usize,
        num_dims: usize,
        frame_shift_ms: f64,
        source_id: impl Into<String>,
    ) -> Result<Self> {
        if data.len() != num_frames * num_dims {
            return Err(Error::invalid(format!(
                "feature data has {} values, expected {num_frames}x{num_dims}",
                data.len()
            )));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("feature values must be finite"));
        }
        Ok(Self {
            data,
            num_frames,
            num_dims,
            frame_shift_ms,
            source_id: source_id.into(),
        })
    }

    /// Builds a matrix from equal-length rows.
    pub fn from_rows(rows: &[Vec<f64>], frame_shift_ms: f64, source_id: impl Into<String>) -> Result<Self> {
        let num_dims = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != num_dims) {
            return Err(Error::invalid("rows have unequal length"));
        }
        let data = rows.iter().flatten().copied().collect();
        Self::new(data, rows.len(), num_dims, frame_shift_ms, source_id)
    }

    pub fn num_frames(&self) -> usize {
        self.num_frames
    }

    pub fn num_dims(&self) -> usize {
        self.num_dims
    }

    pub fn frame_shift_ms(&self) -> f64 {
        self.frame_shift_ms
    }

    pub fn source_id(&self) -> &str {
        &self.source_id
    }

    pub fn set_source_id(&mut self, id: impl Into<String>) {
        self.source_id = id.into();
    }

    pub fn is_empty(&self) -> bool {
        self.num_frames == 0 || self.num_dims == 0
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn frame(&self, t: usize) -> &[f64] {
        &self.data[t * self.num_dims..(t + 1) * self.num_dims]
    }

    pub fn frames(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        // chunks_exact panics on a zero chunk size
        let step = self.num_dims.max(1);
        self.data
            .chunks_exact(step)
            .take(if self.num_dims == 0 { 0 } else { self.num_frames })
    }

    pub fn get(&self, t: usize, d: usize) -> f64 {
        self.data[t * self.num_dims + d]
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LogmelConfig {
    pub window_ms: f64,
    pub shift_ms: f64,
    pub num_bands: usize,
    /// Energy floor applied before the log.
    pub log_floor: f64,
    pub low_freq_hz: f64,
    /// Upper band edge; `None` means the Nyquist frequency.
    pub high_freq_hz: Option<f64>,
}

impl Default for LogmelConfig {
    fn default() -> Self {
        Self {
            window_ms: 25.0,
            shift_ms: 10.0,
            num_bands: LOGMEL_DIMS,
            log_floor: DEFAULT_LOG_FLOOR,
            low_freq_hz: 20.0,
            high_freq_hz: None,
        }
    }
}

/// Frame geometry in samples for a given rate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Framing {
    pub window: usize,
    pub shift: usize,
    pub fft_size: usize,
}

impl LogmelConfig {
    pub fn framing(&self, sample_rate_hz: u32) -> Result<Framing> {
        if !(self.shift_ms > 0.0 && self.window_ms >= self.shift_ms) {
            return Err(Error::invalid(format!(
                "need window_ms >= shift_ms > 0, got {} / {}",
                self.window_ms, self.shift_ms
            )));
        }
        if self.num_bands == 0 {
            return Err(Error::invalid("num_bands must be >= 1"));
        }
        if !(self.log_floor > 0.0) {
            return Err(Error::invalid("log_floor must be positive"));
        }
        let rate = f64::from(sample_rate_hz);
        let window = (self.window_ms * rate / 1000.0).round() as usize;
        let shift = (self.shift_ms * rate / 1000.0).round() as usize;
        if shift == 0 || window < 2 {
            return Err(Error::invalid("window/shift shorter than one sample"));
        }
        Ok(Framing {
            window,
            shift,
            fft_size: window.next_power_of_two(),
        })
    }

    pub fn filterbank(&self, sample_rate_hz: u32) -> Result<MelFilterbank> {
        let framing = self.framing(sample_rate_hz)?;
        let nyquist = f64::from(sample_rate_hz) / 2.0;
        MelFilterbank::new(
            self.num_bands,
            framing.fft_size,
            sample_rate_hz,
            self.low_freq_hz,
            self.high_freq_hz.unwrap_or(nyquist),
        )
    }
}

/// Number of complete windows that fit in `len` samples.
pub fn frame_count(len: usize, window: usize, shift: usize) -> usize {
    if len < window {
        0
    } else {
        (len - window) / shift + 1
    }
}

/// Symmetric Hann window.
pub fn hann_window(len: usize) -> Vec<f64> {
    if len == 1 {
        return vec![1.0];
    }
    let denom = (len - 1) as f64;
    (0..len)
        .map(|n| 0.5 - 0.5 * (2.0 * PI * n as f64 / denom).cos())
        .collect()
}

/// Logmel features: `ln(max(mel_energy, log_floor))` per frame and band.
pub fn extract_logmel(audio: &AudioSignal, cfg: &LogmelConfig) -> Result<FeatureMatrix> {
    let framing = cfg.framing(audio.sample_rate_hz())?;
    let fb = cfg.filterbank(audio.sample_rate_hz())?;
    if audio.len() < framing.window {
        return Err(Error::invalid(format!(
            "signal too short: {} samples, window needs {}",
            audio.len(),
            framing.window
        )));
    }

    let num_frames = frame_count(audio.len(), framing.window, framing.shift);
    let window = hann_window(framing.window);
    let fft = FftPlanner::<f64>::new().plan_fft_forward(framing.fft_size);
    let mut buf = vec![Complex::new(0.0, 0.0); framing.fft_size];
    let mut scratch = vec![Complex::new(0.0, 0.0); fft.get_inplace_scratch_len()];
    let mut power = vec![0.0; fb.num_bins()];
    let mut data = Vec::with_capacity(num_frames * cfg.num_bands);
    let mut energies = vec![0.0; cfg.num_bands];

    for t in 0..num_frames {
        let start = t * framing.shift;
        let samples = &audio.samples()[start..start + framing.window];
        for (slot, (s, w)) in buf.iter_mut().zip(samples.iter().zip(&window)) {
            *slot = Complex::new(s * w, 0.0);
        }
        buf[framing.window..].fill(Complex::new(0.0, 0.0));
        fft.process_with_scratch(&mut buf, &mut scratch);
        for (p, c) in power.iter_mut().zip(&buf) {
            *p = c.norm_sqr();
        }
        fb.apply(&power, &mut energies);
        data.extend(energies.iter().map(|&e| e.max(cfg.log_floor).ln()));
    }

    FeatureMatrix::new(data, num_frames, cfg.num_bands, cfg.shift_ms, String::new())
}

/// Concatenates each frame with its `(context - 1) / 2` neighbours on either
/// side. Frames beyond the edges repeat the first or last frame.
pub fn stack_context(feats: &FeatureMatrix, context: usize) -> Result<FeatureMatrix> {
    if context == 0 || context.is_multiple_of(2) {
        return Err(Error::invalid(format!("context must be odd and >= 1, got {context}")));
    }
    if feats.is_empty() {
        return Err(Error::invalid("cannot stack context of an empty matrix"));
    }
    let half = (context / 2) as isize;
    let last = feats.num_frames() as isize - 1;
    let mut data = Vec::with_capacity(feats.num_frames() * feats.num_dims() * context);
    for t in 0..feats.num_frames() as isize {
        for offset in -half..=half {
            let src = (t + offset).clamp(0, last) as usize;
            data.extend_from_slice(feats.frame(src));
        }
    }
    FeatureMatrix::new(
        data,
        feats.num_frames(),
        feats.num_dims() * context,
        feats.frame_shift_ms(),
        feats.source_id(),
    )
}

/// Appends the recording's embedding to every frame.
pub fn concat_embedding(feats: &FeatureMatrix, emb: &SpeakerEmbedding) -> Result<FeatureMatrix> {
    if feats.source_id() != emb.recording_id() {
        return Err(Error::invalid(format!(
            "embedding belongs to '{}', features to '{}'",
            emb.recording_id(),
            feats.source_id()
        )));
    }
    let dims = feats.num_dims() + emb.dim();
    let mut data = Vec::with_capacity(feats.num_frames() * dims);
    for frame in feats.frames() {
        data.extend_from_slice(frame);
        data.extend_from_slice(emb.values());
    }
    FeatureMatrix::new(
        data,
        feats.num_frames(),
        dims,
        feats.frame_shift_ms(),
        feats.source_id(),
    )
}
