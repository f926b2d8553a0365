//! Time and feature masking on fixed-size chunks.
//!
//! Time masking picks `m` uniformly from `[1, M]`, then for each repetition a
//! 1-based position `t` from `[1, T]` and a length `L` from `[0, dt_max]`, and
//! zeroes frames `[t, t + L)` clipped to the chunk. Feature masking does the
//! same along the feature axis with `n`, `[1, D]` and `[0, dd_max]`. When
//! feature masking is restricted to the logmel part, positions come from
//! `[1, logmel_dims]` and spans are clipped at `logmel_dims`.
//!
//! All draws come from a [`SeededRng`] in this order:
//! `m`, then `(t, L)` per time mask, then `n`, then `(d, L)` per feature mask.
//! A repetition maximum of zero skips its draws entirely.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use rayon::prelude::*;

use crate::chunker::{Chunk, Minibatch};
use crate::error::{Error, Result};
use crate::features::LOGMEL_DIMS;
use crate::rng::SeededRng;

pub const DEFAULT_WARMUP_STEPS: u64 = 2000;

/// `repeats x max_len` mask parameters, written e.g. `6x5`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct MaskSpec {
    pub max_repeats: usize,
    pub max_len: usize,
}

impl MaskSpec {
    pub const NONE: MaskSpec = MaskSpec {
        max_repeats: 0,
        max_len: 0,
    };

    pub const fn new(max_repeats: usize, max_len: usize) -> Self {
        Self { max_repeats, max_len }
    }

    /// Upper bound on cells covered along the masked axis.
    pub fn max_coverage(&self) -> usize {
        self.max_repeats * self.max_len
    }
}

impl fmt::Display for MaskSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}x{}", self.max_repeats, self.max_len)
    }
}

impl FromStr for MaskSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::invalid(format!("mask spec '{s}' is not of the form MxL, e.g. 3x10"));
        let (reps, len) = s.trim().split_once(['x', 'X', '×']).ok_or_else(bad)?;
        Ok(Self {
            max_repeats: reps.trim().parse().map_err(|_| bad())?,
            max_len: len.trim().parse().map_err(|_| bad())?,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AugmentConfig {
    pub time: MaskSpec,
    pub feature: MaskSpec,
    /// Allow feature masks to reach the appended speaker-embedding dims.
    pub fm_on_ivec: bool,
    /// Steps during which repetition maxima are halved.
    pub warmup_steps: u64,
    pub logmel_dims: usize,
}

impl Default for AugmentConfig {
    fn default() -> Self {
        Self {
            time: MaskSpec::new(6, 5),
            feature: MaskSpec::new(5, 18),
            fm_on_ivec: true,
            warmup_steps: DEFAULT_WARMUP_STEPS,
            logmel_dims: LOGMEL_DIMS,
        }
    }
}

impl AugmentConfig {
    pub fn new(time: MaskSpec, feature: MaskSpec) -> Self {
        Self {
            time,
            feature,
            ..Default::default()
        }
    }

    pub fn is_noop(&self) -> bool {
        self.time.max_repeats == 0 && self.feature.max_repeats == 0
    }
}

fn halve(repeats: usize) -> usize {
    if repeats == 0 {
        0
    } else {
        (repeats / 2).max(1)
    }
}

/// Configuration in force at `global_step`: during warmup both repetition
/// maxima are floor-halved, but never below one.
pub fn effective_config(cfg: &AugmentConfig, global_step: u64) -> AugmentConfig {
    let mut eff = cfg.clone();
    if global_step < cfg.warmup_steps {
        eff.time.max_repeats = halve(cfg.time.max_repeats);
        eff.feature.max_repeats = halve(cfg.feature.max_repeats);
    }
    eff
}

/// Half-open span `[start, start + len)`, 0-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Span {
    pub start: usize,
    pub len: usize,
}

impl Span {
    pub fn new(start: usize, len: usize) -> Self {
        Self { start, len }
    }

    fn clipped(&self, limit: usize) -> std::ops::Range<usize> {
        let start = self.start.min(limit);
        start..self.start.saturating_add(self.len).min(limit)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct MaskSample {
    pub time_masks: Vec<Span>,
    pub feat_masks: Vec<Span>,
}

impl MaskSample {
    pub fn is_empty(&self) -> bool {
        self.time_masks.is_empty() && self.feat_masks.is_empty()
    }

    /// Distinct frames covered within `[0, frames)`.
    pub fn masked_frames(&self, frames: usize) -> usize {
        coverage(&self.time_masks, frames).iter().filter(|&&m| m).count()
    }

    /// Distinct dims covered within `[0, dims)`.
    pub fn masked_dims(&self, dims: usize) -> usize {
        coverage(&self.feat_masks, dims).iter().filter(|&&m| m).count()
    }
}

fn coverage(spans: &[Span], limit: usize) -> Vec<bool> {
    let mut hit = vec![false; limit];
    for s in spans {
        hit[s.clipped(limit)].fill(true);
    }
    hit
}

fn draw_spans(rng: &mut SeededRng, spec: MaskSpec, positions: usize, limit: usize) -> Vec<Span> {
    if spec.max_repeats == 0 {
        return Vec::new();
    }
    let count = rng.uniform_inclusive(1, spec.max_repeats as u64) as usize;
    (0..count)
        .map(|_| {
            let start = rng.uniform_inclusive(1, positions as u64) as usize - 1;
            let len = rng.uniform_inclusive(0, spec.max_len as u64) as usize;
            Span::new(start, len.min(limit - start))
        })
        .collect()
}

/// Draws one set of masks for a `frames x dims` chunk. Stored spans are
/// already clipped to the chunk and, for feature masks, to the allowed dims.
pub fn sample_masks(cfg: &AugmentConfig, frames: usize, dims: usize, rng: &mut SeededRng) -> Result<MaskSample> {
    if frames == 0 || dims == 0 {
        return Err(Error::invalid("chunk must have at least one frame and one dim"));
    }
    let feat_limit = if cfg.fm_on_ivec {
        dims
    } else {
        if cfg.logmel_dims == 0 || cfg.logmel_dims > dims {
            return Err(Error::invalid(format!(
                "logmel_dims {} must be in [1, {dims}] when masking logmel only",
                cfg.logmel_dims
            )));
        }
        cfg.logmel_dims
    };
    let time_masks = draw_spans(rng, cfg.time, frames, frames);
    let feat_masks = draw_spans(rng, cfg.feature, feat_limit, feat_limit);
    Ok(MaskSample { time_masks, feat_masks })
}

/// Zeroes the masked frames and dims of a copy of `chunk`.
pub fn apply_masks(chunk: &Chunk, masks: &MaskSample) -> Chunk {
    let mut out = chunk.clone();
    let (frames, dims) = (chunk.frames(), chunk.dims());
    let data = out.data_mut();
    for span in &masks.time_masks {
        let r = span.clipped(frames);
        data[r.start * dims..r.end * dims].fill(0.0);
    }
    for span in &masks.feat_masks {
        let r = span.clipped(dims);
        for row in data.chunks_exact_mut(dims) {
            row[r.clone()].fill(0.0);
        }
    }
    out
}

/// Masks every chunk of a batch independently. Chunk `i` draws from
/// sub-stream `i` of sub-stream `global_step` of `rng`, so results do not
/// depend on processing order.
pub fn augment_batch(batch: &Minibatch, cfg: &AugmentConfig, global_step: u64, rng: &SeededRng) -> Result<Minibatch> {
    let Some((frames, dims)) = batch.shape()? else {
        return Ok(batch.clone());
    };
    let eff = effective_config(cfg, global_step);
    let step_rng = rng.substream(global_step);
    let chunks = batch
        .chunks
        .par_iter()
        .enumerate()
        .map(|(i, chunk)| {
            let mut chunk_rng = step_rng.substream(i as u64);
            let masks = sample_masks(&eff, frames, dims, &mut chunk_rng)?;
            Ok(apply_masks(chunk, &masks))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Minibatch { chunks })
}

#[derive(Debug, Clone, PartialEq)]
pub struct MaskStats {
    pub trials: usize,
    pub mean_time_fraction: f64,
    pub max_time_fraction: f64,
    pub mean_dim_fraction: f64,
    pub max_dim_fraction: f64,
    /// Trials in which each dim was masked.
    pub dim_hits: Vec<u64>,
    /// `time_repeat_counts[m]`: trials that drew `m` time masks.
    pub time_repeat_counts: Vec<u64>,
    /// `feat_repeat_counts[n]`: trials that drew `n` feature masks.
    pub feat_repeat_counts: Vec<u64>,
}

/// Monte-Carlo summary of how much of a `frames x dims` chunk gets masked.
pub fn mask_statistics(
    cfg: &AugmentConfig,
    frames: usize,
    dims: usize,
    trials: usize,
    rng: &mut SeededRng,
) -> Result<MaskStats> {
    if trials == 0 {
        return Err(Error::invalid("trials must be >= 1"));
    }
    let mut stats = MaskStats {
        trials,
        mean_time_fraction: 0.0,
        max_time_fraction: 0.0,
        mean_dim_fraction: 0.0,
        max_dim_fraction: 0.0,
        dim_hits: vec![0; dims],
        time_repeat_counts: vec![0; cfg.time.max_repeats + 1],
        feat_repeat_counts: vec![0; cfg.feature.max_repeats + 1],
    };
    let (mut time_sum, mut dim_sum) = (0.0, 0.0);
    for _ in 0..trials {
        let masks = sample_masks(cfg, frames, dims, rng)?;
        stats.time_repeat_counts[masks.time_masks.len()] += 1;
        stats.feat_repeat_counts[masks.feat_masks.len()] += 1;
        let time_frac = masks.masked_frames(frames) as f64 / frames as f64;
        let dim_cover = coverage(&masks.feat_masks, dims);
        let dim_frac = dim_cover.iter().filter(|&&m| m).count() as f64 / dims as f64;
        for (hits, _) in stats.dim_hits.iter_mut().zip(&dim_cover).filter(|(_, &m)| m) {
            *hits += 1;
        }
        time_sum += time_frac;
        dim_sum += dim_frac;
        stats.max_time_fraction = stats.max_time_fraction.max(time_frac);
        stats.max_dim_fraction = stats.max_dim_fraction.max(dim_frac);
    }
    stats.mean_time_fraction = time_sum / trials as f64;
    stats.mean_dim_fraction = dim_sum / trials as f64;
    Ok(stats)
}

/// Binary PGM (P5) with the chunk before masking on the left and after on
/// the right, one pixel per cell, rows = frames. Both halves share one
/// linear grey scale over their joint value range; a white column separates
/// them.
pub fn write_mask_pgm<W: Write>(before: &Chunk, after: &Chunk, mut w: W) -> Result<()> {
    if (before.frames(), before.dims()) != (after.frames(), after.dims()) {
        return Err(Error::invalid("before/after chunks differ in shape"));
    }
    let (lo, hi) = before
        .data()
        .iter()
        .chain(after.data())
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
            (lo.min(v), hi.max(v))
        });
    let scale = if hi > lo { 255.0 / (hi - lo) } else { 0.0 };
    let grey = |v: f64| ((v - lo) * scale).round() as u8;
    let width = 2 * before.dims() + 1;
    write!(w, "P5\n{} {}\n255\n", width, before.frames())?;
    let mut row = Vec::with_capacity(width);
    for t in 0..before.frames() {
        row.clear();
        row.extend(before.frame(t).iter().map(|&v| grey(v)));
        row.push(255);
        row.extend(after.frame(t).iter().map(|&v| grey(v)));
        w.write_all(&row)?;
    }
    w.flush()?;
    Ok(())
}
