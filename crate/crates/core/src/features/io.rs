//! WAV input and the FMX1 feature container.
//!
//! FMX1 layout (all little-endian):
//!
//! ```text
//! b"FMX1" | num_frames: u32 | num_dims: u32 | frame_shift_us: u32 | f32[num_frames * num_dims]
//! ```
//!
//! Values are stored row-major. Matrices are held in `f64` in memory and
//! narrowed to `f32` on write, so reading a file and writing it back is
//! byte-identical, and write-then-read is exact for `f32`-representable data.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use super::{AudioSignal, FeatureMatrix};
use crate::error::{Error, Result};

pub const FMX1_MAGIC: &[u8; 4] = b"FMX1";

/// Reads mono 16-bit PCM WAV; anything else is rejected.
pub fn read_wav<R: Read>(reader: R) -> Result<AudioSignal> {
    let mut wav = hound::WavReader::new(reader)?;
    let spec = wav.spec();
    if spec.channels != 1 {
        return Err(Error::format(format!(
            "wav: expected mono audio, found {} channels",
            spec.channels
        )));
    }
    if spec.sample_format != hound::SampleFormat::Int || spec.bits_per_sample != 16 {
        return Err(Error::format(format!(
            "wav: expected 16-bit PCM, found {:?} with {} bits",
            spec.sample_format, spec.bits_per_sample
        )));
    }
    let samples = wav
        .samples::<i16>()
        .map(|s| s.map(|v| f64::from(v) / 32768.0))
        .collect::<std::result::Result<Vec<_>, _>>()?;
    AudioSignal::new(samples, spec.sample_rate)
}

pub fn read_wav_file(path: impl AsRef<Path>) -> Result<AudioSignal> {
    read_wav(BufReader::new(File::open(path)?))
}

pub fn write_fmx1<W: Write>(feats: &FeatureMatrix, mut w: W) -> Result<()> {
    let to_u32 =
        |v: usize, what: &str| u32::try_from(v).map_err(|_| Error::format(format!("fmx1: {what} {v} exceeds u32")));
    let shift_us = (feats.frame_shift_ms() * 1000.0).round();
    if !(0.0..=f64::from(u32::MAX)).contains(&shift_us) {
        return Err(Error::format("fmx1: frame shift out of range"));
    }
    w.write_all(FMX1_MAGIC)?;
    w.write_all(&to_u32(feats.num_frames(), "num_frames")?.to_le_bytes())?;
    w.write_all(&to_u32(feats.num_dims(), "num_dims")?.to_le_bytes())?;
    w.write_all(&(shift_us as u32).to_le_bytes())?;
    for &v in feats.data() {
        w.write_all(&(v as f32).to_le_bytes())?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_fmx1<R: Read>(mut r: R, source_id: impl Into<String>) -> Result<FeatureMatrix> {
    let mut header = [0u8; 16];
    r.read_exact(&mut header)
        .map_err(|_| Error::format("fmx1: truncated header"))?;
    if &header[..4] != FMX1_MAGIC {
        return Err(Error::format("fmx1: bad magic"));
    }
    let field = |i: usize| u32::from_le_bytes(header[i..i + 4].try_into().unwrap());
    let (frames, dims, shift_us) = (field(4) as usize, field(8) as usize, field(12));
    let count = frames
        .checked_mul(dims)
        .ok_or_else(|| Error::format("fmx1: size overflow"))?;
    let mut payload = Vec::new();
    r.read_to_end(&mut payload)?;
    if payload.len() != count * 4 {
        return Err(Error::format(format!(
            "fmx1: payload holds {} bytes, header declares {}",
            payload.len(),
            count * 4
        )));
    }
    let data = payload
        .chunks_exact(4)
        .map(|b| f64::from(f32::from_le_bytes(b.try_into().unwrap())))
        .collect();
    FeatureMatrix::new(data, frames, dims, f64::from(shift_us) / 1000.0, source_id)
        .map_err(|e| Error::format(format!("fmx1: {e}")))
}

/// Reads an FMX1 file; the file stem becomes the matrix's source id.
pub fn read_fmx1_file(path: impl AsRef<Path>) -> Result<FeatureMatrix> {
    let path = path.as_ref();
    let id = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    read_fmx1(BufReader::new(File::open(path)?), id)
}

pub fn write_fmx1_file(feats: &FeatureMatrix, path: impl AsRef<Path>) -> Result<()> {
    write_fmx1(feats, BufWriter::new(File::create(path)?))
}
