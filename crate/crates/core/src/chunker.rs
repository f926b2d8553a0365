//! Fixed-length overlapping chunks and minibatches.
//!
//! A sequence of `n` frames is cut at offsets `0, s, 2s, ...` with stride
//! `s = chunk_len * (1 - overlap)` until a chunk reaches the last frame. A
//! final chunk that runs past the end is padded by repeating the last real
//! frame, and `valid_frames` records where the padding starts.

use crate::error::{Error, Result};
use crate::features::FeatureMatrix;
use crate::rng::SeededRng;

pub const DEFAULT_CHUNK_LEN: usize = 64;
pub const DEFAULT_OVERLAP: f64 = 0.5;
pub const DEFAULT_BATCH_SIZE: usize = 128;

#[derive(Debug, Clone, PartialEq)]
pub struct Chunk {
    data: Vec<f64>,
    frames: usize,
    dims: usize,
    source_id: String,
    start_frame: usize,
    valid_frames: usize,
    frame_shift_ms: f64,
}

impl Chunk {
    /// Builds a chunk from raw row-major data.
    pub fn new(
        data: Vec<f64>,
        frames: usize,
        dims: usize,
        source_id: impl Into<String>,
        start_frame: usize,
        valid_frames: usize,
    ) -> Result<Self> {
        if data.len() != frames * dims {
            return Err(Error::invalid("chunk data does not match its shape"));
        }
        if valid_frames == 0 || valid_frames > frames {
            return Err(Error::invalid(format!(
                "valid_frames must be in [1, {frames}], got {valid_frames}"
            )));
        }
        Ok(Self {
            data,
            frames,
            dims,
            source_id: source_id.into(),
            start_frame,
            valid_frames,
            frame_shift_ms: 0.0,
        })
    }

    pub fn frames(&self) -> usize {
        self.frames
    }

    pub fn dims(&self) -> usize {
        self.dims
    }

    pub fn source_id(&self) -> &str {
        &self.source_id
    }

    pub fn start_frame(&self) -> usize {
        self.start_frame
    }

    pub fn valid_frames(&self) -> usize {
        self.valid_frames
    }

    pub fn frame_shift_ms(&self) -> f64 {
        self.frame_shift_ms
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub(crate) fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn frame(&self, t: usize) -> &[f64] {
        &self.data[t * self.dims..(t + 1) * self.dims]
    }

    pub fn get(&self, t: usize, d: usize) -> f64 {
        self.data[t * self.dims + d]
    }

    /// The chunk as a standalone matrix, padding included.
    pub fn to_matrix(&self) -> FeatureMatrix {
        FeatureMatrix::new(
            self.data.clone(),
            self.frames,
            self.dims,
            self.frame_shift_ms,
            self.source_id.clone(),
        )
        .expect("chunk values are finite")
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Minibatch {
    pub chunks: Vec<Chunk>,
}

impl Minibatch {
    pub fn size(&self) -> usize {
        self.chunks.len()
    }

    /// Common `(frames, dims)` of the batch, or an error if chunks disagree.
    pub fn shape(&self) -> Result<Option<(usize, usize)>> {
        let mut shape = None;
        for c in &self.chunks {
            match shape {
                None => shape = Some((c.frames, c.dims)),
                Some(s) if s != (c.frames, c.dims) => {
                    return Err(Error::invalid(format!(
                        "heterogeneous chunk shapes in batch: {s:?} vs {:?}",
                        (c.frames, c.dims)
                    )))
                }
                Some(_) => {}
            }
        }
        Ok(shape)
    }
}

/// Stride in frames for a chunk length and overlap fraction.
pub fn chunk_stride(chunk_len: usize, overlap_fraction: f64) -> Result<usize> {
    if chunk_len < 2 {
        return Err(Error::invalid("chunk_len must be >= 2"));
    }
    if !(0.0..1.0).contains(&overlap_fraction) {
        return Err(Error::invalid("overlap fraction must be in [0, 1)"));
    }
    let stride = chunk_len as f64 * (1.0 - overlap_fraction);
    let rounded = stride.round();
    if (stride - rounded).abs() > 1e-9 || rounded < 1.0 {
        return Err(Error::invalid(format!(
            "stride {stride} = {chunk_len} * (1 - {overlap_fraction}) is not a positive integer"
        )));
    }
    Ok(rounded as usize)
}

pub fn split_chunks(feats: &FeatureMatrix, chunk_len: usize, overlap_fraction: f64) -> Result<Vec<Chunk>> {
    let stride = chunk_stride(chunk_len, overlap_fraction)?;
    if feats.is_empty() {
        return Err(Error::invalid("cannot chunk an empty feature matrix"));
    }
    let n = feats.num_frames();
    let dims = feats.num_dims();
    let mut chunks = Vec::new();
    let mut start = 0;
    loop {
        let valid = chunk_len.min(n - start);
        let mut data = Vec::with_capacity(chunk_len * dims);
        for t in start..start + valid {
            data.extend_from_slice(feats.frame(t));
        }
        let last = feats.frame(start + valid - 1);
        for _ in valid..chunk_len {
            data.extend_from_slice(last);
        }
        chunks.push(Chunk {
            data,
            frames: chunk_len,
            dims,
            source_id: feats.source_id().to_string(),
            start_frame: start,
            valid_frames: valid,
            frame_shift_ms: feats.frame_shift_ms(),
        });
        if start + chunk_len >= n {
            break;
        }
        start += stride;
    }
    Ok(chunks)
}

/// Inverse of [`split_chunks`]: rebuilds the source matrix, dropping padding.
pub fn reassemble(chunks: &[Chunk], num_frames: usize) -> Result<FeatureMatrix> {
    let first = chunks
        .first()
        .ok_or_else(|| Error::invalid("no chunks to reassemble"))?;
    let dims = first.dims;
    let mut data = vec![0.0; num_frames * dims];
    let mut covered = vec![false; num_frames];
    for c in chunks {
        if c.dims != dims || c.source_id != first.source_id {
            return Err(Error::invalid("chunks come from different sources or shapes"));
        }
        let end = c.start_frame + c.valid_frames;
        if end > num_frames {
            return Err(Error::invalid(format!(
                "chunk covers frames up to {end}, beyond {num_frames}"
            )));
        }
        for t in 0..c.valid_frames {
            let dst = c.start_frame + t;
            data[dst * dims..(dst + 1) * dims].copy_from_slice(c.frame(t));
            covered[dst] = true;
        }
    }
    if let Some(gap) = covered.iter().position(|&c| !c) {
        return Err(Error::invalid(format!("frame {gap} is not covered by any chunk")));
    }
    FeatureMatrix::new(data, num_frames, dims, first.frame_shift_ms, first.source_id.clone())
}

/// Groups chunks into batches of `batch_size`. With a generator the chunk
/// order is first permuted by a Fisher-Yates shuffle (index `i` swapped with
/// `below(i + 1)`, for `i` from the end down to 1).
pub fn make_batches(mut chunks: Vec<Chunk>, batch_size: usize, shuffle: Option<&SeededRng>) -> Result<Vec<Minibatch>> {
    if batch_size == 0 {
        return Err(Error::invalid("batch_size must be >= 1"));
    }
    if let Some(rng) = shuffle {
        let mut rng = rng.clone();
        for i in (1..chunks.len()).rev() {
            let j = rng.below(i as u64 + 1) as usize;
            chunks.swap(i, j);
        }
    }
    let mut batches = Vec::with_capacity(chunks.len().div_ceil(batch_size));
    let mut iter = chunks.into_iter().peekable();
    while iter.peek().is_some() {
        batches.push(Minibatch {
            chunks: iter.by_ref().take(batch_size).collect(),
        });
    }
    Ok(batches)
}
