//! Per-recording speaker embeddings.
//!
//! Logmel frames are context-stacked, reduced with LDA and scored against a
//! diagonal-GMM background model. Each recording is summarized by its
//! frame-averaged, centered and variance-normalized first-order statistics
//!
//! ```text
//! s_k = Σ_t γ_tk (y_t − μ_k) / (T · σ_k)
//! ```
//!
//! stacked over all components, and that supervector is projected linearly
//! onto principal directions learned from training recordings. This keeps
//! the interface of an i-vector extractor (one fixed-size vector per
//! recording, computed from background-model statistics over all frames)
//! without a total-variability model.

mod io;
mod kmeans;
mod lda;
mod projection;
mod ubm;

pub use io::{
    read_lda, read_lda_file, read_projection, read_projection_file, read_ubm, read_ubm_file, write_lda, write_lda_file,
    write_projection, write_projection_file, write_ubm, write_ubm_file,
};
pub use kmeans::{kmeans, KMeans};
pub use lda::{lda_fit, LdaOptions, LdaTransform, LDA_DIM};
pub use projection::{embedding_projection_fit, EmbeddingProjection};
pub use ubm::{ubm_fit, Ubm, UbmConfig, UbmFit, DEFAULT_COMPONENTS, DEFAULT_VARIANCE_FLOOR};

use crate::error::{Error, Result};
use crate::features::{stack_context, FeatureMatrix};
use crate::rng::SeededRng;

pub const EMBEDDING_DIM: usize = 100;
pub const DEFAULT_CONTEXT: usize = 9;

#[derive(Debug, Clone, PartialEq)]
pub struct SpeakerEmbedding {
    values: Vec<f64>,
    recording_id: String,
}

impl SpeakerEmbedding {
    pub fn new(values: Vec<f64>, recording_id: impl Into<String>) -> Result<Self> {
        if values.len() != EMBEDDING_DIM {
            return Err(Error::invalid(format!(
                "speaker embedding must have {EMBEDDING_DIM} values, got {}",
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("speaker embedding values must be finite"));
        }
        Ok(Self {
            values,
            recording_id: recording_id.into(),
        })
    }

    pub fn zeros(recording_id: impl Into<String>) -> Self {
        Self {
            values: vec![0.0; EMBEDDING_DIM],
            recording_id: recording_id.into(),
        }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn recording_id(&self) -> &str {
        &self.recording_id
    }

    /// One-frame matrix holding the embedding, for FMX1 output.
    pub fn to_matrix(&self) -> FeatureMatrix {
        FeatureMatrix::new(self.values.clone(), 1, self.dim(), 0.0, self.recording_id.clone())
            .expect("embedding values are finite")
    }
}

/// Brings raw frames to the LDA input layout. Frames already at the LDA
/// input dimension pass through; otherwise the input dimension must be an
/// odd multiple of the frame dimension and frames are context-stacked.
fn lda_input(feats: &FeatureMatrix, lda: &LdaTransform) -> Result<FeatureMatrix> {
    let dims = feats.num_dims();
    if dims == lda.input_dim() {
        return Ok(feats.clone());
    }
    if dims > 0 && lda.input_dim().is_multiple_of(dims) && !(lda.input_dim() / dims).is_multiple_of(2) {
        return stack_context(feats, lda.input_dim() / dims);
    }
    Err(Error::invalid(format!(
        "{dims}-dim frames do not fit an lda expecting {} inputs",
        lda.input_dim()
    )))
}

/// Centered, variance-normalized, frame-averaged first-order statistics of
/// LDA-space frames, concatenated over UBM components.
pub fn statistics_supervector(projected: &FeatureMatrix, ubm: &Ubm) -> Result<Vec<f64>> {
    if projected.num_frames() == 0 {
        return Err(Error::invalid("cannot embed an empty recording"));
    }
    if projected.num_dims() != ubm.dim() {
        return Err(Error::invalid(format!(
            "ubm expects {} dims, got {}",
            ubm.dim(),
            projected.num_dims()
        )));
    }
    let dim = ubm.dim();
    let mut first = vec![0.0; ubm.components() * dim];
    for y in projected.frames() {
        let post = ubm.posteriors(y);
        for (k, &g) in post.iter().enumerate() {
            if g == 0.0 {
                continue;
            }
            for ((acc, &x), &m) in first[k * dim..(k + 1) * dim].iter_mut().zip(y).zip(ubm.mean(k)) {
                *acc += g * (x - m);
            }
        }
    }
    let frames = projected.num_frames() as f64;
    Ok(first
        .iter()
        .zip(ubm.variances())
        .map(|(f, v)| f / (frames * v.sqrt()))
        .collect())
}

/// Supervector of a raw recording (stacking and LDA applied first).
pub fn recording_supervector(feats: &FeatureMatrix, lda: &LdaTransform, ubm: &Ubm) -> Result<Vec<f64>> {
    if feats.is_empty() {
        return Err(Error::invalid("cannot embed an empty recording"));
    }
    let projected = lda.transform(&lda_input(feats, lda)?)?;
    statistics_supervector(&projected, ubm)
}

/// Embeds one whole recording, every frame included.
pub fn embed_recording(
    feats: &FeatureMatrix,
    lda: &LdaTransform,
    ubm: &Ubm,
    proj: &EmbeddingProjection,
) -> Result<SpeakerEmbedding> {
    let sv = recording_supervector(feats, lda, ubm)?;
    if proj.in_dim() != sv.len() {
        return Err(Error::invalid(format!(
            "projection expects {}-dim supervectors, got {}",
            proj.in_dim(),
            sv.len()
        )));
    }
    SpeakerEmbedding::new(proj.project(&sv), feats.source_id())
}

#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingConfig {
    pub context: usize,
    pub lda: LdaOptions,
    /// k-means classes used for LDA when no frame labels are supplied.
    pub fallback_classes: usize,
    pub ubm: UbmConfig,
}

impl Default for EmbeddingConfig {
    fn default() -> Self {
        Self {
            context: DEFAULT_CONTEXT,
            lda: LdaOptions::default(),
            fallback_classes: 64,
            ubm: UbmConfig::default(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct EmbeddingModels {
    pub lda: LdaTransform,
    pub ubm: UbmFit,
    pub projection: EmbeddingProjection,
}

impl EmbeddingModels {
    pub fn embed(&self, feats: &FeatureMatrix) -> Result<SpeakerEmbedding> {
        embed_recording(feats, &self.lda, &self.ubm.ubm, &self.projection)
    }
}

/// Trains LDA, UBM and projection on a set of recordings. `labels`, when
/// given, holds one class per frame across all recordings in order.
pub fn train_embedding_models(
    recordings: &[FeatureMatrix],
    labels: Option<&[u32]>,
    cfg: &EmbeddingConfig,
    rng: &SeededRng,
) -> Result<EmbeddingModels> {
    if recordings.is_empty() {
        return Err(Error::invalid("no training recordings"));
    }
    let stacked = recordings
        .iter()
        .map(|r| stack_context(r, cfg.context))
        .collect::<Result<Vec<_>>>()?;
    let dims = stacked[0].num_dims();
    if stacked.iter().any(|s| s.num_dims() != dims) {
        return Err(Error::invalid("recordings differ in feature dimension"));
    }
    let frames: usize = stacked.iter().map(FeatureMatrix::num_frames).sum();
    let data: Vec<f64> = stacked.iter().flat_map(|s| s.data().iter().copied()).collect();
    let all = FeatureMatrix::new(data, frames, dims, recordings[0].frame_shift_ms(), "train")?;

    let owned_labels;
    let labels = match labels {
        Some(l) => l,
        None => {
            let km = kmeans(all.data(), dims, cfg.fallback_classes, 10, &mut rng.substream(0))?;
            owned_labels = km.assignments.iter().map(|&a| a as u32).collect::<Vec<_>>();
            &owned_labels
        }
    };
    let lda = lda_fit(&all, labels, &cfg.lda)?;
    let projected = lda.transform(&all)?;
    let ubm = ubm_fit(&projected, &cfg.ubm, &mut rng.substream(1))?;

    let supervectors = recordings
        .iter()
        .map(|r| recording_supervector(r, &lda, &ubm.ubm))
        .collect::<Result<Vec<_>>>()?;
    let projection = embedding_projection_fit(&supervectors, EMBEDDING_DIM, &mut rng.substream(2))?;
    Ok(EmbeddingModels { lda, ubm, projection })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy_ubm(dim: usize) -> Ubm {
        // two far-apart components: posteriors are exactly one-hot
        let means = [vec![0.0; dim], vec![1000.0; dim]].concat();
        Ubm::new(vec![0.5, 0.5], means, vec![1.0; 2 * dim], dim).unwrap()
    }

    fn identity_lda(dim: usize) -> LdaTransform {
        let mut p = vec![0.0; dim * dim];
        for i in 0..dim {
            p[i * dim + i] = 1.0;
        }
        LdaTransform::from_parts(p, dim, dim, dim + 1).unwrap()
    }

    fn projection(in_dim: usize) -> EmbeddingProjection {
        let mut rng = SeededRng::new(1);
        let data: Vec<Vec<f64>> = (0..10).map(|_| (0..in_dim).map(|_| rng.unit_f64()).collect()).collect();
        embedding_projection_fit(&data, EMBEDDING_DIM, &mut SeededRng::new(2)).unwrap()
    }

    #[test]
    fn frames_at_component_means_embed_to_zero() {
        let dim = 60;
        let ubm = toy_ubm(dim);
        let rows: Vec<Vec<f64>> = (0..10)
            .map(|t| if t % 3 == 0 { vec![1000.0; dim] } else { vec![0.0; dim] })
            .collect();
        let feats = FeatureMatrix::from_rows(&rows, 10.0, "rec").unwrap();
        let lda = identity_lda(dim);
        let sv = recording_supervector(&feats, &lda, &ubm).unwrap();
        assert!(sv.iter().all(|&v| v == 0.0));
        let emb = embed_recording(&feats, &lda, &ubm, &projection(2 * dim)).unwrap();
        assert_eq!(emb.dim(), 100);
        assert!(emb.values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn duplicating_frames_keeps_the_embedding() {
        let dim = 60;
        let ubm = Ubm::new(
            vec![0.3, 0.7],
            [vec![0.0; dim], vec![1.0; dim]].concat(),
            vec![0.5; 2 * dim],
            dim,
        )
        .unwrap();
        let mut rng = SeededRng::new(5);
        let rows: Vec<Vec<f64>> = (0..10)
            .map(|_| (0..dim).map(|_| rng.unit_f64() * 0.1 + 0.4).collect())
            .collect();
        let doubled: Vec<Vec<f64>> = rows.iter().flat_map(|r| [r.clone(), r.clone()]).collect();
        let a = FeatureMatrix::from_rows(&rows, 10.0, "r").unwrap();
        let b = FeatureMatrix::from_rows(&doubled, 10.0, "r").unwrap();
        let lda = identity_lda(dim);
        let proj = projection(2 * dim);
        let ea = embed_recording(&a, &lda, &ubm, &proj).unwrap();
        let eb = embed_recording(&b, &lda, &ubm, &proj).unwrap();
        for (x, y) in ea.values().iter().zip(eb.values()) {
            assert!((x - y).abs() < 1e-12);
        }

        // direct statistics for component 0, dim 0
        let post: Vec<Vec<f64>> = a.frames().map(|f| ubm.posteriors(f)).collect();
        let s00: f64 = a.frames().zip(&post).map(|(f, g)| g[0] * (f[0] - 0.0)).sum::<f64>() / (10.0 * 0.5f64.sqrt());
        let sv = recording_supervector(&a, &lda, &ubm).unwrap();
        assert!((sv[0] - s00).abs() < 1e-12);
    }

    #[test]
    fn embedding_is_deterministic_and_sized() {
        let dim = 4;
        let ubm = Ubm::new(
            vec![0.5, 0.5],
            [vec![0.0; dim], vec![1.0; dim]].concat(),
            vec![1.0; 2 * dim],
            dim,
        )
        .unwrap();
        // 2-dim frames, lda expects 3 stacked frames of them
        let lda = LdaTransform::from_parts((0..24).map(|i| f64::from(i) * 0.05).collect(), 4, 6, 5).unwrap();
        let rows: Vec<Vec<f64>> = (0..7).map(|t| vec![f64::from(t) * 0.1, 0.3]).collect();
        let feats = FeatureMatrix::from_rows(&rows, 10.0, "x").unwrap();
        let sv1 = recording_supervector(&feats, &lda, &ubm).unwrap();
        let sv2 = recording_supervector(&feats, &lda, &ubm).unwrap();
        assert_eq!(sv1, sv2);
        assert_eq!(sv1.len(), 8);

        let wrong = FeatureMatrix::from_rows(&[vec![1.0; 4]], 10.0, "x").unwrap();
        assert!(recording_supervector(&wrong, &lda, &ubm).is_err());
        let empty = FeatureMatrix::new(vec![], 0, 2, 10.0, "x").unwrap();
        assert!(recording_supervector(&empty, &lda, &ubm).is_err());
    }

    #[test]
    fn embedding_dimension_is_enforced() {
        assert!(SpeakerEmbedding::new(vec![0.0; 99], "r").is_err());
        assert!(SpeakerEmbedding::new(vec![f64::NAN; 100], "r").is_err());
        assert_eq!(SpeakerEmbedding::zeros("r").dim(), 100);
    }
}
