//! Data-side building blocks for hybrid HMM speech recognition training:
//! logmel features, chunked minibatches, time/feature masking, speaker
//! embeddings, n-gram language models and training schedules.
//!
//! Every stochastic operation draws from an explicit [`SeededRng`], so
//! results are a pure function of inputs and seed.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod augment;
pub mod chunker;
pub mod embedding;
pub mod error;
pub mod features;
pub mod lm;
pub mod rng;
pub mod trainsched;

pub use augment::{AugmentConfig, MaskSample, MaskSpec, MaskStats, Span};
pub use chunker::{Chunk, Minibatch};
pub use embedding::{EmbeddingConfig, EmbeddingModels, EmbeddingProjection, LdaTransform, SpeakerEmbedding, Ubm};
pub use error::{Error, Result};
pub use features::{AudioSignal, FeatureMatrix, LogmelConfig};
pub use lm::{InterpolatedLM, LanguageModel, NGramCounts, NGramModel, Vocabulary};
pub use rng::SeededRng;
pub use trainsched::{NewbobState, PretrainSchedule};
