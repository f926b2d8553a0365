//! JSON pipeline configuration. Every section is optional and every key
//! defaults to the library default; unknown keys are rejected.

use std::path::Path;

use asrprep_core::augment::{AugmentConfig, MaskSpec};
use asrprep_core::embedding::{EmbeddingConfig, LdaOptions, UbmConfig};
use asrprep_core::{LogmelConfig, NewbobState, PretrainSchedule};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub seed: Option<u64>,
    pub features: FeaturesSection,
    pub chunker: ChunkerSection,
    pub augment: AugmentSection,
    pub embedding: EmbeddingSection,
    pub lm: LmSection,
    pub sched: SchedSection,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FeaturesSection {
    pub window_ms: f64,
    pub shift_ms: f64,
    pub num_bands: usize,
    pub log_floor: f64,
    pub low_freq_hz: f64,
    pub high_freq_hz: Option<f64>,
}

impl Default for FeaturesSection {
    fn default() -> Self {
        let d = LogmelConfig::default();
        Self {
            window_ms: d.window_ms,
            shift_ms: d.shift_ms,
            num_bands: d.num_bands,
            log_floor: d.log_floor,
            low_freq_hz: d.low_freq_hz,
            high_freq_hz: d.high_freq_hz,
        }
    }
}

impl FeaturesSection {
    pub fn logmel(&self) -> LogmelConfig {
        LogmelConfig {
            window_ms: self.window_ms,
            shift_ms: self.shift_ms,
            num_bands: self.num_bands,
            log_floor: self.log_floor,
            low_freq_hz: self.low_freq_hz,
            high_freq_hz: self.high_freq_hz,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChunkerSection {
    pub chunk_len: usize,
    pub overlap: f64,
    pub batch_size: usize,
}

impl Default for ChunkerSection {
    fn default() -> Self {
        use asrprep_core::chunker::{DEFAULT_BATCH_SIZE, DEFAULT_CHUNK_LEN, DEFAULT_OVERLAP};
        Self {
            chunk_len: DEFAULT_CHUNK_LEN,
            overlap: DEFAULT_OVERLAP,
            batch_size: DEFAULT_BATCH_SIZE,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AugmentSection {
    pub tm: String,
    pub fm: String,
    pub fm_on_ivec: bool,
    pub warmup_steps: u64,
    pub logmel_dims: usize,
}

impl Default for AugmentSection {
    fn default() -> Self {
        let d = AugmentConfig::default();
        Self {
            tm: d.time.to_string(),
            fm: d.feature.to_string(),
            fm_on_ivec: d.fm_on_ivec,
            warmup_steps: d.warmup_steps,
            logmel_dims: d.logmel_dims,
        }
    }
}

impl AugmentSection {
    pub fn build(&self) -> Result<AugmentConfig, CliError> {
        let parse = |s: &str, key: &str| {
            s.parse::<MaskSpec>()
                .map_err(|e| CliError::Config(format!("augment.{key}: {e}")))
        };
        Ok(AugmentConfig {
            time: parse(&self.tm, "tm")?,
            feature: parse(&self.fm, "fm")?,
            fm_on_ivec: self.fm_on_ivec,
            warmup_steps: self.warmup_steps,
            logmel_dims: self.logmel_dims,
        })
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EmbeddingSection {
    pub context: usize,
    pub lda_dim: usize,
    pub ridge: bool,
    pub fallback_classes: usize,
    pub ubm_components: usize,
    pub ubm_iterations: usize,
    pub kmeans_iterations: usize,
    pub variance_floor: f64,
}

impl Default for EmbeddingSection {
    fn default() -> Self {
        let d = EmbeddingConfig::default();
        Self {
            context: d.context,
            lda_dim: d.lda.out_dim,
            ridge: d.lda.ridge,
            fallback_classes: d.fallback_classes,
            ubm_components: d.ubm.components,
            ubm_iterations: d.ubm.iterations,
            kmeans_iterations: d.ubm.kmeans_iterations,
            variance_floor: d.ubm.variance_floor,
        }
    }
}

impl EmbeddingSection {
    pub fn build(&self) -> EmbeddingConfig {
        EmbeddingConfig {
            context: self.context,
            lda: LdaOptions {
                out_dim: self.lda_dim,
                ridge: self.ridge,
            },
            fallback_classes: self.fallback_classes,
            ubm: UbmConfig {
                components: self.ubm_components,
                iterations: self.ubm_iterations,
                kmeans_iterations: self.kmeans_iterations,
                variance_floor: self.variance_floor,
            },
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LmSection {
    pub order: usize,
    /// Minimum raw counts for orders 2, 3, ...; empty disables pruning.
    pub prune: Vec<u64>,
}

impl Default for LmSection {
    fn default() -> Self {
        Self {
            order: asrprep_core::lm::DEFAULT_ORDER,
            prune: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SchedSection {
    pub initial_lr: f64,
    pub decay: f64,
    pub threshold: f64,
    pub min_lr: f64,
    pub total_layers: u32,
    pub epochs_per_stage: u32,
}

impl Default for SchedSection {
    fn default() -> Self {
        let n = NewbobState::default();
        let p = PretrainSchedule::default();
        Self {
            initial_lr: n.current_lr(),
            decay: n.decay(),
            threshold: n.threshold(),
            min_lr: n.min_lr(),
            total_layers: p.total_layers(),
            epochs_per_stage: p.epochs_per_stage(),
        }
    }
}

impl PipelineConfig {
    pub fn load(path: Option<&Path>) -> Result<Self, CliError> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }

    /// The `--seed` flag wins over the config's `seed`; the fallback is 0.
    pub fn seed(&self, flag: Option<u64>) -> u64 {
        flag.or(self.seed).unwrap_or(0)
    }
}
