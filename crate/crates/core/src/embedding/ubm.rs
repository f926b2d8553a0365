//! Diagonal-covariance Gaussian mixture trained by EM.

use std::f64::consts::PI;

use rayon::prelude::*;

use super::kmeans::kmeans;
use crate::error::{Error, Result};
use crate::features::FeatureMatrix;
use crate::rng::SeededRng;

pub const DEFAULT_COMPONENTS: usize = 256;
pub const DEFAULT_VARIANCE_FLOOR: f64 = 1e-4;

// Fixed block size for sharded accumulation; the merge order is the block
// order, so totals do not depend on the thread count.
const BLOCK: usize = 512;

#[derive(Debug, Clone, PartialEq)]
pub struct UbmConfig {
    pub components: usize,
    pub iterations: usize,
    pub kmeans_iterations: usize,
    pub variance_floor: f64,
}

impl Default for UbmConfig {
    fn default() -> Self {
        Self {
            components: DEFAULT_COMPONENTS,
            iterations: 20,
            kmeans_iterations: 10,
            variance_floor: DEFAULT_VARIANCE_FLOOR,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Ubm {
    weights: Vec<f64>,
    /// `K x dim`, row-major.
    means: Vec<f64>,
    variances: Vec<f64>,
    dim: usize,
}

impl Ubm {
    pub fn new(weights: Vec<f64>, means: Vec<f64>, variances: Vec<f64>, dim: usize) -> Result<Self> {
        let k = weights.len();
        if k == 0 || dim == 0 || means.len() != k * dim || variances.len() != k * dim {
            return Err(Error::invalid("ubm parameter shapes disagree"));
        }
        if weights.iter().any(|&w| !(w >= 0.0)) {
            return Err(Error::invalid("ubm weights must be non-negative"));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::invalid(format!("ubm weights sum to {total}, not 1")));
        }
        if variances.iter().any(|&v| !(v > 0.0 && v.is_finite())) || means.iter().any(|m| !m.is_finite()) {
            return Err(Error::invalid("ubm means must be finite and variances positive"));
        }
        Ok(Self {
            weights,
            means,
            variances,
            dim,
        })
    }

    pub fn components(&self) -> usize {
        self.weights.len()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn means(&self) -> &[f64] {
        &self.means
    }

    pub fn variances(&self) -> &[f64] {
        &self.variances
    }

    pub fn mean(&self, k: usize) -> &[f64] {
        &self.means[k * self.dim..(k + 1) * self.dim]
    }

    pub fn variance(&self, k: usize) -> &[f64] {
        &self.variances[k * self.dim..(k + 1) * self.dim]
    }

    /// Per-component `ln w_k - ½ Σ_d ln(2π σ²_kd)`; `-inf` for empty components.
    fn log_norms(&self) -> Vec<f64> {
        (0..self.components())
            .map(|k| {
                if self.weights[k] == 0.0 {
                    f64::NEG_INFINITY
                } else {
                    self.weights[k].ln() - 0.5 * self.variance(k).iter().map(|v| (2.0 * PI * v).ln()).sum::<f64>()
                }
            })
            .collect()
    }

    /// Fills `post` with component posteriors for `x`; returns `ln p(x)`.
    pub(crate) fn posteriors_with(&self, log_norms: &[f64], x: &[f64], post: &mut [f64]) -> f64 {
        let mut max = f64::NEG_INFINITY;
        for (k, p) in post.iter_mut().enumerate() {
            *p = if log_norms[k] == f64::NEG_INFINITY {
                f64::NEG_INFINITY
            } else {
                let quad: f64 = x
                    .iter()
                    .zip(self.mean(k))
                    .zip(self.variance(k))
                    .map(|((x, m), v)| (x - m) * (x - m) / v)
                    .sum();
                log_norms[k] - 0.5 * quad
            };
            max = max.max(*p);
        }
        let mut total = 0.0;
        for p in post.iter_mut() {
            *p = (*p - max).exp();
            total += *p;
        }
        for p in post.iter_mut() {
            *p /= total;
        }
        max + total.ln()
    }

    /// Component posteriors of one frame.
    pub fn posteriors(&self, x: &[f64]) -> Vec<f64> {
        let mut post = vec![0.0; self.components()];
        self.posteriors_with(&self.log_norms(), x, &mut post);
        post
    }

    /// Mean per-frame log-likelihood.
    pub fn average_log_likelihood(&self, feats: &FeatureMatrix) -> f64 {
        self.accumulate(feats).log_likelihood / feats.num_frames() as f64
    }

    fn accumulate(&self, feats: &FeatureMatrix) -> Accumulator {
        let (k, dim) = (self.components(), self.dim);
        let log_norms = self.log_norms();
        let partials: Vec<Accumulator> = feats
            .data()
            .par_chunks(BLOCK * dim)
            .map(|block| {
                let mut acc = Accumulator::new(k, dim);
                let mut post = vec![0.0; k];
                for x in block.chunks_exact(dim) {
                    acc.log_likelihood += self.posteriors_with(&log_norms, x, &mut post);
                    for (c, &g) in post.iter().enumerate() {
                        if g == 0.0 {
                            continue;
                        }
                        acc.occupancy[c] += g;
                        let first = &mut acc.first[c * dim..(c + 1) * dim];
                        let second = &mut acc.second[c * dim..(c + 1) * dim];
                        for d in 0..dim {
                            first[d] += g * x[d];
                            second[d] += g * x[d] * x[d];
                        }
                    }
                }
                acc
            })
            .collect();
        partials.into_iter().fold(Accumulator::new(k, dim), |mut total, part| {
            total.merge(&part);
            total
        })
    }
}

#[derive(Debug, Clone)]
struct Accumulator {
    occupancy: Vec<f64>,
    first: Vec<f64>,
    second: Vec<f64>,
    log_likelihood: f64,
}

impl Accumulator {
    fn new(k: usize, dim: usize) -> Self {
        Self {
            occupancy: vec![0.0; k],
            first: vec![0.0; k * dim],
            second: vec![0.0; k * dim],
            log_likelihood: 0.0,
        }
    }

    fn merge(&mut self, other: &Accumulator) {
        for (a, b) in self.occupancy.iter_mut().zip(&other.occupancy) {
            *a += b;
        }
        for (a, b) in self.first.iter_mut().zip(&other.first) {
            *a += b;
        }
        for (a, b) in self.second.iter_mut().zip(&other.second) {
            *a += b;
        }
        self.log_likelihood += other.log_likelihood;
    }
}

#[derive(Debug, Clone)]
pub struct UbmFit {
    pub ubm: Ubm,
    /// Mean per-frame log-likelihood of the initial model and after each
    /// EM iteration.
    pub log_likelihood: Vec<f64>,
}

/// Trains a diagonal GMM: k-means initialization, then `iterations` EM steps.
pub fn ubm_fit(feats: &FeatureMatrix, cfg: &UbmConfig, rng: &mut SeededRng) -> Result<UbmFit> {
    let (n, dim, k) = (feats.num_frames(), feats.num_dims(), cfg.components);
    if dim == 0 {
        return Err(Error::invalid("ubm training data has no dims"));
    }
    if k == 0 || k > n {
        return Err(Error::invalid(format!(
            "ubm with {k} components needs at least {k} frames, got {n}"
        )));
    }
    if !(cfg.variance_floor > 0.0) {
        return Err(Error::invalid("variance floor must be positive"));
    }

    let km = kmeans(feats.data(), dim, k, cfg.kmeans_iterations, rng)?;
    let mut counts = vec![0usize; k];
    let mut var_sum = vec![0.0; k * dim];
    for (i, &a) in km.assignments.iter().enumerate() {
        counts[a] += 1;
        for (d, &x) in feats.frame(i).iter().enumerate() {
            let diff = x - km.centroids[a * dim + d];
            var_sum[a * dim + d] += diff * diff;
        }
    }
    let weights = counts.iter().map(|&c| c as f64 / n as f64).collect();
    let variances = var_sum
        .iter()
        .enumerate()
        .map(|(i, &s)| (s / counts[i / dim].max(1) as f64).max(cfg.variance_floor))
        .collect();
    let mut ubm = Ubm {
        weights,
        means: km.centroids,
        variances,
        dim,
    };

    let mut history = Vec::with_capacity(cfg.iterations + 1);
    for _ in 0..cfg.iterations {
        let acc = ubm.accumulate(feats);
        history.push(acc.log_likelihood / n as f64);
        for c in 0..k {
            let occ = acc.occupancy[c];
            ubm.weights[c] = occ / n as f64;
            if occ <= 0.0 {
                continue;
            }
            for d in 0..dim {
                let i = c * dim + d;
                let mean = acc.first[i] / occ;
                ubm.means[i] = mean;
                ubm.variances[i] = (acc.second[i] / occ - mean * mean).max(cfg.variance_floor);
            }
        }
        let total: f64 = ubm.weights.iter().sum();
        for w in &mut ubm.weights {
            *w /= total;
        }
    }
    history.push(ubm.average_log_likelihood(feats));

    Ok(UbmFit {
        ubm,
        log_likelihood: history,
    })
}
