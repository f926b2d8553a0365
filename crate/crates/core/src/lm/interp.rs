use rayon::prelude::*;

use super::{token_probs, LanguageModel, NGramModel, Vocabulary};
use crate::error::{Error, Result};

pub const EM_TOLERANCE: f64 = 1e-6;
pub const EM_MAX_ITERATIONS: usize = 200;

/// Linear mixture `sum_i w_i p_i(w | h)` of models over one vocabulary.
#[derive(Debug, Clone, PartialEq)]
pub struct InterpolatedLM {
    components: Vec<NGramModel>,
    weights: Vec<f64>,
}

impl InterpolatedLM {
    /// Weights must be non-negative and sum to 1 within 1e-9; they are
    /// rescaled to sum to 1 exactly up to rounding.
    pub fn new(components: Vec<NGramModel>, weights: Vec<f64>) -> Result<Self> {
        if components.is_empty() || components.len() != weights.len() {
            return Err(Error::invalid(
                "need one weight per component and at least one component",
            ));
        }
        if let Some(other) = components[1..].iter().find(|c| c.vocab() != components[0].vocab()) {
            return Err(Error::invalid(format!(
                "mixture components must share one vocabulary ({} vs {} tokens); train them with a common word list",
                components[0].vocab().len(),
                other.vocab().len()
            )));
        }
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::invalid("mixture weights must be finite and non-negative"));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::invalid(format!("mixture weights sum to {total}, not 1")));
        }
        let weights = weights.into_iter().map(|w| w / total).collect();
        Ok(Self { components, weights })
    }

    pub fn components(&self) -> &[NGramModel] {
        &self.components
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }
}

impl LanguageModel for InterpolatedLM {
    fn vocab(&self) -> &Vocabulary {
        self.components[0].vocab()
    }

    fn max_order(&self) -> usize {
        self.components.iter().map(NGramModel::max_order).max().unwrap_or(1)
    }

    fn prob(&self, word: u32, history: &[u32]) -> f64 {
        self.components
            .iter()
            .zip(&self.weights)
            .filter(|(_, &w)| w > 0.0)
            .map(|(c, &w)| w * c.prob(word, history))
            .sum()
    }
}

#[derive(Debug, Clone)]
pub struct InterpFit {
    pub lm: InterpolatedLM,
    /// Total natural-log dev likelihood of the starting weights and after
    /// each EM step. A final entry is appended if a single component beat
    /// the EM solution.
    pub dev_log_likelihood: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

fn log_likelihood(probs: &[Vec<f64>], weights: &[f64]) -> f64 {
    let tokens = probs[0].len();
    (0..tokens)
        .map(|t| weights.iter().zip(probs).map(|(w, p)| w * p[t]).sum::<f64>().ln())
        .sum()
}

/// Fits mixture weights by EM on per-token dev probabilities, starting from
/// uniform weights. Stops once no weight moves by `EM_TOLERANCE` or after
/// `EM_MAX_ITERATIONS` steps. If a single component has a higher dev
/// likelihood than the EM weights, that corner is returned instead.
pub fn interp_fit(components: Vec<NGramModel>, dev: &[Vec<u32>]) -> Result<InterpFit> {
    if dev.is_empty() {
        return Err(Error::invalid("development corpus is empty"));
    }
    let m = components.len();
    let uniform = vec![1.0 / m as f64; m];
    let mut lm = InterpolatedLM::new(components, uniform)?;
    let probs: Vec<Vec<f64>> = lm
        .components
        .par_iter()
        .map(|c| token_probs(c, dev))
        .collect::<Result<_>>()?;

    let mut weights = lm.weights.clone();
    let mut history = vec![log_likelihood(&probs, &weights)];
    let mut iterations = 0;
    let mut converged = false;
    while iterations < EM_MAX_ITERATIONS {
        let mut next = vec![0.0; m];
        for t in 0..probs[0].len() {
            let mix: f64 = weights.iter().zip(&probs).map(|(w, p)| w * p[t]).sum();
            for (i, p) in probs.iter().enumerate() {
                next[i] += weights[i] * p[t] / mix;
            }
        }
        let total: f64 = next.iter().sum();
        next.iter_mut().for_each(|w| *w /= total);
        let delta = next
            .iter()
            .zip(&weights)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        weights = next;
        iterations += 1;
        history.push(log_likelihood(&probs, &weights));
        if delta < EM_TOLERANCE {
            converged = true;
            break;
        }
    }

    let em_ll = *history.last().expect("history starts non-empty");
    let best_corner = (0..m)
        .map(|i| (i, probs[i].iter().map(|p| p.ln()).sum::<f64>()))
        .max_by(|a, b| a.1.total_cmp(&b.1))
        .expect("at least one component");
    if best_corner.1 > em_ll {
        weights = vec![0.0; m];
        weights[best_corner.0] = 1.0;
        history.push(best_corner.1);
    }
    lm.weights = weights;
    Ok(InterpFit {
        lm,
        dev_log_likelihood: history,
        iterations,
        converged,
    })
}
