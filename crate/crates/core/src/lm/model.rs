use std::collections::HashMap;

use super::{LanguageModel, Vocabulary};
use crate::error::{Error, Result};

/// log10 probability used for events the model assigns no mass, such as
/// predicting `<s>`.
pub const LOG10_ZERO: f64 = -99.0;

/// One stored n-gram: its conditional probability and, if it is the context
/// of longer stored n-grams, its backoff weight. Both in log10.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NGramEntry {
    pub log10_prob: f64,
    pub log10_backoff: Option<f64>,
}

/// Discounts for adjusted counts 1, 2 and 3+ at one order.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Discounts {
    pub d1: f64,
    pub d2: f64,
    pub d3plus: f64,
    /// Count-of-counts were degenerate and the fixed fallback was used.
    pub fallback: bool,
}

impl Discounts {
    pub const FALLBACK: f64 = 0.5;

    pub fn for_count(&self, count: u64) -> f64 {
        match count {
            0 => 0.0,
            1 => self.d1,
            2 => self.d2,
            _ => self.d3plus,
        }
    }
}

pub type NGramTable = HashMap<Vec<u32>, NGramEntry>;

/// Backoff n-gram model in ARPA form.
///
/// `p(w | h)` is the stored probability of `h w` when present, otherwise
/// `backoff(h) * p(w | h[1..])`, with a missing backoff weight meaning 1.
/// Every vocabulary token has a unigram entry.
#[derive(Debug, Clone, PartialEq)]
pub struct NGramModel {
    vocab: Vocabulary,
    tables: Vec<NGramTable>,
    discounts: Vec<Discounts>,
}

impl NGramModel {
    /// `tables[k - 1]` holds order k. `discounts` is either empty or has one
    /// entry per order.
    pub fn from_parts(vocab: Vocabulary, tables: Vec<NGramTable>, discounts: Vec<Discounts>) -> Result<Self> {
        if tables.is_empty() {
            return Err(Error::invalid("model needs at least a unigram table"));
        }
        if !discounts.is_empty() && discounts.len() != tables.len() {
            return Err(Error::invalid("one discount set per order expected"));
        }
        for id in 0..vocab.len() as u32 {
            if !tables[0].contains_key([id].as_slice()) {
                return Err(Error::invalid(format!(
                    "token {:?} has no unigram entry",
                    vocab.token(id)
                )));
            }
        }
        for (k, table) in tables.iter().enumerate() {
            for (ngram, e) in table {
                if ngram.len() != k + 1 || ngram.iter().any(|&id| id as usize >= vocab.len()) {
                    return Err(Error::invalid("n-gram key does not fit its table"));
                }
                if !e.log10_prob.is_finite() || e.log10_prob > 1e-9 {
                    return Err(Error::invalid("n-gram probability outside (0, 1]"));
                }
            }
        }
        Ok(Self {
            vocab,
            tables,
            discounts,
        })
    }

    /// Unigram model giving every predictable token the same probability.
    pub fn uniform(vocab: Vocabulary) -> Self {
        let lp = -(vocab.predicted_len() as f64).log10();
        let table = (0..vocab.len() as u32)
            .map(|id| {
                let log10_prob = if id == vocab.bos() { LOG10_ZERO } else { lp };
                (
                    vec![id],
                    NGramEntry {
                        log10_prob,
                        log10_backoff: None,
                    },
                )
            })
            .collect();
        Self {
            vocab,
            tables: vec![table],
            discounts: Vec::new(),
        }
    }

    pub fn max_order(&self) -> usize {
        self.tables.len()
    }

    pub fn vocab(&self) -> &Vocabulary {
        &self.vocab
    }

    /// Stored n-grams of order `k` (1-based).
    pub fn order(&self, k: usize) -> &NGramTable {
        &self.tables[k - 1]
    }

    pub fn tables(&self) -> &[NGramTable] {
        &self.tables
    }

    pub fn entry(&self, ngram: &[u32]) -> Option<&NGramEntry> {
        if ngram.is_empty() || ngram.len() > self.tables.len() {
            return None;
        }
        self.tables[ngram.len() - 1].get(ngram)
    }

    /// Estimated discounts per order; empty for imported models.
    pub fn discounts(&self) -> &[Discounts] {
        &self.discounts
    }

    /// Stored n-grams that carry a backoff weight, i.e. contexts of longer
    /// stored n-grams.
    pub fn contexts(&self) -> impl Iterator<Item = &[u32]> + '_ {
        self.tables
            .iter()
            .flat_map(|t| t.iter())
            .filter(|(_, e)| e.log10_backoff.is_some())
            .map(|(g, _)| g.as_slice())
    }

    pub fn log10_prob(&self, word: u32, history: &[u32]) -> f64 {
        let word = if (word as usize) < self.vocab.len() {
            word
        } else {
            self.vocab.unk()
        };
        let ctx = &history[history.len().saturating_sub(self.tables.len() - 1)..];
        let mut key = Vec::with_capacity(ctx.len() + 1);
        let mut backoff = 0.0;
        for start in 0..=ctx.len() {
            key.clear();
            key.extend_from_slice(&ctx[start..]);
            key.push(word);
            if let Some(e) = self.tables[key.len() - 1].get(&key) {
                return backoff + e.log10_prob;
            }
            if start < ctx.len() {
                if let Some(bo) = self.entry(&ctx[start..]).and_then(|e| e.log10_backoff) {
                    backoff += bo;
                }
            }
        }
        backoff + LOG10_ZERO
    }

    pub(crate) fn tables_mut(&mut self) -> &mut Vec<NGramTable> {
        &mut self.tables
    }
}

impl LanguageModel for NGramModel {
    fn vocab(&self) -> &Vocabulary {
        &self.vocab
    }

    fn max_order(&self) -> usize {
        self.tables.len()
    }

    fn prob(&self, word: u32, history: &[u32]) -> f64 {
        10f64.powf(self.log10_prob(word, history))
    }

    fn ln_prob(&self, word: u32, history: &[u32]) -> f64 {
        self.log10_prob(word, history) * std::f64::consts::LN_10
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn entry(lp: f64, bo: Option<f64>) -> NGramEntry {
        NGramEntry {
            log10_prob: lp,
            log10_backoff: bo,
        }
    }

    /// Hand-built bigram model over {a, b}.
    fn toy() -> NGramModel {
        let v = Vocabulary::from_tokens(["<s>", "</s>", "<unk>", "a", "b"]).unwrap();
        let uni: NGramTable = [
            (vec![0], entry(LOG10_ZERO, Some(0.625f64.log10()))),
            (vec![1], entry(0.3f64.log10(), None)),
            (vec![2], entry(0.1f64.log10(), None)),
            (vec![3], entry(0.4f64.log10(), Some(0.125f64.log10()))),
            (vec![4], entry(0.2f64.log10(), None)),
        ]
        .into_iter()
        .collect();
        let bi: NGramTable = [
            (vec![0, 3], entry(0.5f64.log10(), None)),
            (vec![0, 4], entry(0.25f64.log10(), None)),
            (vec![3, 4], entry(0.9f64.log10(), None)),
        ]
        .into_iter()
        .collect();
        NGramModel::from_parts(v, vec![uni, bi], Vec::new()).unwrap()
    }

    #[test]
    fn backoff_expansion() {
        let m = toy();
        let close = |a: f64, b: f64| (a - b).abs() < 1e-12;
        assert!(close(m.prob(3, &[0]), 0.5));
        // unseen after <s>: bow(<s>) * p(</s>)
        assert!(close(m.prob(1, &[0]), 0.625 * 0.3));
        // unseen after a: bow(a) * p(a)
        assert!(close(m.prob(3, &[3]), 0.125 * 0.4));
        // context b has no backoff weight
        assert!(close(m.prob(1, &[4]), 0.3));
        // history longer than the order is truncated
        assert!(close(m.prob(4, &[4, 4, 3]), 0.9));
        assert!(close(m.prob(4, &[]), 0.2));
    }

    #[test]
    fn stored_contexts_normalize() {
        let m = toy();
        for ctx in m.contexts() {
            let s: f64 = m.vocab().predicted_ids().map(|w| m.prob(w, ctx)).sum();
            assert!((s - 1.0).abs() < 1e-12, "{ctx:?}: {s}");
        }
    }

    #[test]
    fn uniform_model() {
        let v = Vocabulary::from_tokens(["x", "y", "z"]).unwrap();
        let m = NGramModel::uniform(v);
        for w in m.vocab().predicted_ids() {
            assert!((m.prob(w, &[0, 1]) - 0.2).abs() < 1e-15);
        }
    }

    #[test]
    fn missing_unigram_rejected() {
        let v = Vocabulary::from_tokens(["a"]).unwrap();
        let uni: NGramTable = [(vec![0], entry(-1.0, None))].into_iter().collect();
        assert!(NGramModel::from_parts(v, vec![uni], Vec::new()).is_err());
    }
}
