//! Word n-gram language models: counting, interpolated modified Kneser-Ney
//! estimation, pruning, linear interpolation, perplexity and ARPA I/O.
//!
//! Sentences are token-id sequences without boundary markers; `<s>` and
//! `</s>` are added internally. Every model predicts from the vocabulary
//! minus `<s>`, and `</s>` counts as a predicted event in perplexity.

mod arpa;
mod counts;
mod interp;
mod kn;
mod model;
mod vocab;

use rayon::prelude::*;

pub use arpa::{arpa_string, parse_arpa, read_arpa, read_arpa_file, write_arpa, write_arpa_file};
pub use counts::{count_ngrams, CountTable, NGramCounts};
pub use interp::{interp_fit, InterpFit, InterpolatedLM, EM_MAX_ITERATIONS, EM_TOLERANCE};
pub use kn::{adjusted_counts, estimate_discounts, kn_estimate, prune_by_count};
pub use model::{Discounts, NGramEntry, NGramModel, NGramTable, LOG10_ZERO};
pub use vocab::{read_corpus, read_corpus_file, read_vocab_file, write_vocab_file, Vocabulary, BOS, EOS, UNK};

use crate::error::{Error, Result};

pub const DEFAULT_ORDER: usize = 4;

pub trait LanguageModel: Sync {
    fn vocab(&self) -> &Vocabulary;

    fn max_order(&self) -> usize;

    /// `p(word | history)`, where `history` holds the preceding tokens
    /// starting with `<s>`. Only the last `max_order - 1` are used.
    fn prob(&self, word: u32, history: &[u32]) -> f64;

    fn ln_prob(&self, word: u32, history: &[u32]) -> f64 {
        self.prob(word, history).ln()
    }
}

/// Probability of every predicted event of `corpus`, sentence by sentence,
/// each sentence's words followed by its `</s>`.
pub fn token_probs<L: LanguageModel + ?Sized>(lm: &L, corpus: &[Vec<u32>]) -> Result<Vec<f64>> {
    let per_sentence: Vec<Vec<f64>> = corpus
        .par_iter()
        .map(|s| {
            let vocab = lm.vocab();
            let mut history = Vec::with_capacity(s.len() + 1);
            history.push(vocab.bos());
            let mut out = Vec::with_capacity(s.len() + 1);
            for &w in s.iter().chain(std::iter::once(&vocab.eos())) {
                out.push(lm.prob(w, &history));
                history.push(w);
            }
            out
        })
        .collect();
    let probs: Vec<f64> = per_sentence.into_iter().flatten().collect();
    if let Some(p) = probs.iter().find(|p| !(**p > 0.0 && p.is_finite())) {
        return Err(Error::Numerical(format!(
            "model assigned probability {p} to a corpus event"
        )));
    }
    Ok(probs)
}

/// `exp(-(1/W) sum ln p)` over all `W` predicted events.
pub fn perplexity<L: LanguageModel + ?Sized>(lm: &L, corpus: &[Vec<u32>]) -> Result<f64> {
    if corpus.is_empty() {
        return Err(Error::invalid("perplexity of an empty corpus"));
    }
    let vocab = lm.vocab();
    let ln_probs: Vec<f64> = corpus
        .par_iter()
        .map(|s| {
            let mut history = Vec::with_capacity(s.len() + 1);
            history.push(vocab.bos());
            s.iter()
                .chain(std::iter::once(&vocab.eos()))
                .map(|&w| {
                    let lp = lm.ln_prob(w, &history);
                    history.push(w);
                    lp
                })
                .collect::<Vec<f64>>()
        })
        .flatten()
        .collect();
    if let Some(lp) = ln_probs.iter().find(|lp| !lp.is_finite()) {
        return Err(Error::Numerical(format!(
            "model assigned log-probability {lp} to a corpus event"
        )));
    }
    let total: f64 = ln_probs.iter().sum();
    Ok((-total / ln_probs.len() as f64).exp())
}
