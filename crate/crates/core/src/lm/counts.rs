use std::collections::HashMap;

use rayon::prelude::*;

use super::Vocabulary;
use crate::error::{Error, Result};

pub type CountTable = HashMap<Vec<u32>, u64>;

/// Raw n-gram counts of a corpus, orders `1..=max_order`.
///
/// Each sentence is padded as `<s> w1 .. wn </s>`. An order-k event is any
/// k-token window of the padded sentence that does not end on `<s>`, so a
/// sentence of n words contributes `n + 1` unigram events and
/// `max(0, n + 3 - k)` events of order `k >= 2`.
#[derive(Debug, Clone, PartialEq)]
pub struct NGramCounts {
    max_order: usize,
    vocab: Vocabulary,
    tables: Vec<CountTable>,
}

const SHARD: usize = 256;

pub fn count_ngrams(corpus: &[Vec<u32>], max_order: usize, vocab: &Vocabulary) -> Result<NGramCounts> {
    if corpus.is_empty() {
        return Err(Error::invalid("cannot count n-grams of an empty corpus"));
    }
    if max_order == 0 {
        return Err(Error::invalid("max_order must be at least 1"));
    }
    for sentence in corpus {
        if let Some(&bad) = sentence
            .iter()
            .find(|&&id| id as usize >= vocab.len() || id == vocab.bos() || id == vocab.eos())
        {
            return Err(Error::invalid(format!(
                "token id {bad} is out of range or a boundary token inside a sentence"
            )));
        }
    }

    let tables = corpus
        .par_chunks(SHARD)
        .map(|shard| {
            let mut tables = vec![CountTable::new(); max_order];
            let mut padded = Vec::new();
            for sentence in shard {
                padded.clear();
                padded.push(vocab.bos());
                padded.extend_from_slice(sentence);
                padded.push(vocab.eos());
                for end in 1..padded.len() {
                    for k in 1..=max_order.min(end + 1) {
                        *tables[k - 1].entry(padded[end + 1 - k..=end].to_vec()).or_insert(0) += 1;
                    }
                }
            }
            tables
        })
        .reduce(
            || vec![CountTable::new(); max_order],
            |mut a, b| {
                merge_tables(&mut a, b);
                a
            },
        );

    Ok(NGramCounts {
        max_order,
        vocab: vocab.clone(),
        tables,
    })
}

fn merge_tables(into: &mut [CountTable], from: Vec<CountTable>) {
    for (dst, src) in into.iter_mut().zip(from) {
        for (k, v) in src {
            *dst.entry(k).or_insert(0) += v;
        }
    }
}

impl NGramCounts {
    pub fn max_order(&self) -> usize {
        self.max_order
    }

    pub fn vocab(&self) -> &Vocabulary {
        &self.vocab
    }

    /// Raw counts of order `k` (1-based).
    pub fn order(&self, k: usize) -> &CountTable {
        &self.tables[k - 1]
    }

    pub fn count(&self, ngram: &[u32]) -> u64 {
        if ngram.is_empty() || ngram.len() > self.max_order {
            return 0;
        }
        self.tables[ngram.len() - 1].get(ngram).copied().unwrap_or(0)
    }

    /// Number of order-k events, i.e. the sum of raw order-k counts.
    pub fn total(&self, k: usize) -> u64 {
        self.tables[k - 1].values().sum()
    }

    /// Number of distinct tokens seen immediately left of `ngram`.
    /// Only defined below the highest order.
    pub fn continuation_count(&self, ngram: &[u32]) -> Option<usize> {
        let k = ngram.len();
        if k == 0 || k >= self.max_order {
            return None;
        }
        Some(self.tables[k].keys().filter(|g| &g[1..] == ngram).count())
    }

    /// Adds `other`'s counts. Both must share vocabulary and order.
    pub fn merge(&mut self, other: NGramCounts) -> Result<()> {
        if other.max_order != self.max_order || other.vocab != self.vocab {
            return Err(Error::invalid("cannot merge counts of different order or vocabulary"));
        }
        merge_tables(&mut self.tables, other.tables);
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn setup(text: &[&str]) -> (Vocabulary, Vec<Vec<u32>>) {
        let sentences: Vec<Vec<&str>> = text.iter().map(|s| s.split_whitespace().collect()).collect();
        let vocab = Vocabulary::from_corpus(&sentences);
        let corpus = vocab.encode_corpus(&sentences);
        (vocab, corpus)
    }

    #[test]
    fn two_word_sentence() {
        let (v, c) = setup(&["a b"]);
        let counts = count_ngrams(&c, 2, &v).unwrap();
        let (a, b) = (v.id("a"), v.id("b"));
        assert_eq!(counts.count(&[v.bos(), a]), 1);
        assert_eq!(counts.count(&[a, b]), 1);
        assert_eq!(counts.count(&[b, v.eos()]), 1);
        assert_eq!(counts.order(2).len(), 3);
        assert_eq!(counts.count(&[v.bos()]), 0);
    }

    #[test]
    fn repeated_word_continuations() {
        let (v, c) = setup(&["a a a"]);
        let counts = count_ngrams(&c, 3, &v).unwrap();
        let a = v.id("a");
        assert_eq!(counts.count(&[a]), 3);
        assert_eq!(counts.continuation_count(&[a]), Some(2));
        assert_eq!(counts.continuation_count(&[v.eos()]), Some(1));
    }

    #[test]
    #[allow(clippy::identity_op)]
    fn event_totals() {
        let (v, c) = setup(&["a b c", "d", "e f"]);
        let counts = count_ngrams(&c, 4, &v).unwrap();
        // lengths 3, 1, 2
        assert_eq!(counts.total(1), 4 + 2 + 3);
        assert_eq!(counts.total(2), 4 + 2 + 3);
        assert_eq!(counts.total(3), 3 + 1 + 2);
        assert_eq!(counts.total(4), 2 + 0 + 1);
    }

    #[test]
    fn sentence_order_and_sharding_do_not_matter() {
        let text: Vec<String> = (0..700).map(|i| format!("w{} w{} w{}", i % 7, i % 5, i % 3)).collect();
        let refs: Vec<&str> = text.iter().map(String::as_str).collect();
        let (v, c) = setup(&refs);
        let mut reversed = c.clone();
        reversed.reverse();
        let a = count_ngrams(&c, 3, &v).unwrap();
        let b = count_ngrams(&reversed, 3, &v).unwrap();
        assert_eq!(a, b);

        let mut merged = count_ngrams(&c[..300], 3, &v).unwrap();
        merged.merge(count_ngrams(&c[300..], 3, &v).unwrap()).unwrap();
        assert_eq!(merged, a);
    }

    #[test]
    fn errors() {
        let (v, _) = setup(&["a"]);
        assert!(count_ngrams(&[], 3, &v).is_err());
        assert!(count_ngrams(&[vec![v.id("a")]], 0, &v).is_err());
        assert!(count_ngrams(&[vec![v.bos()]], 2, &v).is_err());
        assert!(count_ngrams(&[vec![99]], 2, &v).is_err());
    }
}
