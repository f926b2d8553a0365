use std::collections::{BTreeSet, HashMap};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use crate::error::{Error, Result};

pub const BOS: &str = "<s>";
pub const EOS: &str = "</s>";
pub const UNK: &str = "<unk>";

/// Closed word list with the three boundary/unknown tokens.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocabulary {
    tokens: Vec<String>,
    ids: HashMap<String, u32>,
    bos: u32,
    eos: u32,
    unk: u32,
}

impl Vocabulary {
    /// Keeps `tokens` in order (position = id) and appends any special token
    /// that is missing. Duplicates and whitespace inside tokens are rejected.
    pub fn from_tokens<I, S>(tokens: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let mut list: Vec<String> = Vec::new();
        let mut ids = HashMap::new();
        for tok in tokens {
            let tok = tok.into();
            if tok.is_empty() || tok.chars().any(char::is_whitespace) {
                return Err(Error::invalid(format!("invalid vocabulary token {tok:?}")));
            }
            let id = u32::try_from(list.len()).map_err(|_| Error::invalid("vocabulary too large"))?;
            if ids.insert(tok.clone(), id).is_some() {
                return Err(Error::invalid(format!("duplicate vocabulary token {tok:?}")));
            }
            list.push(tok);
        }
        for special in [BOS, EOS, UNK] {
            if !ids.contains_key(special) {
                ids.insert(special.to_string(), list.len() as u32);
                list.push(special.to_string());
            }
        }
        Ok(Self {
            bos: ids[BOS],
            eos: ids[EOS],
            unk: ids[UNK],
            tokens: list,
            ids,
        })
    }

    /// Specials first, then every distinct corpus token in byte order, so the
    /// result does not depend on sentence order.
    pub fn from_corpus<S: AsRef<str>>(sentences: &[Vec<S>]) -> Self {
        let words: BTreeSet<&str> = sentences
            .iter()
            .flatten()
            .map(AsRef::as_ref)
            .filter(|w| ![BOS, EOS, UNK].contains(w))
            .collect();
        Self::from_tokens([BOS, EOS, UNK].into_iter().chain(words))
            .expect("corpus tokens are whitespace-free and distinct")
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn bos(&self) -> u32 {
        self.bos
    }

    pub fn eos(&self) -> u32 {
        self.eos
    }

    pub fn unk(&self) -> u32 {
        self.unk
    }

    pub fn token(&self, id: u32) -> &str {
        &self.tokens[id as usize]
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn lookup(&self, token: &str) -> Option<u32> {
        self.ids.get(token).copied()
    }

    /// Out-of-vocabulary words, and boundary tokens appearing inside text,
    /// map to `<unk>`.
    pub fn id(&self, token: &str) -> u32 {
        match self.ids.get(token) {
            Some(&id) if id != self.bos && id != self.eos => id,
            _ => self.unk,
        }
    }

    pub fn encode<S: AsRef<str>>(&self, sentence: &[S]) -> Vec<u32> {
        sentence.iter().map(|w| self.id(w.as_ref())).collect()
    }

    pub fn encode_corpus<S: AsRef<str>>(&self, sentences: &[Vec<S>]) -> Vec<Vec<u32>> {
        sentences.iter().map(|s| self.encode(s)).collect()
    }

    /// Ids that can be predicted: everything but `<s>`.
    pub fn predicted_ids(&self) -> impl Iterator<Item = u32> + '_ {
        (0..self.tokens.len() as u32).filter(move |&id| id != self.bos)
    }

    pub fn predicted_len(&self) -> usize {
        self.tokens.len() - 1
    }
}

/// One sentence per line, whitespace-tokenized; blank lines are skipped.
pub fn read_corpus<R: BufRead>(reader: R) -> Result<Vec<Vec<String>>> {
    let mut out = Vec::new();
    for line in reader.lines() {
        let line = line?;
        let words: Vec<String> = line.split_whitespace().map(str::to_string).collect();
        if !words.is_empty() {
            out.push(words);
        }
    }
    Ok(out)
}

pub fn read_corpus_file(path: impl AsRef<Path>) -> Result<Vec<Vec<String>>> {
    read_corpus(BufReader::new(File::open(path)?))
}

/// One token per line; the line index is the id.
pub fn read_vocab_file(path: impl AsRef<Path>) -> Result<Vocabulary> {
    let reader = BufReader::new(File::open(path)?);
    let mut tokens = Vec::new();
    for line in reader.lines() {
        let line = line?;
        let tok = line.trim();
        if !tok.is_empty() {
            tokens.push(tok.to_string());
        }
    }
    Vocabulary::from_tokens(tokens)
}

pub fn write_vocab_file(vocab: &Vocabulary, path: impl AsRef<Path>) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    for tok in vocab.tokens() {
        writeln!(w, "{tok}")?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn specials_are_added_once() {
        let v = Vocabulary::from_tokens(["a", "<s>", "b"]).unwrap();
        assert_eq!(v.len(), 5);
        assert_eq!(v.bos(), 1);
        assert_eq!(v.token(v.eos()), EOS);
        assert_eq!(v.token(v.unk()), UNK);
        assert!(Vocabulary::from_tokens(["a", "a"]).is_err());
        assert!(Vocabulary::from_tokens(["a b"]).is_err());
    }

    #[test]
    fn mapping_is_bijective() {
        let corpus = vec![vec!["the", "cat"], vec!["a", "cat", "sat"]];
        let v = Vocabulary::from_corpus(&corpus);
        for id in 0..v.len() as u32 {
            assert_eq!(v.lookup(v.token(id)), Some(id));
        }
        assert_eq!(v.predicted_ids().count(), v.predicted_len());
    }

    #[test]
    fn oov_and_inline_boundaries_map_to_unk() {
        let v = Vocabulary::from_corpus(&[vec!["x"]]);
        assert_eq!(
            v.encode(&["x", "y", "<s>", "</s>"]),
            vec![v.id("x"), v.unk(), v.unk(), v.unk()]
        );
    }

    #[test]
    fn corpus_order_does_not_matter() {
        let a = Vocabulary::from_corpus(&[vec!["b", "a"], vec!["c"]]);
        let b = Vocabulary::from_corpus(&[vec!["c"], vec!["a", "b"]]);
        assert_eq!(a, b);
    }
}
