//! ARPA text format.
//!
//! The writer is canonical: n-grams are sorted by their token strings and
//! every number is printed with ten decimals, so exporting an imported model
//! reproduces the file byte for byte.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use super::model::{NGramEntry, NGramModel, NGramTable, LOG10_ZERO};
use super::vocab::{BOS, EOS};
use super::Vocabulary;
use crate::error::{Error, Result};

fn fmt_log(v: f64) -> String {
    let s = format!("{v:.10}");
    if s.starts_with('-') && s[1..].bytes().all(|b| b == b'0' || b == b'.') {
        s[1..].to_string()
    } else {
        s
    }
}

pub fn arpa_string(model: &NGramModel) -> String {
    let vocab = model.vocab();
    let mut out = String::from("\\data\\\n");
    for k in 1..=model.max_order() {
        let _ = writeln!(out, "ngram {k}={}", model.order(k).len());
    }
    for k in 1..=model.max_order() {
        let _ = write!(out, "\n\\{k}-grams:\n");
        let mut rows: Vec<(Vec<&str>, &NGramEntry)> = model
            .order(k)
            .iter()
            .map(|(g, e)| (g.iter().map(|&id| vocab.token(id)).collect(), e))
            .collect();
        rows.sort_unstable_by(|a, b| a.0.cmp(&b.0));
        for (tokens, e) in rows {
            out.push_str(&fmt_log(e.log10_prob));
            out.push('\t');
            out.push_str(&tokens.join(" "));
            if let Some(bo) = e.log10_backoff {
                out.push('\t');
                out.push_str(&fmt_log(bo));
            }
            out.push('\n');
        }
    }
    out.push_str("\n\\end\\\n");
    out
}

pub fn write_arpa<W: Write>(model: &NGramModel, mut w: W) -> Result<()> {
    w.write_all(arpa_string(model).as_bytes())?;
    w.flush()?;
    Ok(())
}

pub fn write_arpa_file(model: &NGramModel, path: impl AsRef<Path>) -> Result<()> {
    write_arpa(model, File::create(path)?)
}

pub fn read_arpa_file(path: impl AsRef<Path>) -> Result<NGramModel> {
    read_arpa(BufReader::new(File::open(path)?))
}

pub fn parse_arpa(text: &str) -> Result<NGramModel> {
    read_arpa(text.as_bytes())
}

/// Parses an ARPA model. `<s>` and `</s>` must be listed as unigrams; a
/// missing `<unk>` is added with probability zero.
pub fn read_arpa<R: BufRead>(reader: R) -> Result<NGramModel> {
    let err = |line: usize, msg: String| Error::Arpa { line, msg };

    #[derive(PartialEq)]
    enum State {
        Preamble,
        Header,
        Section(usize),
        Done,
    }

    let mut state = State::Preamble;
    let mut declared: Vec<usize> = Vec::new();
    let mut raw: Vec<Vec<(Vec<String>, NGramEntry, usize)>> = Vec::new();
    let mut last_line = 0;

    for (i, line) in reader.lines().enumerate() {
        let lineno = i + 1;
        last_line = lineno;
        let line = line?;
        let line = line.trim();
        if state == State::Done {
            if !line.is_empty() {
                return Err(err(lineno, "content after \\end\\".into()));
            }
            continue;
        }
        if line.is_empty() {
            continue;
        }
        if line == "\\end\\" {
            if state == State::Preamble || state == State::Header {
                return Err(err(lineno, "\\end\\ before any n-gram section".into()));
            }
            state = State::Done;
            continue;
        }
        if line == "\\data\\" {
            if state != State::Preamble {
                return Err(err(lineno, "repeated \\data\\ header".into()));
            }
            state = State::Header;
            continue;
        }
        if let Some(rest) = line.strip_prefix('\\') {
            let order = rest
                .strip_suffix("-grams:")
                .and_then(|k| k.parse::<usize>().ok())
                .ok_or_else(|| err(lineno, format!("malformed section header {line:?}")))?;
            let expected = match state {
                State::Header => 1,
                State::Section(k) => k + 1,
                _ => return Err(err(lineno, "n-gram section before \\data\\".into())),
            };
            if order != expected || order > declared.len() {
                return Err(err(lineno, format!("unexpected section for order {order}")));
            }
            if let State::Section(k) = state {
                check_count(&raw, &declared, k).map_err(|m| err(lineno, m))?;
            }
            raw.push(Vec::new());
            state = State::Section(order);
            continue;
        }
        match state {
            State::Preamble => {}
            State::Header => {
                let (k, c) = line
                    .strip_prefix("ngram ")
                    .and_then(|r| r.split_once('='))
                    .and_then(|(k, c)| Some((k.trim().parse::<usize>().ok()?, c.trim().parse::<usize>().ok()?)))
                    .ok_or_else(|| err(lineno, format!("malformed count line {line:?}")))?;
                if k != declared.len() + 1 {
                    return Err(err(lineno, format!("count for order {k} out of sequence")));
                }
                declared.push(c);
            }
            State::Section(k) => {
                let fields: Vec<&str> = line.split_whitespace().collect();
                if fields.len() != k + 1 && fields.len() != k + 2 {
                    return Err(err(
                        lineno,
                        format!("expected {} or {} fields, found {}", k + 1, k + 2, fields.len()),
                    ));
                }
                let number = |s: &str| {
                    s.parse::<f64>()
                        .ok()
                        .filter(|v| v.is_finite())
                        .ok_or_else(|| err(lineno, format!("non-numeric field {s:?}")))
                };
                let log10_prob = number(fields[0])?;
                if log10_prob > 0.0 {
                    return Err(err(lineno, "probability above 1".into()));
                }
                let log10_backoff = fields.get(k + 1).map(|s| number(s)).transpose()?;
                let tokens = fields[1..=k].iter().map(|s| s.to_string()).collect();
                raw[k - 1].push((
                    tokens,
                    NGramEntry {
                        log10_prob,
                        log10_backoff,
                    },
                    lineno,
                ));
            }
            State::Done => unreachable!(),
        }
    }

    if state != State::Done {
        return Err(err(last_line, "missing \\end\\".into()));
    }
    check_count(&raw, &declared, raw.len()).map_err(|m| err(last_line, m))?;
    if raw.len() != declared.len() {
        return Err(err(
            last_line,
            format!("{} orders declared, {} present", declared.len(), raw.len()),
        ));
    }

    let unigram_tokens: Vec<&str> = raw[0].iter().map(|(t, _, _)| t[0].as_str()).collect();
    for special in [BOS, EOS] {
        if !unigram_tokens.contains(&special) {
            return Err(err(last_line, format!("{special} is not a unigram")));
        }
    }
    let vocab = Vocabulary::from_tokens(unigram_tokens.iter().copied()).map_err(|e| {
        let line = raw[0].last().map_or(last_line, |r| r.2);
        err(line, e.to_string())
    })?;

    let mut tables: Vec<NGramTable> = Vec::with_capacity(raw.len());
    for rows in raw {
        let mut table: NGramTable = HashMap::with_capacity(rows.len());
        for (tokens, entry, lineno) in rows {
            let ids = tokens
                .iter()
                .map(|t| {
                    vocab
                        .lookup(t)
                        .ok_or_else(|| err(lineno, format!("token {t:?} is not a unigram")))
                })
                .collect::<Result<Vec<u32>>>()?;
            if table.insert(ids, entry).is_some() {
                return Err(err(lineno, "duplicate n-gram".into()));
            }
        }
        tables.push(table);
    }
    tables[0].entry(vec![vocab.unk()]).or_insert(NGramEntry {
        log10_prob: LOG10_ZERO,
        log10_backoff: None,
    });
    NGramModel::from_parts(vocab, tables, Vec::new())
}

fn check_count(
    raw: &[Vec<(Vec<String>, NGramEntry, usize)>],
    declared: &[usize],
    order: usize,
) -> std::result::Result<(), String> {
    if order == 0 {
        return Ok(());
    }
    let found = raw[order - 1].len();
    if found != declared[order - 1] {
        return Err(format!(
            "order {order} declares {} n-grams but lists {found}",
            declared[order - 1]
        ));
    }
    Ok(())
}
