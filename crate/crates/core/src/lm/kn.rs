//! Interpolated modified Kneser-Ney estimation and count-threshold pruning.
//!
//! Adjusted counts are raw counts at the highest order and for n-grams that
//! start with `<s>`; every other n-gram uses its continuation count, the
//! number of distinct tokens seen to its left. At each order three discounts
//! are estimated from the count-of-counts `n_1..n_4` of the adjusted counts:
//!
//! ```text
//! Y = n1 / (n1 + 2 n2)
//! D_k = k - (k + 1) Y n_{k+1} / n_k        k = 1, 2, 3
//! ```
//!
//! Then, with `c` the adjusted count and `N_k(h)` the number of words whose
//! count after `h` is k (3 meaning 3 or more):
//!
//! ```text
//! p(w | h)  = (c(h w) - D(c(h w))) / sum_v c(h v) + gamma(h) p(w | h[1..])
//! gamma(h)  = (D_1 N_1(h) + D_2 N_2(h) + D_3 N_3(h)) / sum_v c(h v)
//! ```
//!
//! The unigram level interpolates with the uniform distribution over every
//! token except `<s>`. In backoff form, `gamma(h)` is exactly the backoff
//! weight of `h`.

use std::collections::HashMap;

use super::model::{Discounts, NGramEntry, NGramModel, NGramTable, LOG10_ZERO};
use super::NGramCounts;
use crate::error::{Error, Result};

pub fn estimate_discounts(adjusted: &HashMap<Vec<u32>, u64>, order: usize) -> Discounts {
    let mut n = [0u64; 5];
    for &c in adjusted.values() {
        if (1..=4).contains(&c) {
            n[c as usize] += 1;
        }
    }
    let fallback = || {
        log::warn!(
            "order {order}: degenerate count-of-counts {:?}, using fixed discount {}",
            &n[1..],
            Discounts::FALLBACK
        );
        Discounts {
            d1: Discounts::FALLBACK,
            d2: Discounts::FALLBACK,
            d3plus: Discounts::FALLBACK,
            fallback: true,
        }
    };
    if n[1..].contains(&0) {
        return fallback();
    }
    let nf = n.map(|v| v as f64);
    let y = nf[1] / (nf[1] + 2.0 * nf[2]);
    let d = |k: usize| k as f64 - (k + 1) as f64 * y * nf[k + 1] / nf[k];
    let (d1, d2, d3plus) = (d(1), d(2), d(3));
    if !(d1 > 0.0 && d1 < 1.0 && d2 > 0.0 && d2 < 2.0 && d3plus > 0.0 && d3plus < 3.0) {
        return fallback();
    }
    Discounts {
        d1,
        d2,
        d3plus,
        fallback: false,
    }
}

/// Adjusted counts per order, indexed like [`NGramCounts::order`].
pub fn adjusted_counts(counts: &NGramCounts) -> Vec<HashMap<Vec<u32>, u64>> {
    let n = counts.max_order();
    let bos = counts.vocab().bos();
    (1..=n)
        .map(|k| {
            if k == n {
                return counts.order(k).clone();
            }
            let mut left: HashMap<&[u32], u64> = HashMap::new();
            for g in counts.order(k + 1).keys() {
                *left.entry(&g[1..]).or_insert(0) += 1;
            }
            counts
                .order(k)
                .iter()
                .map(|(g, &c)| {
                    let adj = if g[0] == bos {
                        c
                    } else {
                        left.get(g.as_slice()).copied().unwrap_or(0)
                    };
                    (g.clone(), adj)
                })
                .filter(|&(_, adj)| adj > 0)
                .collect()
        })
        .collect()
}

#[derive(Default)]
struct ContextStats {
    total: u64,
    /// words with adjusted count 1, 2, 3+
    n: [u64; 3],
}

impl ContextStats {
    fn add(&mut self, c: u64) {
        self.total += c;
        self.n[(c.min(3) - 1) as usize] += 1;
    }

    fn gamma(&self, d: &Discounts) -> f64 {
        (d.d1 * self.n[0] as f64 + d.d2 * self.n[1] as f64 + d.d3plus * self.n[2] as f64) / self.total as f64
    }
}

pub fn kn_estimate(counts: &NGramCounts) -> Result<NGramModel> {
    let n = counts.max_order();
    let vocab = counts.vocab();
    let adjusted = adjusted_counts(counts);
    let discounts: Vec<Discounts> = adjusted
        .iter()
        .enumerate()
        .map(|(k, table)| estimate_discounts(table, k + 1))
        .collect();

    // linear probabilities per order, and gamma per context
    let mut probs: Vec<HashMap<Vec<u32>, f64>> = Vec::with_capacity(n);
    let mut gammas: Vec<HashMap<Vec<u32>, f64>> = Vec::with_capacity(n);

    let mut root = ContextStats::default();
    for &c in adjusted[0].values() {
        root.add(c);
    }
    if root.total == 0 {
        return Err(Error::invalid("counts contain no unigram events"));
    }
    let root_gamma = root.gamma(&discounts[0]);
    let uniform = 1.0 / vocab.predicted_len() as f64;
    let unigrams = vocab
        .predicted_ids()
        .map(|w| {
            let c = adjusted[0].get([w].as_slice()).copied().unwrap_or(0);
            let p = (c as f64 - discounts[0].for_count(c)).max(0.0) / root.total as f64 + root_gamma * uniform;
            (vec![w], p)
        })
        .collect();
    probs.push(unigrams);

    for k in 2..=n {
        let d = &discounts[k - 1];
        let mut stats: HashMap<&[u32], ContextStats> = HashMap::new();
        for (g, &c) in &adjusted[k - 1] {
            stats.entry(&g[..k - 1]).or_default().add(c);
        }
        let gamma: HashMap<&[u32], f64> = stats.iter().map(|(h, s)| (*h, s.gamma(d))).collect();
        let mut table = HashMap::with_capacity(adjusted[k - 1].len());
        for (g, &c) in &adjusted[k - 1] {
            let h = &g[..k - 1];
            let lower = probs[k - 2]
                .get(&g[1..])
                .copied()
                .ok_or_else(|| Error::Numerical(format!("order-{} suffix of an order-{k} n-gram is missing", k - 1)))?;
            let p = (c as f64 - d.for_count(c)) / stats[h].total as f64 + gamma[h] * lower;
            table.insert(g.clone(), p);
        }
        probs.push(table);
        gammas.push(gamma.into_iter().map(|(h, g)| (h.to_vec(), g)).collect());
    }

    let mut tables: Vec<NGramTable> = probs
        .into_iter()
        .map(|t| {
            t.into_iter()
                .map(|(g, p)| {
                    let e = NGramEntry {
                        log10_prob: p.log10(),
                        log10_backoff: None,
                    };
                    (g, e)
                })
                .collect()
        })
        .collect();
    tables[0].insert(
        vec![vocab.bos()],
        NGramEntry {
            log10_prob: LOG10_ZERO,
            log10_backoff: None,
        },
    );
    for (k, gamma) in gammas.into_iter().enumerate() {
        for (h, g) in gamma {
            let e = tables[k]
                .get_mut(&h)
                .ok_or_else(|| Error::Numerical(format!("context of order {} is not stored", k + 1)))?;
            e.log10_backoff = Some(g.log10());
        }
    }
    NGramModel::from_parts(vocab.clone(), tables, discounts)
}

/// Drops n-grams of order `k >= 2` whose raw count is below
/// `min_counts[k - 2]`, along with any n-gram whose prefix or suffix was
/// dropped. Surviving probabilities are kept and every backoff weight is
/// recomputed so each context still normalizes. Unigrams are never pruned.
pub fn prune_by_count(model: &NGramModel, counts: &NGramCounts, min_counts: &[u64]) -> Result<NGramModel> {
    let n = model.max_order();
    if min_counts.len() != n.saturating_sub(1) {
        return Err(Error::invalid(format!(
            "expected {} pruning thresholds for a {n}-gram model, got {}",
            n.saturating_sub(1),
            min_counts.len()
        )));
    }
    if counts.vocab() != model.vocab() || counts.max_order() != n {
        return Err(Error::invalid("counts do not belong to this model"));
    }

    let mut tables: Vec<NGramTable> = vec![model.order(1).clone()];
    for k in 2..=n {
        let prev = &tables[k - 2];
        let kept: NGramTable = model
            .order(k)
            .iter()
            .filter(|(g, _)| {
                counts.count(g) >= min_counts[k - 2] && prev.contains_key(&g[..k - 1]) && prev.contains_key(&g[1..])
            })
            .map(|(g, e)| (g.clone(), *e))
            .collect();
        tables.push(kept);
    }
    for t in &mut tables {
        t.values_mut().for_each(|e| e.log10_backoff = None);
    }
    let mut pruned = NGramModel::from_parts(model.vocab().clone(), tables, model.discounts().to_vec())?;

    for k in 1..n {
        let mut children: HashMap<Vec<u32>, (f64, f64)> = HashMap::new();
        for (g, e) in pruned.order(k + 1) {
            let h = &g[..k];
            let lower = 10f64.powf(pruned.log10_prob(g[k], &h[1..]));
            let acc = children.entry(h.to_vec()).or_insert((0.0, 0.0));
            acc.0 += 10f64.powf(e.log10_prob);
            acc.1 += lower;
        }
        let table = &mut pruned.tables_mut()[k - 1];
        for (h, (stored, lower)) in children {
            let (num, den) = (1.0 - stored, 1.0 - lower);
            if num > 0.0 && den > 1e-12 {
                if let Some(e) = table.get_mut(&h) {
                    e.log10_backoff = Some((num / den).log10());
                }
            }
        }
    }
    Ok(pruned)
}
