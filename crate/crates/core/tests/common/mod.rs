//! Independent reference implementations used as test oracles. They share no
//! code with the library: different RNG, string-keyed counts, direct
//! recursion instead of backoff tables.

#![allow(dead_code)]

use std::cell::RefCell;
use std::collections::{HashMap, HashSet};

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

/// Reference masking setups, as
/// `(time "MxL", feature "NxL", feature masks may reach the embedding)`.
pub const MASK_TABLE: [(&str, &str, bool); 12] = [
    ("15x2", "5x18", true),
    ("6x5", "5x18", true),
    ("3x10", "5x18", true),
    ("2x15", "5x18", true),
    ("1x30", "5x18", true),
    ("2x10", "5x18", true),
    ("4x10", "5x18", true),
    ("3x10", "10x9", true),
    ("3x10", "3x30", true),
    ("3x10", "3x18", true),
    ("3x10", "7x18", true),
    ("3x10", "5x8", false),
];

/// Mean masked-time and masked-dim fractions from a minimal sampler:
/// `m ~ U[1, M]`, then per mask `t ~ U[1, T]`, `L ~ U[0, dt_max]`, zeroing
/// 1-based frames `t .. t + L - 1` that exist; the same along dims, with
/// positions drawn from `[1, dim_limit]` and spans cut at `dim_limit`.
#[allow(clippy::too_many_arguments)]
pub fn brute_force_mask_fractions(
    (m_max, dt_max): (usize, usize),
    (n_max, dd_max): (usize, usize),
    frames: usize,
    dims: usize,
    dim_limit: usize,
    trials: usize,
    seed: u64,
) -> (f64, f64) {
    let mut rng = StdRng::seed_from_u64(seed);
    let (mut time_total, mut dim_total) = (0.0, 0.0);
    for _ in 0..trials {
        let mut t_hit = vec![false; frames + 1];
        if m_max > 0 {
            for _ in 0..rng.random_range(1..=m_max) {
                let t = rng.random_range(1..=frames);
                let len = rng.random_range(0..=dt_max);
                for hit in t_hit.iter_mut().take(frames + 1).skip(t).take(len) {
                    *hit = true;
                }
            }
        }
        let mut d_hit = vec![false; dims + 1];
        if n_max > 0 {
            for _ in 0..rng.random_range(1..=n_max) {
                let d = rng.random_range(1..=dim_limit);
                let len = rng.random_range(0..=dd_max);
                for hit in d_hit.iter_mut().take(dim_limit + 1).skip(d).take(len) {
                    *hit = true;
                }
            }
        }
        time_total += t_hit.iter().filter(|&&h| h).count() as f64 / frames as f64;
        dim_total += d_hit.iter().filter(|&&h| h).count() as f64 / dims as f64;
    }
    (time_total / trials as f64, dim_total / trials as f64)
}

/// Interpolated modified Kneser-Ney computed straight from the definition.
pub struct KnOracle {
    order: usize,
    raw: HashMap<Vec<String>, u64>,
    left: HashMap<Vec<String>, HashSet<String>>,
    predicted: Vec<String>,
    discounts: Vec<[f64; 3]>,
    memo: RefCell<HashMap<Vec<String>, (f64, f64)>>,
}

impl KnOracle {
    /// `predicted` lists every token that can be predicted (vocabulary
    /// without `<s>`).
    pub fn new(sentences: &[Vec<String>], order: usize, predicted: Vec<String>) -> Self {
        let mut raw: HashMap<Vec<String>, u64> = HashMap::new();
        for s in sentences {
            let mut padded = vec!["<s>".to_string()];
            padded.extend(s.iter().cloned());
            padded.push("</s>".to_string());
            for end in 1..padded.len() {
                for k in 1..=order {
                    if end + 1 >= k {
                        *raw.entry(padded[end + 1 - k..=end].to_vec()).or_default() += 1;
                    }
                }
            }
        }
        let mut left: HashMap<Vec<String>, HashSet<String>> = HashMap::new();
        for g in raw.keys() {
            if g.len() >= 2 {
                left.entry(g[1..].to_vec()).or_default().insert(g[0].clone());
            }
        }
        let mut oracle = Self {
            order,
            raw,
            left,
            predicted,
            discounts: Vec::new(),
            memo: RefCell::new(HashMap::new()),
        };
        oracle.discounts = (1..=order).map(|k| oracle.discounts_for(k)).collect();
        oracle
    }

    pub fn raw(&self, g: &[String]) -> u64 {
        self.raw.get(g).copied().unwrap_or(0)
    }

    fn adjusted(&self, g: &[String]) -> u64 {
        if self.raw(g) == 0 {
            return 0;
        }
        if g.len() == self.order || g[0] == "<s>" {
            self.raw(g)
        } else {
            self.left.get(g).map_or(0, |s| s.len() as u64)
        }
    }

    fn discounts_for(&self, k: usize) -> [f64; 3] {
        let mut n = [0f64; 5];
        for g in self.raw.keys().filter(|g| g.len() == k) {
            let c = self.adjusted(g);
            if (1..=4).contains(&c) {
                n[c as usize] += 1.0;
            }
        }
        let fallback = [0.5; 3];
        if n[1..].contains(&0.0) {
            return fallback;
        }
        let y = n[1] / (n[1] + 2.0 * n[2]);
        let d: Vec<f64> = (1..=3)
            .map(|j| j as f64 - (j + 1) as f64 * y * n[j + 1] / n[j])
            .collect();
        if (0..3).all(|j| d[j] > 0.0 && d[j] < (j + 1) as f64) {
            [d[0], d[1], d[2]]
        } else {
            fallback
        }
    }

    fn discount(&self, k: usize, c: u64) -> f64 {
        match c {
            0 => 0.0,
            1 => self.discounts[k - 1][0],
            2 => self.discounts[k - 1][1],
            _ => self.discounts[k - 1][2],
        }
    }

    /// `(sum of adjusted counts after h, gamma(h))`.
    fn context(&self, h: &[String]) -> (f64, f64) {
        if let Some(&v) = self.memo.borrow().get(h) {
            return v;
        }
        let k = h.len() + 1;
        let (mut total, mut held) = (0.0, 0.0);
        for v in &self.predicted {
            let mut g = h.to_vec();
            g.push(v.clone());
            let c = self.adjusted(&g);
            total += c as f64;
            held += self.discount(k, c);
        }
        let out = (total, if total > 0.0 { held / total } else { 0.0 });
        self.memo.borrow_mut().insert(h.to_vec(), out);
        out
    }

    pub fn prob(&self, w: &str, history: &[String]) -> f64 {
        let h = &history[history.len().saturating_sub(self.order - 1)..];
        let (total, gamma) = self.context(h);
        let lower = if h.is_empty() {
            1.0 / self.predicted.len() as f64
        } else {
            self.prob(w, &h[1..])
        };
        if total == 0.0 {
            return lower;
        }
        let mut g = h.to_vec();
        g.push(w.to_string());
        let c = self.adjusted(&g);
        (c as f64 - self.discount(g.len(), c)).max(0.0) / total + gamma * lower
    }
}

/// Deterministic toy text: `sentences` lines over `vocab` words with a
/// skewed, locally repetitive distribution so every count-of-count bucket
/// is populated.
pub fn toy_corpus(sentences: usize, vocab: usize, seed: u64) -> Vec<Vec<String>> {
    let mut rng = StdRng::seed_from_u64(seed);
    (0..sentences)
        .map(|_| {
            let len = rng.random_range(1..=12);
            let mut prev = rng.random_range(0..vocab);
            (0..len)
                .map(|_| {
                    let u: f64 = rng.random();
                    prev = if u < 0.5 {
                        (prev * 7 + 3) % vocab
                    } else {
                        // Zipf-like draw
                        let r: f64 = rng.random();
                        ((vocab as f64).powf(r) as usize).min(vocab) - 1
                    };
                    format!("w{prev}")
                })
                .collect()
        })
        .collect()
}

/// `n` frames of `dim`-dimensional data drawn from `k` Gaussian clusters
/// with random centres and per-cluster scales.
pub fn gaussian_clusters(seed: u64, n: usize, dim: usize, k: usize) -> Vec<Vec<f64>> {
    use rand_distr::{Distribution, Normal};
    let mut rng = StdRng::seed_from_u64(seed);
    let std = Normal::new(0.0, 1.0).unwrap();
    let centres: Vec<Vec<f64>> = (0..k)
        .map(|_| (0..dim).map(|_| rng.random_range(-8.0..8.0)).collect())
        .collect();
    let scales: Vec<f64> = (0..k).map(|_| rng.random_range(0.3..2.0)).collect();
    (0..n)
        .map(|_| {
            let c = rng.random_range(0..k);
            centres[c]
                .iter()
                .map(|m| m + scales[c] * std.sample(&mut rng))
                .collect()
        })
        .collect()
}

/// Fisher discriminant `Sw^-1 (mu1 - mu0)` of two labelled 2-D classes,
/// solved with the explicit 2x2 inverse.
pub fn fisher_direction_2d(rows: &[Vec<f64>], labels: &[u32]) -> [f64; 2] {
    let mut mean = [[0.0; 2]; 2];
    let mut count = [0.0; 2];
    for (r, &l) in rows.iter().zip(labels) {
        mean[l as usize][0] += r[0];
        mean[l as usize][1] += r[1];
        count[l as usize] += 1.0;
    }
    for c in 0..2 {
        mean[c][0] /= count[c];
        mean[c][1] /= count[c];
    }
    let (mut a, mut b, mut d) = (0.0, 0.0, 0.0);
    for (r, &l) in rows.iter().zip(labels) {
        let (x, y) = (r[0] - mean[l as usize][0], r[1] - mean[l as usize][1]);
        a += x * x;
        b += x * y;
        d += y * y;
    }
    let det = a * d - b * b;
    let (dx, dy) = (mean[1][0] - mean[0][0], mean[1][1] - mean[0][1]);
    [(d * dx - b * dy) / det, (a * dy - b * dx) / det]
}

/// Two correlated, anisotropic 2-D classes whose Fisher direction differs
/// clearly from the difference of their means.
pub fn two_class_data(seed: u64, per_class: usize) -> (Vec<Vec<f64>>, Vec<u32>) {
    use rand_distr::{Distribution, Normal};
    let mut rng = StdRng::seed_from_u64(seed);
    let std = Normal::new(0.0, 1.0).unwrap();
    let mut rows = Vec::new();
    let mut labels = Vec::new();
    for i in 0..2 * per_class {
        let class = (i % 2) as u32;
        let (cx, cy) = if class == 0 { (0.0, 0.0) } else { (5.0, 4.0) };
        let (a, b): (f64, f64) = (std.sample(&mut rng), std.sample(&mut rng));
        rows.push(vec![cx + 3.0 * a, cy + 1.2 * a + 0.6 * b]);
        labels.push(class);
    }
    (rows, labels)
}

pub fn angle_deg(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    (dot.abs() / (na * nb)).min(1.0).acos().to_degrees()
}
