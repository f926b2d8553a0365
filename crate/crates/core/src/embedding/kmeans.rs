use crate::error::{Error, Result};
use crate::rng::SeededRng;

/// Lloyd's k-means on row-major `data` (`n x dim`), seeded by `k` distinct
/// rows drawn without replacement.
#[derive(Debug, Clone)]
pub struct KMeans {
    pub centroids: Vec<f64>,
    pub assignments: Vec<usize>,
    pub k: usize,
    pub dim: usize,
}

pub fn kmeans(data: &[f64], dim: usize, k: usize, iterations: usize, rng: &mut SeededRng) -> Result<KMeans> {
    if dim == 0 || !data.len().is_multiple_of(dim) {
        return Err(Error::invalid("kmeans data is not a whole number of rows"));
    }
    let n = data.len() / dim;
    if k == 0 || k > n {
        return Err(Error::invalid(format!("cannot form {k} clusters from {n} points")));
    }
    let row = |i: usize| &data[i * dim..(i + 1) * dim];

    // partial Fisher-Yates for k distinct seeds
    let mut idx: Vec<usize> = (0..n).collect();
    for i in 0..k {
        let j = i + rng.below((n - i) as u64) as usize;
        idx.swap(i, j);
    }
    let mut centroids: Vec<f64> = idx[..k].iter().flat_map(|&i| row(i).iter().copied()).collect();
    let mut assignments: Vec<usize> = (0..n).map(|i| nearest(row(i), &centroids, dim)).collect();

    for _ in 0..iterations {
        let mut sums = vec![0.0; k * dim];
        let mut counts = vec![0usize; k];
        for (i, &a) in assignments.iter().enumerate() {
            counts[a] += 1;
            for (s, &x) in sums[a * dim..(a + 1) * dim].iter_mut().zip(row(i)) {
                *s += x;
            }
        }
        for c in 0..k {
            // empty clusters keep their previous centroid
            if counts[c] > 0 {
                for d in 0..dim {
                    centroids[c * dim + d] = sums[c * dim + d] / counts[c] as f64;
                }
            }
        }
        let mut changed = false;
        for (i, a) in assignments.iter_mut().enumerate() {
            let best = nearest(row(i), &centroids, dim);
            changed |= best != *a;
            *a = best;
        }
        if !changed {
            break;
        }
    }

    Ok(KMeans {
        centroids,
        assignments,
        k,
        dim,
    })
}

fn nearest(x: &[f64], centroids: &[f64], dim: usize) -> usize {
    let mut best = (0, f64::INFINITY);
    for (c, centroid) in centroids.chunks_exact(dim).enumerate() {
        let d: f64 = centroid.iter().zip(x).map(|(a, b)| (a - b) * (a - b)).sum();
        if d < best.1 {
            best = (c, d);
        }
    }
    best.0
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn separates_obvious_clusters() {
        let mut data = Vec::new();
        for i in 0..50 {
            let jitter = f64::from(i) * 0.001;
            data.extend_from_slice(&[jitter, jitter]);
            data.extend_from_slice(&[100.0 + jitter, 100.0 - jitter]);
        }
        let km = kmeans(&data, 2, 2, 20, &mut SeededRng::new(1)).unwrap();
        for i in 0..50 {
            assert_eq!(km.assignments[2 * i], km.assignments[0]);
            assert_eq!(km.assignments[2 * i + 1], km.assignments[1]);
        }
        assert_ne!(km.assignments[0], km.assignments[1]);
    }

    #[test]
    fn rejects_bad_k() {
        assert!(kmeans(&[1.0, 2.0], 1, 3, 5, &mut SeededRng::new(1)).is_err());
        assert!(kmeans(&[1.0, 2.0], 1, 0, 5, &mut SeededRng::new(1)).is_err());
        assert!(kmeans(&[1.0, 2.0, 3.0], 2, 1, 5, &mut SeededRng::new(1)).is_err());
    }
}
