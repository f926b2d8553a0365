//! Principal-component projection of statistics supervectors.
//!
//! Components are estimated from mean-centered supervectors. When fewer
//! supervectors than requested components are available, the missing
//! directions are filled with seeded random vectors orthonormalized against
//! the estimated ones; their explained variance is zero.

use nalgebra::{DMatrix, DVector};

use super::lda::canonical_sign;
use crate::error::{Error, Result};
use crate::rng::SeededRng;

#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingProjection {
    /// `out_dim x in_dim`, row-major, orthonormal rows.
    rows: Vec<f64>,
    out_dim: usize,
    in_dim: usize,
    explained_variance: Vec<f64>,
    mean: Vec<f64>,
}

impl EmbeddingProjection {
    pub fn from_parts(
        rows: Vec<f64>,
        out_dim: usize,
        in_dim: usize,
        explained_variance: Vec<f64>,
        mean: Vec<f64>,
    ) -> Result<Self> {
        if rows.len() != out_dim * in_dim || explained_variance.len() != out_dim || mean.len() != in_dim {
            return Err(Error::invalid("projection parts disagree in shape"));
        }
        Ok(Self {
            rows,
            out_dim,
            in_dim,
            explained_variance,
            mean,
        })
    }

    pub fn out_dim(&self) -> usize {
        self.out_dim
    }

    pub fn in_dim(&self) -> usize {
        self.in_dim
    }

    pub fn rows(&self) -> &[f64] {
        &self.rows
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.rows[i * self.in_dim..(i + 1) * self.in_dim]
    }

    pub fn explained_variance(&self) -> &[f64] {
        &self.explained_variance
    }

    /// Mean of the training supervectors.
    pub fn mean(&self) -> &[f64] {
        &self.mean
    }

    /// Linear projection `P x`. The training mean is not subtracted, so a
    /// zero supervector maps to the zero embedding.
    pub fn project(&self, x: &[f64]) -> Vec<f64> {
        (0..self.out_dim)
            .map(|i| self.row(i).iter().zip(x).map(|(w, v)| w * v).sum())
            .collect()
    }
}

pub fn embedding_projection_fit(
    supervectors: &[Vec<f64>],
    out_dim: usize,
    rng: &mut SeededRng,
) -> Result<EmbeddingProjection> {
    let n = supervectors.len();
    let in_dim = supervectors
        .first()
        .map(Vec::len)
        .ok_or_else(|| Error::invalid("no supervectors to fit a projection"))?;
    if supervectors.iter().any(|s| s.len() != in_dim) {
        return Err(Error::invalid("supervectors differ in length"));
    }
    if out_dim == 0 || out_dim > in_dim {
        return Err(Error::invalid(format!(
            "projection out_dim {out_dim} must be in [1, supervector dim {in_dim}]"
        )));
    }

    let mut mean = vec![0.0; in_dim];
    for s in supervectors {
        for (m, v) in mean.iter_mut().zip(s) {
            *m += v;
        }
    }
    mean.iter_mut().for_each(|m| *m /= n as f64);
    let centered = DMatrix::from_fn(n, in_dim, |i, j| supervectors[i][j] - mean[j]);
    let denom = n.saturating_sub(1).max(1) as f64;

    // Eigen-decompose whichever of the n x n Gram matrix and the
    // in_dim x in_dim covariance is smaller.
    let mut components: Vec<(f64, Vec<f64>)> = Vec::new();
    if n <= in_dim {
        let gram = (&centered * centered.transpose()) / denom;
        let eig = gram.symmetric_eigen();
        for (k, &lambda) in eig.eigenvalues.iter().enumerate() {
            let dir = centered.tr_mul(&eig.eigenvectors.column(k).into_owned());
            let norm = dir.norm();
            if norm > 0.0 {
                components.push((lambda, (dir / norm).as_slice().to_vec()));
            }
        }
    } else {
        let cov = centered.tr_mul(&centered) / denom;
        let eig = cov.symmetric_eigen();
        for (k, &lambda) in eig.eigenvalues.iter().enumerate() {
            components.push((lambda, eig.eigenvectors.column(k).as_slice().to_vec()));
        }
    }
    components.sort_by(|a, b| b.0.total_cmp(&a.0));
    let top = components.first().map_or(0.0, |c| c.0.max(0.0));
    let tol = top * 1e-10 * in_dim.max(n) as f64;
    components.retain(|(lambda, _)| *lambda > tol);
    components.truncate(out_dim);

    if components.len() < out_dim {
        log::warn!(
            "supervectors span only {} directions; completing {} of {out_dim} components with random orthonormal vectors",
            components.len(),
            out_dim - components.len()
        );
    }

    let mut basis: Vec<DVector<f64>> = Vec::with_capacity(out_dim);
    let mut explained = Vec::with_capacity(out_dim);
    for (lambda, v) in components {
        let v = orthonormalize(DVector::from_vec(v), &basis)
            .ok_or_else(|| Error::Numerical("principal directions are not independent".into()))?;
        basis.push(v);
        explained.push(lambda);
    }
    while basis.len() < out_dim {
        let candidate = DVector::from_fn(in_dim, |_, _| rng.unit_f64() - 0.5);
        if let Some(v) = orthonormalize(candidate, &basis) {
            basis.push(v);
            explained.push(0.0);
        }
    }

    let rows = basis.iter().flat_map(|v| canonical_sign(v.as_slice())).collect();
    Ok(EmbeddingProjection {
        rows,
        out_dim,
        in_dim,
        explained_variance: explained,
        mean,
    })
}

/// Two passes of Gram-Schmidt against `basis`; `None` if `v` is (nearly) in
/// its span.
fn orthonormalize(mut v: DVector<f64>, basis: &[DVector<f64>]) -> Option<DVector<f64>> {
    let start = v.norm();
    for _ in 0..2 {
        for b in basis {
            let dot = b.dot(&v);
            v.axpy(-dot, b, 1.0);
        }
    }
    let norm = v.norm();
    (norm > 1e-8 * start.max(f64::MIN_POSITIVE)).then(|| v / norm)
}
