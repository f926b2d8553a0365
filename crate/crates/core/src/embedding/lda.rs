//! Linear discriminant analysis via the symmetric-definite generalized
//! eigenproblem `Sb w = λ Sw w`.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::features::FeatureMatrix;

pub const LDA_DIM: usize = 60;
const RIDGE_SCALE: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct LdaOptions {
    pub out_dim: usize,
    /// Add `1e-6 * trace(Sw) / dim` to the diagonal of the within-class scatter.
    pub ridge: bool,
}

impl Default for LdaOptions {
    fn default() -> Self {
        Self {
            out_dim: LDA_DIM,
            ridge: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LdaTransform {
    /// `out_dim x input_dim`, row-major; rows are discriminant directions.
    projection: Vec<f64>,
    out_dim: usize,
    input_dim: usize,
    class_count: usize,
    eigenvalues: Vec<f64>,
}

impl LdaTransform {
    pub fn from_parts(projection: Vec<f64>, out_dim: usize, input_dim: usize, class_count: usize) -> Result<Self> {
        if projection.len() != out_dim * input_dim || out_dim == 0 {
            return Err(Error::invalid("lda projection does not match its shape"));
        }
        Ok(Self {
            projection,
            out_dim,
            input_dim,
            class_count,
            eigenvalues: Vec::new(),
        })
    }

    pub fn out_dim(&self) -> usize {
        self.out_dim
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn class_count(&self) -> usize {
        self.class_count
    }

    pub fn projection(&self) -> &[f64] {
        &self.projection
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.projection[i * self.input_dim..(i + 1) * self.input_dim]
    }

    /// Generalized eigenvalues of the kept directions, non-increasing. Empty
    /// for transforms loaded from disk.
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn project(&self, x: &[f64]) -> Vec<f64> {
        (0..self.out_dim)
            .map(|i| self.row(i).iter().zip(x).map(|(w, v)| w * v).sum())
            .collect()
    }

    pub fn transform(&self, feats: &FeatureMatrix) -> Result<FeatureMatrix> {
        if feats.num_dims() != self.input_dim {
            return Err(Error::invalid(format!(
                "lda expects {} dims, got {}",
                self.input_dim,
                feats.num_dims()
            )));
        }
        let data = feats.frames().flat_map(|f| self.project(f)).collect();
        FeatureMatrix::new(
            data,
            feats.num_frames(),
            self.out_dim,
            feats.frame_shift_ms(),
            feats.source_id(),
        )
    }
}

/// Fits LDA on labelled frames (one label per row of `feats`).
pub fn lda_fit(feats: &FeatureMatrix, labels: &[u32], opts: &LdaOptions) -> Result<LdaTransform> {
    let dim = feats.num_dims();
    if labels.len() != feats.num_frames() {
        return Err(Error::invalid(format!(
            "{} labels for {} frames",
            labels.len(),
            feats.num_frames()
        )));
    }
    let mut classes: BTreeMap<u32, Vec<usize>> = BTreeMap::new();
    for (i, &l) in labels.iter().enumerate() {
        classes.entry(l).or_default().push(i);
    }
    let class_count = classes.len();
    if class_count < 2 {
        return Err(Error::invalid("lda needs at least two classes"));
    }
    let max_out = dim.min(class_count - 1);
    if opts.out_dim == 0 || opts.out_dim > max_out {
        return Err(Error::invalid(format!(
            "lda out_dim {} must be in [1, min(input_dim {dim}, classes - 1 = {})]",
            opts.out_dim,
            class_count - 1
        )));
    }

    let n = feats.num_frames() as f64;
    let global = column_mean(feats, 0..feats.num_frames());
    let mut centered = DMatrix::<f64>::zeros(feats.num_frames(), dim);
    let mut between = DMatrix::<f64>::zeros(dim, dim);
    let mut row = 0;
    for idx in classes.values() {
        let mean = column_mean(feats, idx.iter().copied());
        for &i in idx {
            for (d, (&x, &m)) in feats.frame(i).iter().zip(mean.iter()).enumerate() {
                centered[(row, d)] = x - m;
            }
            row += 1;
        }
        let diff = &mean - &global;
        between.ger(idx.len() as f64 / n, &diff, &diff, 1.0);
    }
    let mut within = centered.tr_mul(&centered) / n;

    if opts.ridge {
        let ridge = RIDGE_SCALE * within.trace() / dim as f64;
        for d in 0..dim {
            within[(d, d)] += ridge;
        }
    }
    let chol = within.cholesky().ok_or_else(|| {
        Error::Numerical(if opts.ridge {
            "within-class scatter is singular even after ridge; features have no within-class variation".into()
        } else {
            "within-class scatter is singular; enable ridge regularization".into()
        })
    })?;

    // Sb w = λ Sw w with Sw = L Lᵀ becomes C v = λ v, C = L⁻¹ Sb L⁻ᵀ, w = L⁻ᵀ v.
    let l = chol.l();
    let l_inv = l
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::Numerical("cholesky factor not invertible".into()))?;
    let c = &l_inv * &between * l_inv.transpose();
    let c = (&c + c.transpose()) * 0.5;
    let eig = c.symmetric_eigen();
    let mut order: Vec<usize> = (0..dim).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));

    let lt_inv = l_inv.transpose();
    let mut projection = Vec::with_capacity(opts.out_dim * dim);
    let mut eigenvalues = Vec::with_capacity(opts.out_dim);
    for &k in order.iter().take(opts.out_dim) {
        let w = &lt_inv * eig.eigenvectors.column(k);
        projection.extend(canonical_sign(w.as_slice()));
        eigenvalues.push(eig.eigenvalues[k]);
    }

    Ok(LdaTransform {
        projection,
        out_dim: opts.out_dim,
        input_dim: dim,
        class_count,
        eigenvalues,
    })
}

fn column_mean(feats: &FeatureMatrix, rows: impl Iterator<Item = usize>) -> DVector<f64> {
    let mut sum = DVector::zeros(feats.num_dims());
    let mut count = 0usize;
    for i in rows {
        for (s, &x) in sum.iter_mut().zip(feats.frame(i)) {
            *s += x;
        }
        count += 1;
    }
    sum / count.max(1) as f64
}

/// Flips a direction so its largest-magnitude entry is positive.
pub(crate) fn canonical_sign(v: &[f64]) -> Vec<f64> {
    let pivot = v
        .iter()
        .copied()
        .fold(0.0f64, |best, x| if x.abs() > best.abs() { x } else { best });
    let sign = if pivot < 0.0 { -1.0 } else { 1.0 };
    v.iter().map(|x| x * sign).collect()
}
