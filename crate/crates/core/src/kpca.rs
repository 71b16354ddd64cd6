//! Kernel PCA with a cosine kernel.
//!
//! Fitting builds the `M x M` cosine kernel over the anchors, double-centers
//! it and keeps the leading eigenpairs. Training rows project to
//! `sqrt(lambda_k) * u_k`; an out-of-sample vector projects to its centered
//! kernel row dotted with `u_k / sqrt(lambda_k)`, so transforming a training
//! row reproduces its training projection.
//!
//! The sign of each component is arbitrary. It is fixed so that the largest
//! entry (in magnitude) of every eigenvector is positive, which keeps output
//! deterministic but carries no meaning.

use log::warn;
use nalgebra::{DMatrix, SymmetricEigen};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::store::{EmbeddingSet, TimeAnchorSet};
use crate::vector::{dot, norm};

/// Relative eigenvalue cutoff.
pub const EIGEN_CUTOFF: f64 = 1e-10;

/// Subspace dimension used when none is given.
pub const DEFAULT_DIMS: usize = 13;

#[derive(Debug, Clone, PartialEq)]
pub struct Projector {
    training_vectors: Vec<Vec<f64>>,
    training_norms: Vec<f64>,
    eigvals: Vec<f64>,
    /// `M x S`, column k is the unit eigenvector u_k.
    eigvecs: Vec<Vec<f64>>,
    row_mean: Vec<f64>,
    total_mean: f64,
}

/// Cosine kernel matrix over `rows`. Zero rows are rejected.
pub fn cosine_kernel(rows: &[Vec<f64>]) -> Result<DMatrix<f64>> {
    let norms = row_norms(rows)?;
    let m = rows.len();
    let mut k = DMatrix::zeros(m, m);
    for i in 0..m {
        for j in i..m {
            let v = dot(&rows[i], &rows[j]) / (norms[i] * norms[j]);
            k[(i, j)] = v;
            k[(j, i)] = v;
        }
    }
    Ok(k)
}

/// Double-centers a symmetric kernel matrix.
///
/// Returns the centered matrix, the per-row means and the grand mean.
pub fn double_center(k: &DMatrix<f64>) -> (DMatrix<f64>, Vec<f64>, f64) {
    let m = k.nrows();
    let row_mean: Vec<f64> = (0..m).map(|i| k.row(i).sum() / m as f64).collect();
    let total_mean = row_mean.iter().sum::<f64>() / m as f64;
    let centered =
        DMatrix::from_fn(m, m, |i, j| k[(i, j)] - row_mean[i] - row_mean[j] + total_mean);
    (centered, row_mean, total_mean)
}

fn row_norms(rows: &[Vec<f64>]) -> Result<Vec<f64>> {
    rows.iter()
        .enumerate()
        .map(|(i, r)| {
            let n = norm(r);
            if n > 0.0 && n.is_finite() {
                Ok(n)
            } else {
                Err(Error::ZeroNorm {
                    id: format!("training row {i}"),
                })
            }
        })
        .collect()
}

impl Projector {
    /// Fits on the anchors (rows in ascending year order) keeping at most
    /// `s_dim` components.
    pub fn fit(anchors: &TimeAnchorSet, s_dim: usize) -> Result<Self> {
        Self::fit_rows(anchors.vectors().to_vec(), s_dim)
    }

    pub fn fit_rows(rows: Vec<Vec<f64>>, s_dim: usize) -> Result<Self> {
        let m = rows.len();
        if m == 0 {
            return Err(Error::Empty("training set"));
        }
        if s_dim == 0 || s_dim > m {
            return Err(Error::InvalidParameter(format!(
                "subspace dimension {s_dim} must be in 1..={m}"
            )));
        }
        let kernel = cosine_kernel(&rows)?;
        let (centered, row_mean, total_mean) = double_center(&kernel);
        let eig = SymmetricEigen::new(centered);

        let mut order: Vec<usize> = (0..m).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
        let largest = eig.eigenvalues[order[0]];
        // The cosine kernel has unit diagonal, so its trace is M; scaling the
        // floor by M keeps an all-zero centered kernel from passing.
        let threshold = EIGEN_CUTOFF * largest.max(m as f64);
        let kept: Vec<usize> = order
            .iter()
            .copied()
            .take_while(|&i| eig.eigenvalues[i] > threshold)
            .take(s_dim)
            .collect();
        if kept.is_empty() {
            return Err(Error::DegenerateKernel { threshold, largest });
        }
        if kept.len() < s_dim {
            warn!(
                "kernel PCA: only {} of {} requested components exceed the eigenvalue cutoff",
                kept.len(),
                s_dim
            );
        }

        let s = kept.len();
        let mut eigvecs = vec![vec![0.0; s]; m];
        let mut eigvals = Vec::with_capacity(s);
        for (col, &idx) in kept.iter().enumerate() {
            eigvals.push(eig.eigenvalues[idx]);
            let u = eig.eigenvectors.column(idx);
            let mut pivot = 0;
            for i in 1..m {
                if u[i].abs() > u[pivot].abs() {
                    pivot = i;
                }
            }
            let sign = if u[pivot] < 0.0 { -1.0 } else { 1.0 };
            for i in 0..m {
                eigvecs[i][col] = sign * u[i];
            }
        }
        let training_norms = row_norms(&rows)?;
        Ok(Projector {
            training_vectors: rows,
            training_norms,
            eigvals,
            eigvecs,
            row_mean,
            total_mean,
        })
    }

    /// Input dimension N.
    pub fn input_dim(&self) -> usize {
        self.training_vectors[0].len()
    }

    /// Output dimension S.
    pub fn s_dim(&self) -> usize {
        self.eigvals.len()
    }

    pub fn eigvals(&self) -> &[f64] {
        &self.eigvals
    }

    /// Eigenvector matrix as M rows of S entries.
    pub fn eigvecs(&self) -> &[Vec<f64>] {
        &self.eigvecs
    }

    pub fn training_vectors(&self) -> &[Vec<f64>] {
        &self.training_vectors
    }

    /// Projections of the training rows, `sqrt(lambda_k) * u_k`.
    pub fn training_projections(&self) -> Vec<Vec<f64>> {
        let roots: Vec<f64> = self.eigvals.iter().map(|l| l.sqrt()).collect();
        self.eigvecs
            .iter()
            .map(|row| row.iter().zip(&roots).map(|(u, r)| u * r).collect())
            .collect()
    }

    pub fn transform(&self, x: &[f64]) -> Result<Vec<f64>> {
        let n = self.input_dim();
        if x.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: x.len(),
            });
        }
        let x_norm = norm(x);
        if !(x_norm > 0.0 && x_norm.is_finite()) {
            return Err(Error::ZeroNorm {
                id: "transform input".into(),
            });
        }
        let m = self.training_vectors.len();
        let row: Vec<f64> = self
            .training_vectors
            .iter()
            .zip(&self.training_norms)
            .map(|(t, tn)| dot(x, t) / (x_norm * tn))
            .collect();
        let row_avg = row.iter().sum::<f64>() / m as f64;
        let mut out = vec![0.0; self.s_dim()];
        for (j, kv) in row.iter().enumerate() {
            let centered = kv - row_avg - self.row_mean[j] + self.total_mean;
            for (o, u) in out.iter_mut().zip(&self.eigvecs[j]) {
                *o += centered * u;
            }
        }
        for (o, l) in out.iter_mut().zip(&self.eigvals) {
            *o /= l.sqrt();
        }
        Ok(out)
    }

    /// Transforms each record of `set`, preserving order.
    pub fn project_all(&self, set: &EmbeddingSet) -> Result<Vec<Vec<f64>>> {
        set.records()
            .par_iter()
            .map(|r| {
                self.transform(&r.vec).map_err(|e| match e {
                    Error::ZeroNorm { .. } => Error::ZeroNorm { id: r.id.clone() },
                    other => other,
                })
            })
            .collect()
    }

    pub fn to_payload(&self) -> ProjectorPayload {
        ProjectorPayload {
            kernel: Kernel::Cosine,
            training_vectors: self.training_vectors.clone(),
            eigvals: self.eigvals.clone(),
            eigvecs: self.eigvecs.clone(),
            row_mean: self.row_mean.clone(),
            total_mean: self.total_mean,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Kernel {
    Cosine,
}

/// Serialized form of a [`Projector`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProjectorPayload {
    pub kernel: Kernel,
    pub training_vectors: Vec<Vec<f64>>,
    pub eigvals: Vec<f64>,
    pub eigvecs: Vec<Vec<f64>>,
    pub row_mean: Vec<f64>,
    pub total_mean: f64,
}

impl TryFrom<ProjectorPayload> for Projector {
    type Error = Error;

    fn try_from(p: ProjectorPayload) -> Result<Self> {
        let bad = |msg: &str| Err(Error::InvalidModel(format!("projector: {msg}")));
        let m = p.training_vectors.len();
        if m == 0 {
            return bad("no training vectors");
        }
        let n = p.training_vectors[0].len();
        if n < 2 || p.training_vectors.iter().any(|v| v.len() != n) {
            return bad("ragged or too-narrow training vectors");
        }
        let s = p.eigvals.len();
        if s == 0 || s > m {
            return bad("eigenvalue count out of range");
        }
        if p.eigvals.iter().any(|l| !(l.is_finite() && *l > 0.0))
            || p.eigvals.windows(2).any(|w| w[1] > w[0])
        {
            return bad("eigenvalues must be positive and non-increasing");
        }
        if p.eigvecs.len() != m || p.eigvecs.iter().any(|r| r.len() != s) {
            return bad("eigenvector matrix shape");
        }
        if p.row_mean.len() != m {
            return bad("row mean length");
        }
        let all_finite = p
            .training_vectors
            .iter()
            .chain(&p.eigvecs)
            .flatten()
            .chain(&p.row_mean)
            .chain(std::iter::once(&p.total_mean))
            .all(|x| x.is_finite());
        if !all_finite {
            return bad("non-finite entry");
        }
        let training_norms = row_norms(&p.training_vectors)
            .map_err(|_| Error::InvalidModel("projector: zero-norm training vector".into()))?;
        Ok(Projector {
            training_vectors: p.training_vectors,
            training_norms,
            eigvals: p.eigvals,
            eigvecs: p.eigvecs,
            row_mean: p.row_mean,
            total_mean: p.total_mean,
        })
    }
}
