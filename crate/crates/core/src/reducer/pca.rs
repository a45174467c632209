use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Fitted principal axes. Rows of `components` are orthonormal and ordered by
/// decreasing explained variance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PcaModel {
    pub mean: DVector<f64>,
    pub components: DMatrix<f64>,
    pub explained_variance: Vec<f64>,
}

impl PcaModel {
    pub fn transform(&self, data: &DMatrix<f64>) -> DMatrix<f64> {
        let centered = center(data, &self.mean);
        centered * self.components.transpose()
    }

    pub fn inverse_transform(&self, projected: &DMatrix<f64>) -> DMatrix<f64> {
        let mut out = projected * &self.components;
        for mut row in out.row_iter_mut() {
            row += self.mean.transpose();
        }
        out
    }
}

fn center(data: &DMatrix<f64>, mean: &DVector<f64>) -> DMatrix<f64> {
    let mut c = data.clone();
    for mut row in c.row_iter_mut() {
        row -= mean.transpose();
    }
    c
}

/// Flips `v` so that its largest-magnitude entry is positive (first one wins on ties).
pub(crate) fn normalize_sign(v: &mut [f64]) {
    let mut best = 0usize;
    for (i, x) in v.iter().enumerate() {
        if x.abs() > v[best].abs() {
            best = i;
        }
    }
    if v[best] < 0.0 {
        v.iter_mut().for_each(|x| *x = -*x);
    }
}

/// Fits PCA on the rows of `data` and returns the model and the projected rows.
pub fn pca_fit_transform(data: &DMatrix<f64>, pca_dim: usize) -> Result<(PcaModel, DMatrix<f64>)> {
    let (n, d) = data.shape();
    if n < 2 {
        return Err(Error::Degenerate(format!("PCA needs at least 2 samples, got {n}")));
    }
    if pca_dim == 0 || pca_dim > n.min(d) {
        return Err(Error::config(
            "pca_dim",
            format!("pca_dim {pca_dim} must lie in [1, {}]", n.min(d)),
        ));
    }

    let mean = DVector::from_iterator(d, data.column_iter().map(|c| c.mean()));
    let centered = center(data, &mean);
    let cov = centered.tr_mul(&centered) / (n as f64 - 1.0);
    let eig = SymmetricEigen::new(cov);

    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]).then(a.cmp(&b)));

    let mut components = DMatrix::zeros(pca_dim, d);
    let mut explained_variance = Vec::with_capacity(pca_dim);
    for (row, &k) in order.iter().take(pca_dim).enumerate() {
        let mut axis: Vec<f64> = eig.eigenvectors.column(k).iter().copied().collect();
        normalize_sign(&mut axis);
        components.row_mut(row).copy_from_slice(&axis);
        explained_variance.push(eig.eigenvalues[k].max(0.0));
    }

    let projected = &centered * components.transpose();
    Ok((
        PcaModel {
            mean,
            components,
            explained_variance,
        },
        projected,
    ))
}
