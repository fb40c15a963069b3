use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PcaProjection {
    /// Row-major `M × k` scores.
    pub scores: Vec<f64>,
    pub k: usize,
    /// Row-major `k × p` unit eigenvectors, largest eigenvalue first.
    pub components: Vec<f64>,
    pub eigenvalues: Vec<f64>,
    pub mean: Vec<f64>,
}

impl PcaProjection {
    pub fn score(&self, i: usize) -> &[f64] {
        &self.scores[i * self.k..(i + 1) * self.k]
    }

    /// Scores on one component, as a column.
    pub fn component_scores(&self, c: usize) -> Vec<f64> {
        self.scores.chunks_exact(self.k).map(|s| s[c]).collect()
    }

    /// Maps scores back to the original space.
    pub fn reconstruct(&self, i: usize) -> Vec<f64> {
        let p = self.mean.len();
        let mut out = self.mean.clone();
        for (c, s) in self.score(i).iter().enumerate() {
            for (o, v) in out.iter_mut().zip(&self.components[c * p..(c + 1) * p]) {
                *o += s * v;
            }
        }
        out
    }
}

/// Projects centered rows onto the top-`k` eigenvectors of the sample
/// covariance. Each eigenvector's largest-magnitude entry is made positive so
/// the result does not depend on the eigensolver's sign choice.
pub fn pca_project(data: &[f64], p: usize, k: usize) -> Result<PcaProjection> {
    if k == 0 || k > p {
        return Err(Error::invalid(format!(
            "component count k = {k} must lie in [1, {p}]"
        )));
    }
    if data.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if data.len() % p != 0 {
        return Err(Error::DimensionMismatch {
            expected: p,
            found: data.len() % p,
        });
    }
    let m = data.len() / p;
    let x = DMatrix::from_row_slice(m, p, data);
    let mean: Vec<f64> = (0..p).map(|j| x.column(j).mean()).collect();
    let mut centered = x;
    for j in 0..p {
        centered.column_mut(j).add_scalar_mut(-mean[j]);
    }
    let denom = if m > 1 { (m - 1) as f64 } else { 1.0 };
    let cov = centered.transpose() * &centered / denom;
    let eig = SymmetricEigen::new(cov);

    let mut order: Vec<usize> = (0..p).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let mut components = Vec::with_capacity(k * p);
    let mut eigenvalues = Vec::with_capacity(k);
    for &c in order.iter().take(k) {
        let v = eig.eigenvectors.column(c);
        let pivot = v
            .iter()
            .copied()
            .fold(0.0, |acc: f64, e| if e.abs() > acc.abs() { e } else { acc });
        let sign = if pivot < 0.0 { -1.0 } else { 1.0 };
        components.extend(v.iter().map(|e| sign * e));
        eigenvalues.push(eig.eigenvalues[c].max(0.0));
    }
    let basis = DMatrix::from_row_slice(k, p, &components);
    let scores_m = &centered * basis.transpose();
    let mut scores = Vec::with_capacity(m * k);
    for i in 0..m {
        scores.extend(scores_m.row(i).iter());
    }
    check_dim(m * k, scores.len())?;
    Ok(PcaProjection {
        scores,
        k,
        components,
        eigenvalues,
        mean,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rank_one_data_reconstructs() {
        let dir = [0.6, -0.8, 0.0];
        let data: Vec<f64> = (0..30)
            .flat_map(|i| {
                let t = i as f64 * 0.37 - 4.0;
                dir.iter().map(move |d| 1.0 + t * d)
            })
            .collect();
        let proj = pca_project(&data, 3, 1).unwrap();
        for i in 0..30 {
            let r = proj.reconstruct(i);
            for (a, b) in r.iter().zip(&data[i * 3..i * 3 + 3]) {
                assert!((a - b).abs() < 1e-10);
            }
        }
        assert!(proj.eigenvalues[0] > 0.0);
    }

    #[test]
    fn k_out_of_range() {
        assert!(pca_project(&[1.0, 2.0], 2, 0).is_err());
        assert!(pca_project(&[1.0, 2.0], 2, 3).is_err());
    }
}
