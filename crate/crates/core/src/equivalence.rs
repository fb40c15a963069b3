//! The regression ↔ classification equivalence.
//!
//! A centered regression sample `(x, z)` with `z ≠ 0` becomes two
//! classification points, `x/z` labeled `+1` and `−x/z` labeled `−1`. A
//! hyperplane `w·u = 0` through the origin that puts every `+1` point on
//! `w·u = 1` and every `−1` point on `w·u = −1` is exactly the regressor
//! `w·x = z`, so classifier weights can be used for prediction unchanged.
//!
//! The older augmented construction (shift each sample up and down by `ε`
//! along the target axis and separate the two copies) lives here too as a
//! baseline.

use crate::dataset::{ReferencePoint, RegressionDataset};
use crate::error::{check_dim, Error, Result};
use crate::vecops;

/// `2M'` labeled points, stored as consecutive `(+u, −u)` pairs.
#[derive(Debug, Clone, PartialEq)]
pub struct EquivalentClassificationDataset {
    points: Vec<f64>,
    n_features: usize,
    labels: Vec<f64>,
    source_index: Vec<usize>,
    dropped: Vec<usize>,
}

impl EquivalentClassificationDataset {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    /// Number of retained regression samples, `M'`.
    pub fn n_retained(&self) -> usize {
        self.labels.len() / 2
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.points[i * self.n_features..(i + 1) * self.n_features]
    }

    /// Labels as `±1.0`.
    pub fn labels(&self) -> &[f64] {
        &self.labels
    }

    /// Regression sample each point was built from.
    pub fn source_index(&self) -> &[usize] {
        &self.source_index
    }

    /// Regression samples left out because `|z| < tau`.
    pub fn dropped(&self) -> &[usize] {
        &self.dropped
    }

    /// Writes `features…, label, source_index` rows for plotting.
    pub fn write_csv(&self, path: impl AsRef<std::path::Path>) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        let mut header: Vec<String> = (0..self.n_features).map(|j| format!("u{j}")).collect();
        header.push("label".into());
        header.push("source_index".into());
        w.write_record(&header)?;
        for i in 0..self.len() {
            let mut rec: Vec<String> = self.point(i).iter().map(|v| format!("{v:?}")).collect();
            rec.push(format!("{}", self.labels[i] as i32));
            rec.push(self.source_index[i].to_string());
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Default near-zero threshold: `1e-6` times the standard deviation of the
/// (centered) targets, floored at the smallest positive normal float.
pub fn default_tau(ds: &RegressionDataset) -> f64 {
    (1e-6 * vecops::std_dev(ds.targets())).max(f64::MIN_POSITIVE)
}

/// Builds the equivalent classification dataset from centered data. Samples
/// with `|z_i| < tau` are listed in `dropped` instead of being transformed.
pub fn to_classification(
    ds: &RegressionDataset,
    tau: f64,
) -> Result<EquivalentClassificationDataset> {
    if !(tau > 0.0 && tau.is_finite()) {
        return Err(Error::invalid(format!(
            "tau must be a positive finite number, got {tau}"
        )));
    }
    let n = ds.n_features();
    let mut points = Vec::with_capacity(2 * ds.len() * n);
    let mut labels = Vec::with_capacity(2 * ds.len());
    let mut source_index = Vec::with_capacity(2 * ds.len());
    let mut dropped = Vec::new();
    for (i, (row, &z)) in ds.rows().zip(ds.targets()).enumerate() {
        if z.abs() < tau {
            dropped.push(i);
            continue;
        }
        let start = points.len();
        points.extend(row.iter().map(|v| v / z));
        for j in 0..n {
            let u = points[start + j];
            points.push(-u);
        }
        labels.extend([1.0, -1.0]);
        source_index.extend([i, i]);
    }
    if labels.is_empty() {
        return Err(Error::AllDropped { tau });
    }
    Ok(EquivalentClassificationDataset {
        points,
        n_features: n,
        labels,
        source_index,
        dropped,
    })
}

/// Regression estimate `w·(x − x⁰) + z⁰` from classifier weights.
pub fn predict_from_weights(w: &[f64], reference: &ReferencePoint, x: &[f64]) -> Result<f64> {
    check_dim(w.len(), x.len())?;
    check_dim(w.len(), reference.x0.len())?;
    let s: f64 = w
        .iter()
        .zip(x.iter().zip(&reference.x0))
        .map(|(wi, (xi, x0))| wi * (xi - x0))
        .sum();
    Ok(s + reference.z0)
}

/// Augmented-space dataset: `(x^i, z_i + ε)` labeled `+1` and
/// `(x^i, z_i − ε)` labeled `−1`, stored as consecutive pairs.
#[derive(Debug, Clone, PartialEq)]
pub struct BiBennettDataset {
    points: Vec<f64>,
    dim: usize,
    labels: Vec<f64>,
    epsilon: f64,
}

impl BiBennettDataset {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    /// Dimension of the augmented points, `n + 1`.
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.points[i * self.dim..(i + 1) * self.dim]
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn labels(&self) -> &[f64] {
        &self.labels
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    /// Points with a constant trailing `1` appended, so a classifier without a
    /// bias term can still learn an offset.
    pub fn homogeneous_points(&self) -> Vec<f64> {
        self.points
            .chunks_exact(self.dim)
            .flat_map(|p| p.iter().copied().chain(std::iter::once(1.0)))
            .collect()
    }
}

pub fn bi_bennett_transform(ds: &RegressionDataset, epsilon: f64) -> Result<BiBennettDataset> {
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(Error::invalid(format!(
            "epsilon must be positive, got {epsilon}"
        )));
    }
    let dim = ds.n_features() + 1;
    let mut points = Vec::with_capacity(2 * ds.len() * dim);
    let mut labels = Vec::with_capacity(2 * ds.len());
    for (row, &z) in ds.rows().zip(ds.targets()) {
        for (shift, label) in [(epsilon, 1.0), (-epsilon, -1.0)] {
            points.extend_from_slice(row);
            points.push(z + shift);
            labels.push(label);
        }
    }
    Ok(BiBennettDataset {
        points,
        dim,
        labels,
        epsilon,
    })
}

/// Reads the regression estimate off an augmented-space hyperplane
/// `w·x + eta·z + b = 0`: `z = −(w·x + b)/eta`.
pub fn bi_bennett_predict(w: &[f64], b: f64, eta: f64, x: &[f64]) -> Result<f64> {
    if eta == 0.0 || !eta.is_finite() {
        return Err(Error::invalid("eta must be finite and nonzero"));
    }
    check_dim(w.len(), x.len())?;
    Ok(-(vecops::dot(w, x) + b) / eta)
}
