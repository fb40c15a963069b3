//! Regression datasets: CSV ingestion, centering on the sample mean,
//! standardization, k-fold assignment and synthetic generators.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::vecops;

/// `M` samples `x^i ∈ ℝⁿ` with real targets `z_i`, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct RegressionDataset {
    features: Vec<f64>,
    n_features: usize,
    targets: Vec<f64>,
    feature_names: Vec<String>,
    source: String,
}

impl RegressionDataset {
    /// Builds a dataset from row-major features. Fails on ragged input,
    /// length mismatch, or non-finite entries.
    pub fn new(
        features: Vec<f64>,
        n_features: usize,
        targets: Vec<f64>,
        feature_names: Vec<String>,
        source: impl Into<String>,
    ) -> Result<Self> {
        if n_features == 0 {
            return Err(Error::invalid(
                "a dataset needs at least one feature column",
            ));
        }
        if features.len() != targets.len() * n_features {
            return Err(Error::DimensionMismatch {
                expected: targets.len() * n_features,
                found: features.len(),
            });
        }
        check_dim(n_features, feature_names.len())?;
        if features.iter().chain(&targets).any(|v| !v.is_finite()) {
            return Err(Error::invalid("dataset contains NaN or infinite entries"));
        }
        Ok(Self {
            features,
            n_features,
            targets,
            feature_names,
            source: source.into(),
        })
    }

    /// Convenience constructor with generated feature names `x0, x1, ...`.
    pub fn from_rows(rows: &[Vec<f64>], targets: Vec<f64>) -> Result<Self> {
        let n = rows.first().map_or(0, Vec::len);
        if rows.len() != targets.len() {
            return Err(Error::DimensionMismatch {
                expected: targets.len(),
                found: rows.len(),
            });
        }
        let mut features = Vec::with_capacity(rows.len() * n);
        for row in rows {
            check_dim(n, row.len())?;
            features.extend_from_slice(row);
        }
        Self::new(features, n, targets, default_names(n), "inline")
    }

    pub fn len(&self) -> usize {
        self.targets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.targets.is_empty()
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.features[i * self.n_features..(i + 1) * self.n_features]
    }

    pub fn rows(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.features.chunks_exact(self.n_features)
    }

    pub fn features(&self) -> &[f64] {
        &self.features
    }

    pub fn targets(&self) -> &[f64] {
        &self.targets
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    /// New dataset holding the given sample indices, in that order.
    pub fn subset(&self, indices: &[usize]) -> Self {
        let mut features = Vec::with_capacity(indices.len() * self.n_features);
        let mut targets = Vec::with_capacity(indices.len());
        for &i in indices {
            features.extend_from_slice(self.row(i));
            targets.push(self.targets[i]);
        }
        Self {
            features,
            n_features: self.n_features,
            targets,
            feature_names: self.feature_names.clone(),
            source: self.source.clone(),
        }
    }

    /// Writes the dataset in the same CSV shape `load_csv` reads, with the
    /// target in a final column named `target_column`.
    pub fn write_csv(&self, path: impl AsRef<Path>, target_column: &str) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        let mut header: Vec<&str> = self.feature_names.iter().map(String::as_str).collect();
        header.push(target_column);
        w.write_record(&header)?;
        for (row, z) in self.rows().zip(&self.targets) {
            let mut rec: Vec<String> = row.iter().map(|v| format!("{v:?}")).collect();
            rec.push(format!("{z:?}"));
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }

    pub(crate) fn map_features(&self, f: impl Fn(&[f64]) -> Vec<f64>) -> Self {
        let mut features = Vec::with_capacity(self.features.len());
        for row in self.rows() {
            features.extend(f(row));
        }
        Self {
            features,
            ..self.clone()
        }
    }
}

fn default_names(n: usize) -> Vec<String> {
    (0..n).map(|j| format!("x{j}")).collect()
}

/// Sample means `(x⁰, z⁰)` subtracted from every sample so the regressor
/// passes through the origin.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReferencePoint {
    pub x0: Vec<f64>,
    pub z0: f64,
}

impl ReferencePoint {
    pub fn origin(n: usize) -> Self {
        Self {
            x0: vec![0.0; n],
            z0: 0.0,
        }
    }
}

/// Subtracts the sample mean of features and targets.
///
/// The mean is computed twice (the second pass on the residuals) so that the
/// centered columns average to zero at round-off level even for data far from
/// the origin.
pub fn center(ds: &RegressionDataset) -> Result<(RegressionDataset, ReferencePoint)> {
    if ds.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let n = ds.n_features;
    let m = ds.len() as f64;
    let mut x0 = vec![0.0; n];
    for row in ds.rows() {
        vecops::axpy(1.0, row, &mut x0);
    }
    x0.iter_mut().for_each(|v| *v /= m);
    let mut correction = vec![0.0; n];
    for row in ds.rows() {
        for (c, (v, mu)) in correction.iter_mut().zip(row.iter().zip(&x0)) {
            *c += v - mu;
        }
    }
    for (mu, c) in x0.iter_mut().zip(&correction) {
        *mu += c / m;
    }

    let z_first = vecops::mean(&ds.targets);
    let z0 = z_first + ds.targets.iter().map(|z| z - z_first).sum::<f64>() / m;

    let centered = RegressionDataset {
        features: ds
            .rows()
            .flat_map(|row| row.iter().zip(&x0).map(|(v, mu)| v - mu))
            .collect(),
        targets: ds.targets.iter().map(|z| z - z0).collect(),
        ..ds.clone()
    };
    Ok((centered, ReferencePoint { x0, z0 }))
}

/// Per-column affine standardization `(x − mean) / std`, kept so prediction
/// inputs can be mapped the same way. Constant columns get unit scale.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub mean: Vec<f64>,
    pub scale: Vec<f64>,
}

impl Standardizer {
    pub fn fit(ds: &RegressionDataset) -> Result<Self> {
        if ds.is_empty() {
            return Err(Error::EmptyDataset);
        }
        let n = ds.n_features;
        let mut mean = Vec::with_capacity(n);
        let mut scale = Vec::with_capacity(n);
        let mut column = Vec::with_capacity(ds.len());
        for j in 0..n {
            column.clear();
            column.extend(ds.rows().map(|r| r[j]));
            mean.push(vecops::mean(&column));
            let s = vecops::std_dev(&column);
            scale.push(if s > 0.0 { s } else { 1.0 });
        }
        Ok(Self { mean, scale })
    }

    pub fn transform_row(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_dim(self.mean.len(), x.len())?;
        Ok(x.iter()
            .zip(self.mean.iter().zip(&self.scale))
            .map(|(v, (m, s))| (v - m) / s)
            .collect())
    }

    pub fn transform(&self, ds: &RegressionDataset) -> Result<RegressionDataset> {
        check_dim(self.mean.len(), ds.n_features)?;
        Ok(ds.map_features(|row| {
            row.iter()
                .zip(self.mean.iter().zip(&self.scale))
                .map(|(v, (m, s))| (v - m) / s)
                .collect()
        }))
    }
}

/// Header and row-major numeric cells of a headered, comma-delimited file.
/// Cells are trimmed; anything that does not parse to a finite number is an
/// error naming its (1-based) data row and column.
pub fn read_table(path: impl AsRef<Path>) -> Result<(Vec<String>, Vec<f64>)> {
    let path = path.as_ref();
    if !path.exists() {
        return Err(Error::MissingFile(path.to_path_buf()));
    }
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_path(path)?;
    let headers: Vec<String> = reader.headers()?.iter().map(str::to_owned).collect();
    let mut cells = Vec::new();
    for (row_idx, record) in reader.records().enumerate() {
        let record = record?;
        let row = row_idx + 1;
        check_dim(headers.len(), record.len())?;
        for (col, cell) in record.iter().enumerate() {
            let value = f64::from_str(cell)
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| Error::NonNumeric {
                    row,
                    column: headers[col].clone(),
                    value: cell.to_owned(),
                })?;
            cells.push(value);
        }
    }
    Ok((headers, cells))
}

/// Position of `name` in `headers`; it must appear exactly once.
pub fn column_index(headers: &[String], name: &str) -> Result<usize> {
    let matches: Vec<usize> = headers
        .iter()
        .enumerate()
        .filter(|(_, h)| h.as_str() == name)
        .map(|(i, _)| i)
        .collect();
    match matches.as_slice() {
        [i] => Ok(*i),
        [] => Err(Error::UnknownColumn {
            name: name.to_owned(),
            available: headers.join(","),
        }),
        _ => Err(Error::invalid(format!(
            "column '{name}' appears more than once in the header"
        ))),
    }
}

/// Reads a headered, comma-delimited file; `target_column` becomes the
/// targets and every other column a feature. With no target column named,
/// the last column is the target.
pub fn load_csv(path: impl AsRef<Path>, target_column: Option<&str>) -> Result<RegressionDataset> {
    let path = path.as_ref();
    let (headers, cells) = read_table(path)?;
    let target_idx = match target_column {
        Some(name) => column_index(&headers, name)?,
        None => headers.len().saturating_sub(1),
    };
    if headers.len() < 2 {
        return Err(Error::invalid(
            "CSV needs at least one feature column besides the target",
        ));
    }
    if cells.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let mut features = Vec::with_capacity(cells.len());
    let mut targets = Vec::with_capacity(cells.len() / headers.len());
    for record in cells.chunks_exact(headers.len()) {
        for (col, &value) in record.iter().enumerate() {
            if col == target_idx {
                targets.push(value);
            } else {
                features.push(value);
            }
        }
    }
    let names = headers
        .iter()
        .enumerate()
        .filter(|&(i, _)| i != target_idx)
        .map(|(_, h)| h.clone())
        .collect();
    RegressionDataset::new(
        features,
        headers.len() - 1,
        targets,
        names,
        path.display().to_string(),
    )
}

/// Fold index of every sample for k-fold cross-validation.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldAssignment {
    pub fold_of_sample: Vec<usize>,
    pub k: usize,
    pub seed: u64,
}

impl FoldAssignment {
    pub fn test_indices(&self, fold: usize) -> Vec<usize> {
        (0..self.fold_of_sample.len())
            .filter(|&i| self.fold_of_sample[i] == fold)
            .collect()
    }

    pub fn train_indices(&self, fold: usize) -> Vec<usize> {
        (0..self.fold_of_sample.len())
            .filter(|&i| self.fold_of_sample[i] != fold)
            .collect()
    }

    pub fn fold_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.k];
        for &f in &self.fold_of_sample {
            sizes[f] += 1;
        }
        sizes
    }
}

/// Shuffles sample indices with a seeded generator and deals them round-robin
/// into `k` folds, so fold sizes differ by at most one.
pub fn split_folds(ds: &RegressionDataset, k: usize, seed: u64) -> Result<FoldAssignment> {
    if k < 2 || k > ds.len() {
        return Err(Error::invalid(format!(
            "fold count k = {k} must satisfy 2 ≤ k ≤ M = {}",
            ds.len()
        )));
    }
    let mut order: Vec<usize> = (0..ds.len()).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut fold_of_sample = vec![0; ds.len()];
    for (pos, &i) in order.iter().enumerate() {
        fold_of_sample[i] = pos % k;
    }
    Ok(FoldAssignment {
        fold_of_sample,
        k,
        seed,
    })
}

/// One-dimensional test functions used by the synthetic generators.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SynthFunction {
    Linear,
    Square,
    Cube,
    Pow5,
    Sin,
    SinSq,
    SquarePlusSinSq,
    /// `(x+1)²(x−3)²`
    PolyA,
    /// `(x+3)³((x−2)(x+1)(x+2))²`
    PolyB,
    /// `(x+3)²((x+1)(x+2))²`
    PolyC,
}

impl SynthFunction {
    pub const ALL: [SynthFunction; 10] = [
        SynthFunction::Linear,
        SynthFunction::Square,
        SynthFunction::Cube,
        SynthFunction::Pow5,
        SynthFunction::Sin,
        SynthFunction::SinSq,
        SynthFunction::SquarePlusSinSq,
        SynthFunction::PolyA,
        SynthFunction::PolyB,
        SynthFunction::PolyC,
    ];

    pub fn eval(self, x: f64) -> f64 {
        match self {
            SynthFunction::Linear => x,
            SynthFunction::Square => x * x,
            SynthFunction::Cube => x * x * x,
            SynthFunction::Pow5 => x.powi(5),
            SynthFunction::Sin => x.sin(),
            SynthFunction::SinSq => (x * x).sin(),
            SynthFunction::SquarePlusSinSq => x * x + (x * x).sin(),
            SynthFunction::PolyA => (x + 1.0).powi(2) * (x - 3.0).powi(2),
            SynthFunction::PolyB => (x + 3.0).powi(3) * ((x - 2.0) * (x + 1.0) * (x + 2.0)).powi(2),
            SynthFunction::PolyC => (x + 3.0).powi(2) * ((x + 1.0) * (x + 2.0)).powi(2),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            SynthFunction::Linear => "linear",
            SynthFunction::Square => "square",
            SynthFunction::Cube => "cube",
            SynthFunction::Pow5 => "pow5",
            SynthFunction::Sin => "sin",
            SynthFunction::SinSq => "sin_sq",
            SynthFunction::SquarePlusSinSq => "square_plus_sin_sq",
            SynthFunction::PolyA => "poly_a",
            SynthFunction::PolyB => "poly_b",
            SynthFunction::PolyC => "poly_c",
        }
    }
}

impl fmt::Display for SynthFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SynthFunction {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        SynthFunction::ALL
            .into_iter()
            .find(|f| f.name() == s)
            .ok_or_else(|| {
                let known: Vec<&str> = SynthFunction::ALL.iter().map(|f| f.name()).collect();
                Error::invalid(format!(
                    "unknown function '{s}' (expected one of {})",
                    known.join(", ")
                ))
            })
    }
}

/// Draws `m` points uniformly from `[lo, hi)` and targets `f(x) + ε` with
/// `ε ~ N(0, noise_sigma²)`. Features are drawn before any noise so the
/// feature sample for a seed does not depend on `noise_sigma`.
pub fn synth_generate(
    function: SynthFunction,
    m: usize,
    domain: (f64, f64),
    noise_sigma: f64,
    seed: u64,
) -> Result<RegressionDataset> {
    let (lo, hi) = domain;
    if m == 0 {
        return Err(Error::invalid("sample count must be at least 1"));
    }
    if !(lo.is_finite() && hi.is_finite() && lo < hi) {
        return Err(Error::invalid(format!(
            "empty or invalid domain [{lo}, {hi}]"
        )));
    }
    if !(noise_sigma >= 0.0 && noise_sigma.is_finite()) {
        return Err(Error::invalid(format!(
            "noise sigma must be ≥ 0, got {noise_sigma}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let features: Vec<f64> = (0..m).map(|_| rng.random_range(lo..hi)).collect();
    let mut targets: Vec<f64> = features.iter().map(|&x| function.eval(x)).collect();
    if noise_sigma > 0.0 {
        let noise = Normal::new(0.0, noise_sigma).expect("sigma validated above");
        for z in &mut targets {
            *z += noise.sample(&mut rng);
        }
    }
    RegressionDataset::new(
        features,
        1,
        targets,
        vec!["x".to_owned()],
        format!("synth:{function}"),
    )
}
