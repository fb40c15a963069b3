//! Model-free difficulty score for regression data.
//!
//! Classifiability of a labeled point set measures how label-pure the local
//! neighborhoods are. For sample `i` with label `y_i` and a neighborhood of
//! radius `d` holding a fraction `p₊` of `+1` labels (the sample itself
//! included), the local score is `C_i = (p₊ − p₋)·y_i`, which is the
//! two-class joint-probability expression with `P(·|x^i)` set to the observed
//! one-hot label and `P(·|x^j)` to the neighborhood fractions. The dataset
//! score is the neighborhood-size-weighted mean of `C_i`, which stays in
//! `[−1, 1]` and equals 1 exactly when no neighborhood mixes labels.
//!
//! Regressability of a regression dataset is the classifiability of its
//! equivalent classification dataset.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::{center, RegressionDataset};
use crate::equivalence::{default_tau, to_classification};
use crate::error::{check_dim, Error, Result};

pub const DEFAULT_D_PERCENTILE: f64 = 5.0;
pub const DEFAULT_MAX_PAIRS: usize = 100_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressabilityReport {
    pub score: f64,
    pub per_sample: Vec<f64>,
    pub d: f64,
    /// Percentile `d` was taken from, when it was selected that way.
    pub d_percentile: Option<f64>,
    pub neighborhood_sizes: Vec<usize>,
}

impl RegressabilityReport {
    /// Counts of per-sample scores in `bins` equal-width bins over `[−1, 1]`.
    pub fn histogram(&self, bins: usize) -> Vec<usize> {
        let mut counts = vec![0; bins.max(1)];
        let last = counts.len() - 1;
        for &c in &self.per_sample {
            let pos = ((c + 1.0) / 2.0 * counts.len() as f64).floor();
            counts[(pos.max(0.0) as usize).min(last)] += 1;
        }
        counts
    }

    /// Weighted aggregate recomputed from the stored per-sample values.
    pub fn recompute_score(&self) -> f64 {
        aggregate(&self.per_sample, &self.neighborhood_sizes)
    }
}

/// Row-major point cloud with labels `±1`.
#[derive(Debug, Clone, Copy)]
pub struct LabeledPoints<'a> {
    points: &'a [f64],
    dim: usize,
    labels: &'a [f64],
}

impl<'a> LabeledPoints<'a> {
    pub fn new(points: &'a [f64], dim: usize, labels: &'a [f64]) -> Result<Self> {
        if dim == 0 {
            return Err(Error::invalid("points need at least one coordinate"));
        }
        check_dim(labels.len() * dim, points.len())?;
        if labels.is_empty() {
            return Err(Error::EmptyDataset);
        }
        Ok(Self {
            points,
            dim,
            labels,
        })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    fn point(&self, i: usize) -> &'a [f64] {
        &self.points[i * self.dim..(i + 1) * self.dim]
    }

    fn distance(&self, i: usize, j: usize) -> f64 {
        self.point(i)
            .iter()
            .zip(self.point(j))
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    }
}

/// Indices `j` (including `i`) with `‖x^j − x^i‖ ≤ d`.
pub fn neighborhood(set: &LabeledPoints<'_>, i: usize, d: f64) -> Vec<usize> {
    (0..set.len())
        .filter(|&j| set.distance(i, j) <= d)
        .collect()
}

fn local_stats(set: &LabeledPoints<'_>, i: usize, d: f64) -> (usize, f64) {
    let mut size = 0usize;
    let mut plus = 0usize;
    for j in 0..set.len() {
        if set.distance(i, j) <= d {
            size += 1;
            if set.labels[j] > 0.0 {
                plus += 1;
            }
        }
    }
    let p_plus = plus as f64 / size as f64;
    let p_minus = (size - plus) as f64 / size as f64;
    (size, (p_plus - p_minus) * set.labels[i])
}

/// Local classifiability `C(x^i)` for radius `d`.
pub fn classifiability_at(set: &LabeledPoints<'_>, i: usize, d: f64) -> f64 {
    local_stats(set, i, d).1
}

fn aggregate(per_sample: &[f64], sizes: &[usize]) -> f64 {
    // P(x^i) = |N_i| / N; the 1/N cancels in the normalized mean.
    let mut num = 0.0;
    let mut den = 0.0;
    for (&c, &s) in per_sample.iter().zip(sizes) {
        num += s as f64 * c;
        den += s as f64;
    }
    (num / den).clamp(-1.0, 1.0)
}

/// Classifiability of the whole set for a fixed radius.
pub fn classifiability(set: &LabeledPoints<'_>, d: f64) -> Result<RegressabilityReport> {
    if !(d > 0.0) {
        return Err(Error::invalid(format!(
            "neighborhood radius must be positive, got {d}"
        )));
    }
    let stats: Vec<(usize, f64)> = (0..set.len())
        .into_par_iter()
        .map(|i| local_stats(set, i, d))
        .collect();
    let (neighborhood_sizes, per_sample): (Vec<usize>, Vec<f64>) = stats.into_iter().unzip();
    Ok(RegressabilityReport {
        score: aggregate(&per_sample, &neighborhood_sizes),
        per_sample,
        d,
        d_percentile: None,
        neighborhood_sizes,
    })
}

/// Neighborhood radius from the `percentile`-th percentile (linear
/// interpolation) of pairwise distances. All pairs are used up to
/// `max_pairs`; beyond that, `max_pairs` random pairs drawn with `seed`.
///
/// When the percentile lands on a zero distance (many coincident points), the
/// radius falls back to half the smallest positive distance seen, and to 1
/// when every point coincides.
pub fn select_radius(
    set: &LabeledPoints<'_>,
    percentile: f64,
    seed: u64,
    max_pairs: usize,
) -> Result<f64> {
    if !(percentile > 0.0 && percentile < 100.0) {
        return Err(Error::invalid(format!(
            "distance percentile must lie in (0, 100), got {percentile}"
        )));
    }
    let n = set.len();
    let total_pairs = n * n.saturating_sub(1) / 2;
    let mut distances: Vec<f64> = if total_pairs <= max_pairs {
        (0..n)
            .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
            .map(|(i, j)| set.distance(i, j))
            .collect()
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..max_pairs)
            .map(|_| {
                let i = rng.random_range(0..n);
                let mut j = rng.random_range(0..n - 1);
                if j >= i {
                    j += 1;
                }
                set.distance(i, j)
            })
            .collect()
    };
    if distances.is_empty() {
        return Ok(1.0);
    }
    distances.sort_by(f64::total_cmp);
    let d = percentile_of_sorted(&distances, percentile);
    if d > 0.0 {
        return Ok(d);
    }
    Ok(distances
        .iter()
        .find(|&&v| v > 0.0)
        .map_or(1.0, |&v| 0.5 * v))
}

fn percentile_of_sorted(sorted: &[f64], percentile: f64) -> f64 {
    let pos = percentile / 100.0 * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    sorted[lo] + (sorted[hi] - sorted[lo]) * frac
}

/// Classifiability with the radius chosen by [`select_radius`].
pub fn classifiability_percentile(
    set: &LabeledPoints<'_>,
    d_percentile: f64,
    seed: u64,
) -> Result<RegressabilityReport> {
    let d = select_radius(set, d_percentile, seed, DEFAULT_MAX_PAIRS)?;
    let mut report = classifiability(set, d)?;
    report.d_percentile = Some(d_percentile);
    Ok(report)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegressabilityConfig {
    pub d_percentile: f64,
    /// Near-zero target threshold; `None` picks the default from the data.
    pub tau: Option<f64>,
    pub seed: u64,
}

impl Default for RegressabilityConfig {
    fn default() -> Self {
        Self {
            d_percentile: DEFAULT_D_PERCENTILE,
            tau: None,
            seed: 42,
        }
    }
}

/// Centers the data, builds the equivalent classification dataset and
/// returns its classifiability.
pub fn regressability(
    ds: &RegressionDataset,
    config: &RegressabilityConfig,
) -> Result<RegressabilityReport> {
    let (centered, _) = center(ds)?;
    let tau = config.tau.unwrap_or_else(|| default_tau(&centered));
    let eq = to_classification(&centered, tau)?;
    let set = LabeledPoints::new(eq.points(), eq.n_features(), eq.labels())?;
    classifiability_percentile(&set, config.d_percentile, config.seed)
}
