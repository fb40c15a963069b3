//! L1-error support vector classifier without a bias term.
//!
//! Primal: minimize `½‖w‖² + C Σ (q⁺_i + q⁻_i)` subject to
//! `y_i (w·x^i) + q⁺_i − q⁻_i = 1`, `q⁺, q⁻ ≥ 0`. Because the slack is two
//! sided the dual multipliers are free in sign:
//!
//! ```text
//! minimize  ½ Σ_i Σ_j λ_i λ_j y_i y_j x^i·x^j − Σ_i λ_i
//! subject to −C ≤ λ_i ≤ C
//! ```
//!
//! with `w = Σ λ_i y_i x^i`. There is no equality constraint, so the dual is
//! solved by plain cyclic coordinate descent with exact one-dimensional
//! minimization.
//!
//! Optimality per coordinate, with `g_i = y_i (w·x^i) − 1`:
//! `g_i = 0` when `λ_i` is strictly inside the box, `g_i ≤ 0` at `λ_i = +C`
//! (the point sits short of its proximal plane, `q⁺_i > 0` allowed), and
//! `g_i ≥ 0` at `λ_i = −C` (the point overshoots, `q⁻_i > 0` allowed).

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::equivalence::EquivalentClassificationDataset;
use crate::error::{check_dim, Error, Result};
use crate::vecops::{axpy, dot, norm_sq};

pub const DEFAULT_C: f64 = 10.0;
pub const DEFAULT_TOL: f64 = 1e-8;
pub const DEFAULT_MAX_ITER: usize = 100_000;

#[derive(Debug, Clone, PartialEq)]
pub struct SvcProblem {
    points: Vec<f64>,
    n_features: usize,
    labels: Vec<f64>,
    c: f64,
}

impl SvcProblem {
    /// `points` is row-major `N × n_features`; labels must be `±1`.
    pub fn new(points: Vec<f64>, n_features: usize, labels: Vec<f64>, c: f64) -> Result<Self> {
        if labels.is_empty() {
            return Err(Error::EmptyDataset);
        }
        if n_features == 0 {
            return Err(Error::invalid("points need at least one coordinate"));
        }
        check_dim(labels.len() * n_features, points.len())?;
        if labels.iter().any(|&y| y != 1.0 && y != -1.0) {
            return Err(Error::invalid("labels must be +1 or -1"));
        }
        if !(c > 0.0 && c.is_finite()) {
            return Err(Error::invalid(format!(
                "box bound C must be positive, got {c}"
            )));
        }
        if points.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("points contain NaN or infinite entries"));
        }
        Ok(Self {
            points,
            n_features,
            labels,
            c,
        })
    }

    pub fn from_equivalence(ds: &EquivalentClassificationDataset, c: f64) -> Result<Self> {
        Self::new(
            ds.points().to_vec(),
            ds.n_features(),
            ds.labels().to_vec(),
            c,
        )
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.points[i * self.n_features..(i + 1) * self.n_features]
    }

    pub fn labels(&self) -> &[f64] {
        &self.labels
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    /// `g_i = y_i (w·x^i) − 1`, the partial derivative of the dual objective.
    pub fn gradient_at(&self, w: &[f64], i: usize) -> f64 {
        self.labels[i] * dot(w, self.point(i)) - 1.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KktStatus {
    /// `|λ| < C`: the point lies on its proximal plane `y (w·x) = 1`.
    Interior,
    /// `λ = −C`: `y (w·x) ≥ 1`.
    AtLower,
    /// `λ = +C`: `y (w·x) ≤ 1`.
    AtUpper,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DualSolution {
    pub lambda: Vec<f64>,
    pub w: Vec<f64>,
    pub dual_objective: f64,
    pub primal_objective: f64,
    /// Full sweeps over the coordinates.
    pub iterations: usize,
    pub kkt_status: Vec<KktStatus>,
    pub converged: bool,
    /// Largest projected-gradient magnitude at the returned point.
    pub max_violation: f64,
}

impl DualSolution {
    /// `primal + dual`; nonnegative by weak duality, zero at the optimum.
    pub fn duality_gap(&self) -> f64 {
        self.primal_objective + self.dual_objective
    }

    pub fn relative_gap(&self) -> f64 {
        self.duality_gap() / self.primal_objective.abs().max(1.0)
    }

    pub fn status_counts(&self) -> (usize, usize, usize) {
        self.kkt_status
            .iter()
            .fold((0, 0, 0), |(i, l, u), s| match s {
                KktStatus::Interior => (i + 1, l, u),
                KktStatus::AtLower => (i, l + 1, u),
                KktStatus::AtUpper => (i, l, u + 1),
            })
    }
}

/// Projected-gradient magnitude of coordinate `i` for a box `[−c, c]`.
fn violation(lambda: f64, g: f64, c: f64) -> f64 {
    if lambda >= c {
        g.max(0.0)
    } else if lambda <= -c {
        (-g).max(0.0)
    } else {
        g.abs()
    }
}

/// Solves the dual by cyclic coordinate descent,
/// `λ_i ← clip(λ_i − g_i/‖x^i‖², −C, C)`, skipping zero-norm points.
///
/// Stops once a sweep sees no projected gradient above `tol` and the check
/// still holds with `w` rebuilt from scratch. Reaching `max_iter` sweeps
/// returns the current iterate with `converged = false`.
///
/// Multipliers of identical constraints (rows with equal `y_i x^i`, e.g. the
/// `±x/z` pair of an equivalence dataset) only matter through their sum; the
/// returned solution shares that sum equally among them.
pub fn solve_dual(p: &SvcProblem, tol: f64, max_iter: usize) -> Result<DualSolution> {
    if !(tol > 0.0) {
        return Err(Error::invalid(format!(
            "tolerance must be positive, got {tol}"
        )));
    }
    let n_points = p.len();
    let diag: Vec<f64> = (0..n_points).map(|i| norm_sq(p.point(i))).collect();
    if diag.iter().all(|&d| d == 0.0) {
        return Err(Error::AllZeroNorm);
    }
    let c = p.c;
    let mut lambda = vec![0.0; n_points];
    let mut w = vec![0.0; p.n_features];
    let mut iterations = 0;
    let mut converged = false;

    while iterations < max_iter {
        iterations += 1;
        let mut sweep_violation: f64 = 0.0;
        for i in 0..n_points {
            if diag[i] == 0.0 {
                continue;
            }
            let g = p.gradient_at(&w, i);
            sweep_violation = sweep_violation.max(violation(lambda[i], g, c));
            let updated = (lambda[i] - g / diag[i]).clamp(-c, c);
            let delta = updated - lambda[i];
            if delta != 0.0 {
                lambda[i] = updated;
                axpy(delta * p.labels[i], p.point(i), &mut w);
            }
        }
        if sweep_violation <= tol {
            w = recover_weights(&lambda, p)?;
            if max_violation(&lambda, &w, p, &diag) <= tol {
                converged = true;
                break;
            }
        }
    }

    share_duplicate_multipliers(&mut lambda, p);
    let w = recover_weights(&lambda, p)?;
    let max_violation = max_violation(&lambda, &w, p, &diag);
    let mut sol = DualSolution {
        dual_objective: 0.5 * norm_sq(&w) - lambda.iter().sum::<f64>(),
        primal_objective: primal_objective(&w, p)?,
        lambda,
        w,
        iterations,
        kkt_status: Vec::new(),
        converged,
        max_violation,
    };
    sol.kkt_status = kkt_classify(&sol, p, 0.0);
    Ok(sol)
}

fn max_violation(lambda: &[f64], w: &[f64], p: &SvcProblem, diag: &[f64]) -> f64 {
    (0..p.len())
        .filter(|&i| diag[i] > 0.0)
        .map(|i| violation(lambda[i], p.gradient_at(w, i), p.c))
        .fold(0.0, f64::max)
}

fn share_duplicate_multipliers(lambda: &mut [f64], p: &SvcProblem) {
    let mut groups: HashMap<Vec<u64>, Vec<usize>> = HashMap::new();
    for i in 0..p.len() {
        // +0.0 normalizes the sign of zero so −0.0 and 0.0 share a key
        let key = p
            .point(i)
            .iter()
            .map(|v| (p.labels[i] * v + 0.0).to_bits())
            .collect();
        groups.entry(key).or_default().push(i);
    }
    for members in groups.values().filter(|m| m.len() > 1) {
        let mean = members.iter().map(|&i| lambda[i]).sum::<f64>() / members.len() as f64;
        let mean = mean.clamp(-p.c, p.c);
        for &i in members {
            lambda[i] = mean;
        }
    }
}

/// `w = Σ λ_i y_i x^i`.
pub fn recover_weights(lambda: &[f64], p: &SvcProblem) -> Result<Vec<f64>> {
    check_dim(p.len(), lambda.len())?;
    let mut w = vec![0.0; p.n_features];
    for (i, &l) in lambda.iter().enumerate() {
        axpy(l * p.labels[i], p.point(i), &mut w);
    }
    Ok(w)
}

/// Dual objective `½‖Σ λ_i y_i x^i‖² − Σ λ_i` for arbitrary multipliers.
pub fn dual_objective(lambda: &[f64], p: &SvcProblem) -> Result<f64> {
    let w = recover_weights(lambda, p)?;
    Ok(0.5 * norm_sq(&w) - lambda.iter().sum::<f64>())
}

/// `½‖w‖² + C Σ |1 − y_i (w·x^i)|`: the slacks `q⁺ − q⁻ = 1 − y_i (w·x^i)`
/// split by sign.
pub fn primal_objective(w: &[f64], p: &SvcProblem) -> Result<f64> {
    check_dim(p.n_features, w.len())?;
    let slack: f64 = (0..p.len()).map(|i| p.gradient_at(w, i).abs()).sum();
    Ok(0.5 * norm_sq(w) + p.c * slack)
}

/// Status of each multiplier relative to the box: `at_upper` when
/// `λ_i ≥ C − tol`, `at_lower` when `λ_i ≤ −C + tol`, otherwise `interior`.
pub fn kkt_classify(sol: &DualSolution, p: &SvcProblem, tol: f64) -> Vec<KktStatus> {
    sol.lambda
        .iter()
        .take(p.len())
        .map(|&l| {
            if l >= p.c - tol {
                KktStatus::AtUpper
            } else if l <= -p.c + tol {
                KktStatus::AtLower
            } else {
                KktStatus::Interior
            }
        })
        .collect()
}

/// Per-coordinate projected gradients at the solution (zero-norm points
/// report 0; no multiplier can move them).
pub fn kkt_residuals(sol: &DualSolution, p: &SvcProblem) -> Vec<f64> {
    (0..p.len())
        .map(|i| {
            if norm_sq(p.point(i)) == 0.0 {
                0.0
            } else {
                violation(sol.lambda[i], p.gradient_at(&sol.w, i), p.c)
            }
        })
        .collect()
}
