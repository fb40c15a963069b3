use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::mlp::MlpNetwork;
use crate::dataset::RegressionDataset;
use crate::error::{check_dim, Error, Result};

/// Least-squares head `z = w·φ(x)` on top of a trained map.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearHead {
    pub w: Vec<f64>,
    pub train_mse: f64,
    pub train_r2: f64,
}

/// `1 − SS_res/SS_tot`, defined as 0 when the targets have no spread.
pub fn r_squared(predicted: &[f64], actual: &[f64]) -> f64 {
    let n = actual.len() as f64;
    if actual.is_empty() {
        return 0.0;
    }
    let mean = actual.iter().sum::<f64>() / n;
    let ss_tot: f64 = actual.iter().map(|z| (z - mean) * (z - mean)).sum();
    let ss_res: f64 = predicted
        .iter()
        .zip(actual)
        .map(|(p, z)| (p - z) * (p - z))
        .sum();
    if ss_tot <= f64::EPSILON * f64::EPSILON * n {
        return 0.0;
    }
    1.0 - ss_res / ss_tot
}

pub fn mse(predicted: &[f64], actual: &[f64]) -> f64 {
    if actual.is_empty() {
        return 0.0;
    }
    predicted
        .iter()
        .zip(actual)
        .map(|(p, z)| (p - z) * (p - z))
        .sum::<f64>()
        / actual.len() as f64
}

/// Solves `(ΦᵀΦ + δI) w = Φᵀz` with `δ = 1e-10·tr(ΦᵀΦ)/p`.
pub fn least_squares(phi: &[f64], p: usize, z: &[f64]) -> Result<Vec<f64>> {
    if z.is_empty() {
        return Err(Error::EmptyDataset);
    }
    check_dim(z.len() * p, phi.len())?;
    let design = DMatrix::from_row_slice(z.len(), p, phi);
    let mut gram = design.transpose() * &design;
    let jitter = 1e-10 * gram.trace() / p as f64;
    let jitter = if jitter > 0.0 {
        jitter
    } else {
        f64::MIN_POSITIVE
    };
    for k in 0..p {
        gram[(k, k)] += jitter;
    }
    let rhs = design.transpose() * DVector::from_column_slice(z);
    let solution = match gram.clone().cholesky() {
        Some(chol) => chol.solve(&rhs),
        None => gram
            .lu()
            .solve(&rhs)
            .ok_or_else(|| Error::invalid("normal equations are singular"))?,
    };
    Ok(solution.iter().copied().collect())
}

/// Fits the head on every sample of `ds` (samples with near-zero targets
/// included; no division happens here).
pub fn fit_linear_head(net: &MlpNetwork, ds: &RegressionDataset) -> Result<LinearHead> {
    if ds.is_empty() {
        return Err(Error::EmptyDataset);
    }
    check_dim(net.input_dim(), ds.n_features())?;
    let p = net.output_dim();
    let mut phi = Vec::with_capacity(ds.len() * p);
    for row in ds.rows() {
        phi.extend(net.forward(row)?);
    }
    let w = least_squares(&phi, p, ds.targets())?;
    let predicted: Vec<f64> = phi
        .chunks_exact(p)
        .map(|f| f.iter().zip(&w).map(|(a, b)| a * b).sum())
        .collect();
    Ok(LinearHead {
        train_mse: mse(&predicted, ds.targets()),
        train_r2: r_squared(&predicted, ds.targets()),
        w,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_map_recovers_slope() {
        let net =
            MlpNetwork::from_parameters(vec![1, 1], vec![vec![0.01]], vec![vec![0.0]]).unwrap();
        // φ(x) = tanh(0.01 x); fit z = 3·φ(x) built from the same map
        let xs: Vec<Vec<f64>> = (0..20).map(|i| vec![i as f64 - 10.0]).collect();
        let z: Vec<f64> = xs.iter().map(|x| 3.0 * (0.01 * x[0]).tanh()).collect();
        let ds = RegressionDataset::from_rows(&xs, z).unwrap();
        let head = fit_linear_head(&net, &ds).unwrap();
        assert!((head.w[0] - 3.0).abs() < 1e-6);
        assert!((head.train_r2 - 1.0).abs() < 1e-9);
    }

    #[test]
    fn constant_features_explain_nothing() {
        let net =
            MlpNetwork::from_parameters(vec![1, 2], vec![vec![0.0, 0.0]], vec![vec![0.5, -0.2]])
                .unwrap();
        let xs: Vec<Vec<f64>> = (0..10).map(|i| vec![i as f64]).collect();
        let z: Vec<f64> = (0..10).map(|i| i as f64 - 4.5).collect();
        let ds = RegressionDataset::from_rows(&xs, z).unwrap();
        let head = fit_linear_head(&net, &ds).unwrap();
        assert!(head.train_r2.abs() < 1e-9, "{}", head.train_r2);
    }

    #[test]
    fn r_squared_guards_constant_targets() {
        assert_eq!(r_squared(&[1.0, 2.0], &[3.0, 3.0]), 0.0);
        assert_eq!(r_squared(&[1.0, 2.0], &[1.0, 2.0]), 1.0);
    }
}
