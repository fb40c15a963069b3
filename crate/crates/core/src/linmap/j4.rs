//! Scatter-ratio loss on equivalence-transformed feature images.
//!
//! For a batch with images `φ_i` and targets `z_i`, the class `+1` points are
//! `u_i = φ_i / z_i` and the class `−1` points are `−u_i`. With `μ₊` the mean
//! of the `u_i` (so `μ₋ = −μ₊`):
//!
//! ```text
//! tr S_w = (1/2M) Σ_classes Σ ‖image − class mean‖² = (1/M) Σ ‖u_i − μ₊‖²
//! tr S_b = ‖μ₊ − μ₋‖² = 4‖μ₊‖²
//! J4     = tr S_w / (tr S_b + eps_div)
//! ```
//!
//! `J4 = 0` exactly when every `φ_i` is the same multiple `z_i·v` of one
//! direction, i.e. when the target is linear in the features.

use serde::{Deserialize, Serialize};

use super::mlp::{Gradients, MlpNetwork};
use crate::error::{check_dim, Error, Result};

pub const DEFAULT_EPS_DIV: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScatterStats {
    pub mu_plus: Vec<f64>,
    pub mu_minus: Vec<f64>,
    pub sw_trace: f64,
    pub sb_trace: f64,
}

impl ScatterStats {
    pub fn loss(&self, eps_div: f64) -> f64 {
        self.sw_trace / (self.sb_trace + eps_div)
    }
}

/// Scatter statistics for row-major images `phi` (`M' × p`).
pub fn scatter_stats(phi: &[f64], p: usize, z: &[f64]) -> Result<ScatterStats> {
    if z.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if p == 0 {
        return Err(Error::invalid(
            "feature images need at least one coordinate",
        ));
    }
    check_dim(z.len() * p, phi.len())?;
    let m = z.len() as f64;
    let mut mu = vec![0.0; p];
    for (row, &zi) in phi.chunks_exact(p).zip(z) {
        for (acc, v) in mu.iter_mut().zip(row) {
            *acc += v / zi;
        }
    }
    mu.iter_mut().for_each(|v| *v /= m);
    let mut sw = 0.0;
    for (row, &zi) in phi.chunks_exact(p).zip(z) {
        sw += row
            .iter()
            .zip(&mu)
            .map(|(v, mu)| {
                let d = v / zi - mu;
                d * d
            })
            .sum::<f64>();
    }
    let sb = 4.0 * mu.iter().map(|v| v * v).sum::<f64>();
    Ok(ScatterStats {
        mu_minus: mu.iter().map(|v| -v).collect(),
        mu_plus: mu,
        sw_trace: sw / m,
        sb_trace: sb,
    })
}

pub fn j4_loss(phi: &[f64], p: usize, z: &[f64], eps_div: f64) -> Result<f64> {
    Ok(scatter_stats(phi, p, z)?.loss(eps_div))
}

/// Inputs and nonzero targets that enter the loss.
#[derive(Debug, Clone, PartialEq)]
pub struct J4Batch {
    inputs: Vec<f64>,
    n_inputs: usize,
    targets: Vec<f64>,
}

impl J4Batch {
    pub fn new(inputs: Vec<f64>, n_inputs: usize, targets: Vec<f64>) -> Result<Self> {
        if targets.is_empty() {
            return Err(Error::EmptyDataset);
        }
        check_dim(targets.len() * n_inputs, inputs.len())?;
        if targets.iter().any(|&z| z == 0.0 || !z.is_finite()) {
            return Err(Error::invalid("batch targets must be finite and nonzero"));
        }
        Ok(Self {
            inputs,
            n_inputs,
            targets,
        })
    }

    pub fn len(&self) -> usize {
        self.targets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.targets.is_empty()
    }

    pub fn input(&self, i: usize) -> &[f64] {
        &self.inputs[i * self.n_inputs..(i + 1) * self.n_inputs]
    }

    pub fn targets(&self) -> &[f64] {
        &self.targets
    }

    pub fn n_inputs(&self) -> usize {
        self.n_inputs
    }
}

/// Images `φ(x^i)` of every batch input, row-major.
pub fn batch_images(net: &MlpNetwork, batch: &J4Batch) -> Result<Vec<f64>> {
    check_dim(net.input_dim(), batch.n_inputs)?;
    let mut out = Vec::with_capacity(batch.len() * net.output_dim());
    for i in 0..batch.len() {
        out.extend(net.forward(batch.input(i))?);
    }
    Ok(out)
}

/// Loss and its exact gradient with respect to every weight and bias.
///
/// `∂J/∂u_i = [2(u_i − μ₊)/M] / (sb + ε) − sw·[8μ₊/M] / (sb + ε)²`; the
/// dependence of `sw` on `μ₊` drops out because the deviations sum to zero.
/// Then `∂J/∂φ_i = (∂J/∂u_i) / z_i` is back-propagated through the network.
pub fn j4_gradient(
    net: &MlpNetwork,
    batch: &J4Batch,
    eps_div: f64,
) -> Result<(f64, ScatterStats, Gradients)> {
    check_dim(net.input_dim(), batch.n_inputs)?;
    let p = net.output_dim();
    let traces: Vec<_> = (0..batch.len())
        .map(|i| net.forward_trace(batch.input(i)))
        .collect();
    let phi: Vec<f64> = traces
        .iter()
        .flat_map(|t| t.activations.last().expect("non-empty").iter().copied())
        .collect();
    let stats = scatter_stats(&phi, p, &batch.targets)?;
    let denom = stats.sb_trace + eps_div;
    let loss = stats.sw_trace / denom;

    let m = batch.len() as f64;
    let sw_scale = 2.0 / (m * denom);
    let sb_scale = 8.0 * stats.sw_trace / (m * denom * denom);
    let mut grads = Gradients::zeros_like(net);
    let mut d_phi = vec![0.0; p];
    for (i, trace) in traces.iter().enumerate() {
        let z = batch.targets[i];
        let phi_i = &phi[i * p..(i + 1) * p];
        for k in 0..p {
            let u = phi_i[k] / z;
            let d_u = sw_scale * (u - stats.mu_plus[k]) - sb_scale * stats.mu_plus[k];
            d_phi[k] = d_u / z;
        }
        net.backward(trace, &d_phi, &mut grads);
    }
    Ok((loss, stats, grads))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_images_give_zero_loss() {
        // φ_i = z_i·v makes every u_i equal to v
        let v = [0.2, -0.1, 0.05];
        let z = [1.0, -2.0, 0.5];
        let phi: Vec<f64> = z
            .iter()
            .flat_map(|zi| v.iter().map(move |vk| zi * vk))
            .collect();
        let s = scatter_stats(&phi, 3, &z).unwrap();
        assert!(s.sw_trace < 1e-30);
        assert_eq!(s.loss(1e-8), s.sw_trace / (s.sb_trace + 1e-8));
        for (a, b) in s.mu_plus.iter().zip(&v) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn collapsed_means_engage_the_guard() {
        let phi = [1.0, 0.0, -1.0, 0.0];
        let z = [1.0, 1.0];
        let s = scatter_stats(&phi, 2, &z).unwrap();
        assert_eq!(s.mu_plus, vec![0.0, 0.0]);
        assert_eq!(s.sw_trace, 1.0);
        assert_eq!(s.sb_trace, 0.0);
        assert_eq!(j4_loss(&phi, 2, &z, 1e-8).unwrap(), 1.0 / 1e-8);
    }

    #[test]
    fn class_means_are_exact_negations() {
        let phi = [0.3, -0.7, 0.11, 0.9, -0.4, 0.25];
        let z = [1.7, -0.3, 2.2];
        let s = scatter_stats(&phi, 2, &z).unwrap();
        for (a, b) in s.mu_plus.iter().zip(&s.mu_minus) {
            assert_eq!(*a, -*b);
        }
    }

    #[test]
    fn empty_batch_is_an_error() {
        assert!(scatter_stats(&[], 2, &[]).is_err());
        assert!(J4Batch::new(vec![], 1, vec![]).is_err());
        assert!(J4Batch::new(vec![1.0], 1, vec![0.0]).is_err());
    }

    #[test]
    fn single_sample_has_zero_within_scatter_gradient() {
        let net = MlpNetwork::init(&[1, 3, 2], 5).unwrap();
        let batch = J4Batch::new(vec![0.7], 1, vec![1.3]).unwrap();
        let (loss, stats, grads) = j4_gradient(&net, &batch, 1e-8).unwrap();
        assert_eq!(stats.sw_trace, 0.0);
        assert_eq!(loss, 0.0);
        assert!(grads.flatten().iter().all(|g| g.abs() < 1e-12));
    }
}
