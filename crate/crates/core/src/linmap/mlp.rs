use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};

/// Fully connected network with `tanh` on every layer, output layer included,
/// so every feature of `φ(x)` lies in `(−1, 1)`.
///
/// Weights are row-major `out × in` per layer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpNetwork {
    layer_dims: Vec<usize>,
    weights: Vec<Vec<f64>>,
    biases: Vec<Vec<f64>>,
}

/// Per-parameter gradients, shaped like the network.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub weights: Vec<Vec<f64>>,
    pub biases: Vec<Vec<f64>>,
}

impl Gradients {
    pub fn zeros_like(net: &MlpNetwork) -> Self {
        Self {
            weights: net.weights.iter().map(|w| vec![0.0; w.len()]).collect(),
            biases: net.biases.iter().map(|b| vec![0.0; b.len()]).collect(),
        }
    }

    /// Flattened in the same order as [`MlpNetwork::parameter`].
    pub fn flatten(&self) -> Vec<f64> {
        self.weights
            .iter()
            .zip(&self.biases)
            .flat_map(|(w, b)| w.iter().chain(b).copied())
            .collect()
    }
}

/// Activations of every layer for one input, input layer first.
pub(crate) struct ForwardTrace {
    pub activations: Vec<Vec<f64>>,
}

fn validate_dims(layer_dims: &[usize]) -> Result<()> {
    if layer_dims.len() < 2 {
        return Err(Error::invalid(
            "architecture needs at least an input and an output layer",
        ));
    }
    if layer_dims.contains(&0) {
        return Err(Error::invalid("layer sizes must be positive"));
    }
    Ok(())
}

impl MlpNetwork {
    /// Seeded initialization, uniform in `[−r, r]` with `r = 1/√fan_in` for
    /// both weights and biases of each layer.
    pub fn init(layer_dims: &[usize], seed: u64) -> Result<Self> {
        validate_dims(layer_dims)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut weights = Vec::new();
        let mut biases = Vec::new();
        for pair in layer_dims.windows(2) {
            let (fan_in, fan_out) = (pair[0], pair[1]);
            let r = 1.0 / (fan_in as f64).sqrt();
            weights.push(
                (0..fan_in * fan_out)
                    .map(|_| rng.random_range(-r..=r))
                    .collect(),
            );
            biases.push((0..fan_out).map(|_| rng.random_range(-r..=r)).collect());
        }
        Ok(Self {
            layer_dims: layer_dims.to_vec(),
            weights,
            biases,
        })
    }

    /// Builds a network from explicit parameters, checking every shape.
    pub fn from_parameters(
        layer_dims: Vec<usize>,
        weights: Vec<Vec<f64>>,
        biases: Vec<Vec<f64>>,
    ) -> Result<Self> {
        validate_dims(&layer_dims)?;
        check_dim(layer_dims.len() - 1, weights.len())?;
        check_dim(layer_dims.len() - 1, biases.len())?;
        for (l, pair) in layer_dims.windows(2).enumerate() {
            check_dim(pair[0] * pair[1], weights[l].len())?;
            check_dim(pair[1], biases[l].len())?;
        }
        let net = Self {
            layer_dims,
            weights,
            biases,
        };
        if !net.is_finite() {
            return Err(Error::invalid("network parameters must be finite"));
        }
        Ok(net)
    }

    pub fn layer_dims(&self) -> &[usize] {
        &self.layer_dims
    }

    pub fn input_dim(&self) -> usize {
        self.layer_dims[0]
    }

    pub fn output_dim(&self) -> usize {
        *self.layer_dims.last().expect("validated non-empty")
    }

    pub fn weights(&self) -> &[Vec<f64>] {
        &self.weights
    }

    pub fn biases(&self) -> &[Vec<f64>] {
        &self.biases
    }

    pub fn is_finite(&self) -> bool {
        self.weights
            .iter()
            .chain(&self.biases)
            .all(|v| v.iter().all(|p| p.is_finite()))
    }

    pub fn parameter_count(&self) -> usize {
        self.weights.iter().chain(&self.biases).map(Vec::len).sum()
    }

    fn locate(&self, mut k: usize) -> (usize, bool, usize) {
        for l in 0..self.weights.len() {
            if k < self.weights[l].len() {
                return (l, true, k);
            }
            k -= self.weights[l].len();
            if k < self.biases[l].len() {
                return (l, false, k);
            }
            k -= self.biases[l].len();
        }
        panic!("parameter index out of range");
    }

    /// Parameter `k` in layer order, weights before biases within a layer.
    pub fn parameter(&self, k: usize) -> f64 {
        match self.locate(k) {
            (l, true, j) => self.weights[l][j],
            (l, false, j) => self.biases[l][j],
        }
    }

    pub fn set_parameter(&mut self, k: usize, value: f64) {
        match self.locate(k) {
            (l, true, j) => self.weights[l][j] = value,
            (l, false, j) => self.biases[l][j] = value,
        }
    }

    /// `φ(x)`.
    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_dim(self.input_dim(), x.len())?;
        let mut a = x.to_vec();
        for l in 0..self.weights.len() {
            a = self.layer(l, &a);
        }
        Ok(a)
    }

    fn layer(&self, l: usize, input: &[f64]) -> Vec<f64> {
        let fan_in = self.layer_dims[l];
        self.weights[l]
            .chunks_exact(fan_in)
            .zip(&self.biases[l])
            .map(|(row, b)| (row.iter().zip(input).map(|(w, a)| w * a).sum::<f64>() + b).tanh())
            .collect()
    }

    pub(crate) fn forward_trace(&self, x: &[f64]) -> ForwardTrace {
        let mut activations = Vec::with_capacity(self.layer_dims.len());
        activations.push(x.to_vec());
        for l in 0..self.weights.len() {
            let next = self.layer(l, activations.last().expect("non-empty"));
            activations.push(next);
        }
        ForwardTrace { activations }
    }

    /// Accumulates `∂loss/∂params` into `grads` given `∂loss/∂φ` for one
    /// sample's trace.
    pub(crate) fn backward(&self, trace: &ForwardTrace, d_output: &[f64], grads: &mut Gradients) {
        let n_layers = self.weights.len();
        let out = &trace.activations[n_layers];
        let mut delta: Vec<f64> = d_output
            .iter()
            .zip(out)
            .map(|(g, a)| g * (1.0 - a * a))
            .collect();
        for l in (0..n_layers).rev() {
            let input = &trace.activations[l];
            let fan_in = self.layer_dims[l];
            for (o, &d) in delta.iter().enumerate() {
                grads.biases[l][o] += d;
                let row = &mut grads.weights[l][o * fan_in..(o + 1) * fan_in];
                for (g, a) in row.iter_mut().zip(input) {
                    *g += d * a;
                }
            }
            if l > 0 {
                let mut prev = vec![0.0; fan_in];
                for (o, &d) in delta.iter().enumerate() {
                    let row = &self.weights[l][o * fan_in..(o + 1) * fan_in];
                    for (p, w) in prev.iter_mut().zip(row) {
                        *p += w * d;
                    }
                }
                delta = prev
                    .iter()
                    .zip(input)
                    .map(|(g, a)| g * (1.0 - a * a))
                    .collect();
            }
        }
    }

    /// Plain gradient step `θ ← θ − lr·∇θ`.
    pub fn apply_gradients(&mut self, grads: &Gradients, lr: f64) {
        for (w, g) in self.weights.iter_mut().zip(&grads.weights) {
            for (p, d) in w.iter_mut().zip(g) {
                *p -= lr * d;
            }
        }
        for (b, g) in self.biases.iter_mut().zip(&grads.biases) {
            for (p, d) in b.iter_mut().zip(g) {
                *p -= lr * d;
            }
        }
    }
}
