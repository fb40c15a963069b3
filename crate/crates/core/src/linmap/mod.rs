//! Learning a linearizing feature map.
//!
//! A tanh network `φ` is trained by full-batch gradient descent on the J4
//! scatter ratio of the equivalence-transformed images `±φ(x^i)/z_i`. Once
//! the two classes are tight and far apart the target is (close to) linear in
//! `φ`, and a least-squares head `z = w·φ(x)` finishes the regressor.

mod head;
mod j4;
mod mlp;
mod pca;

use std::time::Instant;

use serde::{Deserialize, Serialize};

pub use head::{fit_linear_head, least_squares, mse, r_squared, LinearHead};
pub use j4::{
    batch_images, j4_gradient, j4_loss, scatter_stats, J4Batch, ScatterStats, DEFAULT_EPS_DIV,
};
pub use mlp::{Gradients, MlpNetwork};
pub use pca::{pca_project, PcaProjection};

use crate::dataset::{ReferencePoint, RegressionDataset};
use crate::equivalence::default_tau;
use crate::error::{check_dim, Error, Result};
use crate::vecops::{dot, std_dev};

/// Training drops samples with `|z| < 0.4·std(z)` unless told otherwise.
/// Tiny targets blow `φ/z` up and the within-class scatter is then dominated
/// by a handful of samples near the zero crossing.
pub const DEFAULT_TRAIN_TAU_FRACTION: f64 = 0.4;

/// Default near-zero threshold used by [`train_j4`].
pub fn default_train_tau(ds: &RegressionDataset) -> f64 {
    let t = DEFAULT_TRAIN_TAU_FRACTION * std_dev(ds.targets());
    if t > 0.0 {
        t
    } else {
        default_tau(ds)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    /// Hidden and output sizes; the input size comes from the data.
    pub hidden_and_output: Vec<usize>,
    pub lr: f64,
    pub epochs: usize,
    pub seed: u64,
    /// Near-zero target threshold; `None` means [`default_train_tau`].
    pub tau: Option<f64>,
    pub eps_div: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            hidden_and_output: vec![5, 10],
            lr: 0.01,
            epochs: 2000,
            seed: 42,
            tau: None,
            eps_div: DEFAULT_EPS_DIV,
        }
    }
}

impl TrainConfig {
    pub fn layer_dims(&self, n_inputs: usize) -> Vec<usize> {
        std::iter::once(n_inputs)
            .chain(self.hidden_and_output.iter().copied())
            .collect()
    }

    fn validate(&self) -> Result<()> {
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return Err(Error::invalid(format!(
                "learning rate must be positive, got {}",
                self.lr
            )));
        }
        if self.epochs == 0 {
            return Err(Error::invalid("epochs must be at least 1"));
        }
        if self.hidden_and_output.is_empty() {
            return Err(Error::invalid("architecture needs an output layer"));
        }
        if !(self.eps_div >= 0.0) {
            return Err(Error::invalid("eps_div must be nonnegative"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainOutcome {
    pub network: MlpNetwork,
    /// `loss_trace[e]` is the loss evaluated before update `e + 1`, followed
    /// by one final entry for the trained network.
    pub loss_trace: Vec<f64>,
    pub tau: f64,
    pub n_dropped: usize,
}

/// Samples of a centered dataset with `|z| ≥ tau`.
pub fn j4_batch(ds: &RegressionDataset, tau: f64) -> Result<J4Batch> {
    let mut inputs = Vec::new();
    let mut targets = Vec::new();
    for (row, &z) in ds.rows().zip(ds.targets()) {
        if z.abs() >= tau {
            inputs.extend_from_slice(row);
            targets.push(z);
        }
    }
    if targets.is_empty() {
        return Err(Error::AllDropped { tau });
    }
    J4Batch::new(inputs, ds.n_features(), targets)
}

pub fn train_j4(ds: &RegressionDataset, config: &TrainConfig) -> Result<TrainOutcome> {
    train_j4_observed(ds, config, None, |_, _| {})
}

/// Full-batch gradient descent on the J4 loss of a centered dataset.
///
/// `observer(epoch, net)` runs before training (epoch 0) and after every
/// completed epoch. Training aborts with [`Error::TimeLimit`] once `deadline`
/// passes and with [`Error::Diverged`] if the loss stops being finite.
pub fn train_j4_observed(
    ds: &RegressionDataset,
    config: &TrainConfig,
    deadline: Option<(Instant, f64)>,
    mut observer: impl FnMut(usize, &MlpNetwork),
) -> Result<TrainOutcome> {
    config.validate()?;
    if ds.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let tau = config.tau.unwrap_or_else(|| default_train_tau(ds));
    let batch = j4_batch(ds, tau)?;
    let net = MlpNetwork::init(&config.layer_dims(ds.n_features()), config.seed)?;
    let (network, loss_trace) = descend(net, &batch, config, deadline, &mut observer)?;
    Ok(TrainOutcome {
        network,
        loss_trace,
        tau,
        n_dropped: ds.len() - batch.len(),
    })
}

/// Gradient descent from a given starting network.
fn descend(
    mut net: MlpNetwork,
    batch: &J4Batch,
    config: &TrainConfig,
    deadline: Option<(Instant, f64)>,
    observer: &mut impl FnMut(usize, &MlpNetwork),
) -> Result<(MlpNetwork, Vec<f64>)> {
    let mut loss_trace = Vec::with_capacity(config.epochs + 1);
    observer(0, &net);
    for epoch in 1..=config.epochs {
        if let Some((at, seconds)) = deadline {
            if Instant::now() >= at {
                return Err(Error::TimeLimit { seconds });
            }
        }
        let (loss, _, grads) = j4_gradient(&net, batch, config.eps_div)?;
        if !loss.is_finite() {
            return Err(Error::Diverged { epoch, loss });
        }
        loss_trace.push(loss);
        net.apply_gradients(&grads, config.lr);
        if !net.is_finite() {
            return Err(Error::Diverged {
                epoch,
                loss: f64::NAN,
            });
        }
        observer(epoch, &net);
    }
    let images = batch_images(&net, batch)?;
    let final_loss = j4_loss(&images, net.output_dim(), batch.targets(), config.eps_div)?;
    if !final_loss.is_finite() {
        return Err(Error::Diverged {
            epoch: config.epochs,
            loss: final_loss,
        });
    }
    loss_trace.push(final_loss);
    Ok((net, loss_trace))
}

/// `w·φ(x − x⁰) + z⁰`.
pub fn predict(
    net: &MlpNetwork,
    head: &LinearHead,
    reference: &ReferencePoint,
    x: &[f64],
) -> Result<f64> {
    check_dim(net.input_dim(), x.len())?;
    check_dim(x.len(), reference.x0.len())?;
    check_dim(net.output_dim(), head.w.len())?;
    let shifted: Vec<f64> = x.iter().zip(&reference.x0).map(|(a, b)| a - b).collect();
    Ok(dot(&head.w, &net.forward(&shifted)?) + reference.z0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{center, synth_generate, SynthFunction};

    #[test]
    fn zero_epochs_rejected() {
        let ds = synth_generate(SynthFunction::Linear, 10, (0.0, 1.0), 0.0, 1).unwrap();
        let cfg = TrainConfig {
            epochs: 0,
            ..TrainConfig::default()
        };
        assert!(matches!(
            train_j4(&ds, &cfg),
            Err(Error::InvalidArgument(_))
        ));
        let cfg = TrainConfig {
            lr: 0.0,
            ..TrainConfig::default()
        };
        assert!(train_j4(&ds, &cfg).is_err());
    }

    #[test]
    fn training_is_deterministic() {
        let ds = synth_generate(SynthFunction::Square, 200, (-2.0, 3.0), 1.0, 3).unwrap();
        let (c, _) = center(&ds).unwrap();
        let cfg = TrainConfig {
            epochs: 50,
            ..TrainConfig::default()
        };
        let a = train_j4(&c, &cfg).unwrap();
        let b = train_j4(&c, &cfg).unwrap();
        assert_eq!(a.loss_trace, b.loss_trace);
        assert_eq!(a.network, b.network);
        assert_eq!(a.loss_trace.len(), 51);
    }

    #[test]
    fn nan_loss_names_the_epoch() {
        // φ ≡ 0 and no denominator guard: 0/0 at the first epoch
        let net =
            MlpNetwork::from_parameters(vec![1, 2], vec![vec![0.0, 0.0]], vec![vec![0.0, 0.0]])
                .unwrap();
        let batch = J4Batch::new(vec![0.5, -1.0], 1, vec![1.0, 2.0]).unwrap();
        let cfg = TrainConfig {
            eps_div: 0.0,
            ..TrainConfig::default()
        };
        match descend(net, &batch, &cfg, None, &mut |_, _| {}) {
            Err(Error::Diverged { epoch, loss }) => {
                assert_eq!(epoch, 1);
                assert!(loss.is_nan());
            }
            other => panic!("expected divergence, got {other:?}"),
        }
    }

    #[test]
    fn expired_deadline_stops_training() {
        let ds = synth_generate(SynthFunction::Square, 50, (-2.0, 3.0), 1.0, 3).unwrap();
        let (c, _) = center(&ds).unwrap();
        let past = Instant::now();
        let err = train_j4_observed(&c, &TrainConfig::default(), Some((past, 0.0)), |_, _| {});
        assert!(matches!(err, Err(Error::TimeLimit { .. })));
    }

    #[test]
    fn predict_composes_map_head_and_reference() {
        let net = MlpNetwork::init(&[2, 3, 4], 9).unwrap();
        let head = LinearHead {
            w: vec![0.5, -1.0, 2.0, 0.25],
            train_mse: 0.0,
            train_r2: 1.0,
        };
        let reference = ReferencePoint {
            x0: vec![1.0, -2.0],
            z0: 3.0,
        };
        // at x = x0 the network sees the origin
        let phi0 = net.forward(&[0.0, 0.0]).unwrap();
        let expected: f64 = phi0.iter().zip(&head.w).map(|(a, b)| a * b).sum::<f64>() + 3.0;
        assert_eq!(
            predict(&net, &head, &reference, &[1.0, -2.0]).unwrap(),
            expected
        );
        assert!(predict(&net, &head, &reference, &[1.0]).is_err());
    }
}
