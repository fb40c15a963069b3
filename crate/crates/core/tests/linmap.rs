mod common;

use common::{j4_from_classes, naive_forward, nested, power_iteration, rel_err, rng, uniform_vec};
use j4reg::dataset::{center, synth_generate, SynthFunction};
use j4reg::linmap::{
    batch_images, fit_linear_head, j4_gradient, j4_loss, least_squares, pca_project, train_j4,
    J4Batch, MlpNetwork, TrainConfig,
};
use rand::Rng;

fn oracle_forward(net: &MlpNetwork, x: &[f64]) -> Vec<f64> {
    let dims = net.layer_dims();
    let weights: Vec<Vec<Vec<f64>>> = net
        .weights()
        .iter()
        .enumerate()
        .map(|(l, w)| nested(w, dims[l + 1], dims[l]))
        .collect();
    naive_forward(&weights, net.biases(), x)
}

fn oracle_loss(net: &MlpNetwork, batch: &J4Batch, eps: f64) -> f64 {
    let phi: Vec<Vec<f64>> = (0..batch.len())
        .map(|i| oracle_forward(net, batch.input(i)))
        .collect();
    j4_from_classes(&phi, batch.targets(), eps)
}

fn random_batch(seed: u64, n_in: usize, m: usize) -> J4Batch {
    let mut r = rng(seed);
    let inputs = uniform_vec(&mut r, n_in * m, -2.0, 2.0);
    let targets = (0..m)
        .map(|_| {
            let mag = r.random_range(0.2..3.0);
            if r.random_bool(0.5) {
                mag
            } else {
                -mag
            }
        })
        .collect();
    J4Batch::new(inputs, n_in, targets).unwrap()
}

#[test]
fn forward_matches_naive_evaluation() {
    for seed in 0..20 {
        let net = MlpNetwork::init(&[3, 4, 6, 2], seed).unwrap();
        let x = uniform_vec(&mut rng(seed + 1000), 3, -3.0, 3.0);
        let a = net.forward(&x).unwrap();
        let b = oracle_forward(&net, &x);
        for (u, v) in a.iter().zip(&b) {
            assert!((u - v).abs() < 1e-14);
        }
    }
}

#[test]
fn init_is_seeded_and_bounded() {
    let a = MlpNetwork::init(&[4, 7, 3], 11).unwrap();
    let b = MlpNetwork::init(&[4, 7, 3], 11).unwrap();
    let c = MlpNetwork::init(&[4, 7, 3], 12).unwrap();
    assert_eq!(a, b);
    assert_ne!(a, c);
    let dims = a.layer_dims();
    for (l, (w, bias)) in a.weights().iter().zip(a.biases()).enumerate() {
        let r = 1.0 / (dims[l] as f64).sqrt();
        assert!(w.iter().chain(bias).all(|v| v.abs() <= r));
    }
}

#[test]
fn loss_matches_explicit_scatter_matrices() {
    for seed in 0..20 {
        let net = MlpNetwork::init(&[2, 5, 4], seed).unwrap();
        let batch = random_batch(seed + 50, 2, 15);
        let phi = batch_images(&net, &batch).unwrap();
        let lib = j4_loss(&phi, 4, batch.targets(), 1e-8).unwrap();
        let oracle = oracle_loss(&net, &batch, 1e-8);
        assert!(rel_err(lib, oracle) < 1e-12, "{lib} vs {oracle}");
        assert!(lib >= 0.0);
    }
}

#[test]
fn gradient_matches_central_differences() {
    let h = 1e-5;
    for (seed, dims) in [
        (1, vec![1, 5, 10]),
        (2, vec![3, 4, 6]),
        (3, vec![2, 3, 3, 2]),
    ] {
        let mut net = MlpNetwork::init(&dims, seed).unwrap();
        let batch = random_batch(seed + 7, dims[0], 12);
        let (loss, _, grads) = j4_gradient(&net, &batch, 1e-8).unwrap();
        assert!(rel_err(loss, oracle_loss(&net, &batch, 1e-8)) < 1e-12);
        let analytic = grads.flatten();
        assert_eq!(analytic.len(), net.parameter_count());
        for k in 0..net.parameter_count() {
            let orig = net.parameter(k);
            net.set_parameter(k, orig + h);
            let up = oracle_loss(&net, &batch, 1e-8);
            net.set_parameter(k, orig - h);
            let down = oracle_loss(&net, &batch, 1e-8);
            net.set_parameter(k, orig);
            let fd = (up - down) / (2.0 * h);
            if analytic[k].abs() < 1e-8 && fd.abs() < 1e-8 {
                continue;
            }
            assert!(
                rel_err(analytic[k], fd) < 1e-4,
                "param {k}: {} vs {fd}",
                analytic[k]
            );
        }
    }
}

#[test]
fn training_reduces_loss_on_a_parabola() {
    let ds = synth_generate(SynthFunction::Square, 300, (-2.0, 3.0), 0.0, 5).unwrap();
    let (c, _) = center(&ds).unwrap();
    let cfg = TrainConfig {
        epochs: 500,
        ..TrainConfig::default()
    };
    let out = train_j4(&c, &cfg).unwrap();
    let first = out.loss_trace[0];
    let last = *out.loss_trace.last().unwrap();
    assert!(last < 0.5 * first, "{first} -> {last}");
    assert!(out.n_dropped > 0);
    let head = fit_linear_head(&out.network, &c).unwrap();
    assert!(head.train_r2 > 0.9, "{}", head.train_r2);
}

#[test]
fn least_squares_matches_normal_equations_in_two_dims() {
    let mut r = rng(9);
    let phi = uniform_vec(&mut r, 2 * 30, -1.0, 1.0);
    let z: Vec<f64> = (0..30)
        .map(|i| 0.7 * phi[2 * i] - 1.3 * phi[2 * i + 1] + 0.01 * (i as f64).sin())
        .collect();
    let w = least_squares(&phi, 2, &z).unwrap();
    // 2×2 normal equations by Cramer's rule
    let (mut a, mut b, mut d, mut e, mut f) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for i in 0..30 {
        let (p, q) = (phi[2 * i], phi[2 * i + 1]);
        a += p * p;
        b += p * q;
        d += q * q;
        e += p * z[i];
        f += q * z[i];
    }
    let det = a * d - b * b;
    let w0 = (e * d - b * f) / det;
    let w1 = (a * f - b * e) / det;
    assert!((w[0] - w0).abs() < 1e-8 && (w[1] - w1).abs() < 1e-8);
}

#[test]
fn pca_leading_axis_matches_power_iteration() {
    let mut r = rng(21);
    let m = 200;
    let data: Vec<f64> = (0..m)
        .flat_map(|_| {
            let t: f64 = r.random_range(-3.0..3.0);
            let e = uniform_vec(&mut r, 3, -0.2, 0.2);
            vec![t + e[0], 0.5 * t + e[1], -0.25 * t + e[2]]
        })
        .collect();
    let proj = pca_project(&data, 3, 2).unwrap();
    let mean: Vec<f64> = (0..3)
        .map(|k| (0..m).map(|i| data[i * 3 + k]).sum::<f64>() / m as f64)
        .collect();
    let mut cov = vec![vec![0.0; 3]; 3];
    for i in 0..m {
        for a in 0..3 {
            for b in 0..3 {
                cov[a][b] +=
                    (data[i * 3 + a] - mean[a]) * (data[i * 3 + b] - mean[b]) / (m - 1) as f64;
            }
        }
    }
    let v = power_iteration(&cov, 1000);
    for k in 0..3 {
        assert!((proj.components[k] - v[k]).abs() < 1e-8);
    }
    assert!(proj.eigenvalues[0] >= proj.eigenvalues[1]);
}
