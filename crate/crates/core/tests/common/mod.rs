//! Independent reference implementations used as test oracles. Nothing here
//! calls into the library's numerical code.

#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn uniform_vec(rng: &mut ChaCha8Rng, len: usize, lo: f64, hi: f64) -> Vec<f64> {
    (0..len).map(|_| rng.random_range(lo..hi)).collect()
}

/// Dense `Q_ij = y_i y_j x^i·x^j`.
pub fn dual_hessian(points: &[f64], n: usize, labels: &[f64]) -> Vec<Vec<f64>> {
    let m = labels.len();
    let mut q = vec![vec![0.0; m]; m];
    for i in 0..m {
        for j in 0..m {
            let mut s = 0.0;
            for k in 0..n {
                s += points[i * n + k] * points[j * n + k];
            }
            q[i][j] = labels[i] * labels[j] * s;
        }
    }
    q
}

/// `½ λᵀQλ − Σλ` with the explicit matrix.
pub fn quadratic_objective(q: &[Vec<f64>], lambda: &[f64]) -> f64 {
    let mut quad = 0.0;
    for (i, row) in q.iter().enumerate() {
        for (j, v) in row.iter().enumerate() {
            quad += lambda[i] * v * lambda[j];
        }
    }
    0.5 * quad - lambda.iter().sum::<f64>()
}

fn largest_eigenvalue(q: &[Vec<f64>]) -> f64 {
    let m = q.len();
    let mut v = vec![1.0 / (m as f64).sqrt(); m];
    let mut est = 0.0;
    for _ in 0..500 {
        let mut next = vec![0.0; m];
        for i in 0..m {
            for j in 0..m {
                next[i] += q[i][j] * v[j];
            }
        }
        let norm = next.iter().map(|a| a * a).sum::<f64>().sqrt();
        if norm == 0.0 {
            return 0.0;
        }
        est = norm;
        v = next.into_iter().map(|a| a / norm).collect();
    }
    est
}

/// Accelerated projected gradient (FISTA with restart) for
/// `min ½λᵀQλ − 1ᵀλ` over `[−c, c]^m`. Stops when every projected-gradient
/// component is below `tol`.
pub fn box_qp_projected_gradient(q: &[Vec<f64>], c: f64, tol: f64, max_iter: usize) -> Vec<f64> {
    let m = q.len();
    let lipschitz = largest_eigenvalue(q) * 1.01 + 1e-12;
    let step = 1.0 / lipschitz;
    let grad = |l: &[f64]| -> Vec<f64> {
        (0..m)
            .map(|i| (0..m).map(|j| q[i][j] * l[j]).sum::<f64>() - 1.0)
            .collect()
    };
    let project = |v: f64| v.clamp(-c, c);
    let mut x = vec![0.0; m];
    let mut y = x.clone();
    let mut t: f64 = 1.0;
    let mut last_obj = quadratic_objective(q, &x);
    for _ in 0..max_iter {
        let g = grad(&y);
        let next: Vec<f64> = y
            .iter()
            .zip(&g)
            .map(|(a, b)| project(a - step * b))
            .collect();
        let obj = quadratic_objective(q, &next);
        let t_next = (1.0 + (1.0 + 4.0 * t * t).sqrt()) / 2.0;
        if obj > last_obj {
            // restart momentum
            y = x.clone();
            t = 1.0;
            continue;
        }
        y = next
            .iter()
            .zip(&x)
            .map(|(n, o)| n + (t - 1.0) / t_next * (n - o))
            .collect();
        x = next;
        t = t_next;
        last_obj = obj;

        let gx = grad(&x);
        let worst = x
            .iter()
            .zip(&gx)
            .map(|(&l, &g)| {
                if l >= c {
                    g.max(0.0)
                } else if l <= -c {
                    (-g).max(0.0)
                } else {
                    g.abs()
                }
            })
            .fold(0.0, f64::max);
        if worst <= tol {
            break;
        }
    }
    x
}

/// Straightforward tanh network evaluation: `weights[l][o][i]`.
pub fn naive_forward(weights: &[Vec<Vec<f64>>], biases: &[Vec<f64>], x: &[f64]) -> Vec<f64> {
    let mut a = x.to_vec();
    for (w, b) in weights.iter().zip(biases) {
        a = w
            .iter()
            .zip(b)
            .map(|(row, bias)| {
                let s: f64 = row.iter().zip(&a).map(|(wi, ai)| wi * ai).sum();
                (s + bias).tanh()
            })
            .collect();
    }
    a
}

/// Splits a flat row-major weight buffer into `[out][in]` rows.
pub fn nested(flat: &[f64], outs: usize, ins: usize) -> Vec<Vec<f64>> {
    assert_eq!(flat.len(), outs * ins);
    (0..outs)
        .map(|o| flat[o * ins..(o + 1) * ins].to_vec())
        .collect()
}

/// Trace of a `p × p` scatter matrix built explicitly from outer products.
fn scatter_trace(vectors: &[Vec<f64>], mean: &[f64], scale: f64) -> f64 {
    let p = mean.len();
    let mut s = vec![vec![0.0; p]; p];
    for v in vectors {
        for a in 0..p {
            for b in 0..p {
                s[a][b] += (v[a] - mean[a]) * (v[b] - mean[b]) * scale;
            }
        }
    }
    (0..p).map(|a| s[a][a]).sum()
}

/// J4 from explicit class point sets: class `+1` holds `φ_i/z_i`, class
/// `−1` holds `−φ_i/z_i`; `S_w` pools both classes with weight `1/(2M)`,
/// `S_b = (m₊ − m₋)(m₊ − m₋)ᵀ`.
pub fn j4_from_classes(phi: &[Vec<f64>], z: &[f64], eps_div: f64) -> f64 {
    let p = phi[0].len();
    let m = z.len();
    let plus: Vec<Vec<f64>> = phi
        .iter()
        .zip(z)
        .map(|(f, zi)| f.iter().map(|v| v / zi).collect())
        .collect();
    let minus: Vec<Vec<f64>> = plus
        .iter()
        .map(|v| v.iter().map(|a| -a).collect())
        .collect();
    let mean = |set: &[Vec<f64>]| -> Vec<f64> {
        (0..p)
            .map(|k| set.iter().map(|v| v[k]).sum::<f64>() / set.len() as f64)
            .collect()
    };
    let (mp, mm) = (mean(&plus), mean(&minus));
    let scale = 1.0 / (2 * m) as f64;
    let sw = scatter_trace(&plus, &mp, scale) + scatter_trace(&minus, &mm, scale);
    let diff: Vec<f64> = mp.iter().zip(&mm).map(|(a, b)| a - b).collect();
    let sb = scatter_trace(&[diff], &vec![0.0; p], 1.0);
    sw / (sb + eps_div)
}

/// Classifiability by explicit double loop over all pairs.
pub fn brute_classifiability(
    points: &[f64],
    dim: usize,
    labels: &[f64],
    d: f64,
) -> (f64, Vec<f64>) {
    let m = labels.len();
    let mut per = Vec::with_capacity(m);
    let mut sizes = Vec::with_capacity(m);
    for i in 0..m {
        let mut plus = 0usize;
        let mut total = 0usize;
        for j in 0..m {
            let dist: f64 = (0..dim)
                .map(|k| (points[i * dim + k] - points[j * dim + k]).powi(2))
                .sum::<f64>()
                .sqrt();
            if dist <= d {
                total += 1;
                if labels[j] > 0.0 {
                    plus += 1;
                }
            }
        }
        let p_plus = plus as f64 / total as f64;
        per.push((2.0 * p_plus - 1.0) * labels[i]);
        sizes.push(total as f64);
    }
    let num: f64 = per.iter().zip(&sizes).map(|(c, s)| c * s).sum();
    (num / sizes.iter().sum::<f64>(), per)
}

/// Leading eigenvector of a symmetric matrix by power iteration, sign
/// fixed so its largest-magnitude entry is positive.
pub fn power_iteration(a: &[Vec<f64>], iters: usize) -> Vec<f64> {
    let n = a.len();
    let mut v: Vec<f64> = (0..n).map(|i| 1.0 + i as f64 * 0.1).collect();
    for _ in 0..iters {
        let mut next = vec![0.0; n];
        for i in 0..n {
            for j in 0..n {
                next[i] += a[i][j] * v[j];
            }
        }
        let norm = next.iter().map(|x| x * x).sum::<f64>().sqrt();
        v = next.into_iter().map(|x| x / norm).collect();
    }
    let pivot = v
        .iter()
        .cloned()
        .fold(0.0, |acc: f64, e| if e.abs() > acc.abs() { e } else { acc });
    if pivot < 0.0 {
        v.iter_mut().for_each(|x| *x = -*x);
    }
    v
}

/// Relative difference with a floor on the denominator.
pub fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-300)
}
