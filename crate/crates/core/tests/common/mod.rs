//! Oracles and fixtures shared by the integration tests. Nothing here calls
//! into the code paths it is used to check.

#![allow(dead_code)]

use curvkit::losses::Criterion;
use curvkit::nn::{seeded_mlp, Activation, Layer, Linear, Network};
use curvkit::tensor::Matrix;
use curvkit::Dataset;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_matrix(rng: &mut impl Rng, rows: usize, cols: usize) -> Matrix {
    Matrix::from_fn(rows, cols, |_, _| rng.gen_range(-1.0..1.0))
}

pub fn random_vec(rng: &mut impl Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()
}

pub fn random_symmetric(rng: &mut impl Rng, n: usize) -> Matrix {
    let a = random_matrix(rng, n, n);
    Matrix::from_fn(n, n, |i, j| 0.5 * (a[(i, j)] + a[(j, i)]))
}

/// `X Xᵀ + n I`, comfortably positive definite.
pub fn random_spd(rng: &mut impl Rng, n: usize) -> Matrix {
    let x = random_matrix(rng, n, n);
    let mut m = x.matmul(&x.transpose()).unwrap();
    for i in 0..n {
        m[(i, i)] += n as f64;
    }
    m
}

/// All eigenvalues of a symmetric matrix by cyclic Jacobi rotations,
/// ascending.
#[allow(clippy::needless_range_loop)]
pub fn jacobi_eigenvalues(m: &Matrix) -> Vec<f64> {
    let n = m.rows();
    let mut a: Vec<Vec<f64>> = (0..n).map(|i| m.row(i).to_vec()).collect();
    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[i][j] * a[i][j])
            .sum();
        let scale: f64 = (0..n).map(|i| a[i][i] * a[i][i]).sum::<f64>() + off;
        if off <= 1e-30 * scale.max(1e-300) {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                if a[p][q] == 0.0 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[k][p];
                    let akq = a[k][q];
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[p][k];
                    let aqk = a[q][k];
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
            }
        }
    }
    let mut ev: Vec<f64> = (0..n).map(|i| a[i][i]).collect();
    ev.sort_by(f64::total_cmp);
    ev
}

pub fn min_eigenvalue_oracle(m: &Matrix) -> f64 {
    jacobi_eigenvalues(m)[0]
}

pub const FD_H: f64 = 1e-5;

/// Central-difference Jacobian of `f` at `x`, step `1e-5 · max(1, |xⱼ|)`.
pub fn fd_jacobian(f: impl Fn(&[f64]) -> Vec<f64>, x: &[f64]) -> Matrix {
    let out_dim = f(x).len();
    let mut jac = Matrix::zeros(out_dim, x.len());
    for j in 0..x.len() {
        let h = FD_H * x[j].abs().max(1.0);
        let mut xp = x.to_vec();
        let mut xm = x.to_vec();
        xp[j] += h;
        xm[j] -= h;
        let (fp, fm) = (f(&xp), f(&xm));
        for i in 0..out_dim {
            jac[(i, j)] = (fp[i] - fm[i]) / (2.0 * h);
        }
    }
    jac
}

pub fn frob(m: &Matrix) -> f64 {
    m.as_slice().iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// `‖a - b‖_F / ‖b‖_F` (absolute when `b = 0`).
pub fn rel_frob(a: &Matrix, b: &Matrix) -> f64 {
    let d = frob(&a.sub(b).unwrap());
    let nb = frob(b);
    if nb == 0.0 {
        d
    } else {
        d / nb
    }
}

pub fn rel_vec(a: &[f64], b: &[f64]) -> f64 {
    let d: f64 = a
        .iter()
        .zip(b)
        .map(|(x, y)| (x - y).powi(2))
        .sum::<f64>()
        .sqrt();
    let nb: f64 = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if nb == 0.0 {
        d
    } else {
        d / nb
    }
}

pub fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// The 5-4-4-3 MLP used throughout.
pub fn mlp_5443(act: Activation, seed: u64) -> Network {
    seeded_mlp(&[5, 4, 4, 3], Some(act), seed).unwrap()
}

/// Linear layers only, all with bias.
pub fn deep_linear(dims: &[usize], seed: u64) -> Network {
    seeded_mlp(dims, None, seed).unwrap()
}

pub fn data_for(net: &Network, criterion: Criterion, n: usize, seed: u64) -> Dataset {
    Dataset::synthetic(seed, n, net.input_dim(), net.output_dim(), criterion).unwrap()
}

/// Product of the weight matrices of linear layers after `layer`, last
/// first: `W_L ⋯ W_{layer+1}`.
pub fn downstream_weight_product(net: &Network, layer: usize) -> Matrix {
    let mut p = Matrix::identity(net.output_dim());
    for l in net.layers()[layer + 1..].iter().rev() {
        if let Layer::Linear(lin) = l {
            p = p.matmul(lin.weight()).unwrap();
        }
    }
    p
}

pub fn linear_layers(net: &Network) -> Vec<(usize, &Linear)> {
    net.linear_layer_indices()
        .into_iter()
        .map(|i| (i, net.linear(i).unwrap()))
        .collect()
}

/// Dense Kronecker product straight from its definition.
pub fn kron_oracle(a: &Matrix, b: &Matrix) -> Matrix {
    Matrix::from_fn(a.rows() * b.rows(), a.cols() * b.cols(), |r, c| {
        a[(r / b.rows(), c / b.cols())] * b[(r % b.rows(), c % b.cols())]
    })
}
