#![allow(dead_code)]

use cfm_core::data::{read_movielens, RatingsFormat};
use cfm_core::{CsrMatrix, Dataset};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gaussian(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.sample(StandardNormal)).collect()
}

pub fn unit(mut v: Vec<f64>) -> Vec<f64> {
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    v.iter_mut().for_each(|x| *x /= n);
    v
}

/// Dense `n × d` Gaussian design with roughly `density` of the entries kept.
pub fn random_rows(rng: &mut ChaCha8Rng, n: usize, d: usize, density: f64) -> Vec<Vec<f64>> {
    (0..n)
        .map(|_| {
            (0..d)
                .map(|_| {
                    let v: f64 = rng.sample(StandardNormal);
                    if rng.random::<f64>() < density {
                        v
                    } else {
                        0.0
                    }
                })
                .collect()
        })
        .collect()
}

pub fn dataset_from_rows(rows: &[Vec<f64>], d: usize, y: Vec<f64>) -> Dataset {
    Dataset::single_block(CsrMatrix::from_dense(rows, d).unwrap(), y, "dense").unwrap()
}

pub fn random_dataset(seed: u64, n: usize, d: usize, density: f64) -> Dataset {
    let mut r = rng(seed);
    let rows = random_rows(&mut r, n, d, density);
    let y = gaussian(&mut r, n);
    dataset_from_rows(&rows, d, y)
}

pub fn to_na(rows: &[Vec<f64>], d: usize) -> DMatrix<f64> {
    DMatrix::from_fn(rows.len(), d, |i, j| rows[i][j])
}

/// Row-major `d × d` dense matrix into nalgebra.
pub fn square_na(w: &[f64], d: usize) -> DMatrix<f64> {
    DMatrix::from_row_slice(d, d, w)
}

/// `½ Σ_{l≠l'} W_{ll'} x_l x_l'` by explicit double loop.
pub fn brute_quad(w: &[f64], d: usize, x: &[f64]) -> f64 {
    let mut s = 0.0;
    for l in 0..d {
        for m in 0..d {
            if l != m {
                s += w[l * d + m] * x[l] * x[m];
            }
        }
    }
    0.5 * s
}

/// Dense `Z = [1 | X]` as an `n × (d+1)` nalgebra matrix.
pub fn biased_na(x: &CsrMatrix) -> DMatrix<f64> {
    let dense = x.to_dense();
    DMatrix::from_fn(x.n_rows(), x.n_cols() + 1, |i, j| if j == 0 { 1.0 } else { dense[i][j - 1] })
}

/// `ȳᵀ (I − A (AᵀA + λI)⁻¹ Aᵀ) ȳ` through an explicit dense solve (SVD
/// pseudo-inverse when λ = 0 so rank-deficient designs are fine).
pub fn dense_eliminated_objective(a: &DMatrix<f64>, ybar: &[f64], lambda1: f64) -> f64 {
    let yb = DVector::from_column_slice(ybar);
    let w = dense_ridge(a, ybar, lambda1);
    let r = &yb - a * &w;
    r.norm_squared() + lambda1 * w.norm_squared()
}

pub fn dense_ridge(a: &DMatrix<f64>, target: &[f64], lambda1: f64) -> DVector<f64> {
    let t = DVector::from_column_slice(target);
    let k = a.ncols();
    let gram = a.transpose() * a + DMatrix::identity(k, k) * lambda1;
    let rhs = a.transpose() * t;
    if lambda1 > 0.0 {
        gram.cholesky().expect("ridge gram is SPD").solve(&rhs)
    } else {
        gram.svd(true, true).solve(&rhs, 1e-12).unwrap()
    }
}

pub fn trace_norm(m: &DMatrix<f64>) -> f64 {
    m.clone().svd(false, false).singular_values.iter().sum()
}

/// MovieLens-style text for a random low-rank rating matrix. Every user and
/// item appears at least once.
pub fn simulated_ratings(seed: u64, users: usize, items: usize, n: usize) -> String {
    let mut r = rng(seed);
    let uf: Vec<Vec<f64>> = (0..users).map(|_| gaussian(&mut r, 2)).collect();
    let vf: Vec<Vec<f64>> = (0..items).map(|_| gaussian(&mut r, 2)).collect();
    let mut text = String::new();
    for k in 0..n {
        let (u, i) = if k < users.max(items) {
            (k % users, k % items)
        } else {
            (r.random_range(0..users), r.random_range(0..items))
        };
        let score = 3.0 + uf[u][0] * vf[i][0] + uf[u][1] * vf[i][1] + 0.1 * r.sample::<f64, _>(StandardNormal);
        let rating = score.round().clamp(1.0, 5.0);
        text.push_str(&format!("{}\t{}\t{rating}\t{k}\n", u + 1, 100 + i));
    }
    text
}

pub fn ratings_dataset(seed: u64, users: usize, items: usize, n: usize) -> Dataset {
    read_movielens(simulated_ratings(seed, users, items, n).as_bytes(), RatingsFormat::Tab100k).unwrap()
}
