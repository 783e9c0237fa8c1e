//! Helpers shared by the integration tests.
#![allow(dead_code)]

use emodrift::Model64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gaussian_rows(n: usize, dim: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut r = rng(seed);
    (0..n)
        .map(|_| (0..dim).map(|_| r.sample::<f64, _>(StandardNormal)).collect())
        .collect()
}

pub fn tokens(n: usize) -> Vec<String> {
    (0..n).map(|i| format!("tok{i}")).collect()
}

pub fn random_model(n: usize, dim: usize, seed: u64) -> Model64 {
    Model64::from_rows(tokens(n), &gaussian_rows(n, dim, seed)).unwrap()
}

/// A random orthogonal matrix: Gram–Schmidt on Gaussian columns.
pub fn random_orthogonal(dim: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut q: Vec<Vec<f64>> = Vec::with_capacity(dim);
    for mut v in gaussian_rows(dim, dim, seed) {
        for u in &q {
            let p: f64 = v.iter().zip(u).map(|(a, b)| a * b).sum();
            for (x, y) in v.iter_mut().zip(u) {
                *x -= p * y;
            }
        }
        let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        q.push(v.into_iter().map(|x| x / n).collect());
    }
    q
}

/// Applies `q` to every row of `m`.
pub fn rotate(m: &Model64, q: &[Vec<f64>]) -> Model64 {
    m.map_rows(|row| q.iter().map(|qi| qi.iter().zip(row).map(|(a, b)| a * b).sum()).collect())
        .unwrap()
}

/// Plain scalar cosine similarity.
pub fn cos(a: &[f64], b: &[f64]) -> f64 {
    let mut ab = 0.0;
    let mut aa = 0.0;
    let mut bb = 0.0;
    for i in 0..a.len() {
        ab += a[i] * b[i];
        aa += a[i] * a[i];
        bb += b[i] * b[i];
    }
    ab / (aa.sqrt() * bb.sqrt())
}
