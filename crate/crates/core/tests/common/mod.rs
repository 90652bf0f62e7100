#![allow(dead_code)]

use descent_lab::linalg::{Matrix, Vector};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub fn gaussian_vec(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.sample(StandardNormal)).collect()
}

pub fn gaussian(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Matrix {
    Matrix::new(rows, cols, gaussian_vec(rng, rows * cols)).unwrap()
}

/// Product of two Gaussian factors, rank `min(rank, rows, cols)`.
pub fn low_rank(rng: &mut ChaCha8Rng, rows: usize, cols: usize, rank: usize) -> Matrix {
    let a = gaussian(rng, rows, rank);
    let b = gaussian(rng, rank, cols);
    let mut data = vec![0.0; rows * cols];
    for i in 0..rows {
        for k in 0..rank {
            let aik = a.get(i, k);
            for j in 0..cols {
                data[i * cols + j] += aik * b.get(k, j);
            }
        }
    }
    Matrix::new(rows, cols, data).unwrap()
}

pub fn vector(values: Vec<f64>) -> Vector {
    Vector::new(values).unwrap()
}

pub fn rel_distance(a: &[f64], b: &[f64]) -> f64 {
    descent_lab::linalg::distance(a, b) / descent_lab::linalg::norm(b).max(1.0)
}
