#![allow(dead_code)]

use blocksvd::{DenseMatrix, SparseMatrix};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_dense(rows: usize, cols: usize, rng: &mut impl Rng) -> DenseMatrix {
    let values = (0..rows * cols).map(|_| rng.gen_range(-1.0..1.0)).collect();
    DenseMatrix::from_row_major(rows, cols, values).unwrap()
}

/// Random matrix of the given rank built as a product of two random factors.
pub fn random_low_rank(rows: usize, cols: usize, rank: usize, rng: &mut impl Rng) -> DenseMatrix {
    let left = random_dense(rows, rank, rng);
    let right = random_dense(rank, cols, rng);
    left.matmul(&right).unwrap()
}

pub fn random_sparse(rows: usize, cols: usize, density: f64, rng: &mut impl Rng) -> SparseMatrix {
    let mut t = Vec::new();
    for r in 0..rows {
        for c in 0..cols {
            if rng.gen_bool(density) {
                t.push((r, c, 1.0));
            }
        }
    }
    SparseMatrix::from_triplets(rows, cols, t).unwrap()
}

/// Singular values through an independent library.
pub fn nalgebra_singular_values(a: &DenseMatrix) -> Vec<f64> {
    let m = nalgebra::DMatrix::from_row_slice(a.rows(), a.cols(), a.as_slice());
    let mut s: Vec<f64> = m.singular_values().iter().copied().collect();
    s.sort_by(|x, y| y.total_cmp(x));
    s
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}
