//! Synthetic unweighted bipartite graphs used as stand-in input data.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::sparse::SparseMatrix;

/// Random `rows x cols` biadjacency matrix: every cell independently holds a
/// 1.0 edge with probability `density`. Pure in its arguments.
pub fn synth_bipartite(rows: usize, cols: usize, density: f64, seed: u64) -> Result<SparseMatrix> {
    if !(density > 0.0 && density <= 1.0) {
        return Err(Error::Parameter(format!(
            "density must lie in (0, 1], got {density}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut triplets = Vec::new();
    for r in 0..rows {
        for c in 0..cols {
            if rng.gen_bool(density) {
                triplets.push((r, c, 1.0));
            }
        }
    }
    SparseMatrix::from_triplets(rows, cols, triplets)
}
