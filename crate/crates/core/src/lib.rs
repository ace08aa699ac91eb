//! Distributed-style SVD of large sparse short-and-fat matrices.
//!
//! The matrix is split column-wise into blocks, every block is decomposed
//! independently, and the scaled left factors `U_i S_i` are concatenated into
//! a small proxy matrix whose SVD carries the singular values and left
//! singular vectors of the whole matrix. Sparse inputs often leave rows empty
//! inside a block; [`repair`] fills those rows before the blocks are
//! decomposed.

pub mod dense;
pub mod error;
pub mod harness;
pub mod metrics;
pub mod mtx;
pub mod record;
pub mod repair;
pub mod sparse;
pub mod svd;
pub mod synth;

pub use dense::DenseMatrix;
pub use error::{Error, Result};
pub use harness::{assemble_proxy, run_pipeline, BlockTask, PipelineConfig, PipelineOutput};
pub use metrics::{align_signs, e_sigma, e_u, numerical_rank, EvalRow};
pub use mtx::{load_matrix_market, save_matrix_market};
pub use record::{read_block_record, write_block_record, BlockResultRecord};
pub use repair::{
    find_lonely_rows, neighbor_checker, neighbor_random_checker, random_checker,
    rank_equal_probability, repair, RepairMethod, RepairReport,
};
pub use sparse::{partition_columns, BlockPartition, SparseMatrix};
pub use svd::{
    block_svd, build_proxy, dense_svd, proxy_svd, recover_right_vectors, ProxyMatrix, SvdResult,
};
pub use synth::synth_bipartite;
