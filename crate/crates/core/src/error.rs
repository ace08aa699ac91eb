use std::io;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid partition: cannot split {cols} columns into {blocks} blocks")]
    InvalidPartition { cols: usize, blocks: usize },

    #[error("{what} index {index} out of range (limit {limit})")]
    IndexOutOfRange {
        what: &'static str,
        index: usize,
        limit: usize,
    },

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("dense size {rows}x{cols} exceeds the cap of {cap} values; use a desk-scale matrix (e.g. `blocksvd synth`)")]
    TooLarge {
        rows: usize,
        cols: usize,
        cap: usize,
    },

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("non-finite value in input matrix")]
    NonFinite,

    #[error("SVD did not converge after {sweeps} sweeps (residual {residual:e})")]
    Convergence { sweeps: usize, residual: f64 },

    #[error("corrupt block record: {0}")]
    CorruptRecord(String),

    #[error("block {block} failed: {source}")]
    BlockFailed {
        block: usize,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] io::Error),
}
