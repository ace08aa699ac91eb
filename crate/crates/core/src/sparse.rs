//! Coordinate sparse matrices and their column-block partitioning.
//!
//! Rows are stored as ordered maps from column to value so row scans over a
//! column range and single-entry insertion are both cheap. Stored values are
//! always finite and nonzero.

use std::collections::BTreeMap;
use std::ops::Range;

use crate::dense::DenseMatrix;
use crate::error::{Error, Result};

/// Densification cap: `rows * cols` may not exceed this many values.
pub const DENSE_CAP: usize = 1 << 26;

#[derive(Clone, Debug, PartialEq)]
pub struct SparseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<BTreeMap<usize, f64>>,
}

impl SparseMatrix {
    pub fn new(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![BTreeMap::new(); rows],
        }
    }

    /// Builds a matrix from `(row, col, value)` triplets.
    ///
    /// Explicit zeros are dropped. Out-of-range indices, duplicate
    /// coordinates and non-finite values are rejected.
    pub fn from_triplets<I>(rows: usize, cols: usize, triplets: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize, f64)>,
    {
        let mut m = Self::new(rows, cols);
        for (r, c, v) in triplets {
            m.check_index(r, c)?;
            if !v.is_finite() {
                return Err(Error::NonFinite);
            }
            if m.data[r].contains_key(&c) {
                return Err(Error::Parameter(format!("duplicate entry at ({r}, {c})")));
            }
            if v != 0.0 {
                m.data[r].insert(c, v);
            }
        }
        Ok(m)
    }

    /// Re-extracts the nonzero entries of a dense matrix.
    pub fn from_dense(dense: &DenseMatrix) -> Self {
        let mut m = Self::new(dense.rows(), dense.cols());
        for i in 0..dense.rows() {
            for (j, &v) in dense.row(i).iter().enumerate() {
                if v != 0.0 {
                    m.data[i].insert(j, v);
                }
            }
        }
        m
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn nnz(&self) -> usize {
        self.data.iter().map(BTreeMap::len).sum()
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.data
            .get(row)
            .and_then(|r| r.get(&col))
            .copied()
            .unwrap_or(0.0)
    }

    /// Sets `A[row, col]`. Writing zero removes the entry. Returns the
    /// previous value, if any.
    pub fn insert(&mut self, row: usize, col: usize, value: f64) -> Result<Option<f64>> {
        self.check_index(row, col)?;
        if !value.is_finite() {
            return Err(Error::NonFinite);
        }
        if value == 0.0 {
            Ok(self.data[row].remove(&col))
        } else {
            Ok(self.data[row].insert(col, value))
        }
    }

    /// Entries of one row, ordered by column.
    pub fn row_entries(&self, row: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.data[row].iter().map(|(&c, &v)| (c, v))
    }

    /// Entries of one row restricted to a column range.
    pub fn row_entries_in(
        &self,
        row: usize,
        cols: Range<usize>,
    ) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.data[row].range(cols).map(|(&c, &v)| (c, v))
    }

    pub fn row_is_empty_in(&self, row: usize, cols: Range<usize>) -> bool {
        self.data[row].range(cols).next().is_none()
    }

    /// All entries in row-major order.
    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        self.data
            .iter()
            .enumerate()
            .flat_map(|(r, row)| row.iter().map(move |(&c, &v)| (r, c, v)))
    }

    pub fn transpose(&self) -> SparseMatrix {
        let mut t = SparseMatrix::new(self.cols, self.rows);
        for (r, c, v) in self.iter() {
            t.data[c].insert(r, v);
        }
        t
    }

    /// Extracts block `d` of `partition`, with columns re-indexed from zero.
    pub fn block_view(&self, partition: &BlockPartition, d: usize) -> Result<SparseMatrix> {
        if partition.total_cols() != self.cols {
            return Err(Error::Shape(format!(
                "partition covers {} columns, matrix has {}",
                partition.total_cols(),
                self.cols
            )));
        }
        let range = partition.range(d)?;
        let mut out = SparseMatrix::new(self.rows, range.len());
        for (r, row) in self.data.iter().enumerate() {
            out.data[r] = row
                .range(range.clone())
                .map(|(&c, &v)| (c - range.start, v))
                .collect();
        }
        Ok(out)
    }

    /// Dense copy, refused beyond [`DENSE_CAP`] values.
    pub fn to_dense(&self) -> Result<DenseMatrix> {
        let size = self.rows.saturating_mul(self.cols);
        if size > DENSE_CAP {
            return Err(Error::TooLarge {
                rows: self.rows,
                cols: self.cols,
                cap: DENSE_CAP,
            });
        }
        let mut dense = DenseMatrix::zeros(self.rows, self.cols);
        for (r, c, v) in self.iter() {
            dense[(r, c)] = v;
        }
        Ok(dense)
    }

    fn check_index(&self, row: usize, col: usize) -> Result<()> {
        if row >= self.rows {
            return Err(Error::IndexOutOfRange {
                what: "row",
                index: row,
                limit: self.rows,
            });
        }
        if col >= self.cols {
            return Err(Error::IndexOutOfRange {
                what: "column",
                index: col,
                limit: self.cols,
            });
        }
        Ok(())
    }
}

/// Column ranges of a `D`-way column split.
///
/// The first `D - 1` blocks have width `N / D`; the last one takes the
/// remainder.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BlockPartition {
    total_cols: usize,
    ranges: Vec<Range<usize>>,
}

impl BlockPartition {
    pub fn new(total_cols: usize, blocks: usize) -> Result<Self> {
        if blocks == 0 || blocks > total_cols {
            return Err(Error::InvalidPartition {
                cols: total_cols,
                blocks,
            });
        }
        let width = total_cols / blocks;
        let ranges = (0..blocks)
            .map(|d| {
                let start = d * width;
                let end = if d + 1 == blocks {
                    total_cols
                } else {
                    start + width
                };
                start..end
            })
            .collect();
        Ok(Self { total_cols, ranges })
    }

    pub fn total_cols(&self) -> usize {
        self.total_cols
    }

    pub fn block_count(&self) -> usize {
        self.ranges.len()
    }

    pub fn ranges(&self) -> &[Range<usize>] {
        &self.ranges
    }

    pub fn range(&self, d: usize) -> Result<Range<usize>> {
        self.ranges.get(d).cloned().ok_or(Error::IndexOutOfRange {
            what: "block",
            index: d,
            limit: self.ranges.len(),
        })
    }

    /// Block holding global column `col`.
    pub fn block_of(&self, col: usize) -> Option<usize> {
        if col >= self.total_cols {
            return None;
        }
        let idx = self.ranges.partition_point(|r| r.end <= col);
        Some(idx)
    }
}

/// Splits `n` columns into `d` contiguous blocks.
pub fn partition_columns(n: usize, d: usize) -> Result<BlockPartition> {
    BlockPartition::new(n, d)
}
