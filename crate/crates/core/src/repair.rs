//! Block rank repair.
//!
//! A row with no entry inside a block ("lonely" row) drops that block's rank.
//! The checkers below give every lonely row a unit entry inside the block,
//! either at a uniformly random column, at a column used by one of the row's
//! neighbours (rows that share a column with it elsewhere in the matrix), or
//! both.

use std::collections::BTreeSet;
use std::fmt;
use std::io::{BufRead, Write};
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::sparse::{BlockPartition, SparseMatrix};

/// Value written for every synthetic edge.
pub const EDGE_VALUE: f64 = 1.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum RepairMethod {
    Random,
    Neighbor,
    NeighborRandom,
    None,
}

impl RepairMethod {
    pub const ALL_CHECKERS: [RepairMethod; 3] = [
        RepairMethod::Random,
        RepairMethod::Neighbor,
        RepairMethod::NeighborRandom,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            RepairMethod::Random => "random",
            RepairMethod::Neighbor => "neighbor",
            RepairMethod::NeighborRandom => "neighbor-random",
            RepairMethod::None => "none",
        }
    }
}

impl fmt::Display for RepairMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for RepairMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "random" => Ok(RepairMethod::Random),
            "neighbor" => Ok(RepairMethod::Neighbor),
            "neighbor-random" => Ok(RepairMethod::NeighborRandom),
            "none" => Ok(RepairMethod::None),
            other => Err(Error::Parameter(format!("unknown repair method '{other}'"))),
        }
    }
}

/// Which checker step produced an edge.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EdgeOrigin {
    Random,
    Neighbor,
    /// Random edge placed because the neighbour search found nothing.
    Fallback,
}

impl EdgeOrigin {
    fn as_str(self) -> &'static str {
        match self {
            EdgeOrigin::Random => "random",
            EdgeOrigin::Neighbor => "neighbor",
            EdgeOrigin::Fallback => "fallback",
        }
    }
}

impl FromStr for EdgeOrigin {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "random" => Ok(EdgeOrigin::Random),
            "neighbor" => Ok(EdgeOrigin::Neighbor),
            "fallback" => Ok(EdgeOrigin::Fallback),
            other => Err(Error::Parameter(format!("unknown edge origin '{other}'"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct AddedEdge {
    pub block: usize,
    pub row: usize,
    /// Global column index.
    pub col: usize,
    pub origin: EdgeOrigin,
}

/// Audit log of a repair run.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct RepairReport {
    pub added_edges: Vec<AddedEdge>,
    /// Lonely rows per block, counted just before that block was repaired.
    pub lonely_counts: Vec<usize>,
    /// Times the neighbour search came up empty and a random edge was used.
    pub fallback_count: usize,
}

impl RepairReport {
    /// Writes `block\trow\tcol\torigin` lines followed by a
    /// `#lonely\t<c0,c1,..>\tfallback\t<n>` trailer.
    pub fn write_log<W: Write>(&self, w: &mut W) -> Result<()> {
        for e in &self.added_edges {
            writeln!(
                w,
                "{}\t{}\t{}\t{}",
                e.block,
                e.row,
                e.col,
                e.origin.as_str()
            )?;
        }
        let counts: Vec<String> = self.lonely_counts.iter().map(usize::to_string).collect();
        writeln!(
            w,
            "#lonely\t{}\tfallback\t{}",
            counts.join(","),
            self.fallback_count
        )?;
        Ok(())
    }

    pub fn read_log<R: BufRead>(r: R) -> Result<Self> {
        let mut report = RepairReport::default();
        let mut trailer = false;
        for (idx, line) in r.lines().enumerate() {
            let lineno = idx + 1;
            let line = line?;
            let bad = |msg: &str| Error::Parse {
                line: lineno,
                message: msg.to_string(),
            };
            if trailer {
                return Err(bad("content after trailer"));
            }
            let fields: Vec<&str> = line.split('\t').collect();
            if let Some(&"#lonely") = fields.first() {
                let [_, counts, "fallback", fallback] = fields.as_slice() else {
                    return Err(bad("malformed trailer"));
                };
                report.lonely_counts = if counts.is_empty() {
                    Vec::new()
                } else {
                    counts
                        .split(',')
                        .map(|c| c.parse().map_err(|_| bad("bad lonely count")))
                        .collect::<Result<_>>()?
                };
                report.fallback_count = fallback.parse().map_err(|_| bad("bad fallback count"))?;
                trailer = true;
                continue;
            }
            let [block, row, col, origin] = fields.as_slice() else {
                return Err(bad("edge line must have four tab-separated fields"));
            };
            report.added_edges.push(AddedEdge {
                block: block.parse().map_err(|_| bad("bad block"))?,
                row: row.parse().map_err(|_| bad("bad row"))?,
                col: col.parse().map_err(|_| bad("bad col"))?,
                origin: origin.parse()?,
            });
        }
        if !trailer {
            return Err(Error::Parse {
                line: 0,
                message: "missing trailer line".into(),
            });
        }
        Ok(report)
    }
}

/// Generator for the random choices made on `(block, row)`.
///
/// Keyed by stream so the outcome of one row never depends on how many draws
/// other rows consumed.
pub fn keyed_rng(seed: u64, block: usize, row: usize) -> ChaCha8Rng {
    assert!(block <= u32::MAX as usize && row <= u32::MAX as usize);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((block as u64) << 32) | row as u64);
    rng
}

/// Rows with no entry inside block `d`, ascending.
pub fn find_lonely_rows(a: &SparseMatrix, p: &BlockPartition, d: usize) -> Result<Vec<usize>> {
    let range = p.range(d)?;
    Ok((0..a.rows())
        .filter(|&r| a.row_is_empty_in(r, range.clone()))
        .collect())
}

fn check_row(a: &SparseMatrix, row: usize) -> Result<()> {
    if row >= a.rows() {
        return Err(Error::IndexOutOfRange {
            what: "row",
            index: row,
            limit: a.rows(),
        });
    }
    Ok(())
}

/// Puts a unit entry at a uniformly chosen column of block `d`. Returns the
/// global column.
pub fn random_checker<R: Rng + ?Sized>(
    a: &mut SparseMatrix,
    p: &BlockPartition,
    d: usize,
    row: usize,
    rng: &mut R,
) -> Result<usize> {
    check_row(a, row)?;
    let range = p.range(d)?;
    let col = rng.gen_range(range);
    a.insert(row, col, EDGE_VALUE)?;
    Ok(col)
}

/// Neighbour rows of `row` (other rows sharing one of its columns outside
/// block `d`) and the sorted, distinct columns inside block `d` where any of
/// them has an entry.
pub fn neighbor_columns(
    a: &SparseMatrix,
    p: &BlockPartition,
    d: usize,
    row: usize,
) -> Result<(Vec<usize>, Vec<usize>)> {
    check_row(a, row)?;
    let range = p.range(d)?;
    let outside: Vec<usize> = a
        .row_entries(row)
        .map(|(c, _)| c)
        .filter(|c| !range.contains(c))
        .collect();
    let candidates: Vec<usize> = if outside.is_empty() {
        Vec::new()
    } else {
        (0..a.rows())
            .filter(|&m| m != row && outside.iter().any(|&c| a.get(m, c) != 0.0))
            .collect()
    };
    let cols: BTreeSet<usize> = candidates
        .iter()
        .flat_map(|&m| a.row_entries_in(m, range.clone()).map(|(c, _)| c))
        .collect();
    Ok((candidates, cols.into_iter().collect()))
}

/// Copies a neighbour's column from block `d` into `row`. Returns `None`,
/// leaving `a` untouched, when no neighbour has an entry in the block.
pub fn neighbor_checker<R: Rng + ?Sized>(
    a: &mut SparseMatrix,
    p: &BlockPartition,
    d: usize,
    row: usize,
    rng: &mut R,
) -> Result<Option<usize>> {
    let (_, cols) = neighbor_columns(a, p, d, row)?;
    if cols.is_empty() {
        return Ok(None);
    }
    let col = cols[rng.gen_range(0..cols.len())];
    a.insert(row, col, EDGE_VALUE)?;
    Ok(Some(col))
}

/// Neighbour step followed unconditionally by a random step. Returns the
/// distinct columns that received a new entry, in the order added.
pub fn neighbor_random_checker<R: Rng + ?Sized>(
    a: &mut SparseMatrix,
    p: &BlockPartition,
    d: usize,
    row: usize,
    rng: &mut R,
) -> Result<Vec<usize>> {
    let mut added = Vec::with_capacity(2);
    if let Some(col) = neighbor_checker(a, p, d, row, rng)? {
        added.push(col);
    }
    let col = random_checker(a, p, d, row, rng)?;
    if !added.contains(&col) {
        added.push(col);
    }
    Ok(added)
}

/// Repairs every lonely row of every block, blocks and rows ascending.
///
/// Returns a repaired copy; `a` is never modified. With
/// [`RepairMethod::Neighbor`], rows whose neighbour search comes up empty get
/// a random edge instead, counted in `fallback_count`.
pub fn repair(
    a: &SparseMatrix,
    p: &BlockPartition,
    method: RepairMethod,
    seed: u64,
) -> Result<(SparseMatrix, RepairReport)> {
    if p.total_cols() != a.cols() {
        return Err(Error::Shape(format!(
            "partition covers {} columns, matrix has {}",
            p.total_cols(),
            a.cols()
        )));
    }
    let mut out = a.clone();
    let mut report = RepairReport::default();
    if method == RepairMethod::None {
        return Ok((out, report));
    }

    for d in 0..p.block_count() {
        let lonely = find_lonely_rows(&out, p, d)?;
        report.lonely_counts.push(lonely.len());
        for row in lonely {
            let mut rng = keyed_rng(seed, d, row);
            let mut record = |col, origin| {
                report.added_edges.push(AddedEdge {
                    block: d,
                    row,
                    col,
                    origin,
                })
            };
            match method {
                RepairMethod::Random => {
                    let col = random_checker(&mut out, p, d, row, &mut rng)?;
                    record(col, EdgeOrigin::Random);
                }
                RepairMethod::Neighbor => match neighbor_checker(&mut out, p, d, row, &mut rng)? {
                    Some(col) => record(col, EdgeOrigin::Neighbor),
                    None => {
                        let col = random_checker(&mut out, p, d, row, &mut rng)?;
                        record(col, EdgeOrigin::Fallback);
                        report.fallback_count += 1;
                    }
                },
                RepairMethod::NeighborRandom => {
                    let neighbor = neighbor_checker(&mut out, p, d, row, &mut rng)?;
                    if let Some(col) = neighbor {
                        record(col, EdgeOrigin::Neighbor);
                    }
                    let col = random_checker(&mut out, p, d, row, &mut rng)?;
                    if neighbor != Some(col) {
                        record(col, EdgeOrigin::Random);
                    }
                }
                RepairMethod::None => unreachable!(),
            }
        }
    }
    Ok((out, report))
}

/// Estimated chance that a randomly repaired block keeps full row rank:
/// `1 - NO / NC`, clamped to `[0, 1]`, where `NC` is the block's column count
/// and `NO` the number of rows holding a single entry.
pub fn rank_equal_probability(nc: usize, no: usize) -> Result<f64> {
    if nc == 0 {
        return Err(Error::Parameter("column count must be positive".into()));
    }
    if no >= nc {
        return Ok(0.0);
    }
    // a single correctly rounded division
    Ok((nc - no) as f64 / nc as f64)
}
