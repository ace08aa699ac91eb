//! One-level coordinator/worker execution of the block pipeline.
//!
//! The coordinator partitions and repairs the matrix, hands immutable
//! [`BlockTask`]s to a pool of worker threads, and merges the returned
//! records strictly by block index. Outputs do not depend on the number of
//! workers or on the order in which results arrive.

use std::sync::atomic::{AtomicBool, AtomicUsize, Ordering};
use std::sync::mpsc;
use std::thread;

use crate::error::{Error, Result};
use crate::record::BlockResultRecord;
use crate::repair::{repair, RepairMethod, RepairReport};
use crate::sparse::{partition_columns, BlockPartition, SparseMatrix};
use crate::svd::{block_svd, proxy_svd, ProxyMatrix, SvdResult};

#[derive(Clone, Debug)]
pub struct BlockTask {
    pub block: usize,
    pub matrix: SparseMatrix,
    pub keep: usize,
}

impl BlockTask {
    pub fn run(&self) -> Result<BlockResultRecord> {
        let svd = block_svd(&self.matrix, self.keep)?;
        BlockResultRecord::from_svd(self.block, &svd)
    }
}

/// Runs `f` over `tasks` on `workers` threads and returns the results in task
/// order. Stops handing out work after the first failure and reports the
/// failing task with the lowest index.
pub fn run_tasks<T, R, F>(tasks: &[T], workers: usize, f: F) -> Result<Vec<R>>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> Result<R> + Sync,
{
    if workers == 0 {
        return Err(Error::Parameter("at least one worker is required".into()));
    }
    let next = AtomicUsize::new(0);
    let abort = AtomicBool::new(false);
    let (tx, rx) = mpsc::channel::<(usize, Result<R>)>();

    thread::scope(|s| {
        for _ in 0..workers.min(tasks.len().max(1)) {
            let tx = tx.clone();
            let (next, abort, f) = (&next, &abort, &f);
            s.spawn(move || loop {
                if abort.load(Ordering::Relaxed) {
                    break;
                }
                let i = next.fetch_add(1, Ordering::Relaxed);
                let Some(task) = tasks.get(i) else { break };
                let out = f(task);
                if out.is_err() {
                    abort.store(true, Ordering::Relaxed);
                }
                if tx.send((i, out)).is_err() {
                    break;
                }
            });
        }
    });
    drop(tx);

    let mut slots: Vec<Option<R>> = (0..tasks.len()).map(|_| None).collect();
    let mut failure: Option<(usize, Error)> = None;
    for (i, out) in rx {
        match out {
            Ok(r) => slots[i] = Some(r),
            Err(e) => {
                if failure.as_ref().is_none_or(|(j, _)| i < *j) {
                    failure = Some((i, e));
                }
            }
        }
    }
    if let Some((i, e)) = failure {
        return Err(Error::BlockFailed {
            block: i,
            source: Box::new(e),
        });
    }
    Ok(slots
        .into_iter()
        .map(|s| s.expect("every task reports unless aborted"))
        .collect())
}

/// Orders records by block index and concatenates their factors. Arrival
/// order is irrelevant; missing or duplicate blocks are an error.
pub fn assemble_proxy(
    mut records: Vec<BlockResultRecord>,
    m: usize,
    blocks: usize,
) -> Result<ProxyMatrix> {
    records.sort_by_key(BlockResultRecord::block);
    if records.len() != blocks || records.iter().enumerate().any(|(i, r)| r.block() != i) {
        let got: Vec<usize> = records.iter().map(BlockResultRecord::block).collect();
        return Err(Error::Shape(format!(
            "expected one record per block 0..{blocks}, got {got:?}"
        )));
    }
    let factors: Vec<_> = records.iter().map(BlockResultRecord::factor).collect();
    ProxyMatrix::from_scaled_factors(&factors, m)
}

#[derive(Clone, Debug)]
pub struct PipelineConfig {
    pub blocks: usize,
    pub method: RepairMethod,
    /// Components kept per block; `None` keeps `min(M, Ni)`.
    pub keep: Option<usize>,
    pub seed: u64,
    pub workers: usize,
}

impl PipelineConfig {
    pub fn new(blocks: usize, method: RepairMethod, seed: u64) -> Self {
        Self {
            blocks,
            method,
            keep: None,
            seed,
            workers: 1,
        }
    }
}

#[derive(Clone, Debug)]
pub struct PipelineOutput {
    /// Singular values and left vectors recovered from the proxy.
    pub svd: SvdResult,
    pub report: RepairReport,
    /// The matrix actually decomposed (after repair).
    pub repaired: SparseMatrix,
    pub partition: BlockPartition,
    pub records: Vec<BlockResultRecord>,
    pub proxy: ProxyMatrix,
}

/// partition -> repair -> parallel block SVD -> ordered proxy -> proxy SVD.
pub fn run_pipeline(a: &SparseMatrix, cfg: &PipelineConfig) -> Result<PipelineOutput> {
    if cfg.workers == 0 {
        return Err(Error::Parameter("at least one worker is required".into()));
    }
    let partition = partition_columns(a.cols(), cfg.blocks)?;
    let (repaired, report) = repair(a, &partition, cfg.method, cfg.seed)?;

    let tasks = (0..partition.block_count())
        .map(|d| {
            let matrix = repaired.block_view(&partition, d)?;
            let keep = cfg.keep.unwrap_or(matrix.rows().min(matrix.cols()).max(1));
            Ok(BlockTask {
                block: d,
                matrix,
                keep,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let records = run_tasks(&tasks, cfg.workers, BlockTask::run)?;
    let proxy = assemble_proxy(records.clone(), a.rows(), partition.block_count())?;
    let svd = proxy_svd(&proxy)?;

    Ok(PipelineOutput {
        svd,
        report,
        repaired,
        partition,
        records,
        proxy,
    })
}
