//! Recovery error metrics against a dense reference decomposition.

use std::io::Write;

use crate::dense::DenseMatrix;
use crate::error::{Error, Result};
use crate::repair::RepairMethod;
use crate::svd::{dense_svd, dense_svd_left};

/// Singular values closer than this (relative to the largest) form one
/// degenerate cluster whose vectors are compared up to rotation.
pub const CLUSTER_TOL: f64 = 1e-9;

/// `sum |hat_i - ref_i|`, the shorter list padded with zeros.
pub fn e_sigma(sigma_hat: &[f64], sigma_ref: &[f64]) -> f64 {
    let n = sigma_hat.len().max(sigma_ref.len());
    (0..n)
        .map(|i| {
            let a = sigma_hat.get(i).copied().unwrap_or(0.0);
            let b = sigma_ref.get(i).copied().unwrap_or(0.0);
            (a - b).abs()
        })
        .sum()
}

/// Index ranges of consecutive singular values that belong together.
pub fn degenerate_clusters(sigma: &[f64]) -> Vec<std::ops::Range<usize>> {
    let scale = sigma.iter().copied().fold(0.0, f64::max);
    let mut out = Vec::new();
    let mut start = 0;
    for i in 1..=sigma.len() {
        if i == sigma.len() || (sigma[i - 1] - sigma[i]).abs() > CLUSTER_TOL * scale {
            out.push(start..i);
            start = i;
        }
    }
    out
}

/// Aligns the columns of `u_hat` to `u_ref`.
///
/// Isolated singular directions are sign-flipped to a nonnegative inner
/// product; a degenerate cluster is rotated onto the reference cluster by
/// orthogonal Procrustes.
pub fn align_signs(
    u_hat: &DenseMatrix,
    u_ref: &DenseMatrix,
    sigma_ref: &[f64],
) -> Result<DenseMatrix> {
    if u_hat.rows() != u_ref.rows() || u_hat.cols() != u_ref.cols() {
        return Err(Error::Shape(format!(
            "cannot align {}x{} to {}x{}",
            u_hat.rows(),
            u_hat.cols(),
            u_ref.rows(),
            u_ref.cols()
        )));
    }
    if sigma_ref.len() != u_ref.cols() {
        return Err(Error::Shape(format!(
            "{} reference singular values for {} columns",
            sigma_ref.len(),
            u_ref.cols()
        )));
    }
    let m = u_hat.rows();
    let mut out = u_hat.clone();
    for cluster in degenerate_clusters(sigma_ref) {
        if cluster.len() == 1 {
            let j = cluster.start;
            let d: f64 = (0..m).map(|i| u_hat[(i, j)] * u_ref[(i, j)]).sum();
            if d < 0.0 {
                for i in 0..m {
                    out[(i, j)] = -u_hat[(i, j)];
                }
            }
            continue;
        }
        let c = cluster.len();
        let mut cross = DenseMatrix::zeros(c, c);
        for a in 0..c {
            for b in 0..c {
                cross[(a, b)] = (0..m)
                    .map(|i| u_hat[(i, cluster.start + a)] * u_ref[(i, cluster.start + b)])
                    .sum();
            }
        }
        let f = dense_svd(&cross)?;
        let rot =
            f.u.matmul(&f.v.expect("full svd").transpose())
                .expect("square factors");
        for i in 0..m {
            for b in 0..c {
                out[(i, cluster.start + b)] = (0..c)
                    .map(|a| u_hat[(i, cluster.start + a)] * rot[(a, b)])
                    .sum();
            }
        }
    }
    Ok(out)
}

/// Entrywise `sum |u_hat - u_ref|` after alignment.
pub fn e_u(u_hat: &DenseMatrix, u_ref: &DenseMatrix, sigma_ref: &[f64]) -> Result<f64> {
    let aligned = align_signs(u_hat, u_ref, sigma_ref)?;
    Ok(aligned
        .as_slice()
        .iter()
        .zip(u_ref.as_slice())
        .map(|(a, b)| (a - b).abs())
        .sum())
}

/// Count of singular values above `tol * sigma_max`.
pub fn numerical_rank(a: &DenseMatrix, tol: f64) -> Result<usize> {
    Ok(dense_svd_left(a)?.rank(tol))
}

/// One line of an evaluation table.
#[derive(Clone, Debug, PartialEq)]
pub struct EvalRow {
    pub blocks: usize,
    pub rows: usize,
    /// Width of the first block.
    pub block_cols: usize,
    pub method: RepairMethod,
    pub seed: u64,
    pub e_sigma: f64,
    pub e_u: f64,
}

impl EvalRow {
    pub const CSV_HEADER: &'static str = "D,M,Ni,method,seed,e_sigma,e_u";

    pub fn to_csv(&self) -> String {
        format!(
            "{},{},{},{},{},{:e},{:e}",
            self.blocks, self.rows, self.block_cols, self.method, self.seed, self.e_sigma, self.e_u
        )
    }

    pub fn from_csv(line: &str) -> Result<Self> {
        let bad = |what: &str| Error::Parse {
            line: 0,
            message: format!("bad {what} in '{line}'"),
        };
        let f: Vec<&str> = line.trim().split(',').collect();
        let [d, m, ni, method, seed, es, eu] = f.as_slice() else {
            return Err(bad("field count"));
        };
        Ok(EvalRow {
            blocks: d.parse().map_err(|_| bad("D"))?,
            rows: m.parse().map_err(|_| bad("M"))?,
            block_cols: ni.parse().map_err(|_| bad("Ni"))?,
            method: method.parse()?,
            seed: seed.parse().map_err(|_| bad("seed"))?,
            e_sigma: es.parse().map_err(|_| bad("e_sigma"))?,
            e_u: eu.parse().map_err(|_| bad("e_u"))?,
        })
    }
}

pub fn write_eval_csv<W: Write>(rows: &[EvalRow], w: &mut W) -> Result<()> {
    writeln!(w, "{}", EvalRow::CSV_HEADER)?;
    for r in rows {
        writeln!(w, "{}", r.to_csv())?;
    }
    Ok(())
}
