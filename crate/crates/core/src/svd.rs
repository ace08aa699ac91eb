//! Dense SVD kernel, per-block reduced SVD and proxy matrix assembly.
//!
//! The kernel reduces the working matrix (`A`, or `Aᵀ` when `A` is wider than
//! tall) with a Householder QR and then runs cyclic one-sided Jacobi on the
//! square triangular factor. Rotations are accumulated on the right, so one
//! side of the factorization is orthonormal by construction and the other is
//! obtained by normalizing mutually orthogonal columns.

use crate::dense::DenseMatrix;
use crate::error::{Error, Result};
use crate::sparse::SparseMatrix;

/// Relative threshold separating numerically nonzero singular values.
pub const RANK_TOL: f64 = 1e-10;

/// Rotation threshold on `|<wi, wj>| / (|wi| |wj|)`.
pub const JACOBI_TOL: f64 = 1e-14;

pub const MAX_SWEEPS: usize = 60;

/// Thin SVD factors: `A ≈ U diag(sigma) Vᵀ`.
///
/// `sigma` is sorted descending. Columns of `u` (and of `v` when present)
/// are orthonormal.
#[derive(Clone, Debug, PartialEq)]
pub struct SvdResult {
    pub u: DenseMatrix,
    pub sigma: Vec<f64>,
    pub v: Option<DenseMatrix>,
}

impl SvdResult {
    pub fn k(&self) -> usize {
        self.sigma.len()
    }

    /// Number of singular values above `tol * sigma_max`.
    pub fn rank(&self, tol: f64) -> usize {
        let max = self.sigma.first().copied().unwrap_or(0.0);
        self.sigma.iter().filter(|&&s| s > tol * max).count()
    }

    /// Keeps the leading `k` components.
    pub fn truncate(mut self, k: usize) -> Self {
        let k = k.min(self.k());
        self.sigma.truncate(k);
        self.u = self.u.leading_columns(k);
        self.v = self.v.map(|v| v.leading_columns(k));
        self
    }

    /// `U diag(sigma)`.
    pub fn scaled_u(&self) -> DenseMatrix {
        let mut us = self.u.clone();
        for i in 0..us.rows() {
            for (j, s) in self.sigma.iter().enumerate() {
                us[(i, j)] *= s;
            }
        }
        us
    }

    /// `U diag(sigma) Vᵀ`, if `V` is present.
    pub fn reconstruct(&self) -> Option<DenseMatrix> {
        let v = self.v.as_ref()?;
        self.scaled_u().matmul(&v.transpose()).ok()
    }
}

/// `max |QᵀQ - I|` over all entries.
pub fn orthonormality_error(q: &DenseMatrix) -> f64 {
    let g = q.transpose().matmul(q).expect("square gram");
    let mut worst: f64 = 0.0;
    for i in 0..g.rows() {
        for j in 0..g.cols() {
            let target = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((g[(i, j)] - target).abs());
        }
    }
    worst
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

struct Householder {
    /// Reflector `I - beta v vᵀ` acting on rows `start..`.
    start: usize,
    v: Vec<f64>,
    beta: f64,
}

impl Householder {
    fn apply(&self, x: &mut [f64]) {
        if self.beta == 0.0 {
            return;
        }
        let tail = &mut x[self.start..];
        let s = self.beta * dot(&self.v, tail);
        for (t, vi) in tail.iter_mut().zip(&self.v) {
            *t -= s * vi;
        }
    }
}

/// In-place Householder QR of `cols` (q columns of length p, p >= q).
/// Returns the reflectors; `cols[j][..=j]` then holds column j of R.
fn householder_qr(cols: &mut [Vec<f64>]) -> Vec<Householder> {
    let q = cols.len();
    let mut reflectors = Vec::with_capacity(q);
    for j in 0..q {
        let x = &cols[j][j..];
        let xnorm = norm(x);
        if xnorm == 0.0 {
            reflectors.push(Householder {
                start: j,
                v: Vec::new(),
                beta: 0.0,
            });
            continue;
        }
        let alpha = if x[0] >= 0.0 { -xnorm } else { xnorm };
        let mut v = x.to_vec();
        v[0] -= alpha;
        let vv = dot(&v, &v);
        let h = Householder {
            start: j,
            beta: if vv == 0.0 { 0.0 } else { 2.0 / vv },
            v,
        };
        cols[j][j] = alpha;
        for t in &mut cols[j][j + 1..] {
            *t = 0.0;
        }
        for col in cols.iter_mut().skip(j + 1) {
            h.apply(col);
        }
        reflectors.push(h);
    }
    reflectors
}

/// Cyclic one-sided Jacobi on the columns of `w` (each of length q).
/// Returns the accumulated right rotations as q columns.
fn one_sided_jacobi(w: &mut [Vec<f64>]) -> Result<Vec<Vec<f64>>> {
    let q = w.len();
    let mut v: Vec<Vec<f64>> = (0..q)
        .map(|i| {
            let mut e = vec![0.0; q];
            e[i] = 1.0;
            e
        })
        .collect();
    // rounding in the Gram entries grows with the column length
    let tol = JACOBI_TOL.max(q as f64 * f64::EPSILON);
    let tiny = f64::MIN_POSITIVE / f64::EPSILON;

    let mut residual = 0.0;
    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        residual = 0.0f64;
        for i in 0..q.saturating_sub(1) {
            for j in i + 1..q {
                let alpha = dot(&w[i], &w[i]);
                let beta = dot(&w[j], &w[j]);
                if alpha < tiny || beta < tiny {
                    continue;
                }
                let gamma = dot(&w[i], &w[j]);
                let off = gamma.abs() / (alpha.sqrt() * beta.sqrt());
                residual = residual.max(off);
                if off <= tol {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + 1.0f64.hypot(zeta));
                let c = 1.0 / 1.0f64.hypot(t);
                let s = c * t;
                rotate(w, i, j, c, s);
                rotate(&mut v, i, j, c, s);
            }
        }
        if !rotated {
            return Ok(v);
        }
    }
    Err(Error::Convergence {
        sweeps: MAX_SWEEPS,
        residual,
    })
}

fn rotate(cols: &mut [Vec<f64>], i: usize, j: usize, c: f64, s: f64) {
    let (lo, hi) = cols.split_at_mut(j);
    for (x, y) in lo[i].iter_mut().zip(hi[0].iter_mut()) {
        let (xi, yj) = (*x, *y);
        *x = c * xi - s * yj;
        *y = s * xi + c * yj;
    }
}

/// Replaces the columns with `keep[i] == false` by an orthonormal completion
/// of the kept ones, built by Gram-Schmidt from canonical basis vectors.
fn complete_basis(cols: &mut [Vec<f64>], keep: &[bool]) {
    let dim = cols.first().map_or(0, Vec::len);
    let mut basis: Vec<usize> = (0..cols.len()).filter(|&i| keep[i]).collect();
    for i in 0..cols.len() {
        if keep[i] {
            continue;
        }
        let project = |e: usize, cols: &[Vec<f64>], basis: &[usize]| {
            let mut x = vec![0.0; dim];
            x[e] = 1.0;
            for _ in 0..2 {
                for &b in basis {
                    let s = dot(&cols[b], &x);
                    for (xi, bi) in x.iter_mut().zip(&cols[b]) {
                        *xi -= s * bi;
                    }
                }
            }
            x
        };
        let mut best: Option<(f64, Vec<f64>)> = None;
        for e in 0..dim {
            let x = project(e, cols, &basis);
            let nx = norm(&x);
            if nx > 0.5 {
                best = Some((nx, x));
                break;
            }
            if best.as_ref().is_none_or(|(b, _)| nx > *b) {
                best = Some((nx, x));
            }
        }
        let (nx, x) = best.expect("completion needs a spare dimension");
        cols[i] = x.into_iter().map(|xi| xi / nx).collect();
        basis.push(i);
    }
}

/// Full thin SVD with right vectors, `k = min(M, N)`.
pub fn dense_svd(a: &DenseMatrix) -> Result<SvdResult> {
    svd_impl(a, true)
}

/// Thin SVD without right vectors.
pub fn dense_svd_left(a: &DenseMatrix) -> Result<SvdResult> {
    svd_impl(a, false)
}

fn svd_impl(a: &DenseMatrix, want_v: bool) -> Result<SvdResult> {
    if !a.is_finite() {
        return Err(Error::NonFinite);
    }
    let (m, n) = (a.rows(), a.cols());
    let k = m.min(n);
    if k == 0 {
        return Ok(SvdResult {
            u: DenseMatrix::zeros(m, 0),
            sigma: Vec::new(),
            v: want_v.then(|| DenseMatrix::zeros(n, 0)),
        });
    }

    // Work on B = A (m >= n) or B = Aᵀ; B is p x k with p >= k.
    let transposed = m < n;
    let mut b: Vec<Vec<f64>> = if transposed {
        (0..m).map(|i| a.row(i).to_vec()).collect()
    } else {
        a.columns()
    };

    let reflectors = householder_qr(&mut b);
    let mut w: Vec<Vec<f64>> = b.iter().map(|c| c[..k].to_vec()).collect();
    drop(b);
    let rot = one_sided_jacobi(&mut w)?;

    let sigma: Vec<f64> = w.iter().map(|c| norm(c)).collect();
    let normalized: Vec<Vec<f64>> = w
        .iter()
        .zip(&sigma)
        .map(|(c, &s)| {
            if s > 0.0 {
                c.iter().map(|x| x / s).collect()
            } else {
                vec![0.0; k]
            }
        })
        .collect();

    // Left factor of B is Q * normalized (p x k).
    let apply_q = |cols: Vec<Vec<f64>>, p: usize| -> Vec<Vec<f64>> {
        cols.into_iter()
            .map(|c| {
                let mut x = c;
                x.resize(p, 0.0);
                for h in reflectors.iter().rev() {
                    h.apply(&mut x);
                }
                x
            })
            .collect()
    };

    let (u_cols, v_cols) = if transposed {
        let v = want_v.then(|| apply_q(normalized, n));
        (rot, v)
    } else {
        (apply_q(normalized, m), want_v.then_some(rot))
    };

    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&i, &j| sigma[j].total_cmp(&sigma[i]));
    let sigma: Vec<f64> = order.iter().map(|&i| sigma[i]).collect();
    let mut u_cols: Vec<Vec<f64>> = order.iter().map(|&i| u_cols[i].clone()).collect();
    let mut v_cols: Option<Vec<Vec<f64>>> =
        v_cols.map(|vc| order.iter().map(|&i| vc[i].clone()).collect());

    let threshold = RANK_TOL * sigma[0];
    let keep: Vec<bool> = sigma.iter().map(|&s| s > threshold && s > 0.0).collect();
    if keep.iter().any(|&x| !x) {
        complete_basis(&mut u_cols, &keep);
        if let Some(vc) = v_cols.as_mut() {
            complete_basis(vc, &keep);
        }
    }

    for j in 0..k {
        let col = &u_cols[j];
        let mut idx = 0;
        for (i, x) in col.iter().enumerate() {
            if x.abs() > col[idx].abs() {
                idx = i;
            }
        }
        if col[idx] < 0.0 {
            for x in u_cols[j].iter_mut() {
                *x = -*x;
            }
            if let Some(vc) = v_cols.as_mut() {
                for x in vc[j].iter_mut() {
                    *x = -*x;
                }
            }
        }
    }

    Ok(SvdResult {
        u: DenseMatrix::from_columns(m, &u_cols),
        sigma,
        v: v_cols.map(|vc| DenseMatrix::from_columns(n, &vc)),
    })
}

/// Reduced SVD of one block, keeping `min(keep, M, Ni)` components and no
/// right vectors.
pub fn block_svd(block: &SparseMatrix, keep: usize) -> Result<SvdResult> {
    if keep == 0 {
        return Err(Error::Parameter("keep must be at least 1".into()));
    }
    let dense = block.to_dense()?;
    Ok(dense_svd_left(&dense)?.truncate(keep))
}

/// `P = [U1 S1 | U2 S2 | ... | UD SD]` with the column span of every block.
#[derive(Clone, Debug, PartialEq)]
pub struct ProxyMatrix {
    pub matrix: DenseMatrix,
    /// `D + 1` offsets; block `i` occupies columns `offsets[i]..offsets[i+1]`.
    pub block_offsets: Vec<usize>,
}

impl ProxyMatrix {
    /// Concatenates already-scaled `U S` factors in the given order.
    pub fn from_scaled_factors(factors: &[DenseMatrix], m: usize) -> Result<Self> {
        let mut block_offsets = Vec::with_capacity(factors.len() + 1);
        block_offsets.push(0);
        for (i, f) in factors.iter().enumerate() {
            if f.rows() != m {
                return Err(Error::Shape(format!(
                    "block {i} factor has {} rows, expected {m}",
                    f.rows()
                )));
            }
            block_offsets.push(block_offsets[i] + f.cols());
        }
        let total = *block_offsets.last().unwrap();
        let mut matrix = DenseMatrix::zeros(m, total);
        for (f, &off) in factors.iter().zip(&block_offsets) {
            for r in 0..m {
                for (c, &x) in f.row(r).iter().enumerate() {
                    matrix[(r, off + c)] = x;
                }
            }
        }
        Ok(Self {
            matrix,
            block_offsets,
        })
    }
}

/// Builds the proxy matrix from per-block results in block order.
pub fn build_proxy(results: &[SvdResult], m: usize) -> Result<ProxyMatrix> {
    let factors: Vec<DenseMatrix> = results.iter().map(SvdResult::scaled_u).collect();
    ProxyMatrix::from_scaled_factors(&factors, m)
}

/// Singular values and left vectors of the proxy, which stand for those of
/// the original matrix.
pub fn proxy_svd(p: &ProxyMatrix) -> Result<SvdResult> {
    dense_svd_left(&p.matrix)
}

/// `vj = Aᵀ uj / sigma_j` for every `sigma_j > tol * sigma_max`; columns
/// below the threshold are dropped.
pub fn recover_right_vectors(
    a: &SparseMatrix,
    u: &DenseMatrix,
    sigma: &[f64],
    tol: f64,
) -> Result<DenseMatrix> {
    if u.rows() != a.rows() || u.cols() != sigma.len() {
        return Err(Error::Shape(format!(
            "U is {}x{} with {} singular values for a {}-row matrix",
            u.rows(),
            u.cols(),
            sigma.len(),
            a.rows()
        )));
    }
    let smax = sigma.iter().copied().fold(0.0, f64::max);
    let kept: Vec<usize> = (0..sigma.len())
        .filter(|&j| smax > 0.0 && sigma[j] > tol * smax)
        .collect();
    let mut v = DenseMatrix::zeros(a.cols(), kept.len());
    for (r, c, x) in a.iter() {
        for (jj, &j) in kept.iter().enumerate() {
            v[(c, jj)] += x * u[(r, j)];
        }
    }
    for (jj, &j) in kept.iter().enumerate() {
        for c in 0..a.cols() {
            v[(c, jj)] /= sigma[j];
        }
    }
    Ok(v)
}
