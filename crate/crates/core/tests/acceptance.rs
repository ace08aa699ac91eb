//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails.

mod common;

use std::time::{Duration, Instant};

use blocksvd::mtx::{read_matrix_market, write_matrix_market};
use blocksvd::svd::{dense_svd_left, orthonormality_error, RANK_TOL};
use blocksvd::{
    assemble_proxy, dense_svd, e_sigma, e_u, numerical_rank, partition_columns, proxy_svd,
    rank_equal_probability, repair, run_pipeline, synth_bipartite, BlockResultRecord, DenseMatrix,
    Error, PipelineConfig, PipelineOutput, RepairMethod, SparseMatrix, SvdResult,
};
use rand::seq::SliceRandom;
use rand::Rng;

// Criterion 1
const PROXY_REL_TOL: f64 = 1e-10;
const LEADING_OVERLAP_TOL: f64 = 1e-8;
const PROXY_BUDGET: Duration = Duration::from_secs(60);
// Criterion 2
const UNREPAIRED_MIN_ERROR: f64 = 1e-3;
const REPAIRED_MAX_ERROR: f64 = 1e-9;
// Criterion 3
const TABLE_SIGMA_TOL: f64 = 1e-9;
const TABLE_U_TOL: f64 = 1e-6;
const TABLE_BUDGET: Duration = Duration::from_secs(300);
// Criterion 5
const ESTIMATE_TOL: f64 = 0.03;
const ESTIMATE_SEEDS: u64 = 200;
// Criterion 7
const KERNEL_TOL: f64 = 1e-10;
const KERNEL_SAMPLES: usize = 500;

type Check = (&'static str, fn() -> Outcome);

struct Outcome {
    pass: bool,
    detail: String,
}

impl Outcome {
    fn new(pass: bool, detail: impl Into<String>) -> Self {
        Self {
            pass,
            detail: detail.into(),
        }
    }
}

fn workers() -> usize {
    std::thread::available_parallelism().map_or(4, |n| n.get().min(8))
}

fn oracle_of(out: &PipelineOutput) -> SvdResult {
    dense_svd_left(&out.repaired.to_dense().unwrap()).unwrap()
}

fn proxy_equivalence() -> Outcome {
    let start = Instant::now();
    let mut r = common::rng(2024);
    let mut worst_rel: f64 = 0.0;
    let mut worst_overlap: f64 = 1.0;
    for _ in 0..100 {
        let dense = common::random_dense(16, 256, &mut r);
        let a = SparseMatrix::from_dense(&dense);
        let oracle = dense_svd(&dense).unwrap();
        for d in [2, 4, 8] {
            let out = run_pipeline(&a, &PipelineConfig::new(d, RepairMethod::None, 0)).unwrap();
            for (s_hat, s) in out.svd.sigma.iter().zip(&oracle.sigma) {
                worst_rel = worst_rel.max((s_hat - s).abs() / s);
            }
            let overlap: f64 = (0..16).map(|i| out.svd.u[(i, 0)] * oracle.u[(i, 0)]).sum();
            worst_overlap = worst_overlap.min(overlap.abs());
        }
    }
    let elapsed = start.elapsed();
    Outcome::new(
        worst_rel <= PROXY_REL_TOL
            && worst_overlap >= 1.0 - LEADING_OVERLAP_TOL
            && elapsed < PROXY_BUDGET,
        format!(
            "max rel sigma err {worst_rel:e}, min |<u1,u1>| {worst_overlap:.16}, {:.2?}",
            elapsed
        ),
    )
}

/// 8x64 binary matrix whose row 2 is empty inside block 0 of a 2-way split.
fn rank_deficient_instance() -> SparseMatrix {
    let mut r = common::rng(77);
    let mut t = Vec::new();
    for row in 0..8 {
        for col in 0..64 {
            let lonely = row == 2 && col < 32;
            if !lonely && r.gen_bool(0.25) {
                t.push((row, col, 1.0));
            }
        }
    }
    SparseMatrix::from_triplets(8, 64, t).unwrap()
}

fn repair_necessity() -> Outcome {
    let a = rank_deficient_instance();
    let p = partition_columns(64, 2).unwrap();
    assert_eq!(blocksvd::find_lonely_rows(&a, &p, 0).unwrap(), vec![2]);
    let original = dense_svd(&a.to_dense().unwrap()).unwrap();

    let unrepaired = run_pipeline(&a, &PipelineConfig::new(2, RepairMethod::None, 0)).unwrap();
    let none_err = e_sigma(&unrepaired.svd.sigma, &original.sigma);

    let mut worst_repaired: f64 = 0.0;
    for method in RepairMethod::ALL_CHECKERS {
        for seed in 0..5 {
            let out = run_pipeline(&a, &PipelineConfig::new(2, method, seed)).unwrap();
            worst_repaired = worst_repaired.max(e_sigma(&out.svd.sigma, &oracle_of(&out).sigma));
        }
    }
    Outcome::new(
        none_err > UNREPAIRED_MIN_ERROR && worst_repaired <= REPAIRED_MAX_ERROR,
        format!(
            "method=none e_sigma {none_err:e} (need > {UNREPAIRED_MIN_ERROR:e}); \
             repaired max e_sigma {worst_repaired:e} (need <= {REPAIRED_MAX_ERROR:e})"
        ),
    )
}

fn table_regime() -> Outcome {
    let start = Instant::now();
    let mut worst_sigma: f64 = 0.0;
    let mut worst_u: f64 = 0.0;
    let mut cells = 0;
    for seed in 0..10 {
        let a = synth_bipartite(64, 8192, 0.002, seed).unwrap();
        for d in [2, 4, 8, 16, 32] {
            for method in RepairMethod::ALL_CHECKERS {
                let cfg = PipelineConfig {
                    workers: workers(),
                    ..PipelineConfig::new(d, method, seed)
                };
                let out = run_pipeline(&a, &cfg).unwrap();
                let oracle = oracle_of(&out);
                worst_sigma = worst_sigma.max(e_sigma(&out.svd.sigma, &oracle.sigma));
                worst_u = worst_u.max(e_u(&out.svd.u, &oracle.u, &oracle.sigma).unwrap());
                cells += 1;
            }
        }
    }
    let elapsed = start.elapsed();
    Outcome::new(
        worst_sigma <= TABLE_SIGMA_TOL && worst_u <= TABLE_U_TOL && elapsed < TABLE_BUDGET,
        format!(
            "{cells} cells, max e_sigma {worst_sigma:e}, max e_u {worst_u:e}, {:.2?}",
            elapsed
        ),
    )
}

fn probability_exactness() -> Outcome {
    let p = rank_equal_probability(500, 3).unwrap();
    Outcome::new(
        p == 0.994,
        format!("rank_equal_probability(500, 3) = {p:?}"),
    )
}

/// Block with `no` single-entry rows at distinct columns, one row with
/// several entries elsewhere, and one empty row to be repaired.
fn estimator_block(nc: usize, no: usize, seed: u64) -> SparseMatrix {
    let mut r = common::rng(seed ^ 0x5eed_0000_0000);
    let mut cols: Vec<usize> = (0..nc).collect();
    cols.shuffle(&mut r);
    let mut t: Vec<(usize, usize, f64)> = cols[..no]
        .iter()
        .enumerate()
        .map(|(row, &c)| (row, c, 1.0))
        .collect();
    t.extend(cols[no..no + 3].iter().map(|&c| (no, c, 1.0)));
    SparseMatrix::from_triplets(no + 2, nc, t).unwrap()
}

fn estimator_validation() -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    for nc in [100, 500] {
        for no in [1, 3, 10] {
            let p = partition_columns(nc, 1).unwrap();
            let mut hits = 0;
            for seed in 0..ESTIMATE_SEEDS {
                let block = estimator_block(nc, no, seed);
                let (repaired, report) = repair(&block, &p, RepairMethod::Random, seed).unwrap();
                assert_eq!(report.added_edges.len(), 1);
                let rank = numerical_rank(&repaired.to_dense().unwrap(), RANK_TOL).unwrap();
                if rank == block.rows().min(nc) {
                    hits += 1;
                }
            }
            let rate = hits as f64 / ESTIMATE_SEEDS as f64;
            let expected = rank_equal_probability(nc, no).unwrap();
            let ok = (rate - expected).abs() <= ESTIMATE_TOL;
            pass &= ok;
            parts.push(format!("NC={nc} NO={no}: {rate:.3} vs {expected:.3}"));
        }
    }
    Outcome::new(pass, parts.join("; "))
}

fn bitwise_eq(a: &SvdResult, b: &SvdResult) -> bool {
    let bits = |m: &DenseMatrix| m.as_slice().iter().map(|x| x.to_bits()).collect::<Vec<_>>();
    a.sigma
        .iter()
        .map(|x| x.to_bits())
        .eq(b.sigma.iter().map(|x| x.to_bits()))
        && bits(&a.u) == bits(&b.u)
        && a.u.rows() == b.u.rows()
        && a.u.cols() == b.u.cols()
}

fn determinism() -> Outcome {
    let mut r = common::rng(6);
    let methods = [
        RepairMethod::None,
        RepairMethod::Random,
        RepairMethod::Neighbor,
        RepairMethod::NeighborRandom,
    ];
    let mut mismatches = 0;
    for _ in 0..20 {
        let m = r.gen_range(4..24);
        let n = r.gen_range(50..400);
        let a = common::random_sparse(m, n, r.gen_range(0.005..0.1), &mut r);
        let base = PipelineConfig::new(
            r.gen_range(1..=16),
            *methods.choose(&mut r).unwrap(),
            r.gen(),
        );
        let outs: Vec<PipelineOutput> = [1, 4, 8]
            .iter()
            .map(|&w| {
                run_pipeline(
                    &a,
                    &PipelineConfig {
                        workers: w,
                        ..base.clone()
                    },
                )
                .unwrap()
            })
            .collect();
        for o in &outs[1..] {
            if !bitwise_eq(&o.svd, &outs[0].svd) || o.records != outs[0].records {
                mismatches += 1;
            }
        }
        for _ in 0..3 {
            let mut shuffled = outs[0].records.clone();
            shuffled.shuffle(&mut r);
            let proxy = assemble_proxy(shuffled, m, base.blocks).unwrap();
            let svd = proxy_svd(&proxy).unwrap();
            if proxy != outs[0].proxy || !bitwise_eq(&svd, &outs[0].svd) {
                mismatches += 1;
            }
        }
    }
    Outcome::new(
        mismatches == 0,
        format!("20 configurations, {mismatches} mismatches across workers {{1,4,8}} and shuffled arrival"),
    )
}

fn kernel_contract() -> Outcome {
    let mut r = common::rng(7);
    let mut worst_orth: f64 = 0.0;
    let mut worst_rec: f64 = 0.0;
    let mut unordered = 0;
    let classes = [
        "square",
        "short-and-fat",
        "tall-and-skinny",
        "rank-deficient",
    ];
    for class in classes {
        for _ in 0..KERNEL_SAMPLES {
            let a = match class {
                "square" => {
                    let n = r.gen_range(1..=12);
                    common::random_dense(n, n, &mut r)
                }
                "short-and-fat" => {
                    let m = r.gen_range(1..=10);
                    common::random_dense(m, r.gen_range(m + 1..=80), &mut r)
                }
                "tall-and-skinny" => {
                    let n = r.gen_range(1..=10);
                    common::random_dense(r.gen_range(n + 1..=80), n, &mut r)
                }
                _ => {
                    let (m, n) = (r.gen_range(2..=16), r.gen_range(2..=48));
                    let k = r.gen_range(0..m.min(n));
                    if k == 0 {
                        DenseMatrix::zeros(m, n)
                    } else {
                        common::random_low_rank(m, n, k, &mut r)
                    }
                }
            };
            let f = dense_svd(&a).unwrap();
            worst_orth = worst_orth
                .max(orthonormality_error(&f.u))
                .max(orthonormality_error(f.v.as_ref().unwrap()));
            let rec = f.reconstruct().unwrap();
            let resid: f64 = rec
                .as_slice()
                .iter()
                .zip(a.as_slice())
                .map(|(x, y)| (x - y).powi(2))
                .sum::<f64>()
                .sqrt();
            let norm = a.frobenius_norm();
            let rel = if norm == 0.0 { resid } else { resid / norm };
            worst_rec = worst_rec.max(rel);
            if !f.sigma.windows(2).all(|w| w[0] >= w[1]) || f.sigma.iter().any(|&s| s < 0.0) {
                unordered += 1;
            }
        }
    }
    Outcome::new(
        worst_orth <= KERNEL_TOL && worst_rec <= KERNEL_TOL && unordered == 0,
        format!(
            "{} matrices, max orthonormality err {worst_orth:e}, max rel residual {worst_rec:e}, {unordered} misordered",
            KERNEL_SAMPLES * classes.len()
        ),
    )
}

fn format_fidelity() -> Outcome {
    let mut r = common::rng(8);
    let mut mtx_ok = true;
    for seed in 0..10 {
        let mut a = synth_bipartite(30, 500, 0.02, seed).unwrap();
        for (row, col, _) in a.clone().iter().take(20) {
            a.insert(row, col, r.gen_range(-1e3..1e3)).unwrap();
        }
        let mut first = Vec::new();
        write_matrix_market(&a, &mut first).unwrap();
        let back = read_matrix_market(&first[..]).unwrap();
        let mut second = Vec::new();
        write_matrix_market(&back, &mut second).unwrap();
        mtx_ok &= back == a && first == second;
    }

    let mut rec_ok = true;
    for _ in 0..10 {
        let (m, k) = (r.gen_range(1..40), r.gen_range(0..20));
        let payload = (0..m * k).map(|_| r.gen_range(-10.0..10.0)).collect();
        let rec = BlockResultRecord::new(r.gen_range(0..1000), m, k, payload).unwrap();
        let bytes = rec.to_bytes();
        let back = BlockResultRecord::from_bytes(&bytes).unwrap();
        rec_ok &= back == rec && back.to_bytes() == bytes;
    }

    let mut rejected = 0;
    for _ in 0..100 {
        let (m, k) = (r.gen_range(1..30), r.gen_range(1..10));
        let payload = (0..m * k).map(|_| r.gen_range(-10.0..10.0)).collect();
        let mut bytes = BlockResultRecord::new(0, m, k, payload).unwrap().to_bytes();
        // any bit of the payload or the stored checksum
        let bit = r.gen_range(blocksvd::record::HEADER_LEN * 8..bytes.len() * 8);
        bytes[bit / 8] ^= 1 << (bit % 8);
        if let Err(Error::CorruptRecord(msg)) = BlockResultRecord::from_bytes(&bytes) {
            if msg.contains("checksum") {
                rejected += 1;
            }
        }
    }
    Outcome::new(
        mtx_ok && rec_ok && rejected == 100,
        format!(
            "matrix market byte-identical: {mtx_ok}, block records byte-identical: {rec_ok}, bit flips rejected {rejected}/100"
        ),
    )
}

fn main() {
    let criteria: [Check; 8] = [
        (
            "proxy equivalence on random dense 16x256",
            proxy_equivalence,
        ),
        ("repair necessity on 8x64 instance", repair_necessity),
        ("table regime on synthetic 64x8192", table_regime),
        ("probability estimate exactness", probability_exactness),
        (
            "probability estimate vs empirical rate",
            estimator_validation,
        ),
        ("determinism across workers and arrival order", determinism),
        ("dense kernel contract", kernel_contract),
        ("format fidelity", format_fidelity),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let outcome = check();
        let tag = if outcome.pass { "PASS" } else { "FAIL" };
        println!("[{tag}] criterion {}: {name} -- {}", i + 1, outcome.detail);
        if !outcome.pass {
            failed += 1;
        }
    }
    println!(
        "acceptance: {} passed, {failed} failed",
        criteria.len() - failed
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
