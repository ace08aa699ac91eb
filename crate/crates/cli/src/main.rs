use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use blocksvd::metrics::write_eval_csv;
use blocksvd::sparse::DENSE_CAP;
use blocksvd::svd::dense_svd_left;
use blocksvd::{
    e_sigma, e_u, load_matrix_market, run_pipeline, save_matrix_market, synth_bipartite,
    write_block_record, BlockResultRecord, Error, EvalRow, PipelineConfig, RepairMethod,
    SparseMatrix,
};
use clap::{error::ErrorKind, Args, CommandFactory, Parser, Subcommand};

/// Block-wise SVD of sparse short-and-fat matrices.
#[derive(Parser)]
#[command(name = "blocksvd", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a random binary matrix and write it in Matrix Market format.
    Synth {
        #[arg(long)]
        rows: usize,
        #[arg(long)]
        cols: usize,
        #[arg(long)]
        density: f64,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Decompose a matrix block-wise and write sigma, U and the repair log.
    Svd {
        #[command(flatten)]
        input: Input,
        #[command(flatten)]
        run: RunOpts,
        #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
        blocks: u64,
        /// Directory for sigma.txt, u.rnky and repair.log.
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Compare the block-wise result against a dense SVD for several block counts.
    Evaluate {
        #[command(flatten)]
        input: Input,
        #[command(flatten)]
        run: RunOpts,
        /// Comma-separated block counts.
        #[arg(long, value_parser = parse_sweep)]
        sweep: std::vec::Vec<u64>,
        /// CSV destination; stdout if omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
#[group(required = true, multiple = true)]
struct Input {
    /// Matrix Market file.
    #[arg(long = "in", conflicts_with_all = ["rows", "cols", "density"])]
    input: Option<PathBuf>,
    #[arg(long, requires_all = ["cols", "density"])]
    rows: Option<usize>,
    #[arg(long, requires_all = ["rows", "density"])]
    cols: Option<usize>,
    #[arg(long, requires_all = ["rows", "cols"])]
    density: Option<f64>,
}

#[derive(Args)]
struct RunOpts {
    #[arg(long, default_value = "neighbor-random")]
    method: RepairMethod,
    #[arg(long)]
    seed: Option<u64>,
    /// Components kept per block (default: all).
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    keep: Option<u64>,
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u64).range(1..))]
    workers: u64,
}

fn parse_sweep(s: &str) -> std::result::Result<Vec<u64>, String> {
    s.split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(|t| match t.parse::<u64>() {
            Ok(0) => Err("block counts must be at least 1".to_string()),
            Ok(d) => Ok(d),
            Err(e) => Err(format!("'{t}': {e}")),
        })
        .collect()
}

fn usage_error(msg: &str) -> ! {
    Cli::command()
        .error(ErrorKind::MissingRequiredArgument, msg)
        .exit()
}

/// Seed is mandatory whenever the run draws random numbers.
fn seed_for(input: &Input, method: RepairMethod, seed: Option<u64>) -> u64 {
    let needs = input.input.is_none() || method != RepairMethod::None;
    match seed {
        Some(s) => s,
        None if needs => {
            usage_error("--seed is required for synthetic input or a repairing --method")
        }
        None => 0,
    }
}

fn load(input: &Input, seed: u64) -> Result<SparseMatrix> {
    match (&input.input, input.rows, input.cols, input.density) {
        (Some(path), ..) => {
            load_matrix_market(path).with_context(|| format!("reading {}", path.display()))
        }
        (None, Some(r), Some(c), Some(d)) => Ok(synth_bipartite(r, c, d, seed)?),
        _ => usage_error("give either --in or all of --rows, --cols, --density"),
    }
}

fn config(run: &RunOpts, blocks: u64, seed: u64) -> PipelineConfig {
    PipelineConfig {
        keep: run.keep.map(|k| k as usize),
        workers: run.workers as usize,
        ..PipelineConfig::new(blocks as usize, run.method, seed)
    }
}

fn svd(input: &Input, run: &RunOpts, blocks: u64, out_dir: &PathBuf) -> Result<()> {
    let seed = seed_for(input, run.method, run.seed);
    let a = load(input, seed)?;
    let out = run_pipeline(&a, &config(run, blocks, seed))?;
    fs::create_dir_all(out_dir)?;

    let mut w = BufWriter::new(File::create(out_dir.join("sigma.txt"))?);
    for s in &out.svd.sigma {
        writeln!(w, "{s:e}")?;
    }
    w.flush()?;
    write_block_record(
        &BlockResultRecord::from_matrix(0, &out.svd.u)?,
        out_dir.join("u.rnky"),
    )?;
    let mut w = BufWriter::new(File::create(out_dir.join("repair.log"))?);
    out.report.write_log(&mut w)?;
    w.flush()?;

    eprintln!(
        "{}x{} D={} method={}: {} singular values, {} edges added",
        a.rows(),
        a.cols(),
        blocks,
        run.method,
        out.svd.sigma.len(),
        out.report.added_edges.len()
    );
    Ok(())
}

fn evaluate(input: &Input, run: &RunOpts, sweep: &[u64], out: Option<&PathBuf>) -> Result<()> {
    let seed = seed_for(input, run.method, run.seed);
    let a = load(input, seed)?;
    if a.rows().saturating_mul(a.cols()) > DENSE_CAP {
        return Err(Error::TooLarge {
            rows: a.rows(),
            cols: a.cols(),
            cap: DENSE_CAP,
        }
        .into());
    }
    let mut rows = Vec::new();
    for &d in sweep {
        let res = run_pipeline(&a, &config(run, d, seed))?;
        let oracle = dense_svd_left(&res.repaired.to_dense()?)?;
        rows.push(EvalRow {
            blocks: d as usize,
            rows: a.rows(),
            block_cols: res.partition.ranges()[0].len(),
            method: run.method,
            seed,
            e_sigma: e_sigma(&res.svd.sigma, &oracle.sigma),
            e_u: e_u(&res.svd.u, &oracle.u, &oracle.sigma)?,
        });
    }
    match out {
        Some(path) => {
            let mut w = BufWriter::new(File::create(path)?);
            write_eval_csv(&rows, &mut w)?;
            w.flush()?;
        }
        None => write_eval_csv(&rows, &mut io::stdout().lock())?,
    }
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match &cli.command {
        Command::Synth {
            rows,
            cols,
            density,
            seed,
            out,
        } => {
            let a = synth_bipartite(*rows, *cols, *density, *seed)?;
            save_matrix_market(&a, out)?;
            println!("{}", a.nnz());
            Ok(())
        }
        Command::Svd {
            input,
            run,
            blocks,
            out_dir,
        } => svd(input, run, *blocks, out_dir),
        Command::Evaluate {
            input,
            run,
            sweep,
            out,
        } => evaluate(input, run, sweep, out.as_ref()),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
