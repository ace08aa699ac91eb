//! Matrix Market coordinate I/O (`real general`, 1-based indices).

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::sparse::SparseMatrix;

pub const HEADER: &str = "%%MatrixMarket matrix coordinate real general";

pub fn load_matrix_market(path: impl AsRef<Path>) -> Result<SparseMatrix> {
    read_matrix_market(BufReader::new(File::open(path)?))
}

pub fn save_matrix_market(a: &SparseMatrix, path: impl AsRef<Path>) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_matrix_market(a, &mut w)?;
    w.flush()?;
    Ok(())
}

pub fn write_matrix_market<W: Write>(a: &SparseMatrix, w: &mut W) -> Result<()> {
    writeln!(w, "{HEADER}")?;
    writeln!(w, "{} {} {}", a.rows(), a.cols(), a.nnz())?;
    for (r, c, v) in a.iter() {
        writeln!(w, "{} {} {}", r + 1, c + 1, format_value(v))?;
    }
    Ok(())
}

/// Shortest decimal that parses back to `v`; scientific notation outside
/// the range where plain digits stay short.
pub fn format_value(v: f64) -> String {
    let mag = v.abs();
    if mag == 0.0 || (1e-5..1e16).contains(&mag) {
        format!("{v}")
    } else {
        format!("{v:e}")
    }
}

fn parse_err(line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        message: message.into(),
    }
}

fn parse_header(line: &str) -> Result<()> {
    let tokens: Vec<String> = line
        .split_whitespace()
        .map(str::to_ascii_lowercase)
        .collect();
    if tokens.first().map(String::as_str) != Some("%%matrixmarket") {
        return Err(parse_err(1, "missing %%MatrixMarket banner"));
    }
    match tokens.as_slice() {
        [_, obj, fmt, field, sym] => {
            if obj != "matrix" || fmt != "coordinate" {
                return Err(parse_err(1, "only 'matrix coordinate' files are supported"));
            }
            if field != "real" && field != "integer" {
                return Err(parse_err(1, format!("unsupported field type '{field}'")));
            }
            if sym != "general" {
                return Err(parse_err(1, format!("unsupported symmetry '{sym}'")));
            }
            Ok(())
        }
        _ => Err(parse_err(1, "malformed header")),
    }
}

pub fn read_matrix_market<R: Read>(reader: R) -> Result<SparseMatrix> {
    let mut lines = BufReader::new(reader).lines().enumerate();

    let header = match lines.next() {
        Some((_, l)) => l?,
        None => return Err(parse_err(1, "empty file")),
    };
    parse_header(&header)?;

    let mut dims: Option<(usize, usize, usize)> = None;
    let mut matrix: Option<SparseMatrix> = None;
    let mut seen = 0usize;

    for (idx, line) in lines {
        let lineno = idx + 1;
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('%') {
            continue;
        }
        let fields: Vec<&str> = trimmed.split_whitespace().collect();
        match dims {
            None => {
                let [m, n, nnz] = fields.as_slice() else {
                    return Err(parse_err(lineno, "dimension line must be 'rows cols nnz'"));
                };
                let parse = |s: &str| {
                    s.parse::<usize>()
                        .map_err(|_| parse_err(lineno, format!("bad count '{s}'")))
                };
                let (m, n, nnz) = (parse(m)?, parse(n)?, parse(nnz)?);
                dims = Some((m, n, nnz));
                matrix = Some(SparseMatrix::new(m, n));
            }
            Some((m, n, nnz)) => {
                let a = matrix.as_mut().expect("allocated with dims");
                if seen == nnz {
                    return Err(parse_err(
                        lineno,
                        format!("more entries than the declared {nnz}"),
                    ));
                }
                let [r, c, v] = fields.as_slice() else {
                    return Err(parse_err(lineno, "entry line must be 'row col value'"));
                };
                let r: usize = r
                    .parse()
                    .map_err(|_| parse_err(lineno, format!("bad row index '{r}'")))?;
                let c: usize = c
                    .parse()
                    .map_err(|_| parse_err(lineno, format!("bad column index '{c}'")))?;
                let v: f64 = v
                    .parse()
                    .map_err(|_| parse_err(lineno, format!("bad value '{v}'")))?;
                if r == 0 || r > m || c == 0 || c > n {
                    return Err(parse_err(
                        lineno,
                        format!("index ({r}, {c}) outside {m}x{n}"),
                    ));
                }
                if !v.is_finite() {
                    return Err(parse_err(lineno, "non-finite value"));
                }
                if a.get(r - 1, c - 1) != 0.0 {
                    return Err(parse_err(lineno, format!("duplicate entry ({r}, {c})")));
                }
                // explicit zeros are not stored
                a.insert(r - 1, c - 1, v)?;
                seen += 1;
            }
        }
    }

    match (dims, matrix) {
        (Some((_, _, nnz)), Some(a)) => {
            if seen != nnz {
                return Err(parse_err(
                    seen + 2,
                    format!("declared {nnz} entries but found {seen}"),
                ));
            }
            Ok(a)
        }
        _ => Err(parse_err(1, "missing dimension line")),
    }
}
