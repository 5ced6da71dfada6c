//! Plain-text matrix files.
//!
//! A matrix file starts with `rows cols` and is followed by one line per row
//! of whitespace-separated decimal floats. Lines starting with `#` are
//! metadata (`# key=value`) and are skipped by the matrix reader. Values are
//! written with 17 significant digits so a write/read cycle is exact.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use nalgebra::DMatrix;

use crate::error::{PsdpError, Result};
use crate::matcore::DenseMatrix;
use crate::solution::PsdpSolution;

pub fn write_matrix<W: Write>(w: &mut W, m: &DenseMatrix) -> std::io::Result<()> {
    writeln!(w, "{} {}", m.nrows(), m.ncols())?;
    for i in 0..m.nrows() {
        let row: Vec<String> = m.row(i).iter().map(|v| format!("{v:.16e}")).collect();
        writeln!(w, "{}", row.join(" "))?;
    }
    Ok(())
}

/// Matrix body plus the `# key=value` lines found before or inside it.
#[derive(Debug, Clone)]
pub struct MatrixFile {
    pub matrix: DenseMatrix,
    pub metadata: Vec<(String, String)>,
}

impl MatrixFile {
    pub fn get(&self, key: &str) -> Option<&str> {
        self.metadata
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }
}

pub fn read_matrix_file<R: BufRead>(r: R) -> Result<MatrixFile> {
    let mut metadata = Vec::new();
    let mut shape: Option<(usize, usize)> = None;
    let mut data = Vec::new();
    let mut rows_seen = 0;

    for (idx, line) in r.lines().enumerate() {
        let lineno = idx + 1;
        let line = line?;
        let text = line.trim();
        if let Some(meta) = text.strip_prefix('#') {
            if let Some((k, v)) = meta.split_once('=') {
                metadata.push((k.trim().to_string(), v.trim().to_string()));
            }
            continue;
        }
        if text.is_empty() {
            continue;
        }
        let parse_err = |msg: String| PsdpError::Parse { line: lineno, msg };
        match shape {
            None => {
                let dims: Vec<&str> = text.split_whitespace().collect();
                if dims.len() != 2 {
                    return Err(parse_err(format!("expected 'rows cols', found '{text}'")));
                }
                let parse_dim = |s: &str| {
                    s.parse::<usize>()
                        .map_err(|_| parse_err(format!("invalid dimension '{s}'")))
                };
                shape = Some((parse_dim(dims[0])?, parse_dim(dims[1])?));
            }
            Some((rows, cols)) => {
                if rows_seen == rows {
                    return Err(parse_err(format!("more than {rows} data rows")));
                }
                let before = data.len();
                for tok in text.split_whitespace() {
                    let v: f64 = tok
                        .parse()
                        .map_err(|_| parse_err(format!("invalid number '{tok}'")))?;
                    if !v.is_finite() {
                        return Err(parse_err(format!("non-finite value '{tok}'")));
                    }
                    data.push(v);
                }
                let got = data.len() - before;
                if got != cols {
                    return Err(parse_err(format!("expected {cols} values, found {got}")));
                }
                rows_seen += 1;
            }
        }
    }

    let (rows, cols) = shape.ok_or(PsdpError::Parse {
        line: 0,
        msg: "missing 'rows cols' header".into(),
    })?;
    if rows_seen != rows {
        return Err(PsdpError::Parse {
            line: 0,
            msg: format!("expected {rows} data rows, found {rows_seen}"),
        });
    }
    Ok(MatrixFile {
        matrix: DMatrix::from_row_slice(rows, cols, &data),
        metadata,
    })
}

pub fn read_matrix<R: BufRead>(r: R) -> Result<DenseMatrix> {
    read_matrix_file(r).map(|f| f.matrix)
}

pub fn load_matrix(path: &Path) -> Result<DenseMatrix> {
    read_matrix(BufReader::new(File::open(path)?))
}

pub fn save_matrix(path: &Path, m: &DenseMatrix) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_matrix(&mut w, m)?;
    w.flush()?;
    Ok(())
}

/// Solution matrix preceded by `objective`, `infimum`, `attained` and
/// `epsilon` metadata lines. Unknown values are written as `none`.
pub fn write_solution<W: Write>(w: &mut W, sol: &PsdpSolution) -> std::io::Result<()> {
    let opt = |v: Option<f64>| v.map_or_else(|| "none".to_string(), |v| format!("{v:.16e}"));
    writeln!(w, "# objective={:.16e}", sol.objective)?;
    writeln!(w, "# infimum={}", opt(sol.infimum))?;
    writeln!(w, "# attained={}", sol.attained)?;
    writeln!(w, "# epsilon={}", opt(sol.epsilon))?;
    write_matrix(w, &sol.a)
}

pub fn save_solution(path: &Path, sol: &PsdpSolution) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_solution(&mut w, sol)?;
    w.flush()?;
    Ok(())
}
