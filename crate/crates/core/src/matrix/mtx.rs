//! Matrix Market coordinate files: 1-based on disk, 0-based in memory.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use crate::error::{Error, Result};

use super::{CooMatrix, CsrMatrix};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Field {
    Real,
    Integer,
    Pattern,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Symmetry {
    General,
    Symmetric,
    SkewSymmetric,
}

pub fn load_matrix_market(path: impl AsRef<Path>) -> Result<CooMatrix> {
    let path = path.as_ref();
    let file = File::open(path)?;
    parse(BufReader::new(file)).map_err(|e| match e {
        Error::Parse { line, msg, .. } => Error::Parse { path: Some(path.to_path_buf()), line, msg },
        other => other,
    })
}

/// Parses Matrix Market text from any reader.
pub fn parse_matrix_market(reader: impl BufRead) -> Result<CooMatrix> {
    parse(reader)
}

fn parse_err(line: usize, msg: impl Into<String>) -> Error {
    Error::Parse { path: None, line, msg: msg.into() }
}

fn parse(reader: impl BufRead) -> Result<CooMatrix> {
    let mut lines = reader.lines().enumerate().map(|(i, l)| (i + 1, l));

    let (lineno, header) = match lines.next() {
        Some((n, l)) => (n, l?),
        None => return Err(parse_err(1, "empty file")),
    };
    let tokens: Vec<String> = header.split_whitespace().map(|t| t.to_ascii_lowercase()).collect();
    if tokens.len() != 5 || tokens[0] != "%%matrixmarket" || tokens[1] != "matrix" {
        return Err(parse_err(lineno, "missing '%%MatrixMarket matrix' header"));
    }
    if tokens[2] != "coordinate" {
        return Err(parse_err(lineno, format!("unsupported format '{}'", tokens[2])));
    }
    let field = match tokens[3].as_str() {
        "real" => Field::Real,
        "integer" => Field::Integer,
        "pattern" => Field::Pattern,
        other => return Err(parse_err(lineno, format!("unsupported field type '{other}'"))),
    };
    let symmetry = match tokens[4].as_str() {
        "general" => Symmetry::General,
        "symmetric" => Symmetry::Symmetric,
        "skew-symmetric" => Symmetry::SkewSymmetric,
        other => return Err(parse_err(lineno, format!("unsupported symmetry '{other}'"))),
    };

    let mut size: Option<(usize, usize, usize)> = None;
    let mut coo = CooMatrix::new(0, 0);
    let mut seen = 0usize;
    for (lineno, line) in lines {
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('%') {
            continue;
        }
        let mut parts = trimmed.split_whitespace();
        let mut next_usize = |what: &str| -> Result<usize> {
            let tok = parts.next().ok_or_else(|| parse_err(lineno, format!("missing {what}")))?;
            tok.parse::<usize>().map_err(|_| parse_err(lineno, format!("invalid {what} '{tok}'")))
        };
        match size {
            None => {
                let r = next_usize("row count")?;
                let c = next_usize("column count")?;
                let nnz = next_usize("entry count")?;
                if matches!(symmetry, Symmetry::Symmetric | Symmetry::SkewSymmetric) && r != c {
                    return Err(parse_err(lineno, "symmetric matrix must be square"));
                }
                size = Some((r, c, nnz));
                coo = CooMatrix::new(r, c);
            }
            Some((rows, cols, nnz)) => {
                if seen == nnz {
                    return Err(parse_err(lineno, format!("more than {nnz} entries")));
                }
                let i = next_usize("row index")?;
                let j = next_usize("column index")?;
                if i == 0 || j == 0 || i > rows || j > cols {
                    return Err(parse_err(lineno, format!("index ({i}, {j}) outside {rows}x{cols}")));
                }
                let v = match field {
                    Field::Pattern => 1.0,
                    Field::Real | Field::Integer => {
                        let tok = parts.next().ok_or_else(|| parse_err(lineno, "missing value"))?;
                        let parsed = if field == Field::Integer {
                            tok.parse::<i64>().map(|v| v as f32).map_err(|_| ())
                        } else {
                            tok.parse::<f32>().map_err(|_| ())
                        };
                        parsed.map_err(|_| parse_err(lineno, format!("invalid value '{tok}'")))?
                    }
                };
                if parts.next().is_some() {
                    return Err(parse_err(lineno, "trailing tokens"));
                }
                let (r, c) = (i - 1, j - 1);
                coo.push(r, c, v)?;
                if r != c {
                    match symmetry {
                        Symmetry::General => {}
                        Symmetry::Symmetric => coo.push(c, r, v)?,
                        Symmetry::SkewSymmetric => coo.push(c, r, -v)?,
                    }
                }
                seen += 1;
            }
        }
    }
    match size {
        None => Err(parse_err(1, "missing size line")),
        Some((_, _, nnz)) if seen != nnz => {
            Err(parse_err(0, format!("expected {nnz} entries, found {seen}")))
        }
        Some(_) => Ok(coo),
    }
}

/// Writes `m` as `coordinate real general`. Values use the shortest
/// decimal form that parses back to the same `f32`.
pub fn write_matrix_market(mut w: impl Write, m: &CsrMatrix) -> Result<()> {
    writeln!(w, "%%MatrixMarket matrix coordinate real general")?;
    writeln!(w, "{} {} {}", m.rows(), m.cols(), m.nnz())?;
    for (i, j, v) in m.iter() {
        writeln!(w, "{} {} {}", i + 1, j + 1, v)?;
    }
    Ok(())
}

pub fn save_matrix_market(path: impl AsRef<Path>, m: &CsrMatrix) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_matrix_market(&mut w, m)?;
    w.flush()?;
    Ok(())
}
