//! Matrix Market input and output.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::linalg::BlockVector;
use crate::sparse::SparseSpdOperator;

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

/// Data lines (skipping comments and blanks) with their 1-based line numbers.
fn data_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .skip(1)
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('%'))
}

fn header_words(text: &str) -> Result<Vec<String>> {
    let first = text.lines().next().ok_or(Error::Parse {
        line: 1,
        msg: "empty file".into(),
    })?;
    let words: Vec<String> = first.split_whitespace().map(str::to_ascii_lowercase).collect();
    if words.len() != 5 || words[0] != "%%matrixmarket" || words[1] != "matrix" {
        return Err(Error::Parse {
            line: 1,
            msg: format!("not a Matrix Market header: {first}"),
        });
    }
    Ok(words)
}

fn parse_num<T: std::str::FromStr>(tok: Option<&str>, line: usize, what: &str) -> Result<T> {
    tok.and_then(|t| t.parse().ok()).ok_or_else(|| Error::Parse {
        line,
        msg: format!("expected {what}"),
    })
}

/// Parses a `coordinate real symmetric` matrix, expanding the stored triangle.
pub fn parse_matrix_market(text: &str) -> Result<SparseSpdOperator> {
    let words = header_words(text)?;
    if words[2] != "coordinate" || words[3] != "real" || words[4] != "symmetric" {
        return Err(Error::NotSymmetricHeader(words[2..].join(" ")));
    }
    let mut lines = data_lines(text);
    let (size_line, size) = lines.next().ok_or(Error::Parse {
        line: 2,
        msg: "missing size line".into(),
    })?;
    let mut tok = size.split_whitespace();
    let rows: usize = parse_num(tok.next(), size_line, "row count")?;
    let cols: usize = parse_num(tok.next(), size_line, "column count")?;
    let nnz: usize = parse_num(tok.next(), size_line, "entry count")?;
    if rows != cols {
        return Err(Error::Parse {
            line: size_line,
            msg: "symmetric matrix must be square".into(),
        });
    }
    let mut triplets = Vec::with_capacity(2 * nnz);
    let mut seen = 0;
    for (line, l) in lines {
        let mut tok = l.split_whitespace();
        let i: usize = parse_num(tok.next(), line, "row index")?;
        let j: usize = parse_num(tok.next(), line, "column index")?;
        let v: f64 = parse_num(tok.next(), line, "value")?;
        if i == 0 || j == 0 || i > rows || j > cols {
            return Err(Error::Parse {
                line,
                msg: format!("index ({i}, {j}) out of range"),
            });
        }
        triplets.push((i - 1, j - 1, v));
        if i != j {
            triplets.push((j - 1, i - 1, v));
        }
        seen += 1;
    }
    if seen != nnz {
        return Err(Error::Parse {
            line: size_line,
            msg: format!("declared {nnz} entries, found {seen}"),
        });
    }
    SparseSpdOperator::from_triplets(rows, &triplets)
}

/// Parses an `array real general` dense block (column-major values).
pub fn parse_dense_block(text: &str) -> Result<BlockVector> {
    let words = header_words(text)?;
    if words[2] != "array" || words[3] != "real" || words[4] != "general" {
        return Err(Error::Parse {
            line: 1,
            msg: format!("expected 'array real general', found '{}'", words[2..].join(" ")),
        });
    }
    let mut lines = data_lines(text);
    let (size_line, size) = lines.next().ok_or(Error::Parse {
        line: 2,
        msg: "missing size line".into(),
    })?;
    let mut tok = size.split_whitespace();
    let rows: usize = parse_num(tok.next(), size_line, "row count")?;
    let cols: usize = parse_num(tok.next(), size_line, "column count")?;
    let mut values = Vec::with_capacity(rows * cols);
    for (line, l) in lines {
        for t in l.split_whitespace() {
            values.push(parse_num::<f64>(Some(t), line, "value")?);
        }
    }
    if values.len() != rows * cols {
        return Err(Error::Parse {
            line: size_line,
            msg: format!("expected {} values, found {}", rows * cols, values.len()),
        });
    }
    Ok(BlockVector::from_column_slice(rows, cols, &values))
}

pub fn load_matrix_market(path: impl AsRef<Path>) -> Result<SparseSpdOperator> {
    parse_matrix_market(&read(path.as_ref())?)
}

pub fn load_dense_block(path: impl AsRef<Path>) -> Result<BlockVector> {
    parse_dense_block(&read(path.as_ref())?)
}

/// Lower triangle in `coordinate real symmetric` format; values use the
/// shortest representation that parses back to the same `f64`.
pub fn format_matrix_market(op: &SparseSpdOperator) -> String {
    let lower = op.lower_triplets();
    let mut out = String::from("%%MatrixMarket matrix coordinate real symmetric\n");
    let _ = writeln!(out, "{} {} {}", op.n(), op.n(), lower.len());
    for (i, j, v) in lower {
        let _ = writeln!(out, "{} {} {v:?}", i + 1, j + 1);
    }
    out
}

pub fn format_dense_block(b: &BlockVector) -> String {
    let mut out = String::from("%%MatrixMarket matrix array real general\n");
    let _ = writeln!(out, "{} {}", b.nrows(), b.ncols());
    for v in b.iter() {
        let _ = writeln!(out, "{v:?}");
    }
    out
}

pub fn write_matrix_market(path: impl AsRef<Path>, op: &SparseSpdOperator) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, format_matrix_market(op)).map_err(|e| Error::io(path, e))
}

pub fn write_dense_block(path: impl AsRef<Path>, b: &BlockVector) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, format_dense_block(b)).map_err(|e| Error::io(path, e))
}
