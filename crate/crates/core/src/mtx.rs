//! Matrix Market reader and writer.
//!
//! Writes `array real general` (column-major). Reads `array` and `coordinate`
//! files with `real` or `integer` fields and `general` or `symmetric` symmetry.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::dense::DenseMatrix;
use crate::error::{Error, Result};

pub fn write_matrix(path: &Path, m: &DenseMatrix) -> Result<()> {
    fs::write(path, to_string(m))?;
    Ok(())
}

pub fn write_vector(path: &Path, v: &[f64]) -> Result<()> {
    write_matrix(path, &DenseMatrix::column_vector(v))
}

pub fn to_string(m: &DenseMatrix) -> String {
    let mut out = String::from("%%MatrixMarket matrix array real general\n");
    let _ = writeln!(out, "{} {}", m.rows(), m.cols());
    for j in 0..m.cols() {
        for i in 0..m.rows() {
            let _ = writeln!(out, "{:e}", m[(i, j)]);
        }
    }
    out
}

pub fn read_matrix(path: &Path) -> Result<DenseMatrix> {
    let text = fs::read_to_string(path)?;
    parse(&text).map_err(|(line, msg)| Error::MatrixMarket {
        path: path.to_path_buf(),
        line,
        msg,
    })
}

/// Reads a vector stored as an `n x 1` or `1 x n` matrix.
pub fn read_vector(path: &Path) -> Result<Vec<f64>> {
    let m = read_matrix(path)?;
    if m.cols() != 1 && m.rows() != 1 {
        return Err(Error::MatrixMarket {
            path: path.to_path_buf(),
            line: 2,
            msg: format!("expected a vector, found {}x{}", m.rows(), m.cols()),
        });
    }
    Ok(m.into_vec())
}

#[derive(Clone, Copy, PartialEq)]
enum Format {
    Array,
    Coordinate,
}

type ParseResult<T> = std::result::Result<T, (usize, String)>;

pub(crate) fn parse(text: &str) -> ParseResult<DenseMatrix> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
    let (_, header) = lines.next().ok_or((1, "empty file".to_string()))?;
    let tokens: Vec<String> = header.split_whitespace().map(str::to_ascii_lowercase).collect();
    if tokens.len() != 5 || tokens[0] != "%%matrixmarket" || tokens[1] != "matrix" {
        return Err((1, format!("bad header '{header}'")));
    }
    let format = match tokens[2].as_str() {
        "array" => Format::Array,
        "coordinate" => Format::Coordinate,
        other => return Err((1, format!("unsupported format '{other}'"))),
    };
    if tokens[3] != "real" && tokens[3] != "integer" && tokens[3] != "double" {
        return Err((1, format!("unsupported field '{}'", tokens[3])));
    }
    let symmetric = match tokens[4].as_str() {
        "general" => false,
        "symmetric" => true,
        other => return Err((1, format!("unsupported symmetry '{other}'"))),
    };

    let mut body = lines.filter(|(_, l)| {
        let t = l.trim();
        !t.is_empty() && !t.starts_with('%')
    });
    let (size_line, size) = body.next().ok_or((2, "missing size line".to_string()))?;
    let dims: Vec<usize> = size
        .split_whitespace()
        .map(|t| t.parse::<usize>().map_err(|e| (size_line, format!("bad size '{t}': {e}"))))
        .collect::<ParseResult<_>>()?;
    let expected = if format == Format::Array { 2 } else { 3 };
    if dims.len() != expected {
        return Err((size_line, format!("expected {expected} size fields")));
    }
    let (rows, cols) = (dims[0], dims[1]);
    if symmetric && rows != cols {
        return Err((size_line, "symmetric matrix must be square".into()));
    }
    let mut m = DenseMatrix::zeros(rows, cols);

    let parse_f64 = |line: usize, t: &str| -> ParseResult<f64> {
        let v = t
            .parse::<f64>()
            .map_err(|e| (line, format!("bad value '{t}': {e}")))?;
        if !v.is_finite() {
            return Err((line, "non-finite value".into()));
        }
        Ok(v)
    };

    match format {
        Format::Array => {
            // column-major; symmetric stores the lower triangle only
            let positions: Vec<(usize, usize)> = (0..cols)
                .flat_map(|j| {
                    let start = if symmetric { j } else { 0 };
                    (start..rows).map(move |i| (i, j))
                })
                .collect();
            let mut count = 0;
            for (ln, l) in body {
                for t in l.split_whitespace() {
                    let &(i, j) = positions
                        .get(count)
                        .ok_or((ln, "too many entries".to_string()))?;
                    let v = parse_f64(ln, t)?;
                    m[(i, j)] = v;
                    if symmetric {
                        m[(j, i)] = v;
                    }
                    count += 1;
                }
            }
            if count != positions.len() {
                return Err((
                    size_line,
                    format!("expected {} entries, found {count}", positions.len()),
                ));
            }
        }
        Format::Coordinate => {
            let nnz = dims[2];
            let mut count = 0;
            for (ln, l) in body {
                let t: Vec<&str> = l.split_whitespace().collect();
                if t.len() != 3 {
                    return Err((ln, "coordinate entry needs 'row col value'".into()));
                }
                let idx = |s: &str, bound: usize| -> ParseResult<usize> {
                    let k = s
                        .parse::<usize>()
                        .map_err(|e| (ln, format!("bad index '{s}': {e}")))?;
                    if k == 0 || k > bound {
                        return Err((ln, format!("index {k} out of range 1..={bound}")));
                    }
                    Ok(k - 1)
                };
                let (i, j) = (idx(t[0], rows)?, idx(t[1], cols)?);
                let v = parse_f64(ln, t[2])?;
                m[(i, j)] += v;
                if symmetric && i != j {
                    m[(j, i)] += v;
                }
                count += 1;
            }
            if count != nnz {
                return Err((size_line, format!("expected {nnz} entries, found {count}")));
            }
        }
    }
    Ok(m)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn array_round_trip_is_exact() {
        let m = DenseMatrix::from_rows(&[&[1.0, -2.5e-17], &[1.0 / 3.0, 4.0], &[0.0, 7e300]]);
        let back = parse(&to_string(&m)).unwrap();
        assert_eq!(back, m);
    }

    #[test]
    fn reads_symmetric_coordinate() {
        let text = "%%MatrixMarket matrix coordinate real symmetric\n% comment\n2 2 2\n1 1 2.0\n2 1 -1\n";
        let m = parse(text).unwrap();
        assert_eq!(m, DenseMatrix::from_rows(&[&[2.0, -1.0], &[-1.0, 0.0]]));
    }

    #[test]
    fn rejects_malformed_input() {
        assert!(parse("").is_err());
        assert!(parse("%%MatrixMarket matrix array complex general\n1 1\n1\n").is_err());
        assert!(parse("%%MatrixMarket matrix array real general\n2 1\n1\n").is_err());
        assert!(parse("%%MatrixMarket matrix array real general\n1 1\nabc\n").is_err());
        assert!(parse("%%MatrixMarket matrix coordinate real general\n1 1 1\n2 1 1.0\n").is_err());
        assert!(parse("garbage\n").is_err());
    }
}
