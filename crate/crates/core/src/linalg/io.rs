//! Plain-text matrix files: a `dim n` header followed by `n` rows of `n`
//! whitespace-separated decimals.

use std::fmt::Write as _;
use std::path::Path;

use nalgebra::DMatrix;

use super::SymmetricOperator;
use crate::error::{Error, Result};

pub fn read_matrix(text: &str, label: &str) -> Result<SymmetricOperator> {
    let mut lines = text.lines().map(str::trim).filter(|l| !l.is_empty());
    let header = lines.next().ok_or_else(|| Error::Parse("empty matrix file".into()))?;
    let n = match header.split_whitespace().collect::<Vec<_>>().as_slice() {
        ["dim", n] => n.parse::<usize>().map_err(|_| Error::Parse(format!("bad dimension `{n}`")))?,
        _ => return Err(Error::Parse(format!("expected `dim n` header, got `{header}`"))),
    };
    let mut entries = Vec::with_capacity(n * n);
    for row in 0..n {
        let line = lines.next().ok_or_else(|| Error::Parse(format!("missing row {row}")))?;
        let values = line
            .split_whitespace()
            .map(|v| v.parse::<f64>().map_err(|_| Error::Parse(format!("bad entry `{v}` in row {row}"))))
            .collect::<Result<Vec<_>>>()?;
        if values.len() != n {
            return Err(Error::Parse(format!("row {row} has {} entries, expected {n}", values.len())));
        }
        entries.extend(values);
    }
    if let Some(extra) = lines.next() {
        return Err(Error::Parse(format!("trailing content `{extra}`")));
    }
    SymmetricOperator::new(label, DMatrix::from_row_slice(n, n, &entries))
}

pub fn read_matrix_file(path: impl AsRef<Path>) -> Result<SymmetricOperator> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)?;
    read_matrix(&text, &path.display().to_string())
}

/// Serializes with round-trip precision.
pub fn write_matrix(m: &DMatrix<f64>) -> String {
    let mut out = format!("dim {}\n", m.nrows());
    for row in m.row_iter() {
        let cells: Vec<String> = row.iter().map(|v| format!("{v:e}")).collect();
        let _ = writeln!(out, "{}", cells.join(" "));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::torus_laplacian;

    #[test]
    fn round_trip() {
        let h = torus_laplacian(3, 2).unwrap();
        let back = read_matrix(&write_matrix(h.matrix()), "x").unwrap();
        assert_eq!(back.matrix(), h.matrix());
    }

    #[test]
    fn rejects_asymmetric_file() {
        let text = "dim 2\n1 0.5\n0.25 1\n";
        assert!(matches!(read_matrix(text, "f"), Err(Error::NotSymmetric { .. })));
    }

    #[test]
    fn rejects_malformed() {
        assert!(read_matrix("size 2\n1 0\n0 1\n", "f").is_err());
        assert!(read_matrix("dim 2\n1 0\n", "f").is_err());
        assert!(read_matrix("dim 2\n1 0 0\n0 1\n", "f").is_err());
    }
}
