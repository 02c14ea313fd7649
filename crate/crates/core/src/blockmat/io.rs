//! `SYNCMAT 1` text format.
//!
//! ```text
//! SYNCMAT 1 <n> <d>
//! <n·d rows of n·d space-separated values, 17 significant digits>
//! ```

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use nalgebra::DMatrix;

use super::BlockSymMatrix;
use crate::error::{Error, Result};

const MAGIC: &str = "SYNCMAT";
const VERSION: &str = "1";
const READ_SYMMETRY_TOL: f64 = 1e-9;

pub fn matrix_to_string(m: &BlockSymMatrix) -> String {
    let dim = m.dim();
    let mut out = String::with_capacity(dim * dim * 24 + 32);
    let _ = writeln!(out, "{MAGIC} {VERSION} {} {}", m.n(), m.d());
    let e = m.entries();
    for i in 0..dim {
        for j in 0..dim {
            if j > 0 {
                out.push(' ');
            }
            let _ = write!(out, "{:.16e}", e[(i, j)]);
        }
        out.push('\n');
    }
    out
}

pub fn matrix_from_str(text: &str) -> Result<BlockSymMatrix> {
    let mut lines = text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty());
    let (_, header) = lines.next().ok_or(Error::Parse {
        line: 1,
        msg: "empty input".into(),
    })?;
    let fields: Vec<&str> = header.split_whitespace().collect();
    if fields.len() != 4 || fields[0] != MAGIC || fields[1] != VERSION {
        return Err(Error::Parse {
            line: 1,
            msg: format!("expected `{MAGIC} {VERSION} <n> <d>`, got `{header}`"),
        });
    }
    let parse_dim = |s: &str| {
        s.parse::<usize>().map_err(|e| Error::Parse {
            line: 1,
            msg: format!("bad dimension `{s}`: {e}"),
        })
    };
    let n = parse_dim(fields[2])?;
    let d = parse_dim(fields[3])?;
    let dim = n * d;
    if dim == 0 {
        return Err(Error::Parse {
            line: 1,
            msg: "n and d must be positive".into(),
        });
    }

    let mut m = DMatrix::zeros(dim, dim);
    let mut row = 0;
    for (idx, line) in lines {
        let lineno = idx + 1;
        if row == dim {
            return Err(Error::Parse {
                line: lineno,
                msg: format!("more than {dim} body rows"),
            });
        }
        let mut count = 0;
        for tok in line.split_whitespace() {
            if count == dim {
                return Err(Error::Parse {
                    line: lineno,
                    msg: format!("row has more than {dim} values"),
                });
            }
            m[(row, count)] = tok.parse::<f64>().map_err(|e| Error::Parse {
                line: lineno,
                msg: format!("bad value `{tok}`: {e}"),
            })?;
            count += 1;
        }
        if count != dim {
            return Err(Error::Parse {
                line: lineno,
                msg: format!("row has {count} values, expected {dim}"),
            });
        }
        row += 1;
    }
    if row != dim {
        return Err(Error::Parse {
            line: row + 2,
            msg: format!("found {row} body rows, expected {dim}"),
        });
    }
    BlockSymMatrix::with_symmetry_tol(n, d, m, READ_SYMMETRY_TOL)
}

pub fn write_matrix(m: &BlockSymMatrix, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, matrix_to_string(m)).map_err(|e| Error::io(path, e))
}

pub fn read_matrix(path: impl AsRef<Path>) -> Result<BlockSymMatrix> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    matrix_from_str(&text)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{gaussian_matrix, rng_from_seed};

    #[test]
    fn round_trip_is_bitwise() {
        let g = gaussian_matrix(&mut rng_from_seed(3), 6, 6);
        let m = BlockSymMatrix::new(3, 2, &g + g.transpose()).unwrap();
        let text = matrix_to_string(&m);
        let back = matrix_from_str(&text).unwrap();
        assert_eq!(back, m);
        assert_eq!(matrix_to_string(&back), text);
    }

    #[test]
    fn short_body_is_parse_error() {
        let text = "SYNCMAT 1 2 1\n1 0\n0 1\n0 0\n";
        assert!(matches!(matrix_from_str(text), Err(Error::Parse { .. })));
        let text = "SYNCMAT 1 2 1\n1 0\n";
        assert!(matches!(matrix_from_str(text), Err(Error::Parse { .. })));
    }

    #[test]
    fn bad_header_is_parse_error() {
        assert!(matches!(
            matrix_from_str("SYNCMAT 2 1 1\n1\n"),
            Err(Error::Parse { line: 1, .. })
        ));
        assert!(matches!(matrix_from_str(""), Err(Error::Parse { .. })));
    }

    #[test]
    fn asymmetric_file_rejected() {
        let text = "SYNCMAT 1 2 1\n1 1e-3\n0 1\n";
        assert!(matches!(matrix_from_str(text), Err(Error::Validation(_))));
    }

    #[test]
    fn ragged_row_rejected() {
        let text = "SYNCMAT 1 2 1\n1 0 0\n0 1\n";
        assert!(matches!(
            matrix_from_str(text),
            Err(Error::Parse { line: 2, .. })
        ));
    }
}
