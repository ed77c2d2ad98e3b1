//! Plain-text matrix files.
//!
//! ```text
//! 2,3,complex
//! 1,0+1i,-0.5-2i
//! 0,1e-3i,4
//! ```
//!
//! The first line gives `rows,cols,field` with `field` one of `real` or
//! `complex`; each following line is one matrix row. Complex entries are
//! written `a+bi` (or `a-bi`, `bi`, `a`).

use std::fmt::Write as _;
use std::path::Path;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::numerics::matrix::{ComplexMatrix, DenseMatrix, RealMatrix};

pub fn parse_matrix(text: &str) -> Result<DenseMatrix> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty());

    let (mut line_no, mut header) = lines.next().ok_or(Error::Parse {
        line: 1,
        msg: "missing header".into(),
    })?;
    if header.eq_ignore_ascii_case("rows,cols,field") {
        (line_no, header) = lines.next().ok_or(Error::Parse {
            line: line_no + 1,
            msg: "missing dimensions after header".into(),
        })?;
    }
    let parts: Vec<&str> = header.split(',').map(str::trim).collect();
    let [rows, cols, field] = parts.as_slice() else {
        return Err(Error::Parse {
            line: line_no,
            msg: format!("expected `rows,cols,field`, got `{header}`"),
        });
    };
    let parse_dim = |s: &str| {
        s.parse::<usize>().map_err(|e| Error::Parse {
            line: line_no,
            msg: format!("bad dimension `{s}`: {e}"),
        })
    };
    let (rows, cols) = (parse_dim(rows)?, parse_dim(cols)?);
    let complex = match field.to_ascii_lowercase().as_str() {
        "real" => false,
        "complex" => true,
        other => {
            return Err(Error::Parse {
                line: line_no,
                msg: format!("field must be `real` or `complex`, got `{other}`"),
            })
        }
    };

    let mut entries = Vec::with_capacity(rows * cols);
    let mut seen_rows = 0;
    for (line_no, line) in lines {
        let row: Vec<&str> = line.split(',').map(str::trim).collect();
        if row.len() != cols {
            return Err(Error::Parse {
                line: line_no,
                msg: format!("expected {cols} entries, got {}", row.len()),
            });
        }
        for tok in row {
            let z = parse_complex(tok).ok_or_else(|| Error::Parse {
                line: line_no,
                msg: format!("cannot parse entry `{tok}`"),
            })?;
            if !complex && z.im != 0.0 {
                return Err(Error::Parse {
                    line: line_no,
                    msg: format!("imaginary entry `{tok}` in a real matrix"),
                });
            }
            entries.push(z);
        }
        seen_rows += 1;
    }
    if seen_rows != rows {
        return Err(Error::Parse {
            line: line_no,
            msg: format!("header declares {rows} rows, file has {seen_rows}"),
        });
    }
    if complex {
        Ok(DenseMatrix::Complex(ComplexMatrix::from_vec(rows, cols, entries)?))
    } else {
        let re = entries.into_iter().map(|z| z.re).collect();
        Ok(DenseMatrix::Real(RealMatrix::from_vec(rows, cols, re)?))
    }
}

/// Parses `a`, `bi`, `a+bi` or `a-bi`; a bare `i` means unit imaginary.
pub fn parse_complex(tok: &str) -> Option<Complex64> {
    let tok = tok.trim();
    let Some(body) = tok.strip_suffix('i') else {
        return tok.parse::<f64>().ok().map(|re| Complex64::new(re, 0.0));
    };
    // split at the last sign that is not a leading sign or an exponent sign
    let bytes = body.as_bytes();
    let split = (1..bytes.len())
        .rev()
        .find(|&p| (bytes[p] == b'+' || bytes[p] == b'-') && !matches!(bytes[p - 1], b'e' | b'E'));
    let parse_im = |s: &str| match s {
        "" | "+" => Some(1.0),
        "-" => Some(-1.0),
        _ => s.parse::<f64>().ok(),
    };
    match split {
        Some(p) => Some(Complex64::new(body[..p].parse().ok()?, parse_im(&body[p..])?)),
        None => Some(Complex64::new(0.0, parse_im(body)?)),
    }
}

pub fn format_complex(z: Complex64) -> String {
    format!("{}{:+}i", z.re, z.im)
}

pub fn format_matrix(m: &DenseMatrix) -> String {
    let mut out = String::new();
    match m {
        DenseMatrix::Real(m) => {
            let _ = writeln!(out, "{},{},real", m.rows(), m.cols());
            for i in 0..m.rows() {
                let row: Vec<String> = m.row(i).iter().map(f64::to_string).collect();
                let _ = writeln!(out, "{}", row.join(","));
            }
        }
        DenseMatrix::Complex(m) => {
            let _ = writeln!(out, "{},{},complex", m.rows(), m.cols());
            for i in 0..m.rows() {
                let row: Vec<String> = m.row(i).iter().map(|&z| format_complex(z)).collect();
                let _ = writeln!(out, "{}", row.join(","));
            }
        }
    }
    out
}

pub fn read_matrix_file(path: impl AsRef<Path>) -> Result<DenseMatrix> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_matrix(&text)
}

pub fn write_matrix_file(path: impl AsRef<Path>, m: &DenseMatrix) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, format_matrix(m)).map_err(|e| Error::io(path, e))
}
