//! Plain-text banded matrix format.
//!
//! ```text
//! <dim> <offset_0> <offset_1> ...
//! <re,im> <re,im> ...        (dim entries: A[i][i + offset_0] for i = 0..dim, zero past the edge)
//! ...                        (one line per offset)
//! ```
//!
//! Only the upper diagonals are stored; the lower triangle is implied by
//! Hermiticity. Numbers use Rust's shortest round-trip formatting, so a
//! read/write cycle reproduces the file byte for byte.

use std::io::{BufRead, Write};

use num_complex::Complex64;

use super::HermitianOperator;
use crate::error::{Error, Result};

pub fn write_banded<W: Write>(op: &HermitianOperator, mut out: W) -> Result<()> {
    let (offsets, diagonals) = op.diagonals();
    write!(out, "{}", op.dim())?;
    for k in &offsets {
        write!(out, " {k}")?;
    }
    writeln!(out)?;
    for diag in &diagonals {
        write_entries(&mut out, diag)?;
    }
    Ok(())
}

fn write_entries<W: Write>(out: &mut W, entries: &[Complex64]) -> Result<()> {
    let line: Vec<String> = entries.iter().map(|z| format!("{},{}", z.re, z.im)).collect();
    writeln!(out, "{}", line.join(" "))?;
    Ok(())
}

pub fn read_banded<R: BufRead>(input: R) -> Result<HermitianOperator> {
    let mut lines = input
        .lines()
        .enumerate()
        .map(|(i, l)| l.map(|s| (i + 1, s)))
        .filter(|r| !matches!(r, Ok((_, s)) if s.trim().is_empty() || s.trim_start().starts_with('#')));

    let (hline, header) = lines.next().ok_or(Error::Parse {
        line: 1,
        message: "missing header".into(),
    })??;
    let mut fields = header.split_whitespace();
    let dim: usize = parse_field(fields.next(), hline, "dimension")?;
    if dim == 0 {
        return Err(Error::Parse {
            line: hline,
            message: "dimension must be positive".into(),
        });
    }
    let offsets = fields
        .map(|f| parse_field(Some(f), hline, "offset"))
        .collect::<Result<Vec<usize>>>()?;
    if offsets.is_empty() {
        return Err(Error::Parse {
            line: hline,
            message: "header lists no offsets".into(),
        });
    }

    let mut diagonals = Vec::with_capacity(offsets.len());
    for &k in &offsets {
        let (lno, text) = lines.next().ok_or(Error::Parse {
            line: hline + diagonals.len() + 1,
            message: format!("missing diagonal for offset {k}"),
        })??;
        let entries = text
            .split_whitespace()
            .map(|tok| parse_complex(tok, lno))
            .collect::<Result<Vec<Complex64>>>()?;
        if entries.len() != dim {
            return Err(Error::Parse {
                line: lno,
                message: format!("expected {dim} entries, found {}", entries.len()),
            });
        }
        diagonals.push(entries);
    }
    if let Some(extra) = lines.next() {
        let (lno, _) = extra?;
        return Err(Error::Parse {
            line: lno,
            message: "unexpected trailing data".into(),
        });
    }
    HermitianOperator::banded(dim, offsets, diagonals)
}

fn parse_field<T: std::str::FromStr>(tok: Option<&str>, line: usize, what: &str) -> Result<T> {
    let tok = tok.ok_or_else(|| Error::Parse {
        line,
        message: format!("missing {what}"),
    })?;
    tok.parse().map_err(|_| Error::Parse {
        line,
        message: format!("invalid {what} `{tok}`"),
    })
}

fn parse_complex(tok: &str, line: usize) -> Result<Complex64> {
    let bad = || Error::Parse {
        line,
        message: format!("invalid complex entry `{tok}` (expected re,im)"),
    };
    let (re, im) = tok.split_once(',').ok_or_else(bad)?;
    Ok(Complex64::new(
        re.parse().map_err(|_| bad())?,
        im.parse().map_err(|_| bad())?,
    ))
}

/// One `re,im` entry per line.
pub fn write_vector<W: Write>(v: &[Complex64], mut out: W) -> Result<()> {
    for z in v {
        writeln!(out, "{},{}", z.re, z.im)?;
    }
    Ok(())
}

pub fn read_vector<R: BufRead>(input: R) -> Result<Vec<Complex64>> {
    let mut v = Vec::new();
    for (i, line) in input.lines().enumerate() {
        let line = line?;
        let t = line.trim();
        if t.is_empty() || t.starts_with('#') {
            continue;
        }
        v.push(parse_complex(t, i + 1)?);
    }
    Ok(v)
}
