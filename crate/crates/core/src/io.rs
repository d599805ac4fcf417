//! Plain-text level files and S-parameter CSV traces.

use crate::error::{Error, Result};
use crate::spectra::SParameterTrace;
use num_complex::Complex64;
use serde::Deserialize;
use std::io::{BufRead, Read, Write};

/// Reads one decimal number per line; `#` starts a comment.
pub fn read_levels<R: BufRead>(r: R) -> Result<Vec<f64>> {
    let mut out = Vec::new();
    for (i, line) in r.lines().enumerate() {
        let line = line?;
        let body = line.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let v: f64 = body.parse().map_err(|_| Error::Parse {
            line: i + 1,
            message: format!("not a number: '{body}'"),
        })?;
        out.push(v);
    }
    Ok(out)
}

/// Writes levels one per line with full round-trip precision, after an
/// optional comment header.
pub fn write_levels<W: Write>(mut w: W, levels: &[f64], comment: Option<&str>) -> Result<()> {
    if let Some(c) = comment {
        for line in c.lines() {
            writeln!(w, "# {line}")?;
        }
    }
    for v in levels {
        writeln!(w, "{v:?}")?;
    }
    Ok(())
}

#[derive(Debug, Deserialize)]
struct TraceRow {
    freq_ghz: f64,
    re_s12: f64,
    im_s12: f64,
    re_s21: f64,
    im_s21: f64,
}

/// Reads a `freq_ghz,re_s12,im_s12,re_s21,im_s21` CSV trace.
pub fn read_sparameters<R: Read>(r: R) -> Result<SParameterTrace> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(r);
    let mut freq = Vec::new();
    let mut s12 = Vec::new();
    let mut s21 = Vec::new();
    for row in reader.deserialize::<TraceRow>() {
        let row = row?;
        freq.push(row.freq_ghz);
        s12.push(Complex64::new(row.re_s12, row.im_s12));
        s21.push(Complex64::new(row.re_s21, row.im_s21));
    }
    SParameterTrace::new(freq, s12, s21)
}
