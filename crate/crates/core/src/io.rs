//! Plain-text exchange formats.
//!
//! Series: `index,value,weight`, one sample per line, optional single header
//! line. Covariance: `lag_index,lag_time,value,pair_weight`. Spectrum:
//! `freq,real,imag,magnitude`. Baseline exports prepend a `method` column.
//! Floats are written in shortest round-trip form, so reading back what was
//! written is bit-exact.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::baselines::LombScargleSpectrum;
use crate::error::{Error, Result};
use crate::types::{CovarianceEstimate, GappySeries, MappingMatrix, SpectrumEstimate};

/// Shortest representation that parses back to the same bits.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:?}")
}

fn parse_err(line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        message: message.into(),
    }
}

fn parse_field<T: std::str::FromStr>(field: &str, line: usize, what: &str) -> Result<T> {
    field
        .trim()
        .parse()
        .map_err(|_| parse_err(line, format!("cannot parse {what} '{}'", field.trim())))
}

/// Non-blank lines with their 1-based line numbers; a first line whose
/// first field is not numeric is taken as the header and skipped.
fn data_lines(reader: impl Read) -> Result<Vec<(usize, String)>> {
    let mut out = Vec::new();
    for (i, line) in BufReader::new(reader).lines().enumerate() {
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        if out.is_empty() && i == 0 {
            let first = trimmed.split(',').next().unwrap_or("").trim();
            if first.parse::<f64>().is_err() {
                continue;
            }
        }
        out.push((i + 1, trimmed.to_string()));
    }
    Ok(out)
}

/// Reads a series. Indices must run `0, 1, 2, ...` in order.
pub fn read_series(reader: impl Read, dt: f64) -> Result<GappySeries> {
    let mut values = Vec::new();
    let mut weights = Vec::new();
    for (line, text) in data_lines(reader)? {
        let fields: Vec<&str> = text.split(',').collect();
        if fields.len() != 3 {
            return Err(parse_err(
                line,
                format!("expected 3 fields (index,value,weight), found {}", fields.len()),
            ));
        }
        let index: usize = parse_field(fields[0], line, "index")?;
        if index != values.len() {
            return Err(parse_err(
                line,
                format!("expected index {}, found {index}", values.len()),
            ));
        }
        values.push(parse_field::<f64>(fields[1], line, "value")?);
        weights.push(parse_field::<f64>(fields[2], line, "weight")?);
    }
    GappySeries::new(values, weights, dt)
}

pub fn write_series(mut w: impl Write, series: &GappySeries) -> Result<()> {
    writeln!(w, "index,value,weight")?;
    for (i, (v, wt)) in series.values().iter().zip(series.weights()).enumerate() {
        writeln!(w, "{i},{},{}", fmt_f64(*v), fmt_f64(*wt))?;
    }
    Ok(())
}

/// Weights from either a series file (third column) or a one-column file.
pub fn read_weights(reader: impl Read) -> Result<Vec<f64>> {
    let mut weights = Vec::new();
    for (line, text) in data_lines(reader)? {
        let fields: Vec<&str> = text.split(',').collect();
        let field = match fields.len() {
            1 => fields[0],
            3 => {
                let index: usize = parse_field(fields[0], line, "index")?;
                if index != weights.len() {
                    return Err(parse_err(
                        line,
                        format!("expected index {}, found {index}", weights.len()),
                    ));
                }
                fields[2]
            }
            n => return Err(parse_err(line, format!("expected 1 or 3 fields, found {n}"))),
        };
        weights.push(parse_field::<f64>(field, line, "weight")?);
    }
    crate::types::validate_weights(&weights)?;
    Ok(weights)
}

fn method_prefix(method: Option<&str>) -> (String, String) {
    match method {
        Some(m) => ("method,".to_string(), format!("{m},")),
        None => (String::new(), String::new()),
    }
}

pub fn write_covariance(mut w: impl Write, cov: &CovarianceEstimate, method: Option<&str>) -> Result<()> {
    let (head, tag) = method_prefix(method);
    writeln!(w, "{head}lag_index,lag_time,value,pair_weight")?;
    for ((k, v), pw) in cov.lags().zip(cov.values()).zip(cov.pair_weights()) {
        writeln!(
            w,
            "{tag}{k},{},{},{}",
            fmt_f64(k as f64 * cov.dt()),
            fmt_f64(*v),
            fmt_f64(*pw)
        )?;
    }
    Ok(())
}

/// Reads back `(lag_index, value, pair_weight)` triples from a covariance
/// file (with or without a method column).
pub fn read_covariance_rows(reader: impl Read) -> Result<Vec<(i64, f64, f64)>> {
    data_lines(reader)?
        .into_iter()
        .map(|(line, text)| {
            let fields: Vec<&str> = text.split(',').collect();
            let f = match fields.len() {
                4 => &fields[..],
                5 => &fields[1..],
                n => return Err(parse_err(line, format!("expected 4 or 5 fields, found {n}"))),
            };
            Ok((
                parse_field(f[0], line, "lag")?,
                parse_field(f[2], line, "value")?,
                parse_field(f[3], line, "pair weight")?,
            ))
        })
        .collect()
}

pub fn write_spectrum(mut w: impl Write, spec: &SpectrumEstimate, method: Option<&str>) -> Result<()> {
    let (head, tag) = method_prefix(method);
    writeln!(w, "{head}freq,real,imag,magnitude")?;
    for (f, s) in spec.frequencies().iter().zip(spec.values()) {
        writeln!(
            w,
            "{tag}{},{},{},{}",
            fmt_f64(*f),
            fmt_f64(s.re),
            fmt_f64(s.im),
            fmt_f64(s.norm())
        )?;
    }
    Ok(())
}

pub fn write_lomb_scargle(mut w: impl Write, spec: &LombScargleSpectrum, method: &str) -> Result<()> {
    writeln!(w, "method,freq,real,imag,magnitude")?;
    for (f, v) in spec.frequencies.iter().zip(&spec.values) {
        writeln!(w, "{method},{},{},0.0,{}", fmt_f64(*f), fmt_f64(*v), fmt_f64(v.abs()))?;
    }
    Ok(())
}

/// Header `k\j,<j lags...>`, then one row per `k` lag.
pub fn write_matrix(mut w: impl Write, matrix: &MappingMatrix) -> Result<()> {
    let lags: Vec<i64> = matrix.window().lags().collect();
    let header: Vec<String> = lags.iter().map(|j| j.to_string()).collect();
    writeln!(w, "k\\j,{}", header.join(","))?;
    let a = matrix.entries();
    for (r, k) in lags.iter().enumerate() {
        let row: Vec<String> = (0..lags.len()).map(|c| fmt_f64(a[(r, c)])).collect();
        writeln!(w, "{k},{}", row.join(","))?;
    }
    Ok(())
}

pub fn read_series_file(path: impl AsRef<Path>, dt: f64) -> Result<GappySeries> {
    read_series(File::open(path)?, dt)
}

pub fn read_weights_file(path: impl AsRef<Path>) -> Result<Vec<f64>> {
    read_weights(File::open(path)?)
}

/// Creates `path` and hands a buffered writer to `f`.
pub fn write_file(path: impl AsRef<Path>, f: impl FnOnce(&mut BufWriter<File>) -> Result<()>) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    f(&mut out)?;
    out.flush()?;
    Ok(())
}
