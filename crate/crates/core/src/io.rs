//! Text formats for sample sets and representations.
//!
//! Both start with a `N=<int>` header followed by `key,re,im` lines: the
//! sample index (ascending) for sample files, the frequency for
//! representation files. Floats are written in shortest round-trip form.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::signal::{check_length, Representation, SampledSignal};

fn parse_err(line: usize, msg: impl Into<String>) -> Error {
    Error::Parse { line, msg: msg.into() }
}

fn read_table<R: BufRead>(reader: R) -> Result<(u64, Vec<(u64, Complex64)>)> {
    let mut lines = reader.lines().enumerate();
    let n = loop {
        let Some((i, line)) = lines.next() else {
            return Err(parse_err(1, "missing `N=` header"));
        };
        let line = line?;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let value = line
            .strip_prefix("N=")
            .ok_or_else(|| parse_err(i + 1, "expected `N=<int>` header"))?;
        let n: u64 = value
            .trim()
            .parse()
            .map_err(|e| parse_err(i + 1, format!("bad length: {e}")))?;
        check_length(n).map_err(|e| parse_err(i + 1, e.to_string()))?;
        break n;
    };
    let mut rows = Vec::new();
    for (i, line) in lines {
        let line = line?;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != 3 {
            return Err(parse_err(i + 1, format!("expected 3 fields, got {}", fields.len())));
        }
        let key: u64 = fields[0]
            .parse()
            .map_err(|e| parse_err(i + 1, format!("bad index: {e}")))?;
        let re: f64 = fields[1]
            .parse()
            .map_err(|e| parse_err(i + 1, format!("bad real part: {e}")))?;
        let im: f64 = fields[2]
            .parse()
            .map_err(|e| parse_err(i + 1, format!("bad imaginary part: {e}")))?;
        rows.push((key, Complex64::new(re, im)));
    }
    Ok((n, rows))
}

fn write_table<W: Write>(mut w: W, n: u64, rows: impl Iterator<Item = (u64, Complex64)>) -> Result<()> {
    writeln!(w, "N={n}")?;
    for (k, v) in rows {
        writeln!(w, "{k},{},{}", v.re, v.im)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_samples<R: BufRead>(reader: R) -> Result<SampledSignal> {
    let (n, rows) = read_table(reader)?;
    SampledSignal::from_samples(n, &rows)
}

pub fn write_samples<W: Write>(writer: W, data: &SampledSignal) -> Result<()> {
    write_table(writer, data.n(), data.samples())
}

pub fn read_representation<R: BufRead>(reader: R) -> Result<Representation> {
    let (n, rows) = read_table(reader)?;
    Representation::from_terms(n, rows)
}

pub fn write_representation<W: Write>(writer: W, rep: &Representation) -> Result<()> {
    write_table(writer, rep.n(), rep.sorted_by_frequency().into_iter())
}

pub fn load_samples(path: &Path) -> Result<SampledSignal> {
    read_samples(BufReader::new(File::open(path)?))
}

pub fn save_samples(path: &Path, data: &SampledSignal) -> Result<()> {
    write_samples(BufWriter::new(File::create(path)?), data)
}

pub fn load_representation(path: &Path) -> Result<Representation> {
    read_representation(BufReader::new(File::open(path)?))
}

pub fn save_representation(path: &Path, rep: &Representation) -> Result<()> {
    write_representation(BufWriter::new(File::create(path)?), rep)
}
