//! Shared helpers for the tab separated file formats.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use crate::error::{Error, Result};

/// Formats `x` with 9 significant digits in the style of C's `%.9g`:
/// fixed notation for exponents in `[-4, 9)`, scientific otherwise, and
/// trailing zeros removed.
pub fn format_sig9(x: f64) -> String {
    if x == 0.0 {
        return "0".to_owned();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let sci = format!("{x:.8e}");
    let (mantissa, exp) = sci
        .split_once('e')
        .expect("scientific format has an exponent");
    let exp: i32 = exp.parse().expect("exponent is an integer");
    if !(-4..9).contains(&exp) {
        let mantissa = trim_fraction(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{mantissa}e{sign}{:02}", exp.abs())
    } else {
        let decimals = (8 - exp) as usize;
        trim_fraction(&format!("{x:.decimals$}")).to_owned()
    }
}

/// `x` rounded to the value [`format_sig9`] writes, so numbers survive a
/// save and load unchanged.
pub fn round_sig9(x: f64) -> f64 {
    format_sig9(x).parse().expect("formatted number parses")
}

fn trim_fraction(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

pub fn parse_f64(field: &str, path: &Path, line: usize) -> Result<f64> {
    field
        .parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .ok_or_else(|| {
            Error::format(
                path,
                line,
                format!("expected a finite number, got {field:?}"),
            )
        })
}

pub fn parse_u64(field: &str, path: &Path, line: usize) -> Result<u64> {
    field
        .parse::<u64>()
        .map_err(|_| Error::format(path, line, format!("expected a count, got {field:?}")))
}

pub fn open(path: &Path) -> Result<BufReader<File>> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| Error::io(path, e))
}

/// Reads every line of a UTF-8 text file, yielding `(line_number, line)`.
pub fn read_lines(path: &Path) -> Result<Vec<(usize, String)>> {
    let reader = open(path)?;
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        out.push((i + 1, line.trim_end_matches('\r').to_owned()));
    }
    Ok(out)
}

/// Writes `contents` produced by `emit` to `path`, creating parent
/// directories as needed.
pub fn write_file<F>(path: &Path, emit: F) -> Result<()>
where
    F: FnOnce(&mut dyn Write) -> std::io::Result<()>,
{
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    emit(&mut w)
        .and_then(|()| w.flush())
        .map_err(|e| Error::io(path, e))
}
