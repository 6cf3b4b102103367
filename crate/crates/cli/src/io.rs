//! File formats: plain-text matrices and states, spectral and moment JSON,
//! and atomic output writes.

use std::io::Write;
use std::path::Path;

use eigenoverlap::{DenseSymmetricMatrix, MomentVector, SpectralModel, StateVector};
use serde::de::DeserializeOwned;

use crate::error::{CliError, CliResult};

fn read_text(path: &Path) -> CliResult<String> {
    std::fs::read_to_string(path)
        .map_err(|e| CliError::input(format!("{}: cannot read: {e}", path.display())))
}

fn parse_number(token: &str, source: &str, line: usize, field: usize) -> CliResult<f64> {
    let v: f64 = token.parse().map_err(|_| {
        CliError::input(format!(
            "{source}: line {line}, field {field}: invalid number {token:?}"
        ))
    })?;
    if !v.is_finite() {
        return Err(CliError::input(format!(
            "{source}: line {line}, field {field}: non-finite value {token:?}"
        )));
    }
    Ok(v)
}

/// Non-blank lines with their 1-based line numbers.
fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(k, l)| (k + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty())
}

/// First line `n`, then `n` lines of `n` whitespace-separated decimals.
pub fn parse_matrix(text: &str, source: &str) -> CliResult<DenseSymmetricMatrix> {
    let mut lines = content_lines(text);
    let (first_line, header) = lines
        .next()
        .ok_or_else(|| CliError::input(format!("{source}: empty matrix file")))?;
    let n: usize = header.parse().map_err(|_| {
        CliError::input(format!(
            "{source}: line {first_line}: expected the dimension n, found {header:?}"
        ))
    })?;
    if n == 0 {
        return Err(CliError::input(format!("{source}: line {first_line}: dimension must be ≥ 1")));
    }
    let mut data = Vec::with_capacity(n * n);
    let mut rows = 0;
    for (line, content) in lines {
        if rows == n {
            return Err(CliError::input(format!(
                "{source}: line {line}: unexpected data after {n} matrix rows"
            )));
        }
        let fields: Vec<&str> = content.split_whitespace().collect();
        if fields.len() != n {
            return Err(CliError::input(format!(
                "{source}: line {line}: expected {n} values, found {}",
                fields.len()
            )));
        }
        for (k, tok) in fields.iter().enumerate() {
            data.push(parse_number(tok, source, line, k + 1)?);
        }
        rows += 1;
    }
    if rows != n {
        return Err(CliError::input(format!(
            "{source}: expected {n} matrix rows, found {rows}"
        )));
    }
    DenseSymmetricMatrix::from_row_major(n, data)
        .map_err(|e| CliError::input(format!("{source}: {e}")))
}

/// One amplitude per line; normalized on read.
pub fn parse_state(text: &str, source: &str) -> CliResult<StateVector> {
    let mut amplitudes = Vec::new();
    for (line, content) in content_lines(text) {
        let fields: Vec<&str> = content.split_whitespace().collect();
        if fields.len() != 1 {
            return Err(CliError::input(format!(
                "{source}: line {line}: expected one amplitude, found {} fields",
                fields.len()
            )));
        }
        amplitudes.push(parse_number(fields[0], source, line, 1)?);
    }
    if amplitudes.is_empty() {
        return Err(CliError::input(format!("{source}: empty state file")));
    }
    StateVector::normalized(amplitudes).map_err(|e| CliError::input(format!("{source}: {e}")))
}

pub fn read_matrix(path: &Path) -> CliResult<DenseSymmetricMatrix> {
    parse_matrix(&read_text(path)?, &path.display().to_string())
}

pub fn read_state(path: &Path) -> CliResult<StateVector> {
    parse_state(&read_text(path)?, &path.display().to_string())
}

fn read_json<T: DeserializeOwned>(path: &Path) -> CliResult<T> {
    let text = read_text(path)?;
    serde_json::from_str(&text).map_err(|e| {
        CliError::input(format!(
            "{}: line {}, column {}: {e}",
            path.display(),
            e.line(),
            e.column()
        ))
    })
}

/// Spectral JSON `{"eigenvalues": [...], "overlaps": [...], "complete": bool}`;
/// extra keys such as generator metadata are ignored.
pub fn read_spectrum(path: &Path) -> CliResult<SpectralModel> {
    read_json(path)
}

pub fn read_moments(path: &Path) -> CliResult<MomentVector> {
    let m: MomentVector = read_json(path)?;
    m.validate()
        .map_err(|e| CliError::input(format!("{}: {e}", path.display())))?;
    Ok(m)
}

/// Writes through a temporary file in the destination directory and renames
/// it into place.
pub fn write_atomic(path: &Path, contents: &[u8]) -> CliResult<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let fail = |e: std::io::Error| CliError::input(format!("{}: cannot write: {e}", path.display()));
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(fail)?;
    tmp.write_all(contents).map_err(fail)?;
    tmp.flush().map_err(fail)?;
    tmp.persist(path).map_err(|e| fail(e.error))?;
    Ok(())
}

pub fn to_json_pretty<T: serde::Serialize>(value: &T) -> CliResult<String> {
    serde_json::to_string_pretty(value)
        .map(|mut s| {
            s.push('\n');
            s
        })
        .map_err(|e| CliError::Numerical(format!("serialization failed: {e}")))
}
