use std::fmt;
use std::io::Write;
use std::path::{Path, PathBuf};

use minvarx::json::{format_f64, SCHEMA_VERSION};
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

pub const EXIT_USAGE: i32 = 2;
pub const EXIT_DATA: i32 = 3;
pub const EXIT_NUMERIC: i32 = 4;

#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    pub fn usage(msg: impl Into<String>) -> Self {
        Self { code: EXIT_USAGE, message: msg.into() }
    }

    pub fn data(msg: impl Into<String>) -> Self {
        Self { code: EXIT_DATA, message: msg.into() }
    }

    pub fn numeric(msg: impl Into<String>) -> Self {
        Self { code: EXIT_NUMERIC, message: msg.into() }
    }

    pub fn context(self, ctx: impl fmt::Display) -> Self {
        Self { message: format!("{ctx}: {}", self.message), ..self }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl From<minvarx::Error> for CliError {
    fn from(e: minvarx::Error) -> Self {
        use minvarx::Error as E;
        let code = match &e {
            E::InvalidStructure(_) | E::InvalidInput(_) | E::Unsupported(_) => EXIT_USAGE,
            E::Dimension(_) | E::InsufficientSamples(_) => EXIT_DATA,
            _ if e.is_numerical() => EXIT_NUMERIC,
            _ => EXIT_DATA,
        };
        Self { code, message: e.to_string() }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

/// Reads a CSV with a header row, one row per time point. Returns the data
/// with columns as time.
pub fn read_series(path: &Path) -> CliResult<DMatrix<f64>> {
    let ctx = || path.display().to_string();
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| CliError::data(e.to_string()).context(ctx()))?;
    let width = rdr
        .headers()
        .map_err(|e| CliError::data(e.to_string()).context(ctx()))?
        .len();
    let mut cols: Vec<f64> = Vec::new();
    let mut n = 0;
    for rec in rdr.records() {
        let rec = rec.map_err(|e| CliError::data(e.to_string()).context(ctx()))?;
        let line = rec.position().map_or(0, |p| p.line());
        if rec.len() != width {
            return Err(CliError::data(format!(
                "{}: line {line}: expected {width} fields, found {}",
                ctx(),
                rec.len()
            )));
        }
        for (j, field) in rec.iter().enumerate() {
            let v: f64 = field.parse().map_err(|_| {
                CliError::data(format!("{}: line {line}, column {}: cannot parse {field:?} as a number", ctx(), j + 1))
            })?;
            if !v.is_finite() {
                return Err(CliError::data(format!("{}: line {line}, column {}: non-finite value", ctx(), j + 1)));
            }
            cols.push(v);
        }
        n += 1;
    }
    if n == 0 || width == 0 {
        return Err(CliError::data(format!("{}: no data rows", ctx())));
    }
    Ok(DMatrix::from_column_slice(width, n, &cols))
}

/// CSV text with a header; `rows` already rendered.
pub fn csv_text(header: &[String], rows: &[Vec<String>]) -> CliResult<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).map_err(|e| CliError::data(e.to_string()))?;
    for r in rows {
        w.write_record(r).map_err(|e| CliError::data(e.to_string()))?;
    }
    w.into_inner().map_err(|e| CliError::data(e.to_string()))
}

pub fn num(x: f64) -> String {
    format_f64(x).unwrap_or_else(|| if x.is_nan() { "nan".into() } else if x > 0.0 { "inf".into() } else { "-inf".into() })
}

/// Series as CSV, one row per time point (columns of `m`).
pub fn series_csv(m: &DMatrix<f64>, prefix: &str) -> CliResult<Vec<u8>> {
    let header: Vec<String> = (1..=m.nrows()).map(|i| format!("{prefix}{i}")).collect();
    let rows: Vec<Vec<String>> = m.column_iter().map(|c| c.iter().map(|&x| num(x)).collect()).collect();
    csv_text(&header, &rows)
}

#[derive(Serialize)]
struct Envelope<'a, T> {
    schema_version: u32,
    command: &'a str,
    result: &'a T,
}

pub fn json_bytes<T: Serialize>(command: &str, result: &T) -> CliResult<Vec<u8>> {
    let env = Envelope { schema_version: SCHEMA_VERSION, command, result };
    let mut out = serde_json::to_vec_pretty(&env).map_err(|e| CliError::numeric(e.to_string()))?;
    out.push(b'\n');
    Ok(out)
}

#[derive(Deserialize)]
struct EnvelopeIn<T> {
    result: T,
}

/// Parses either an output document of this tool or a bare payload.
pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> CliResult<T> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::data(e.to_string()).context(path.display()))?;
    if let Ok(env) = serde_json::from_str::<EnvelopeIn<T>>(&text) {
        return Ok(env.result);
    }
    serde_json::from_str::<T>(&text).map_err(|e| {
        CliError::data(format!("line {}, column {}: {e}", e.line(), e.column())).context(path.display())
    })
}

/// Write all of `bytes` to `path` via a temporary file in the same directory,
/// so a failed run never leaves a partial file behind.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> CliResult<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d.to_path_buf(),
        _ => PathBuf::from("."),
    };
    let err = |e: std::io::Error| CliError::data(e.to_string()).context(path.display());
    let mut tmp = tempfile::NamedTempFile::new_in(&dir).map_err(err)?;
    tmp.write_all(bytes).map_err(err)?;
    tmp.flush().map_err(err)?;
    tmp.persist(path).map_err(|e| err(e.error))?;
    Ok(())
}

/// Every output of one run, written only after all of them were produced.
#[derive(Default)]
pub struct Outputs {
    files: Vec<(PathBuf, Vec<u8>)>,
    stdout: Vec<u8>,
}

impl Outputs {
    pub fn main(&mut self, target: Option<&Path>, bytes: Vec<u8>) {
        match target {
            Some(p) => self.files.push((p.to_path_buf(), bytes)),
            None => self.stdout.extend(bytes),
        }
    }

    pub fn file(&mut self, path: &Path, bytes: Vec<u8>) {
        self.files.push((path.to_path_buf(), bytes));
    }

    pub fn commit(self) -> CliResult<()> {
        for (p, b) in &self.files {
            write_atomic(p, b)?;
        }
        let mut out = std::io::stdout().lock();
        out.write_all(&self.stdout)
            .and_then(|_| out.flush())
            .map_err(|e| CliError::data(e.to_string()))
    }
}
