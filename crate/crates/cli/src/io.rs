//! CSV and parameter-file input.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use mixedts::params::KeyValue;
use mixedts::Error;
use nalgebra::DMatrix;

/// Numeric table with optional column labels. A first row that does not parse
/// as numbers is taken as the header; `#` lines are comments.
pub struct Table {
    pub labels: Option<Vec<String>>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn width(&self) -> usize {
        self.rows.first().map_or(0, Vec::len)
    }
}

pub fn read_table(path: &Path) -> Result<Table> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_path(path)
        .with_context(|| format!("cannot open {}", path.display()))?;
    let mut labels = None;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record.with_context(|| format!("{}: malformed CSV", path.display()))?;
        if record.iter().all(str::is_empty) {
            continue;
        }
        let parsed: std::result::Result<Vec<f64>, _> = record.iter().map(str::parse::<f64>).collect();
        match parsed {
            Ok(v) => {
                if let Some(w) = rows.first().map(Vec::len) {
                    if v.len() != w {
                        bail!("{}: row {} has {} fields, expected {w}", path.display(), i + 1, v.len());
                    }
                }
                rows.push(v);
            }
            Err(_) if rows.is_empty() && labels.is_none() => {
                labels = Some(record.iter().map(str::to_owned).collect());
            }
            Err(e) => bail!("{}: row {}: {e}", path.display(), i + 1),
        }
    }
    if rows.is_empty() {
        return Err(Error::EmptyInput).with_context(|| format!("{} holds no observations", path.display()));
    }
    Ok(Table { labels, rows })
}

/// The last column of a CSV file, so both `return` and `date,return` layouts
/// work. A non-numeric first row is a header.
pub fn read_series(path: &Path) -> Result<Vec<f64>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_path(path)
        .with_context(|| format!("cannot open {}", path.display()))?;
    let mut out = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record?;
        let Some(last) = record.iter().next_back() else { continue };
        match last.parse::<f64>() {
            Ok(v) => out.push(v),
            Err(_) if i == 0 => {}
            Err(e) => bail!("{}: row {}: {e}", path.display(), i + 1),
        }
    }
    if out.is_empty() {
        return Err(Error::EmptyInput).with_context(|| format!("{} holds no observations", path.display()));
    }
    Ok(out)
}

/// Series-by-observation matrix from a CSV with one column per series.
pub fn read_matrix(path: &Path) -> Result<(Vec<String>, DMatrix<f64>)> {
    let t = read_table(path)?;
    let (rows, cols) = (t.rows.len(), t.width());
    let labels = t.labels.clone().unwrap_or_else(|| (1..=cols).map(|j| format!("S{j}")).collect());
    if labels.len() != cols {
        bail!("{}: header has {} labels for {cols} columns", path.display(), labels.len());
    }
    Ok((labels, DMatrix::from_fn(cols, rows, |i, j| t.rows[j][i])))
}

pub fn read_params<P: KeyValue>(path: &Path) -> Result<P> {
    let text = std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    P::parse_kv(&text).with_context(|| format!("{}: invalid parameter file", path.display()))
}

/// Buffered writer to a file, or to stdout when no path is given.
pub fn output(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p).with_context(|| format!("cannot create {}", p.display()))?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

pub fn out_dir(dir: &Path) -> Result<PathBuf> {
    std::fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
    Ok(dir.to_path_buf())
}
