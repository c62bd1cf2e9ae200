//! CSV ingestion: `x,y,value` rows with an optional header line.

use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use c2plus::jetcore::check_points;
use c2plus::Point2;
use sha2::{Digest, Sha256};

#[derive(Debug, Clone)]
pub struct Dataset {
    pub points: Vec<Point2>,
    pub values: Vec<f64>,
    pub source: PathBuf,
    /// Hex SHA-256 of the raw file bytes.
    pub checksum: String,
}

/// Raised for malformed input; maps to the input-error exit code.
#[derive(Debug)]
pub struct InputError {
    pub path: String,
    pub line: u64,
    pub message: String,
}

impl std::fmt::Display for InputError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}:{}: {}", self.path, self.line, self.message)
    }
}

impl std::error::Error for InputError {}

fn parse_field(field: &str) -> Option<f64> {
    field.trim().parse::<f64>().ok()
}

impl Dataset {
    pub fn load(path: &Path) -> Result<Dataset> {
        let bytes = std::fs::read(path).with_context(|| format!("reading {}", path.display()))?;
        let checksum = format!("{:x}", Sha256::digest(&bytes));
        let (points, values) = parse(&bytes, &path.display().to_string())?;
        let ds = Dataset { points, values, source: path.to_path_buf(), checksum };
        check_points(&ds.points).map_err(|e| anyhow!(e))?;
        Ok(ds)
    }
}

pub fn parse(bytes: &[u8], name: &str) -> Result<(Vec<Point2>, Vec<f64>)> {
    let mut reader =
        csv::ReaderBuilder::new().has_headers(false).flexible(true).trim(csv::Trim::All).from_reader(bytes);
    let mut points = Vec::new();
    let mut values = Vec::new();
    let bad = |line: u64, message: String| InputError { path: name.to_string(), line, message };
    for (n, record) in reader.records().enumerate() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            bad(line, e.to_string())
        })?;
        let line = record.position().map_or(n as u64 + 1, |p| p.line());
        if record.iter().all(|f| f.is_empty()) {
            continue;
        }
        let parsed: Vec<Option<f64>> = record.iter().map(parse_field).collect();
        if n == 0 && parsed.iter().all(Option::is_none) {
            // Header line.
            continue;
        }
        if record.len() != 3 {
            bail!(bad(line, format!("expected 3 columns x,y,value, found {}", record.len())));
        }
        let row: Vec<f64> = parsed
            .iter()
            .zip(record.iter())
            .map(|(v, raw)| v.ok_or_else(|| bad(line, format!("not a number: {raw:?}"))))
            .collect::<std::result::Result<_, _>>()?;
        if row.iter().any(|v| !v.is_finite()) {
            bail!(bad(line, "non-finite entry".into()));
        }
        if row[2] < 0.0 {
            bail!(bad(line, format!("negative value {}", row[2])));
        }
        points.push(Point2::new(row[0], row[1]));
        values.push(row[2]);
    }
    Ok((points, values))
}
