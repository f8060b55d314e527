//! CSV ingestion for transaction tables (volume, price) and plain value
//! columns.

use crate::error::{CliError, CliResult};
use std::path::Path;

/// Parsed transaction rows. Volumes are strictly positive by construction;
/// prices may be negative.
#[derive(Debug, Clone)]
pub struct TransactionTable {
    pub volumes: Vec<f64>,
    pub prices: Vec<f64>,
    pub source: String,
    /// Rows dropped because a field failed to parse as a number.
    pub skipped_parse: usize,
    /// Rows dropped because the volume was zero or negative.
    pub dropped_nonpositive_volume: usize,
}

impl TransactionTable {
    pub fn len(&self) -> usize {
        self.volumes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.volumes.is_empty()
    }

    pub fn values(&self) -> Vec<f64> {
        self.volumes
            .iter()
            .zip(&self.prices)
            .map(|(v, p)| v * p)
            .collect()
    }
}

/// Resolve a column selector (header name or 0-based index) to an index.
fn resolve_column(selector: &str, headers: Option<&csv::StringRecord>) -> CliResult<usize> {
    if let Some(headers) = headers {
        if let Some(idx) = headers.iter().position(|h| h.trim() == selector) {
            return Ok(idx);
        }
    }
    selector.parse::<usize>().map_err(|_| {
        CliError::Data(format!(
            "cannot resolve column '{selector}' by header name or 0-based index"
        ))
    })
}

fn open_reader(path: &Path, delimiter: u8, has_header: bool) -> CliResult<csv::Reader<std::fs::File>> {
    if !path.exists() {
        return Err(CliError::Data(format!("file not found: {}", path.display())));
    }
    Ok(csv::ReaderBuilder::new()
        .delimiter(delimiter)
        .has_headers(has_header)
        .flexible(true)
        .from_path(path)
        .map_err(|e| CliError::Data(e.to_string()))?)
}

/// Read a two-column transaction table. Malformed rows are skipped and
/// counted, zero/negative-volume rows are dropped with their own counter, and
/// an empty result is an error.
pub fn ingest_csv(
    path: &Path,
    volume_col: &str,
    price_col: &str,
    delimiter: u8,
    has_header: bool,
) -> CliResult<TransactionTable> {
    let mut reader = open_reader(path, delimiter, has_header)?;
    let headers = if has_header {
        Some(reader.headers().map_err(|e| CliError::Data(e.to_string()))?.clone())
    } else {
        None
    };
    let v_idx = resolve_column(volume_col, headers.as_ref())?;
    let p_idx = resolve_column(price_col, headers.as_ref())?;

    let mut table = TransactionTable {
        volumes: Vec::new(),
        prices: Vec::new(),
        source: path.display().to_string(),
        skipped_parse: 0,
        dropped_nonpositive_volume: 0,
    };
    for record in reader.records() {
        let record = match record {
            Ok(r) => r,
            Err(_) => {
                table.skipped_parse += 1;
                continue;
            }
        };
        let field = |idx: usize| record.get(idx).map(str::trim);
        let parsed = match (field(v_idx), field(p_idx)) {
            (Some(v), Some(p)) => match (v.parse::<f64>(), p.parse::<f64>()) {
                (Ok(v), Ok(p)) if v.is_finite() && p.is_finite() => Some((v, p)),
                _ => None,
            },
            _ => None,
        };
        match parsed {
            Some((v, p)) => {
                if v <= 0.0 {
                    table.dropped_nonpositive_volume += 1;
                } else {
                    table.volumes.push(v);
                    table.prices.push(p);
                }
            }
            None => table.skipped_parse += 1,
        }
    }
    if table.is_empty() {
        return Err(CliError::Data(format!(
            "no valid rows in {}",
            path.display()
        )));
    }
    Ok(table)
}

/// Read one numeric column; malformed entries are skipped and counted.
pub fn read_column(
    path: &Path,
    column: &str,
    delimiter: u8,
    has_header: bool,
) -> CliResult<(Vec<f64>, usize)> {
    let mut reader = open_reader(path, delimiter, has_header)?;
    let headers = if has_header {
        Some(reader.headers().map_err(|e| CliError::Data(e.to_string()))?.clone())
    } else {
        None
    };
    let idx = resolve_column(column, headers.as_ref())?;
    let mut values = Vec::new();
    let mut skipped = 0usize;
    for record in reader.records() {
        let parsed = record
            .ok()
            .and_then(|r| r.get(idx).map(|s| s.trim().parse::<f64>()))
            .and_then(|p| p.ok())
            .filter(|v| v.is_finite());
        match parsed {
            Some(v) => values.push(v),
            None => skipped += 1,
        }
    }
    if values.is_empty() {
        return Err(CliError::Data(format!(
            "no valid rows in {}",
            path.display()
        )));
    }
    Ok((values, skipped))
}
