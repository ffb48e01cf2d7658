//! CSV ingestion of return panels.

use std::collections::HashSet;
use std::path::Path;

use nalgebra::DMatrix;
use regfolio::ReturnsMatrix;

use crate::error::{CliError, Result};

/// Optional preprocessing applied after parsing.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct IngestOptions {
    /// Column holding the per-period risk-free rate; it is subtracted from every
    /// asset and then dropped.
    pub rf_column: Option<String>,
    /// Rows where any asset return exceeds this value are dropped whole.
    pub drop_above: Option<f64>,
}

/// Reads a panel whose first column labels periods and whose header names the assets.
pub fn ingest_csv(path: &Path) -> Result<ReturnsMatrix> {
    ingest_csv_with(path, &IngestOptions::default())
}

pub fn ingest_csv_with(path: &Path, opts: &IngestOptions) -> Result<ReturnsMatrix> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| CliError::io(path, e))?;
    let header = reader.headers().map_err(|e| csv_error(e, 1))?.clone();
    if header.len() < 2 {
        return Err(CliError::ParseError {
            row: 1,
            column: header.len().max(1),
            message: "need a period column and at least one asset column".into(),
        });
    }
    let mut labels: Vec<String> = header.iter().skip(1).map(str::to_string).collect();
    let mut seen = HashSet::new();
    for l in &labels {
        if !seen.insert(l.as_str()) {
            return Err(CliError::DuplicateAssetLabel(l.clone()));
        }
    }

    let m = labels.len();
    let mut periods = Vec::new();
    let mut values = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let row = i + 2;
        let record = record.map_err(|e| csv_error(e, row))?;
        periods.push(record[0].to_string());
        for (j, cell) in record.iter().enumerate().skip(1) {
            let column = j + 1;
            if cell.is_empty() {
                return Err(CliError::MissingValue { row, column });
            }
            let v: f64 = cell.parse().map_err(|_| CliError::ParseError {
                row,
                column,
                message: format!("'{cell}' is not a number"),
            })?;
            if !v.is_finite() {
                return Err(CliError::ParseError {
                    row,
                    column,
                    message: format!("'{cell}' is not finite"),
                });
            }
            values.push(v);
        }
    }
    if periods.is_empty() {
        return Err(CliError::ParseError {
            row: 2,
            column: 1,
            message: "no data rows".into(),
        });
    }
    let mut data = DMatrix::from_row_slice(periods.len(), m, &values);

    if let Some(name) = &opts.rf_column {
        let j = labels
            .iter()
            .position(|l| l == name)
            .ok_or_else(|| CliError::Config(format!("risk-free column '{name}' not in header")))?;
        let rf = data.column(j).clone_owned();
        data = data.remove_column(j);
        labels.remove(j);
        if labels.is_empty() {
            return Err(CliError::Config(
                "no asset columns besides the risk-free column".into(),
            ));
        }
        for mut col in data.column_iter_mut() {
            col -= &rf;
        }
    }
    if let Some(limit) = opts.drop_above {
        let keep: Vec<usize> = (0..data.nrows())
            .filter(|&i| data.row(i).iter().all(|&v| v <= limit))
            .collect();
        data = data.select_rows(keep.iter());
        periods = keep.iter().map(|&i| periods[i].clone()).collect();
        if periods.is_empty() {
            return Err(CliError::Config(format!(
                "every row has a return above {limit}"
            )));
        }
    }
    Ok(ReturnsMatrix::new(data, labels, periods)?)
}

fn csv_error(e: csv::Error, row: usize) -> CliError {
    let column = match e.kind() {
        csv::ErrorKind::UnequalLengths { len, .. } => *len as usize + 1,
        _ => 1,
    };
    CliError::ParseError {
        row: e.position().map(|p| p.line() as usize).unwrap_or(row),
        column,
        message: e.to_string(),
    }
}
