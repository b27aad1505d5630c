//! CSV reading and writing for feature tables.

use std::collections::BTreeSet;
use std::fs::File;
use std::path::Path;

use crate::data::{FeatureMatrix, RawTable};
use crate::error::{Error, Result};

/// Load a comma-separated file with a header row into a raw table.
/// Cells are kept as text; coercion happens later.
pub fn load_csv(
    path: &Path,
    label_column: &str,
    positive_labels: &BTreeSet<String>,
) -> Result<RawTable> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(false)
        .from_reader(file);

    let columns: Vec<String> = reader
        .headers()
        .map_err(|e| Error::Csv {
            path: path.to_path_buf(),
            msg: e.to_string(),
        })?
        .iter()
        .map(|h| h.trim().to_string())
        .collect();

    if !columns.iter().any(|c| c == label_column) {
        return Err(Error::MissingLabelColumn(label_column.to_string()));
    }

    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| match e.kind() {
            csv::ErrorKind::UnequalLengths { pos, expected_len, len } => Error::RaggedRow {
                line: pos.as_ref().map(|p| p.line()).unwrap_or(0),
                expected: *expected_len as usize,
                found: *len as usize,
            },
            _ => Error::Csv {
                path: path.to_path_buf(),
                msg: e.to_string(),
            },
        })?;
        rows.push(record.iter().map(|c| c.to_string()).collect());
    }

    Ok(RawTable {
        columns,
        rows,
        label_column: label_column.to_string(),
        positive_labels: positive_labels.clone(),
        negative_labels: None,
    })
}

/// Write a feature matrix back out as CSV: feature columns followed by a
/// `label` column holding 0/1.
pub fn write_csv(matrix: &FeatureMatrix, path: &Path) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut writer = csv::Writer::from_writer(file);

    let mut header: Vec<String> = matrix.feature_names.clone();
    header.push("label".to_string());
    writer.write_record(&header).map_err(|e| Error::Csv {
        path: path.to_path_buf(),
        msg: e.to_string(),
    })?;

    for (row, &label) in matrix.x.rows().into_iter().zip(matrix.y.iter()) {
        let mut record: Vec<String> = row.iter().map(|v| v.to_string()).collect();
        record.push((label as i64).to_string());
        writer.write_record(&record).map_err(|e| Error::Csv {
            path: path.to_path_buf(),
            msg: e.to_string(),
        })?;
    }
    writer.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}
