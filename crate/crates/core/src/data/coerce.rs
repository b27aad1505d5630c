//! Numeric coercion, median imputation, and constant-feature removal.

use std::collections::HashMap;

use ndarray::{Array1, Array2, Axis};

use crate::data::{FeatureMatrix, RawTable};
use crate::error::{Error, Result};

/// Per-column category-code tables, assigned in first-appearance order.
#[derive(Debug, Clone, Default)]
pub struct CategoryMaps {
    maps: HashMap<usize, HashMap<String, usize>>,
}

fn is_missing(cell: &str) -> bool {
    matches!(cell, "" | "NaN" | "nan" | "-")
}

fn coerce_cell(cell: &str, column: usize, maps: &mut CategoryMaps) -> f64 {
    let cell = cell.trim();
    if is_missing(cell) {
        return f64::NAN;
    }
    if let Ok(v) = cell.parse::<f64>() {
        // Parsed infinities are unusable; treat them like missing cells.
        return if v.is_finite() { v } else { f64::NAN };
    }
    let hex = cell
        .strip_prefix("0x")
        .or_else(|| cell.strip_prefix("0X"));
    if let Some(digits) = hex {
        if let Ok(v) = u64::from_str_radix(digits, 16) {
            return v as f64;
        }
    }
    let table = maps.maps.entry(column).or_default();
    let next = table.len();
    *table.entry(cell.to_string()).or_insert(next) as f64
}

/// Coerce a raw table to numbers, reusing (and extending) existing
/// category codes when `existing` is provided.
pub(crate) fn coerce_with_maps(
    table: &RawTable,
    existing: Option<&mut CategoryMaps>,
) -> Result<(FeatureMatrix, CategoryMaps)> {
    let label_idx = table.label_index()?;
    let mut own = CategoryMaps::default();
    let maps: &mut CategoryMaps = match existing {
        Some(m) => m,
        None => &mut own,
    };

    let n = table.rows.len();
    let d = table.columns.len() - 1;
    let mut x = Array2::from_elem((n, d), f64::NAN);
    let mut y = Array1::zeros(n);

    for (i, row) in table.rows.iter().enumerate() {
        let mut feature_col = 0;
        for (j, cell) in row.iter().enumerate() {
            if j == label_idx {
                let value = cell.trim();
                if is_missing(value) {
                    return Err(Error::UnknownLabel(value.to_string()));
                }
                y[i] = if table.positive_labels.contains(value) {
                    1.0
                } else if let Some(neg) = &table.negative_labels {
                    if !neg.contains(value) {
                        return Err(Error::UnknownLabel(value.to_string()));
                    }
                    0.0
                } else {
                    0.0
                };
            } else {
                x[[i, feature_col]] = coerce_cell(cell, feature_col, maps);
                feature_col += 1;
            }
        }
    }

    let feature_names: Vec<String> = table
        .columns
        .iter()
        .enumerate()
        .filter(|(j, _)| *j != label_idx)
        .map(|(_, name)| name.clone())
        .collect();

    let matrix = FeatureMatrix { x, y, feature_names };
    Ok((matrix, maps.clone()))
}

/// Convert text cells to numbers: hex is parsed base 16, categorical text
/// becomes first-appearance integer codes, labels map to 1 iff in the
/// positive set. Missing cells become NaN for later imputation.
pub fn coerce_numeric(table: &RawTable) -> Result<FeatureMatrix> {
    coerce_with_maps(table, None).map(|(m, _)| m)
}

/// Replace NaN entries with per-feature medians. Medians are computed
/// when `stats` is absent (train) and reused otherwise (test). Returns the
/// medians so callers can apply them to held-out data.
pub fn impute_median(
    mut matrix: FeatureMatrix,
    stats: Option<&[f64]>,
) -> Result<(FeatureMatrix, Vec<f64>)> {
    let d = matrix.n_features();
    if let Some(given) = stats {
        if given.len() != d {
            return Err(Error::LengthMismatch {
                left: given.len(),
                right: d,
            });
        }
    }

    let medians: Vec<f64> = match stats {
        Some(given) => given.to_vec(),
        None => {
            let mut medians = Vec::with_capacity(d);
            for (j, col) in matrix.x.axis_iter(Axis(1)).enumerate() {
                let mut observed: Vec<f64> = col.iter().copied().filter(|v| !v.is_nan()).collect();
                if observed.is_empty() {
                    return Err(Error::AllMissing(matrix.feature_names[j].clone()));
                }
                observed.sort_by(|a, b| a.partial_cmp(b).unwrap());
                let mid = observed.len() / 2;
                let median = if observed.len() % 2 == 1 {
                    observed[mid]
                } else {
                    (observed[mid - 1] + observed[mid]) / 2.0
                };
                medians.push(median);
            }
            medians
        }
    };

    for (j, median) in medians.iter().enumerate() {
        for v in matrix.x.column_mut(j) {
            if v.is_nan() {
                *v = *median;
            }
        }
    }
    Ok((matrix, medians))
}

/// Remove zero-variance columns. Returns the surviving column indices so
/// the same selection can be applied to held-out data.
pub fn drop_constant_features(matrix: FeatureMatrix) -> Result<(FeatureMatrix, Vec<usize>)> {
    let kept: Vec<usize> = (0..matrix.n_features())
        .filter(|&j| {
            let col = matrix.x.column(j);
            let first = col[0];
            col.iter().any(|&v| v != first)
        })
        .collect();
    if kept.is_empty() {
        return Err(Error::AllConstant);
    }
    if kept.len() == matrix.n_features() {
        return Ok((matrix, kept));
    }
    Ok((select_features(&matrix, &kept), kept))
}

/// Keep only the named feature columns (in the given order).
pub fn select_features(matrix: &FeatureMatrix, kept: &[usize]) -> FeatureMatrix {
    FeatureMatrix {
        x: matrix.x.select(Axis(1), kept),
        y: matrix.y.clone(),
        feature_names: kept
            .iter()
            .map(|&j| matrix.feature_names[j].clone())
            .collect(),
    }
}
