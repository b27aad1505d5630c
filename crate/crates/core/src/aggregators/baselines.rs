//! Mean, coordinate-wise median, and trimmed-mean aggregation.

use std::collections::BTreeMap;

use ndarray::Array1;

use crate::aggregators::{unflatten, weighted_average, AggregationResult, UpdateSet};
use crate::error::{Error, Result};

/// Coordinate-wise arithmetic mean of all updates.
pub fn simple_mean(updates: &UpdateSet) -> Result<AggregationResult> {
    let m = updates.len();
    let weights = vec![1.0; m];
    let params = weighted_average(&updates.params, &weights);
    Ok(AggregationResult {
        params,
        weights: vec![1.0 / m as f64; m],
        diagnostics: BTreeMap::new(),
    })
}

/// Per-coordinate median over the flattened vectors; an even client count
/// takes the mean of the two middle values.
pub fn coordinate_median(updates: &UpdateSet) -> Result<AggregationResult> {
    let flat = updates.flattened();
    let p = flat[0].len();
    let mut out = Array1::zeros(p);
    for coord in 0..p {
        let mut values: Vec<f64> = flat.iter().map(|v| v[coord]).collect();
        values.sort_by(|a, b| a.partial_cmp(b).expect("finite parameters"));
        out[coord] = median_of_sorted(&values);
    }
    Ok(AggregationResult {
        params: unflatten(&out)?,
        weights: vec![1.0 / updates.len() as f64; updates.len()],
        diagnostics: BTreeMap::new(),
    })
}

pub(crate) fn median_of_sorted(sorted: &[f64]) -> f64 {
    let n = sorted.len();
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        (sorted[n / 2 - 1] + sorted[n / 2]) / 2.0
    }
}

/// Per coordinate, drop the k largest and k smallest values and average
/// the rest. Requires 2k < M.
pub fn trimmed_mean(updates: &UpdateSet, k: usize) -> Result<AggregationResult> {
    let m = updates.len();
    if 2 * k >= m {
        return Err(Error::TrimTooLarge { k, clients: m });
    }
    let flat = updates.flattened();
    let p = flat[0].len();
    let mut out = Array1::zeros(p);
    for coord in 0..p {
        let mut values: Vec<f64> = flat.iter().map(|v| v[coord]).collect();
        values.sort_by(|a, b| a.partial_cmp(b).expect("finite parameters"));
        let kept = &values[k..m - k];
        out[coord] = kept.iter().sum::<f64>() / kept.len() as f64;
    }
    let mut diagnostics = BTreeMap::new();
    diagnostics.insert("trim_k".to_string(), k.to_string());
    Ok(AggregationResult {
        params: unflatten(&out)?,
        weights: vec![1.0 / m as f64; m],
        diagnostics,
    })
}
