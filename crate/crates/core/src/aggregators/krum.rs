//! Krum, Multi-Krum, and Bulyan selection rules.

use std::collections::BTreeMap;

use ndarray::Array1;

use crate::aggregators::baselines::median_of_sorted;
use crate::aggregators::{unflatten, weighted_average, AggregationResult, UpdateSet};
use crate::error::{Error, Result};

fn squared_distance(a: &Array1<f64>, b: &Array1<f64>) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Krum score per vector: the sum of squared distances to its
/// `n - f - 2` nearest neighbors. When `relaxed` and the neighbor count
/// drops to zero (inside Bulyan's shrinking selection loop), every score
/// is an empty sum.
fn scores_on(vectors: &[Array1<f64>], f: usize, relaxed: bool) -> Result<Vec<f64>> {
    let n = vectors.len();
    if n < f + 3 {
        if !relaxed {
            return Err(Error::ByzantineBound {
                rule: "krum",
                bound: "M >= f + 3",
                clients: n,
                byzantine: f,
            });
        }
        if n == 0 {
            return Err(Error::EmptyUpdates);
        }
    }
    let neighbors = n.saturating_sub(f + 2);
    let mut scores = Vec::with_capacity(n);
    for (i, vi) in vectors.iter().enumerate() {
        let mut dists: Vec<f64> = vectors
            .iter()
            .enumerate()
            .filter(|(j, _)| *j != i)
            .map(|(_, vj)| squared_distance(vi, vj))
            .collect();
        dists.sort_by(|a, b| a.partial_cmp(b).expect("finite distances"));
        scores.push(dists.iter().take(neighbors).sum());
    }
    Ok(scores)
}

/// Sum of squared Euclidean distances from each flattened update to its
/// n - f - 2 nearest other updates. Requires M >= f + 3.
pub fn krum_scores(updates: &UpdateSet, f: usize) -> Result<Vec<f64>> {
    scores_on(&updates.flattened(), f, false)
}

fn argmin_by_position(scores: &[f64]) -> usize {
    let mut best = 0;
    for (i, &s) in scores.iter().enumerate() {
        if s < scores[best] {
            best = i;
        }
    }
    best
}

/// Select the single minimum-score update (ties broken by smallest
/// client id).
pub fn krum_select(updates: &UpdateSet, f: usize) -> Result<AggregationResult> {
    let scores = krum_scores(updates, f)?;
    let winner = argmin_by_position(&scores);
    let mut weights = vec![0.0; updates.len()];
    weights[winner] = 1.0;
    let mut diagnostics = BTreeMap::new();
    diagnostics.insert(
        "selected_client".to_string(),
        updates.client_ids[winner].to_string(),
    );
    Ok(AggregationResult {
        params: updates.params[winner].clone(),
        weights,
        diagnostics,
    })
}

/// Iteratively move the current Krum winner into a selected set `m`
/// times, recomputing scores each iteration, then average the selected
/// updates. Requires m <= M - f - 2.
pub fn multi_krum(updates: &UpdateSet, f: usize, m: usize) -> Result<AggregationResult> {
    let total = updates.len();
    if m == 0 || m > total.saturating_sub(f + 2) {
        return Err(Error::ByzantineBound {
            rule: "multi_krum",
            bound: "1 <= m <= M - f - 2",
            clients: total,
            byzantine: f,
        });
    }
    let selected = iterated_krum_selection(&updates.flattened(), f, m, false)?;
    finish_selection(updates, &selected, "multi_krum")
}

/// Bulyan: select theta = M - 2f candidates by iterated Krum removal,
/// then per coordinate average the beta = theta - 2f candidate values
/// closest to the candidate median. Requires M >= 4f + 3.
pub fn bulyan(updates: &UpdateSet, f: usize) -> Result<AggregationResult> {
    let total = updates.len();
    if total < 4 * f + 3 {
        return Err(Error::ByzantineBound {
            rule: "bulyan",
            bound: "M >= 4f + 3",
            clients: total,
            byzantine: f,
        });
    }
    let theta = total - 2 * f;
    let beta = theta - 2 * f;
    let selected = iterated_krum_selection(&updates.flattened(), f, theta, true)?;

    let candidates: Vec<Array1<f64>> = {
        let flat = updates.flattened();
        selected.iter().map(|&i| flat[i].clone()).collect()
    };
    let p = candidates[0].len();
    let mut out = Array1::zeros(p);
    for coord in 0..p {
        let mut values: Vec<f64> = candidates.iter().map(|v| v[coord]).collect();
        values.sort_by(|a, b| a.partial_cmp(b).expect("finite parameters"));
        let median = median_of_sorted(&values);
        // Stable sort keeps candidate order among equal deviations.
        let mut by_closeness: Vec<f64> = candidates.iter().map(|v| v[coord]).collect();
        by_closeness.sort_by(|a, b| {
            (a - median)
                .abs()
                .partial_cmp(&(b - median).abs())
                .expect("finite parameters")
        });
        out[coord] = by_closeness[..beta].iter().sum::<f64>() / beta as f64;
    }

    let mut weights = vec![0.0; total];
    for &i in &selected {
        weights[i] = 1.0 / theta as f64;
    }
    let mut diagnostics = BTreeMap::new();
    diagnostics.insert("theta".to_string(), theta.to_string());
    diagnostics.insert("beta".to_string(), beta.to_string());
    Ok(AggregationResult {
        params: unflatten(&out)?,
        weights,
        diagnostics,
    })
}

/// Remove the Krum winner from the working set `count` times; returns the
/// selected positions in the original order of `vectors`.
fn iterated_krum_selection(
    vectors: &[Array1<f64>],
    f: usize,
    count: usize,
    relaxed: bool,
) -> Result<Vec<usize>> {
    let mut remaining: Vec<usize> = (0..vectors.len()).collect();
    let mut selected = Vec::with_capacity(count);
    for _ in 0..count {
        let working: Vec<Array1<f64>> = remaining.iter().map(|&i| vectors[i].clone()).collect();
        let scores = scores_on(&working, f, relaxed)?;
        let winner_pos = argmin_by_position(&scores);
        selected.push(remaining.remove(winner_pos));
    }
    Ok(selected)
}

fn finish_selection(
    updates: &UpdateSet,
    selected: &[usize],
    rule: &str,
) -> Result<AggregationResult> {
    let chosen: Vec<_> = selected.iter().map(|&i| updates.params[i].clone()).collect();
    let params = weighted_average(&chosen, &vec![1.0; chosen.len()]);
    let mut weights = vec![0.0; updates.len()];
    for &i in selected {
        weights[i] = 1.0 / selected.len() as f64;
    }
    let mut diagnostics = BTreeMap::new();
    diagnostics.insert(
        format!("{rule}_selected"),
        selected
            .iter()
            .map(|&i| updates.client_ids[i].to_string())
            .collect::<Vec<_>>()
            .join(" "),
    );
    Ok(AggregationResult {
        params,
        weights,
        diagnostics,
    })
}
