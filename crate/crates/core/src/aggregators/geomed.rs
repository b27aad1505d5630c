//! Geometric median via smoothed Weiszfeld iteration.

use std::collections::BTreeMap;

use ndarray::Array1;
use serde::{Deserialize, Serialize};

use crate::aggregators::{unflatten, AggregationResult, UpdateSet};
use crate::error::{Error, Result};

/// Weiszfeld solver settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GeoMedConfig {
    /// Stop once the iterate moves less than this between steps.
    pub tolerance: f64,
    pub max_iterations: usize,
    /// Distances below this are floored in the reweighting, smoothing the
    /// singularity when the iterate lands on an input point.
    pub singularity_epsilon: f64,
}

impl Default for GeoMedConfig {
    fn default() -> Self {
        GeoMedConfig {
            tolerance: 1e-10,
            max_iterations: 1000,
            singularity_epsilon: 1e-12,
        }
    }
}

fn euclidean(a: &Array1<f64>, b: &Array1<f64>) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// Sum of Euclidean distances from `point` to every vector: the objective
/// the geometric median minimizes.
pub fn geomed_objective(vectors: &[Array1<f64>], point: &Array1<f64>) -> f64 {
    vectors.iter().map(|v| euclidean(v, point)).sum()
}

/// Weiszfeld fixed-point iteration started from the arithmetic mean.
pub fn geometric_median(vectors: &[Array1<f64>], cfg: &GeoMedConfig) -> Result<Array1<f64>> {
    if vectors.is_empty() {
        return Err(Error::EmptyInput);
    }
    let p = vectors[0].len();
    for v in vectors {
        if v.len() != p {
            return Err(Error::DimensionMismatch {
                expected: p,
                found: v.len(),
            });
        }
    }

    let mut current = Array1::zeros(p);
    for v in vectors {
        current += v;
    }
    current /= vectors.len() as f64;
    if vectors.len() <= 2 {
        // The mean of one or two points is already a minimizer.
        return Ok(current);
    }

    for _ in 0..cfg.max_iterations {
        let mut numerator = Array1::zeros(p);
        let mut denominator = 0.0;
        for v in vectors {
            let dist = euclidean(v, &current).max(cfg.singularity_epsilon);
            let weight = 1.0 / dist;
            numerator.scaled_add(weight, v);
            denominator += weight;
        }
        let next = numerator / denominator;
        let movement = euclidean(&next, &current);
        current = next;
        if movement < cfg.tolerance {
            break;
        }
    }
    Ok(current)
}

/// Geometric median as an aggregation rule over flattened updates.
/// The reported weights are the converged Weiszfeld inverse-distance
/// weights, normalized.
pub(crate) fn geomed_rule(updates: &UpdateSet, cfg: &GeoMedConfig) -> Result<AggregationResult> {
    let flat = updates.flattened();
    let median = geometric_median(&flat, cfg)?;
    let raw: Vec<f64> = flat
        .iter()
        .map(|v| 1.0 / euclidean(v, &median).max(cfg.singularity_epsilon))
        .collect();
    let total: f64 = raw.iter().sum();
    Ok(AggregationResult {
        params: unflatten(&median)?,
        weights: raw.into_iter().map(|w| w / total).collect(),
        diagnostics: BTreeMap::new(),
    })
}
