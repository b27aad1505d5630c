//! Memoryless robust aggregation rules: simple mean, coordinate-wise
//! median, trimmed mean, Krum / Multi-Krum, Bulyan, and the geometric
//! median, behind a uniform dispatch.
//!
//! All distance computations run on flattened (d+1)-vectors with the bias
//! appended, so bias poisoning is visible to every rule.

mod baselines;
mod geomed;
mod krum;

pub use baselines::{coordinate_median, simple_mean, trimmed_mean};
pub use geomed::{geomed_objective, geometric_median, GeoMedConfig};
pub use krum::{bulyan, krum_scores, krum_select, multi_krum};

use std::collections::BTreeMap;

use ndarray::Array1;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::ModelParams;

/// One round's collection of client parameter submissions.
#[derive(Debug, Clone, PartialEq)]
pub struct UpdateSet {
    pub client_ids: Vec<usize>,
    pub params: Vec<ModelParams>,
}

impl UpdateSet {
    pub fn new(client_ids: Vec<usize>, params: Vec<ModelParams>) -> Result<Self> {
        if params.is_empty() {
            return Err(Error::EmptyUpdates);
        }
        if client_ids.len() != params.len() {
            return Err(Error::LengthMismatch {
                left: client_ids.len(),
                right: params.len(),
            });
        }
        let dim = params[0].dim();
        if dim == 0 {
            return Err(Error::DimensionMismatch {
                expected: 1,
                found: 0,
            });
        }
        for p in &params {
            if p.dim() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: p.dim(),
                });
            }
        }
        let mut seen = std::collections::HashSet::new();
        for &id in &client_ids {
            if !seen.insert(id) {
                return Err(Error::DuplicateClient(id));
            }
        }
        Ok(UpdateSet { client_ids, params })
    }

    pub fn len(&self) -> usize {
        self.params.len()
    }

    pub fn is_empty(&self) -> bool {
        self.params.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.params[0].dim()
    }

    /// Flattened (d+1)-vectors, bias last, in client order.
    pub fn flattened(&self) -> Vec<Array1<f64>> {
        self.params.iter().map(flatten).collect()
    }
}

/// Uniform return shape for every rule: the aggregated parameters, the
/// normalized per-client influence, and rule-specific notes.
#[derive(Debug, Clone, PartialEq)]
pub struct AggregationResult {
    pub params: ModelParams,
    /// Normalized influence per client (same order as the update set);
    /// selection rules report 0/1 indicators scaled to sum to 1.
    pub weights: Vec<f64>,
    pub diagnostics: BTreeMap<String, String>,
}

/// Configuration consumed by the baseline rules. `f` is the assumed
/// Byzantine count for Krum-family rules, `multi_krum_m` the Multi-Krum
/// selection count, and `trim_k` the per-side trim count.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct BaselineConfig {
    pub f: Option<usize>,
    pub multi_krum_m: Option<usize>,
    pub trim_k: Option<usize>,
    #[serde(skip)]
    pub geomed: GeoMedConfig,
}

/// Rule names accepted by [`aggregate`].
pub const BASELINE_RULES: [&str; 7] = [
    "simple_mean",
    "median",
    "trimmed_mean",
    "krum",
    "multi_krum",
    "bulyan",
    "geomed",
];

/// Dispatch an update set to the named baseline rule.
pub fn aggregate(
    rule: &str,
    updates: &UpdateSet,
    cfg: &BaselineConfig,
) -> Result<AggregationResult> {
    let need = |value: Option<usize>, key: &str| {
        value.ok_or_else(|| Error::config(format!("rule '{rule}' requires config key '{key}'")))
    };
    match rule {
        "simple_mean" => simple_mean(updates),
        "median" => coordinate_median(updates),
        "trimmed_mean" => trimmed_mean(updates, need(cfg.trim_k, "aggregator.trim_k")?),
        "krum" => krum_select(updates, need(cfg.f, "aggregator.f")?),
        "multi_krum" => multi_krum(
            updates,
            need(cfg.f, "aggregator.f")?,
            need(cfg.multi_krum_m, "aggregator.multi_krum_m")?,
        ),
        "bulyan" => bulyan(updates, need(cfg.f, "aggregator.f")?),
        "geomed" => geomed::geomed_rule(updates, &cfg.geomed),
        _ => Err(Error::UnknownRule {
            name: rule.to_string(),
            available: BASELINE_RULES.join(", "),
        }),
    }
}

/// Append the bias as the last coordinate.
pub fn flatten(params: &ModelParams) -> Array1<f64> {
    let mut out = Array1::zeros(params.dim() + 1);
    out.slice_mut(ndarray::s![..params.dim()]).assign(&params.w);
    out[params.dim()] = params.b;
    out
}

/// Inverse of [`flatten`]; the vector must hold at least one weight plus
/// the bias.
pub fn unflatten(vector: &Array1<f64>) -> Result<ModelParams> {
    if vector.len() < 2 {
        return Err(Error::DimensionMismatch {
            expected: 2,
            found: vector.len(),
        });
    }
    let d = vector.len() - 1;
    Ok(ModelParams {
        w: vector.slice(ndarray::s![..d]).to_owned(),
        b: vector[d],
    })
}

/// Weighted average of client parameters: sum(c_j * v_j) / sum(c_j).
/// Shared by the mean rule and reputation-weighted aggregation so that
/// equal-weight inputs produce bit-identical results in both.
pub(crate) fn weighted_average(params: &[ModelParams], weights: &[f64]) -> ModelParams {
    let dim = params[0].dim();
    let mut w_acc = Array1::zeros(dim);
    let mut b_acc = 0.0;
    let mut total = 0.0;
    for (p, &c) in params.iter().zip(weights) {
        w_acc.scaled_add(c, &p.w);
        b_acc += c * p.b;
        total += c;
    }
    ModelParams {
        w: w_acc / total,
        b: b_acc / total,
    }
}
