//! Hybrid reputation aggregation: a geometric-median reference with
//! per-round anomaly distances, a piecewise-linear trust weight, a
//! momentum reputation carried across rounds, and reputation-times-trust
//! weighted averaging. Two ablation variants disable one half each.

use std::collections::BTreeMap;

use ndarray::Array1;
use serde::{Deserialize, Serialize};

use crate::aggregators::{geometric_median, weighted_average, GeoMedConfig, UpdateSet};
use crate::error::{Error, Result};
use crate::model::ModelParams;

/// Which half of the mechanism is active.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HraVariant {
    /// Combined weight r_j * phi(delta_j).
    Full,
    /// Trust weight only; the reputation store is neither used nor updated.
    AnomalyOnly,
    /// Reputation only in the aggregation weights; reputation is still
    /// driven by the trust weight each round.
    ReputationOnly,
}

impl HraVariant {
    pub fn name(&self) -> &'static str {
        match self {
            HraVariant::Full => "full",
            HraVariant::AnomalyOnly => "anomaly_only",
            HraVariant::ReputationOnly => "reputation_only",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct HraConfig {
    /// Distances at or below this receive full trust.
    pub t_low: f64,
    /// Distances at or above this receive zero trust.
    pub t_high: f64,
    /// Reputation momentum: r <- rho * r + (1 - rho) * phi.
    pub rho: f64,
    pub variant: HraVariant,
    /// Reputation assigned to a client on first contact.
    pub initial_reputation: f64,
    /// Append the bias to the anomaly-distance vectors. Off by default:
    /// distances are over weights only.
    pub anomaly_includes_bias: bool,
    #[serde(skip)]
    pub geomed: GeoMedConfig,
}

impl Default for HraConfig {
    fn default() -> Self {
        HraConfig {
            t_low: 3.0,
            t_high: 7.0,
            rho: 0.5,
            variant: HraVariant::Full,
            initial_reputation: 1.0,
            anomaly_includes_bias: false,
            geomed: GeoMedConfig::default(),
        }
    }
}

/// Per-client trust scores carried across rounds.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ReputationState {
    pub reputations: BTreeMap<usize, f64>,
    pub rounds_observed: u64,
}

impl ReputationState {
    pub fn reputation(&self, client: usize) -> Option<f64> {
        self.reputations.get(&client).copied()
    }

    pub fn mean_reputation(&self) -> f64 {
        if self.reputations.is_empty() {
            return 0.0;
        }
        self.reputations.values().sum::<f64>() / self.reputations.len() as f64
    }
}

/// Everything the aggregation step observed, for logging and analysis.
#[derive(Debug, Clone, PartialEq)]
pub struct HraDiagnostics {
    pub anomaly_distances: Vec<f64>,
    pub trust_weights: Vec<f64>,
    /// Combined per-client weights before normalization.
    pub combined_weights: Vec<f64>,
    pub reference: Array1<f64>,
    /// Set when every combined weight was zero and the geometric-median
    /// reference was returned instead of a weighted average.
    pub fallback_used: bool,
}

/// Geometric-median reference over the clients' vectors and the Euclidean
/// distance of each client to it.
pub fn anomaly_scores(updates: &UpdateSet, cfg: &HraConfig) -> Result<(Vec<f64>, Array1<f64>)> {
    let vectors: Vec<Array1<f64>> = if cfg.anomaly_includes_bias {
        updates.flattened()
    } else {
        updates.params.iter().map(|p| p.w.clone()).collect()
    };
    let reference = geometric_median(&vectors, &cfg.geomed)?;
    let distances = vectors
        .iter()
        .map(|v| {
            (v - &reference)
                .iter()
                .map(|d| d * d)
                .sum::<f64>()
                .sqrt()
        })
        .collect();
    Ok((distances, reference))
}

/// Piecewise-linear trust weight: 1 below `t_low`, 0 above `t_high`,
/// linear ramp in between.
pub fn trust_weight(delta: f64, t_low: f64, t_high: f64) -> f64 {
    if delta <= t_low {
        1.0
    } else if delta >= t_high {
        0.0
    } else {
        (t_high - delta) / (t_high - t_low)
    }
}

/// Momentum update r_j <- rho * r_j + (1 - rho) * phi_j for every listed
/// client. The input state is left untouched.
pub fn update_reputation(
    state: &ReputationState,
    client_ids: &[usize],
    phi: &[f64],
    rho: f64,
) -> Result<ReputationState> {
    if client_ids.len() != phi.len() {
        return Err(Error::LengthMismatch {
            left: client_ids.len(),
            right: phi.len(),
        });
    }
    let mut next = state.clone();
    for (&id, &phi_j) in client_ids.iter().zip(phi) {
        let r = next
            .reputations
            .get_mut(&id)
            .ok_or(Error::UnknownClient(id))?;
        *r = rho * *r + (1.0 - rho) * phi_j;
    }
    next.rounds_observed += 1;
    Ok(next)
}

/// One aggregation round: anomaly scoring against the geometric-median
/// reference, trust weighting, weighted averaging with the pre-update
/// reputations, then the reputation update. If every combined weight is
/// zero the reference itself is returned with the fallback flag set.
pub fn aggregate_hra(
    updates: &UpdateSet,
    state: &ReputationState,
    cfg: &HraConfig,
) -> Result<(ModelParams, ReputationState, HraDiagnostics)> {
    if updates.is_empty() {
        return Err(Error::EmptyUpdates);
    }

    let mut state = state.clone();
    for &id in &updates.client_ids {
        state
            .reputations
            .entry(id)
            .or_insert(cfg.initial_reputation);
    }

    let (distances, reference) = anomaly_scores(updates, cfg)?;
    let phi: Vec<f64> = distances
        .iter()
        .map(|&d| trust_weight(d, cfg.t_low, cfg.t_high))
        .collect();

    let combined: Vec<f64> = updates
        .client_ids
        .iter()
        .zip(&phi)
        .map(|(&id, &phi_j)| {
            let r = state.reputations[&id];
            match cfg.variant {
                HraVariant::Full => r * phi_j,
                HraVariant::AnomalyOnly => phi_j,
                HraVariant::ReputationOnly => r,
            }
        })
        .collect();

    let fallback = combined.iter().all(|&c| c == 0.0);
    let params = if fallback {
        fallback_params(updates, &reference, cfg)?
    } else {
        weighted_average(&updates.params, &combined)
    };

    let next_state = match cfg.variant {
        HraVariant::AnomalyOnly => state,
        HraVariant::Full | HraVariant::ReputationOnly => {
            update_reputation(&state, &updates.client_ids, &phi, cfg.rho)?
        }
    };

    Ok((
        params,
        next_state,
        HraDiagnostics {
            anomaly_distances: distances,
            trust_weights: phi,
            combined_weights: combined,
            reference,
            fallback_used: fallback,
        },
    ))
}

/// The reference vector as model parameters. When the anomaly distance
/// excludes the bias, the reference carries no bias coordinate; the
/// 1-D geometric median (coordinate median) of the client biases fills it.
fn fallback_params(
    updates: &UpdateSet,
    reference: &Array1<f64>,
    cfg: &HraConfig,
) -> Result<ModelParams> {
    if cfg.anomaly_includes_bias {
        return crate::aggregators::unflatten(reference);
    }
    let biases: Vec<Array1<f64>> = updates
        .params
        .iter()
        .map(|p| Array1::from_vec(vec![p.b]))
        .collect();
    let bias = geometric_median(&biases, &cfg.geomed)?[0];
    Ok(ModelParams {
        w: reference.clone(),
        b: bias,
    })
}

/// Closed form of the reputation recursion after observing the given
/// trust-weight history: rho^t r0 + (1 - rho) * sum_i rho^(t-1-i) phi_i.
pub fn closed_form_reputation(r0: f64, rho: f64, phi_history: &[f64]) -> f64 {
    let t = phi_history.len() as i32;
    let mut value = rho.powi(t) * r0;
    for (i, &phi) in phi_history.iter().enumerate() {
        value += (1.0 - rho) * rho.powi(t - 1 - i as i32) * phi;
    }
    value
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::aggregators::simple_mean;
    use ndarray::array;
    use rand::{Rng, SeedableRng};

    fn updates_1d(weights: &[f64]) -> UpdateSet {
        let params: Vec<ModelParams> = weights
            .iter()
            .map(|&w| ModelParams {
                w: array![w],
                b: 0.0,
            })
            .collect();
        UpdateSet::new((0..weights.len()).collect(), params).unwrap()
    }

    fn state_all(updates: &UpdateSet, r: f64) -> ReputationState {
        ReputationState {
            reputations: updates.client_ids.iter().map(|&id| (id, r)).collect(),
            rounds_observed: 0,
        }
    }

    #[test]
    fn test_anomaly_identical_clients() {
        let updates = updates_1d(&[2.0; 4]);
        let (deltas, _) = anomaly_scores(&updates, &HraConfig::default()).unwrap();
        assert!(deltas.iter().all(|&d| d == 0.0));
    }

    #[test]
    fn test_anomaly_hand_instance() {
        // 1-D weights {1.0, 1.2, 9.0}: the geometric median is the median.
        let updates = updates_1d(&[1.0, 1.2, 9.0]);
        let (deltas, reference) = anomaly_scores(&updates, &HraConfig::default()).unwrap();
        assert!((reference[0] - 1.2).abs() < 1e-6);
        assert!((deltas[0] - 0.2).abs() < 1e-6);
        assert!(deltas[1] < 1e-6);
        assert!((deltas[2] - 7.8).abs() < 1e-6);
    }

    #[test]
    fn test_anomaly_scales_with_input() {
        let updates = updates_1d(&[1.0, 2.0, 10.0]);
        let scaled = updates_1d(&[3.0, 6.0, 30.0]);
        let cfg = HraConfig::default();
        let (d1, _) = anomaly_scores(&updates, &cfg).unwrap();
        let (d3, _) = anomaly_scores(&scaled, &cfg).unwrap();
        for (a, b) in d1.iter().zip(&d3) {
            assert!((3.0 * a - b).abs() < 1e-6);
        }
    }

    #[test]
    fn test_anomaly_bias_flag() {
        // Bias-only poisoning is invisible unless the flag is set.
        let params = vec![
            ModelParams { w: array![0.0], b: 0.0 },
            ModelParams { w: array![0.0], b: 0.0 },
            ModelParams { w: array![0.0], b: 100.0 },
        ];
        let updates = UpdateSet::new(vec![0, 1, 2], params).unwrap();
        let cfg = HraConfig::default();
        let (deltas, _) = anomaly_scores(&updates, &cfg).unwrap();
        assert!(deltas.iter().all(|&d| d == 0.0));

        let cfg_bias = HraConfig {
            anomaly_includes_bias: true,
            ..cfg
        };
        let (deltas, _) = anomaly_scores(&updates, &cfg_bias).unwrap();
        assert!(deltas[2] > 50.0);
    }

    #[test]
    fn test_trust_weight_branches() {
        assert_eq!(trust_weight(2.0, 3.0, 7.0), 1.0);
        assert_eq!(trust_weight(5.0, 3.0, 7.0), 0.5);
        assert_eq!(trust_weight(7.0, 3.0, 7.0), 0.0);
        assert_eq!(trust_weight(3.0, 3.0, 7.0), 1.0);
        assert_eq!(trust_weight(100.0, 3.0, 7.0), 0.0);
    }

    #[test]
    fn test_trust_weight_monotone_and_lipschitz() {
        let (t_low, t_high) = (3.0, 7.0);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        for _ in 0..1000 {
            let a = rng.gen_range(0.0..12.0);
            let b = rng.gen_range(0.0..12.0);
            let (pa, pb) = (trust_weight(a, t_low, t_high), trust_weight(b, t_low, t_high));
            if a <= b {
                assert!(pa >= pb);
            }
            assert!((pa - pb).abs() <= (a - b).abs() / (t_high - t_low) + 1e-15);
        }
    }

    #[test]
    fn test_update_reputation_substitution() {
        let state = ReputationState {
            reputations: BTreeMap::from([(0, 1.0)]),
            rounds_observed: 0,
        };
        let next = update_reputation(&state, &[0], &[0.0], 0.5).unwrap();
        assert_eq!(next.reputations[&0], 0.5);
        assert_eq!(next.rounds_observed, 1);
        // value semantics
        assert_eq!(state.reputations[&0], 1.0);
    }

    #[test]
    fn test_update_reputation_fixed_point() {
        let state = ReputationState {
            reputations: BTreeMap::from([(0, 0.42)]),
            rounds_observed: 0,
        };
        let next = update_reputation(&state, &[0], &[0.42], 0.7).unwrap();
        assert!((next.reputations[&0] - 0.42).abs() < 1e-15);
    }

    #[test]
    fn test_update_reputation_decay_to_rho_power() {
        let mut state = ReputationState {
            reputations: BTreeMap::from([(0, 1.0)]),
            rounds_observed: 0,
        };
        let rho = 0.5;
        for t in 1..=20 {
            state = update_reputation(&state, &[0], &[0.0], rho).unwrap();
            assert_eq!(state.reputations[&0], rho.powi(t));
        }
    }

    #[test]
    fn test_update_reputation_unknown_client() {
        let state = ReputationState::default();
        assert!(matches!(
            update_reputation(&state, &[7], &[0.5], 0.5),
            Err(Error::UnknownClient(7))
        ));
    }

    #[test]
    fn test_closed_form_empty_history() {
        assert_eq!(closed_form_reputation(0.8, 0.5, &[]), 0.8);
    }

    #[test]
    fn test_closed_form_constant_history_limit() {
        let history = vec![0.3; 200];
        let value = closed_form_reputation(1.0, 0.9, &history);
        assert!((value - 0.3).abs() < 1e-9);
    }

    #[test]
    fn test_closed_form_matches_iteration() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(9);
        for _ in 0..50 {
            let r0: f64 = rng.gen_range(0.0..1.0);
            let rho: f64 = rng.gen_range(0.0..1.0);
            let len = rng.gen_range(0..=50);
            let history: Vec<f64> = (0..len).map(|_| rng.gen_range(0.0..1.0)).collect();

            let mut state = ReputationState {
                reputations: BTreeMap::from([(0, r0)]),
                rounds_observed: 0,
            };
            for &phi in &history {
                state = update_reputation(&state, &[0], &[phi], rho).unwrap();
            }
            let expected = closed_form_reputation(r0, rho, &history);
            assert!(
                (state.reputations[&0] - expected).abs() < 1e-12,
                "iterated={} closed={}",
                state.reputations[&0],
                expected
            );
        }
    }

    #[test]
    fn test_reputations_stay_in_unit_interval() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(21);
        for _ in 0..50 {
            let rho: f64 = rng.gen_range(0.0..=1.0);
            let mut state = ReputationState {
                reputations: BTreeMap::from([(0, rng.gen_range(0.0..=1.0))]),
                rounds_observed: 0,
            };
            for _ in 0..100 {
                let phi = rng.gen_range(0.0..=1.0);
                state = update_reputation(&state, &[0], &[phi], rho).unwrap();
                let r = state.reputations[&0];
                assert!((0.0..=1.0).contains(&r), "r={r} escaped [0,1]");
            }
        }
    }

    #[test]
    fn test_aggregate_equal_trust_matches_simple_mean() {
        // All distances small, all reputations equal: exact mean.
        let updates = updates_1d(&[0.5, 0.7, 0.9]);
        let state = state_all(&updates, 1.0);
        let cfg = HraConfig::default();
        let (params, _, diag) = aggregate_hra(&updates, &state, &cfg).unwrap();
        assert!(!diag.fallback_used);
        assert_eq!(params, simple_mean(&updates).unwrap().params);
    }

    #[test]
    fn test_aggregate_hand_trace() {
        // Weights {1.0, 1.2, 9.0} with thresholds (3, 7): phi = {1, 1, 0},
        // so the aggregate is (1.0 + 1.2) / 2 = 1.1.
        let updates = updates_1d(&[1.0, 1.2, 9.0]);
        let state = state_all(&updates, 1.0);
        let cfg = HraConfig::default();
        let (params, _, diag) = aggregate_hra(&updates, &state, &cfg).unwrap();
        assert_eq!(diag.trust_weights, vec![1.0, 1.0, 0.0]);
        assert_eq!(params.w[0], 1.1);
    }

    #[test]
    fn test_aggregate_fallback_when_all_rejected() {
        // Even count keeps the reference strictly between clients, so
        // every distance exceeds t_high.
        let updates = updates_1d(&[0.0, 1.0, 2.0, 3.0]);
        let state = state_all(&updates, 1.0);
        let cfg = HraConfig {
            t_low: 0.1,
            t_high: 0.2,
            ..Default::default()
        };
        let (params, _, diag) = aggregate_hra(&updates, &state, &cfg).unwrap();
        assert!(diag.fallback_used);
        assert!(diag.trust_weights.iter().all(|&p| p == 0.0));
        // The aggregate is the geometric-median reference.
        assert!((params.w[0] - 1.5).abs() < 1e-6);
        assert_eq!(params.b, 0.0);
    }

    #[test]
    fn test_aggregate_updates_reputation_after_weighting() {
        // A rejected client still aggregates with its pre-update
        // reputation; the decay shows up next round.
        let updates = updates_1d(&[1.0, 1.2, 9.0]);
        let state = state_all(&updates, 1.0);
        let cfg = HraConfig::default();
        let (_, next, _) = aggregate_hra(&updates, &state, &cfg).unwrap();
        assert_eq!(next.reputations[&2], 0.5);
        assert_eq!(next.reputations[&0], 1.0);
        assert_eq!(next.rounds_observed, 1);
    }

    #[test]
    fn test_anomaly_only_leaves_state_untouched() {
        let updates = updates_1d(&[1.0, 1.2, 9.0]);
        let state = state_all(&updates, 0.8);
        let cfg = HraConfig {
            variant: HraVariant::AnomalyOnly,
            ..Default::default()
        };
        let (_, next, _) = aggregate_hra(&updates, &state, &cfg).unwrap();
        assert_eq!(next, state);
    }

    #[test]
    fn test_reputation_only_ignores_current_round_distance() {
        // Client 2 is a gross outlier but enters with full reputation, so
        // reputation_only still averages it in this round.
        let updates = updates_1d(&[1.0, 1.2, 9.0]);
        let state = state_all(&updates, 1.0);
        let cfg = HraConfig {
            variant: HraVariant::ReputationOnly,
            ..Default::default()
        };
        let (params, next, _) = aggregate_hra(&updates, &state, &cfg).unwrap();
        assert_eq!(params, simple_mean(&updates).unwrap().params);
        // ...but its reputation still decays from the trust weight.
        assert_eq!(next.reputations[&2], 0.5);
    }

    #[test]
    fn test_full_with_zero_momentum_matches_anomaly_only_round_one() {
        let updates = updates_1d(&[1.0, 1.5, 6.0]);
        let state = state_all(&updates, 1.0);
        let full = HraConfig {
            rho: 0.0,
            ..Default::default()
        };
        let anomaly = HraConfig {
            variant: HraVariant::AnomalyOnly,
            ..full
        };
        let (a, _, _) = aggregate_hra(&updates, &state, &full).unwrap();
        let (b, _, _) = aggregate_hra(&updates, &state, &anomaly).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn test_new_clients_inserted_at_initial_reputation() {
        let updates = updates_1d(&[1.0, 1.1]);
        let cfg = HraConfig {
            initial_reputation: 0.6,
            ..Default::default()
        };
        let (_, next, _) = aggregate_hra(&updates, &ReputationState::default(), &cfg).unwrap();
        // phi = 1 for both, so r = 0.5 * 0.6 + 0.5 * 1.0.
        assert_eq!(next.reputations[&0], 0.8);
    }

    #[test]
    fn test_aggregate_within_convex_envelope() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(37);
        for _ in 0..50 {
            let m = rng.gen_range(2..=8);
            let weights: Vec<f64> = (0..m).map(|_| rng.gen_range(-5.0..5.0)).collect();
            let updates = updates_1d(&weights);
            let mut state = ReputationState::default();
            for &id in &updates.client_ids {
                state
                    .reputations
                    .insert(id, rng.gen_range(0.1..1.0));
            }
            let cfg = HraConfig {
                t_low: rng.gen_range(0.5..2.0),
                t_high: rng.gen_range(3.0..8.0),
                ..Default::default()
            };
            let (params, _, diag) = aggregate_hra(&updates, &state, &cfg).unwrap();
            if diag.fallback_used {
                continue;
            }
            let lo = weights.iter().cloned().fold(f64::INFINITY, f64::min);
            let hi = weights.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            assert!(params.w[0] >= lo - 1e-12 && params.w[0] <= hi + 1e-12);
        }
    }

    #[test]
    fn test_empty_updates_rejected() {
        let err = UpdateSet::new(vec![], vec![]);
        assert!(err.is_err());
    }
}
