//! Adversarial client behaviors: label flipping before local training and
//! four kinds of post-training parameter manipulation, plus the roster
//! assigning attacks to clients.

use ndarray::Array1;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::ModelParams;

/// The attack a client executes, if any.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AttackKind {
    None,
    LabelFlipping,
    Noise,
    SignFlipping,
    Backdoor,
    Sybil,
}

impl AttackKind {
    pub fn is_malicious(&self) -> bool {
        !matches!(self, AttackKind::None)
    }

    pub fn name(&self) -> &'static str {
        match self {
            AttackKind::None => "none",
            AttackKind::LabelFlipping => "label_flipping",
            AttackKind::Noise => "noise",
            AttackKind::SignFlipping => "sign_flipping",
            AttackKind::Backdoor => "backdoor",
            AttackKind::Sybil => "sybil",
        }
    }
}

/// Attack magnitudes. The defaults are chosen so each attack visibly
/// shifts a logistic model trained on standardized data; all are
/// configurable per scenario.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AttackConfig {
    /// Standard deviation of the Gaussian noise attack.
    pub noise_std: f64,
    /// Amplification A applied to the inverted update in sign flipping.
    pub sign_amplification: f64,
    /// Value added to the leading weight coordinates by the backdoor.
    pub backdoor_magnitude: f64,
    /// Number of leading coordinates the backdoor trigger touches
    /// (clamped to the model dimension).
    pub backdoor_coords: usize,
    /// Standard deviation of the sybil large-scale perturbation.
    pub sybil_scale: f64,
    /// When set, all sybil clients in a round share one noise stream and
    /// therefore submit identical perturbations.
    pub sybil_collude: bool,
}

impl Default for AttackConfig {
    fn default() -> Self {
        AttackConfig {
            noise_std: 1.0,
            sign_amplification: 3.0,
            backdoor_magnitude: 5.0,
            backdoor_coords: 5,
            sybil_scale: 10.0,
            sybil_collude: false,
        }
    }
}

/// Per-client attack assignment for one run.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClientRoster {
    pub kinds: Vec<AttackKind>,
}

impl ClientRoster {
    pub fn kind(&self, client: usize) -> AttackKind {
        self.kinds[client]
    }

    pub fn n_malicious(&self) -> usize {
        self.kinds.iter().filter(|k| k.is_malicious()).count()
    }
}

/// Label-flipping data poisoning: y_adv = 1 - y.
pub fn flip_labels(y: &Array1<f64>) -> Array1<f64> {
    y.mapv(|v| 1.0 - v)
}

/// Apply the post-training stage of an attack to a client's freshly
/// trained parameters. `global` is the round's starting model, the
/// reference point for sign flipping.
pub fn apply_post_training_attack(
    kind: AttackKind,
    global: &ModelParams,
    local: &ModelParams,
    cfg: &AttackConfig,
    rng: &mut ChaCha8Rng,
) -> Result<ModelParams> {
    if global.dim() != local.dim() {
        return Err(Error::DimensionMismatch {
            expected: global.dim(),
            found: local.dim(),
        });
    }
    match kind {
        AttackKind::None | AttackKind::LabelFlipping => Ok(local.clone()),
        AttackKind::Noise => Ok(perturb(local, cfg.noise_std, rng)),
        AttackKind::SignFlipping => {
            let a = cfg.sign_amplification;
            let w = &global.w - &((&local.w - &global.w) * a);
            let b = global.b - a * (local.b - global.b);
            Ok(ModelParams { w, b })
        }
        AttackKind::Backdoor => {
            let mut out = local.clone();
            let k = cfg.backdoor_coords.min(out.dim());
            for j in 0..k {
                out.w[j] += cfg.backdoor_magnitude;
            }
            Ok(out)
        }
        AttackKind::Sybil => Ok(perturb(local, cfg.sybil_scale, rng)),
    }
}

fn perturb(params: &ModelParams, std: f64, rng: &mut ChaCha8Rng) -> ModelParams {
    let mut out = params.clone();
    for v in out.w.iter_mut() {
        let noise: f64 = StandardNormal.sample(rng);
        *v += std * noise;
    }
    let noise: f64 = StandardNormal.sample(rng);
    out.b += std * noise;
    out
}

/// Choose floor(fraction * M) clients by seeded sampling without
/// replacement; chosen clients receive the attack kinds round-robin in
/// client-id order, the rest are benign.
pub fn assign_attacks(
    clients: usize,
    malicious_fraction: f64,
    kinds: &[AttackKind],
    seed: u64,
) -> Result<ClientRoster> {
    if malicious_fraction > 0.0 && kinds.is_empty() {
        return Err(Error::config(
            "attack.kinds must be non-empty when attack.malicious_fraction > 0",
        ));
    }
    // Small epsilon guards against representation error in fraction * M.
    let count = ((malicious_fraction * clients as f64) + 1e-9).floor() as usize;
    let count = count.min(clients);

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut ids: Vec<usize> = (0..clients).collect();
    ids.shuffle(&mut rng);
    let mut chosen: Vec<usize> = ids.into_iter().take(count).collect();
    chosen.sort_unstable();

    let mut roster = vec![AttackKind::None; clients];
    for (slot, client) in chosen.into_iter().enumerate() {
        roster[client] = kinds[slot % kinds.len()];
    }
    Ok(ClientRoster { kinds: roster })
}
