//! Scenario configuration: strict TOML schema, dotted-key overrides,
//! dependent-default resolution, and validation.
//!
//! Unknown keys are rejected rather than ignored, and every resolved
//! default is echoed back out through the manifest so no experiment runs
//! with silent settings.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::adversary::{AttackConfig, AttackKind};
use crate::aggregators::{BaselineConfig, GeoMedConfig, BASELINE_RULES};
use crate::data::SyntheticSpec;
use crate::error::{Error, Result};
use crate::hra::HraConfig;
use crate::model::TrainConfig;

/// A full experiment description. Field names mirror the config-file keys.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScenarioConfig {
    pub clients: usize,
    pub rounds: usize,
    pub runs: usize,
    pub seed: u64,
    pub data: DataSection,
    pub partition: PartitionSection,
    pub train: TrainConfig,
    pub attack: AttackSection,
    pub aggregator: AggregatorSection,
    pub hra: HraConfig,
    pub geomed: GeoMedConfig,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub compare: Option<CompareSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepSection>,
    /// Present when the file is an emitted run manifest.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub manifest: Option<ManifestMeta>,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        ScenarioConfig {
            clients: 10,
            rounds: 20,
            runs: 5,
            seed: 42,
            data: DataSection::default(),
            partition: PartitionSection::default(),
            train: TrainConfig::default(),
            attack: AttackSection::default(),
            aggregator: AggregatorSection::default(),
            hra: HraConfig::default(),
            geomed: GeoMedConfig::default(),
            compare: None,
            sweep: None,
            manifest: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DataSourceKind {
    Synthetic,
    Csv,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DataSection {
    pub source: DataSourceKind,
    // Synthetic generation.
    pub train_samples: usize,
    pub test_samples: usize,
    pub features: usize,
    pub positive_fraction: f64,
    pub separation: f64,
    pub noise_scale: f64,
    // CSV ingestion.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub train_path: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub test_path: Option<PathBuf>,
    pub label_column: String,
    pub positive_labels: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub negative_labels: Option<Vec<String>>,
}

impl Default for DataSection {
    fn default() -> Self {
        DataSection {
            source: DataSourceKind::Synthetic,
            train_samples: 20_000,
            test_samples: 5_000,
            features: 10,
            positive_fraction: 0.5,
            separation: 4.5,
            noise_scale: 1.0,
            train_path: None,
            test_path: None,
            label_column: "label".to_string(),
            positive_labels: vec!["1".to_string()],
            negative_labels: None,
        }
    }
}

impl DataSection {
    pub fn synthetic_spec(&self) -> SyntheticSpec {
        SyntheticSpec {
            train_samples: self.train_samples,
            test_samples: self.test_samples,
            features: self.features,
            positive_fraction: self.positive_fraction,
            separation: self.separation,
            noise_scale: self.noise_scale,
        }
    }

    pub fn positive_label_set(&self) -> BTreeSet<String> {
        self.positive_labels.iter().cloned().collect()
    }

    pub fn negative_label_set(&self) -> Option<BTreeSet<String>> {
        self.negative_labels
            .as_ref()
            .map(|v| v.iter().cloned().collect())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PartitionModeKind {
    Uniform,
    Dirichlet,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PartitionSection {
    pub mode: PartitionModeKind,
    /// Dirichlet concentration; ignored for uniform partitioning.
    pub alpha: f64,
}

impl Default for PartitionSection {
    fn default() -> Self {
        PartitionSection {
            mode: PartitionModeKind::Dirichlet,
            alpha: 0.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AttackSection {
    pub malicious_fraction: f64,
    pub kinds: Vec<AttackKind>,
    pub noise_std: f64,
    pub sign_amplification: f64,
    pub backdoor_magnitude: f64,
    pub backdoor_coords: usize,
    pub sybil_scale: f64,
    pub sybil_collude: bool,
}

impl Default for AttackSection {
    fn default() -> Self {
        let defaults = AttackConfig::default();
        AttackSection {
            malicious_fraction: 0.0,
            kinds: Vec::new(),
            noise_std: defaults.noise_std,
            sign_amplification: defaults.sign_amplification,
            backdoor_magnitude: defaults.backdoor_magnitude,
            backdoor_coords: defaults.backdoor_coords,
            sybil_scale: defaults.sybil_scale,
            sybil_collude: defaults.sybil_collude,
        }
    }
}

impl AttackSection {
    pub fn attack_config(&self) -> AttackConfig {
        AttackConfig {
            noise_std: self.noise_std,
            sign_amplification: self.sign_amplification,
            backdoor_magnitude: self.backdoor_magnitude,
            backdoor_coords: self.backdoor_coords,
            sybil_scale: self.sybil_scale,
            sybil_collude: self.sybil_collude,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AggregatorSection {
    pub rule: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub f: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub multi_krum_m: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trim_k: Option<usize>,
}

impl Default for AggregatorSection {
    fn default() -> Self {
        AggregatorSection {
            rule: "hra".to_string(),
            f: None,
            multi_krum_m: None,
            trim_k: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct CompareSection {
    pub rules: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct SweepSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub thresholds: Option<Vec<[f64; 2]>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub learning_rates: Option<Vec<f64>>,
}

/// Metadata block written into emitted manifests; accepted (and ignored)
/// when a manifest is re-parsed as a config.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct ManifestMeta {
    pub artifact_version: String,
    pub subcommand: String,
    pub experiment: String,
}

/// All rule names the scenario schema accepts.
pub fn known_rules() -> Vec<&'static str> {
    let mut rules: Vec<&'static str> = BASELINE_RULES.to_vec();
    rules.push("hra");
    rules
}

impl ScenarioConfig {
    /// Parse a config file, apply dotted-key overrides, fill dependent
    /// defaults, and validate.
    pub fn parse_file(path: &Path, overrides: &[(String, String)]) -> Result<ScenarioConfig> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse_str(&text, overrides)
    }

    pub fn parse_str(text: &str, overrides: &[(String, String)]) -> Result<ScenarioConfig> {
        let mut table: toml::Table = text
            .parse()
            .map_err(|e| Error::config(format!("config parse error: {e}")))?;
        for (key, value) in overrides {
            apply_override(&mut table, key, value)?;
        }
        let mut cfg: ScenarioConfig = toml::Value::Table(table)
            .try_into()
            .map_err(|e| Error::config(format!("config error: {e}")))?;
        cfg.resolve_defaults();
        cfg.validate()?;
        Ok(cfg)
    }

    /// Fill defaults that depend on other fields (Byzantine counts, trim
    /// width, Multi-Krum selection size) so manifests echo exact values.
    pub fn resolve_defaults(&mut self) {
        let m = self.clients;
        match self.aggregator.rule.as_str() {
            "krum" | "multi_krum" => {
                if self.aggregator.f.is_none() {
                    self.aggregator.f = Some(m.saturating_sub(3) / 2);
                }
                if self.aggregator.rule == "multi_krum" && self.aggregator.multi_krum_m.is_none() {
                    let f = self.aggregator.f.unwrap_or(0);
                    self.aggregator.multi_krum_m = Some(m.saturating_sub(f + 2).max(1));
                }
            }
            "bulyan" => {
                if self.aggregator.f.is_none() {
                    self.aggregator.f = Some(m.saturating_sub(3) / 4);
                }
            }
            "trimmed_mean" => {
                if self.aggregator.trim_k.is_none() {
                    self.aggregator.trim_k = Some((0.2 * m as f64).floor() as usize);
                }
            }
            _ => {}
        }
        // HRA always runs its solver with the shared geomed settings.
        self.hra.geomed = self.geomed;
    }

    pub fn baseline_config(&self) -> BaselineConfig {
        BaselineConfig {
            f: self.aggregator.f,
            multi_krum_m: self.aggregator.multi_krum_m,
            trim_k: self.aggregator.trim_k,
            geomed: self.geomed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::Config(msg));

        if self.clients < 1 {
            return fail("clients must be >= 1".into());
        }
        if self.rounds < 1 {
            return fail("rounds must be >= 1".into());
        }
        if self.runs < 1 {
            return fail("runs must be >= 1".into());
        }

        if !(self.train.eta0 > 0.0) {
            return fail(format!("train.eta0 ({}) must be > 0", self.train.eta0));
        }
        if !(self.train.gamma > 0.0 && self.train.gamma <= 1.0) {
            return fail(format!(
                "train.gamma ({}) must lie in (0, 1]",
                self.train.gamma
            ));
        }
        if self.train.epochs < 1 {
            return fail("train.epochs must be >= 1".into());
        }

        if !(0.0..=1.0).contains(&self.attack.malicious_fraction) {
            return fail(format!(
                "attack.malicious_fraction ({}) must lie in [0, 1]",
                self.attack.malicious_fraction
            ));
        }
        if self.attack.malicious_fraction > 0.0 && self.attack.kinds.is_empty() {
            return fail(
                "attack.kinds must be non-empty when attack.malicious_fraction > 0".into(),
            );
        }
        if !(self.attack.noise_std > 0.0) {
            return fail(format!(
                "attack.noise_std ({}) must be > 0",
                self.attack.noise_std
            ));
        }
        if !(self.attack.sign_amplification > 0.0) {
            return fail(format!(
                "attack.sign_amplification ({}) must be > 0",
                self.attack.sign_amplification
            ));
        }
        if !(self.attack.sybil_scale > 0.0) {
            return fail(format!(
                "attack.sybil_scale ({}) must be > 0",
                self.attack.sybil_scale
            ));
        }

        if !(self.hra.t_low > 0.0) {
            return fail(format!("hra.t_low ({}) must be > 0", self.hra.t_low));
        }
        if !(self.hra.t_high > self.hra.t_low) {
            return fail(format!(
                "hra.t_low ({}) must be less than hra.t_high ({})",
                self.hra.t_low, self.hra.t_high
            ));
        }
        if !(0.0..=1.0).contains(&self.hra.rho) {
            return fail(format!("hra.rho ({}) must lie in [0, 1]", self.hra.rho));
        }
        if !(0.0..=1.0).contains(&self.hra.initial_reputation) {
            return fail(format!(
                "hra.initial_reputation ({}) must lie in [0, 1]",
                self.hra.initial_reputation
            ));
        }

        if !(self.geomed.tolerance > 0.0) {
            return fail(format!(
                "geomed.tolerance ({}) must be > 0",
                self.geomed.tolerance
            ));
        }
        if self.geomed.max_iterations < 1 {
            return fail("geomed.max_iterations must be >= 1".into());
        }
        if !(self.geomed.singularity_epsilon > 0.0) {
            return fail(format!(
                "geomed.singularity_epsilon ({}) must be > 0",
                self.geomed.singularity_epsilon
            ));
        }

        if matches!(self.partition.mode, PartitionModeKind::Dirichlet)
            && !(self.partition.alpha > 0.0)
        {
            return fail(format!(
                "partition.alpha ({}) must be > 0",
                self.partition.alpha
            ));
        }

        match self.data.source {
            DataSourceKind::Synthetic => self.data.synthetic_spec().validate()?,
            DataSourceKind::Csv => {
                if self.data.train_path.is_none() || self.data.test_path.is_none() {
                    return fail(
                        "data.train_path and data.test_path are required when data.source = \"csv\""
                            .into(),
                    );
                }
                if self.data.positive_labels.is_empty() {
                    return fail("data.positive_labels must be non-empty".into());
                }
            }
        }

        let rule = self.aggregator.rule.as_str();
        if !known_rules().contains(&rule) {
            return Err(Error::UnknownRule {
                name: rule.to_string(),
                available: known_rules().join(", "),
            });
        }
        let m = self.clients;
        match rule {
            "krum" | "multi_krum" => {
                let f = self.aggregator.f.unwrap_or(0);
                if m < f + 3 {
                    return fail(format!(
                        "aggregator.f ({f}) too large: krum requires clients >= f + 3 (clients = {m})"
                    ));
                }
                if rule == "multi_krum" {
                    let mk = self.aggregator.multi_krum_m.unwrap_or(1);
                    if mk == 0 || mk > m - f - 2 {
                        return fail(format!(
                            "aggregator.multi_krum_m ({mk}) must lie in [1, clients - f - 2]"
                        ));
                    }
                }
            }
            "bulyan" => {
                let f = self.aggregator.f.unwrap_or(0);
                if m < 4 * f + 3 {
                    return fail(format!(
                        "aggregator.f ({f}) too large: bulyan requires clients >= 4f + 3 (clients = {m})"
                    ));
                }
            }
            "trimmed_mean" => {
                let k = self.aggregator.trim_k.unwrap_or(0);
                if 2 * k >= m {
                    return fail(format!(
                        "aggregator.trim_k ({k}) too large: requires 2k < clients (clients = {m})"
                    ));
                }
            }
            _ => {}
        }

        if let Some(compare) = &self.compare {
            let mut seen = BTreeSet::new();
            for rule in &compare.rules {
                if !known_rules().contains(&rule.as_str()) {
                    return Err(Error::UnknownRule {
                        name: rule.clone(),
                        available: known_rules().join(", "),
                    });
                }
                if !seen.insert(rule.clone()) {
                    return fail(format!("compare.rules contains duplicate entry '{rule}'"));
                }
            }
        }

        if let Some(sweep) = &self.sweep {
            if let Some(pairs) = &sweep.thresholds {
                for [lo, hi] in pairs {
                    if !(*lo > 0.0 && hi > lo) {
                        return fail(format!(
                            "sweep.thresholds pair ({lo}, {hi}) must satisfy 0 < t_low < t_high"
                        ));
                    }
                }
            }
            if let Some(rates) = &sweep.learning_rates {
                for eta in rates {
                    if !(*eta > 0.0) {
                        return fail(format!("sweep.learning_rates entry ({eta}) must be > 0"));
                    }
                }
            }
        }

        Ok(())
    }

    /// Serialize the fully resolved config (plus manifest metadata) as the
    /// run manifest. Re-parsing the output yields an equivalent config.
    pub fn to_manifest_toml(&self, meta: ManifestMeta) -> Result<String> {
        let mut echoed = self.clone();
        echoed.manifest = Some(meta);
        toml::to_string_pretty(&echoed)
            .map_err(|e| Error::config(format!("manifest serialization failed: {e}")))
    }
}

/// Set `key` (dotted path) to `value` inside a parsed TOML table,
/// creating intermediate tables as needed. The value is parsed as a TOML
/// literal first and falls back to a plain string.
fn apply_override(table: &mut toml::Table, key: &str, value: &str) -> Result<()> {
    let segments: Vec<&str> = key.split('.').collect();
    if segments.iter().any(|s| s.is_empty()) {
        return Err(Error::config(format!("invalid override key '{key}'")));
    }
    let parsed = parse_toml_value(value);

    let mut current = table;
    for segment in &segments[..segments.len() - 1] {
        let entry = current
            .entry(segment.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
        current = entry.as_table_mut().ok_or_else(|| {
            Error::config(format!(
                "override key '{key}' descends into non-table '{segment}'"
            ))
        })?;
    }
    current.insert(segments[segments.len() - 1].to_string(), parsed);
    Ok(())
}

fn parse_toml_value(raw: &str) -> toml::Value {
    let doc = format!("v = {raw}");
    match doc.parse::<toml::Table>() {
        Ok(mut t) => t.remove("v").expect("value key present"),
        Err(_) => toml::Value::String(raw.to_string()),
    }
}
