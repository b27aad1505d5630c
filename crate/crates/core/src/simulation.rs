//! Federated training orchestration: rounds of local training with attack
//! application, aggregation, decayed learning rates, per-round evaluation,
//! multi-run experiments, sweeps, and paired aggregator comparisons.
//!
//! Determinism: every random stream derives from (master seed, run, round,
//! client), so client training may run in parallel and results never
//! depend on scheduling. Different aggregators over the same config see
//! bit-identical data, partitions, and rosters.

use std::collections::BTreeMap;
use std::sync::Arc;

use ndarray::{Array1, Array2};
use rayon::prelude::*;
use sha2::{Digest, Sha256};

use crate::adversary::{
    apply_post_training_attack, assign_attacks, flip_labels, AttackConfig, AttackKind,
    ClientRoster,
};
use crate::aggregators::{aggregate, BaselineConfig, UpdateSet};
use crate::config::{DataSourceKind, PartitionModeKind, ScenarioConfig};
use crate::data::{
    generate_synthetic, load_csv, partition_dirichlet, partition_uniform, preprocess_pair,
    FeatureMatrix, PartitionPlan,
};
use crate::error::{Error, Result};
use crate::hra::{aggregate_hra, HraConfig, HraDiagnostics, ReputationState};
use crate::metrics::{confusion, roc_auc};
use crate::model::{lr_schedule, predict_proba, train_local, ModelParams, TrainConfig};
use crate::rng::{stream, sub_seed, tag};
use crate::stats::{paired_t_test, summarize, TTestResult};

/// Decision threshold for class-1 prediction during evaluation.
pub const PREDICTION_THRESHOLD: f64 = 0.5;

/// Evaluation of one global model snapshot on the held-out test set.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvalMetrics {
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub roc_auc: f64,
}

/// Per-round record: evaluation metrics plus the aggregator's
/// reputation-side diagnostics when the rule maintains them.
#[derive(Debug, Clone, PartialEq)]
pub struct RoundRecord {
    pub round: usize,
    pub metrics: EvalMetrics,
    pub mean_anomaly_distance: Option<f64>,
    pub mean_reputation: Option<f64>,
    pub reputation_snapshot: Option<BTreeMap<usize, f64>>,
    pub lr: f64,
    /// Global model after this round's aggregation.
    pub global: ModelParams,
}

/// One simulation run: ordered round records plus the final model.
#[derive(Debug, Clone, PartialEq)]
pub struct RunResult {
    pub run_index: usize,
    pub rounds: Vec<RoundRecord>,
    pub final_params: ModelParams,
    /// Hash over the run's data, partition, and roster; equal across
    /// aggregators under the same master seed.
    pub data_fingerprint: String,
}

impl RunResult {
    pub fn final_accuracy(&self) -> f64 {
        self.rounds.last().expect("rounds >= 1").metrics.accuracy
    }
}

/// All runs of one scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentResult {
    pub runs: Vec<RunResult>,
}

impl ExperimentResult {
    pub fn final_accuracies(&self) -> Vec<f64> {
        self.runs.iter().map(RunResult::final_accuracy).collect()
    }

    /// (mean, sample std, standard error) of the final accuracies.
    pub fn final_accuracy_summary(&self) -> (f64, f64, f64) {
        summarize(&self.final_accuracies()).expect("runs >= 1")
    }

    /// Per-round (mean, std, stderr) of test accuracy across runs.
    pub fn per_round_accuracy_summary(&self) -> Vec<(f64, f64, f64)> {
        let rounds = self.runs[0].rounds.len();
        (0..rounds)
            .map(|r| {
                let values: Vec<f64> = self
                    .runs
                    .iter()
                    .map(|run| run.rounds[r].metrics.accuracy)
                    .collect();
                summarize(&values).expect("runs >= 1")
            })
            .collect()
    }
}

/// An experiment result labeled by aggregator or sweep point.
#[derive(Debug, Clone)]
pub struct LabeledResult {
    pub label: String,
    pub result: ExperimentResult,
}

/// Row of a sweep or ablation table: final-accuracy summary plus the
/// change against the first (baseline) configuration in percentage points.
#[derive(Debug, Clone)]
pub struct SweepRow {
    pub label: String,
    pub mean: f64,
    pub std: f64,
    pub stderr: f64,
    pub change_pp: f64,
}

#[derive(Debug, Clone)]
pub struct SweepOutcome {
    pub entries: Vec<LabeledResult>,
    pub rows: Vec<SweepRow>,
}

#[derive(Debug, Clone)]
pub struct CompareOutcome {
    pub entries: Vec<LabeledResult>,
    /// Paired t-test of each rule against the first; `None` for the
    /// reference row itself.
    pub t_tests: Vec<Option<TTestResult>>,
}

/// The aggregation rule a scenario runs, resolved from config.
#[derive(Debug, Clone)]
pub enum AggregatorChoice {
    Baseline { rule: String, cfg: BaselineConfig },
    Hra(HraConfig),
}

impl AggregatorChoice {
    pub fn from_config(cfg: &ScenarioConfig) -> Self {
        if cfg.aggregator.rule == "hra" {
            let mut hra = cfg.hra;
            hra.geomed = cfg.geomed;
            AggregatorChoice::Hra(hra)
        } else {
            AggregatorChoice::Baseline {
                rule: cfg.aggregator.rule.clone(),
                cfg: cfg.baseline_config(),
            }
        }
    }

    pub fn is_hra(&self) -> bool {
        matches!(self, AggregatorChoice::Hra(_))
    }
}

/// Data made available to every run of an experiment. CSV sources are
/// loaded and preprocessed once; synthetic sources regenerate per run.
pub enum PreparedData {
    Synthetic(crate::data::SyntheticSpec),
    Fixed {
        train: Arc<FeatureMatrix>,
        test: Arc<FeatureMatrix>,
    },
}

pub fn prepare_data(cfg: &ScenarioConfig) -> Result<PreparedData> {
    match cfg.data.source {
        DataSourceKind::Synthetic => Ok(PreparedData::Synthetic(cfg.data.synthetic_spec())),
        DataSourceKind::Csv => {
            let train_path = cfg
                .data
                .train_path
                .as_ref()
                .ok_or_else(|| Error::config("data.train_path is required"))?;
            let test_path = cfg
                .data
                .test_path
                .as_ref()
                .ok_or_else(|| Error::config("data.test_path is required"))?;
            let positive = cfg.data.positive_label_set();
            let mut train_raw = load_csv(train_path, &cfg.data.label_column, &positive)?;
            let mut test_raw = load_csv(test_path, &cfg.data.label_column, &positive)?;
            train_raw.negative_labels = cfg.data.negative_label_set();
            test_raw.negative_labels = cfg.data.negative_label_set();
            let (train, test) = preprocess_pair(&train_raw, &test_raw)?;
            Ok(PreparedData::Fixed {
                train: Arc::new(train),
                test: Arc::new(test),
            })
        }
    }
}

impl PreparedData {
    fn for_run(&self, master: u64, run: u64) -> Result<(Arc<FeatureMatrix>, Arc<FeatureMatrix>)> {
        match self {
            PreparedData::Fixed { train, test } => Ok((Arc::clone(train), Arc::clone(test))),
            PreparedData::Synthetic(spec) => {
                let seed = sub_seed(master, &[tag::DATA, run]);
                let (train, test) = generate_synthetic(spec, seed)?;
                Ok((Arc::new(train), Arc::new(test)))
            }
        }
    }
}

/// One client's local dataset for a run, labels already flipped when the
/// roster says so.
pub struct ClientData {
    pub x: Array2<f64>,
    pub y: Array1<f64>,
}

/// Evaluate a global model on the test set at the fixed threshold.
pub fn evaluate_model(params: &ModelParams, test: &FeatureMatrix) -> Result<EvalMetrics> {
    let probs = predict_proba(params, &test.x)?;
    let probs_slice = probs.as_slice().expect("contiguous");
    let labels_slice = test.y.as_slice().expect("contiguous");
    let counts = confusion(probs_slice, labels_slice, PREDICTION_THRESHOLD)?;
    Ok(EvalMetrics {
        accuracy: counts.accuracy(),
        precision: counts.precision(),
        recall: counts.recall(),
        f1: counts.f1(),
        roc_auc: roc_auc(probs_slice, labels_slice)?,
    })
}

/// One communication round: parallel local training from the shared
/// global model, post-training attacks per the roster, then aggregation.
/// Returns the next global model, the (possibly updated) reputation
/// state, and HRA diagnostics when that rule is active.
#[allow(clippy::too_many_arguments)]
pub fn run_round(
    global: &ModelParams,
    clients: &[ClientData],
    roster: &ClientRoster,
    train_cfg: &TrainConfig,
    attack_cfg: &AttackConfig,
    aggregator: &AggregatorChoice,
    hra_state: &ReputationState,
    master: u64,
    run: u64,
    round: usize,
) -> Result<(ModelParams, ReputationState, Option<HraDiagnostics>)> {
    let lr = lr_schedule(train_cfg.eta0, train_cfg.gamma, round);

    let params: Vec<ModelParams> = clients
        .par_iter()
        .enumerate()
        .map(|(id, data)| {
            let kind = roster.kind(id);
            let local = train_local(global, &data.x, &data.y, train_cfg, lr)?;
            let stream_id = if kind == AttackKind::Sybil && attack_cfg.sybil_collude {
                tag::SYBIL_SHARED
            } else {
                id as u64
            };
            let mut rng = stream(master, &[tag::ATTACK, run, round as u64, stream_id]);
            apply_post_training_attack(kind, global, &local, attack_cfg, &mut rng)
        })
        .collect::<Result<_>>()?;

    let updates = UpdateSet::new((0..clients.len()).collect(), params)?;
    match aggregator {
        AggregatorChoice::Baseline { rule, cfg } => {
            let result = aggregate(rule, &updates, cfg)?;
            Ok((result.params, hra_state.clone(), None))
        }
        AggregatorChoice::Hra(cfg) => {
            let (params, next_state, diag) = aggregate_hra(&updates, hra_state, cfg)?;
            Ok((params, next_state, Some(diag)))
        }
    }
}

/// Execute a full run: zero-initialized global model, R rounds of
/// train/attack/aggregate, evaluation on the held-out test set after each
/// round.
pub fn run_simulation(
    cfg: &ScenarioConfig,
    data: &PreparedData,
    run_index: usize,
) -> Result<RunResult> {
    let master = cfg.seed;
    let run = run_index as u64;
    let (train, test) = data.for_run(master, run)?;

    let partition_seed = sub_seed(master, &[tag::PARTITION, run]);
    let plan = match cfg.partition.mode {
        PartitionModeKind::Uniform => {
            partition_uniform(train.n_samples(), cfg.clients, partition_seed)?
        }
        PartitionModeKind::Dirichlet => {
            partition_dirichlet(&train.y, cfg.clients, cfg.partition.alpha, partition_seed)?
        }
    };

    let roster_seed = sub_seed(master, &[tag::ROSTER, run]);
    let roster = assign_attacks(
        cfg.clients,
        cfg.attack.malicious_fraction,
        &cfg.attack.kinds,
        roster_seed,
    )?;

    let clients: Vec<ClientData> = plan
        .assignments
        .iter()
        .enumerate()
        .map(|(id, indices)| {
            let subset = train.subset(indices);
            let y = if roster.kind(id) == AttackKind::LabelFlipping {
                flip_labels(&subset.y)
            } else {
                subset.y
            };
            ClientData { x: subset.x, y }
        })
        .collect();

    let aggregator = AggregatorChoice::from_config(cfg);
    let attack_cfg = cfg.attack.attack_config();
    let fingerprint = fingerprint(&train, &test, &plan, &roster);

    let mut global = ModelParams::zeros(train.n_features());
    let mut state = ReputationState::default();
    let mut rounds = Vec::with_capacity(cfg.rounds);

    for round in 0..cfg.rounds {
        let (next_global, next_state, diag) = run_round(
            &global,
            &clients,
            &roster,
            &cfg.train,
            &attack_cfg,
            &aggregator,
            &state,
            master,
            run,
            round,
        )?;
        global = next_global;
        state = next_state;

        let metrics = evaluate_model(&global, &test)?;
        let (mean_anomaly, mean_reputation, snapshot) = match (&aggregator, &diag) {
            (AggregatorChoice::Hra(hra_cfg), Some(d)) => {
                let mean_delta = d.anomaly_distances.iter().sum::<f64>()
                    / d.anomaly_distances.len() as f64;
                match hra_cfg.variant {
                    crate::hra::HraVariant::AnomalyOnly => (Some(mean_delta), None, None),
                    _ => (
                        Some(mean_delta),
                        Some(state.mean_reputation()),
                        Some(state.reputations.clone()),
                    ),
                }
            }
            _ => (None, None, None),
        };

        rounds.push(RoundRecord {
            round,
            metrics,
            mean_anomaly_distance: mean_anomaly,
            mean_reputation,
            reputation_snapshot: snapshot,
            lr: lr_schedule(cfg.train.eta0, cfg.train.gamma, round),
            global: global.clone(),
        });
    }

    Ok(RunResult {
        run_index,
        final_params: global,
        rounds,
        data_fingerprint: fingerprint,
    })
}

/// Run the scenario `cfg.runs` times (in parallel) and collect results.
pub fn run_experiment(cfg: &ScenarioConfig) -> Result<ExperimentResult> {
    let data = prepare_data(cfg)?;
    let runs: Vec<RunResult> = (0..cfg.runs)
        .into_par_iter()
        .map(|run_index| run_simulation(cfg, &data, run_index))
        .collect::<Result<_>>()?;
    Ok(ExperimentResult { runs })
}

/// Run the same scenario under each rule (identical data, partitions,
/// rosters, and streams) and paired-t-test every rule against the first.
pub fn compare_aggregators(cfg: &ScenarioConfig, rules: &[String]) -> Result<CompareOutcome> {
    if rules.len() < 2 {
        return Err(Error::config("compare requires at least 2 rules"));
    }
    let mut seen = std::collections::BTreeSet::new();
    for rule in rules {
        if !seen.insert(rule) {
            return Err(Error::config(format!("duplicate rule entry '{rule}'")));
        }
    }

    let mut entries = Vec::with_capacity(rules.len());
    for rule in rules {
        let mut rule_cfg = cfg.clone();
        rule_cfg.aggregator.rule = rule.clone();
        rule_cfg.resolve_defaults();
        rule_cfg.validate()?;
        entries.push(LabeledResult {
            label: rule.clone(),
            result: run_experiment(&rule_cfg)?,
        });
    }

    let reference = entries[0].result.final_accuracies();
    let mut t_tests = vec![None];
    for entry in &entries[1..] {
        t_tests.push(Some(paired_t_test(
            &reference,
            &entry.result.final_accuracies(),
        )?));
    }
    Ok(CompareOutcome { entries, t_tests })
}

fn sweep_rows(entries: &[LabeledResult]) -> Vec<SweepRow> {
    let baseline_mean = entries[0].result.final_accuracy_summary().0;
    entries
        .iter()
        .map(|entry| {
            let (mean, std, stderr) = entry.result.final_accuracy_summary();
            SweepRow {
                label: entry.label.clone(),
                mean,
                std,
                stderr,
                change_pp: (mean - baseline_mean) * 100.0,
            }
        })
        .collect()
}

/// One experiment per (t_low, t_high) pair; the first pair is the
/// baseline for the change column.
pub fn sweep_thresholds(cfg: &ScenarioConfig, pairs: &[[f64; 2]]) -> Result<SweepOutcome> {
    if pairs.is_empty() {
        return Err(Error::config("sweep.thresholds must list at least one pair"));
    }
    if cfg.aggregator.rule != "hra" {
        return Err(Error::config(
            "sweep-thresholds requires aggregator.rule = \"hra\"",
        ));
    }
    let mut entries = Vec::with_capacity(pairs.len());
    for [t_low, t_high] in pairs {
        let mut point = cfg.clone();
        point.hra.t_low = *t_low;
        point.hra.t_high = *t_high;
        point.validate()?;
        entries.push(LabeledResult {
            label: format!("hra[t_low={t_low},t_high={t_high}]"),
            result: run_experiment(&point)?,
        });
    }
    let rows = sweep_rows(&entries);
    Ok(SweepOutcome { entries, rows })
}

/// One experiment per initial learning rate; the first entry is the
/// baseline for the change column.
pub fn sweep_learning_rates(cfg: &ScenarioConfig, rates: &[f64]) -> Result<SweepOutcome> {
    if rates.is_empty() {
        return Err(Error::config(
            "sweep.learning_rates must list at least one rate",
        ));
    }
    let mut entries = Vec::with_capacity(rates.len());
    for eta0 in rates {
        let mut point = cfg.clone();
        point.train.eta0 = *eta0;
        point.validate()?;
        entries.push(LabeledResult {
            label: format!("{}[eta0={eta0}]", cfg.aggregator.rule),
            result: run_experiment(&point)?,
        });
    }
    let rows = sweep_rows(&entries);
    Ok(SweepOutcome { entries, rows })
}

/// Run the full mechanism and both single-component variants; the full
/// variant is the baseline for the drop column.
pub fn ablate_synergy(cfg: &ScenarioConfig) -> Result<SweepOutcome> {
    use crate::hra::HraVariant;
    if cfg.aggregator.rule != "hra" {
        return Err(Error::config(
            "ablate-synergy requires aggregator.rule = \"hra\"",
        ));
    }
    let mut entries = Vec::with_capacity(3);
    for variant in [
        HraVariant::Full,
        HraVariant::AnomalyOnly,
        HraVariant::ReputationOnly,
    ] {
        let mut point = cfg.clone();
        point.hra.variant = variant;
        entries.push(LabeledResult {
            label: format!("hra[variant={}]", variant.name()),
            result: run_experiment(&point)?,
        });
    }
    let rows = sweep_rows(&entries);
    Ok(SweepOutcome { entries, rows })
}

/// Hash of everything a run consumes besides the aggregation rule.
fn fingerprint(
    train: &FeatureMatrix,
    test: &FeatureMatrix,
    plan: &PartitionPlan,
    roster: &ClientRoster,
) -> String {
    let mut hasher = Sha256::new();
    for v in train.x.iter().chain(train.y.iter()) {
        hasher.update(v.to_le_bytes());
    }
    for v in test.x.iter().chain(test.y.iter()) {
        hasher.update(v.to_le_bytes());
    }
    for part in &plan.assignments {
        hasher.update((part.len() as u64).to_le_bytes());
        for &i in part {
            hasher.update((i as u64).to_le_bytes());
        }
    }
    for kind in &roster.kinds {
        hasher.update([*kind as u8]);
    }
    let digest = hasher.finalize();
    digest[..8].iter().map(|b| format!("{b:02x}")).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::ScenarioConfig;

    fn small_cfg() -> ScenarioConfig {
        let mut cfg = ScenarioConfig::default();
        cfg.clients = 4;
        cfg.rounds = 3;
        cfg.runs = 2;
        cfg.data.train_samples = 400;
        cfg.data.test_samples = 200;
        cfg.data.features = 5;
        cfg.train.epochs = 4;
        cfg.resolve_defaults();
        cfg.validate().unwrap();
        cfg
    }

    #[test]
    fn test_single_benign_client_round_equals_local_training() {
        let mut cfg = small_cfg();
        cfg.clients = 1;
        cfg.runs = 1;
        cfg.aggregator.rule = "simple_mean".into();
        cfg.partition.mode = PartitionModeKind::Uniform;
        cfg.resolve_defaults();

        let data = prepare_data(&cfg).unwrap();
        let run = run_simulation(&cfg, &data, 0).unwrap();

        // Reproduce round 0 by hand: the single client's local training
        // output is the aggregate.
        let (train, _) = data.for_run(cfg.seed, 0).unwrap();
        let seed = sub_seed(cfg.seed, &[tag::PARTITION, 0]);
        let plan = partition_uniform(train.n_samples(), 1, seed).unwrap();
        let subset = train.subset(&plan.assignments[0]);
        let lr = lr_schedule(cfg.train.eta0, cfg.train.gamma, 0);
        let expected = train_local(
            &ModelParams::zeros(train.n_features()),
            &subset.x,
            &subset.y,
            &cfg.train,
            lr,
        )
        .unwrap();
        assert_eq!(run.rounds[0].global, expected);
    }

    #[test]
    fn test_run_produces_expected_round_count_and_ranges() {
        let cfg = small_cfg();
        let data = prepare_data(&cfg).unwrap();
        let run = run_simulation(&cfg, &data, 0).unwrap();
        assert_eq!(run.rounds.len(), 3);
        for record in &run.rounds {
            let m = &record.metrics;
            for v in [m.accuracy, m.precision, m.recall, m.f1, m.roc_auc] {
                assert!((0.0..=1.0).contains(&v), "metric {v} out of range");
            }
            let delta = record.mean_anomaly_distance.unwrap();
            assert!(delta >= 0.0 && delta.is_finite());
            assert!(record.lr > 0.0);
        }
    }

    #[test]
    fn test_simulation_deterministic() {
        let cfg = small_cfg();
        let data = prepare_data(&cfg).unwrap();
        let a = run_simulation(&cfg, &data, 0).unwrap();
        let b = run_simulation(&cfg, &data, 0).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn test_runs_differ_by_index() {
        let cfg = small_cfg();
        let data = prepare_data(&cfg).unwrap();
        let a = run_simulation(&cfg, &data, 0).unwrap();
        let b = run_simulation(&cfg, &data, 1).unwrap();
        assert_ne!(a.final_params, b.final_params);
    }

    #[test]
    fn test_experiment_deterministic_and_counts() {
        let cfg = small_cfg();
        let a = run_experiment(&cfg).unwrap();
        let b = run_experiment(&cfg).unwrap();
        assert_eq!(a.runs.len(), 2);
        assert_eq!(a, b);
        assert_eq!(a.final_accuracies().len(), 2);
    }

    #[test]
    fn test_single_run_experiment_zero_std() {
        let mut cfg = small_cfg();
        cfg.runs = 1;
        let result = run_experiment(&cfg).unwrap();
        let (_, std, stderr) = result.final_accuracy_summary();
        assert_eq!(std, 0.0);
        assert_eq!(stderr, 0.0);
    }

    #[test]
    fn test_benign_synthetic_reaches_high_accuracy() {
        let mut cfg = small_cfg();
        cfg.rounds = 10;
        cfg.runs = 5;
        cfg.data.train_samples = 2000;
        cfg.data.test_samples = 1000;
        let result = run_experiment(&cfg).unwrap();
        let (mean, _, _) = result.final_accuracy_summary();
        assert!(mean >= 0.95, "benign accuracy {mean}");
    }

    #[test]
    fn test_compare_shares_data_and_pairs_results() {
        let mut cfg = small_cfg();
        cfg.attack.malicious_fraction = 0.25;
        cfg.attack.kinds = vec![AttackKind::SignFlipping];
        let outcome = compare_aggregators(
            &cfg,
            &["hra".to_string(), "simple_mean".to_string(), "median".to_string()],
        )
        .unwrap();
        assert_eq!(outcome.entries.len(), 3);
        assert!(outcome.t_tests[0].is_none());
        assert!(outcome.t_tests[1].is_some());

        // Cross-rule pairing: identical fingerprints per run.
        for run in 0..cfg.runs {
            let fp: Vec<&str> = outcome
                .entries
                .iter()
                .map(|e| e.result.runs[run].data_fingerprint.as_str())
                .collect();
            assert!(fp.windows(2).all(|w| w[0] == w[1]), "fingerprints {fp:?}");
        }
    }

    #[test]
    fn test_compare_rejects_duplicates_and_short_lists() {
        let cfg = small_cfg();
        assert!(compare_aggregators(&cfg, &["hra".to_string()]).is_err());
        assert!(
            compare_aggregators(&cfg, &["hra".to_string(), "hra".to_string()]).is_err()
        );
    }

    #[test]
    fn test_threshold_sweep_baseline_row_zero_change() {
        let cfg = small_cfg();
        let outcome = sweep_thresholds(&cfg, &[[3.0, 7.0], [1.0, 2.0]]).unwrap();
        assert_eq!(outcome.rows.len(), 2);
        assert_eq!(outcome.rows[0].change_pp, 0.0);
        assert!(outcome.rows[0].label.contains("t_low=3"));
    }

    #[test]
    fn test_threshold_sweep_single_pair() {
        let cfg = small_cfg();
        let outcome = sweep_thresholds(&cfg, &[[3.0, 7.0]]).unwrap();
        assert_eq!(outcome.rows.len(), 1);
    }

    #[test]
    fn test_lr_sweep_rows() {
        let mut cfg = small_cfg();
        cfg.runs = 1;
        cfg.rounds = 2;
        let outcome = sweep_learning_rates(&cfg, &[0.01, 0.05, 0.1, 0.2]).unwrap();
        assert_eq!(outcome.rows.len(), 4);
        assert_eq!(outcome.rows[0].change_pp, 0.0);
    }

    #[test]
    fn test_ablation_emits_three_variants() {
        let mut cfg = small_cfg();
        cfg.runs = 1;
        cfg.rounds = 2;
        let outcome = ablate_synergy(&cfg).unwrap();
        assert_eq!(outcome.entries.len(), 3);
        assert_eq!(outcome.rows[0].change_pp, 0.0);
        assert!(outcome.rows[1].label.contains("anomaly_only"));
        assert!(outcome.rows[2].label.contains("reputation_only"));
    }

    #[test]
    fn test_ablation_requires_hra() {
        let mut cfg = small_cfg();
        cfg.aggregator.rule = "median".into();
        assert!(ablate_synergy(&cfg).is_err());
    }

    #[test]
    fn test_all_sign_flipping_clients_trigger_fallback_round_one() {
        let mut cfg = small_cfg();
        cfg.runs = 1;
        cfg.rounds = 1;
        cfg.attack.malicious_fraction = 1.0;
        cfg.attack.kinds = vec![AttackKind::SignFlipping];
        cfg.attack.sign_amplification = 50.0;
        cfg.hra.t_low = 0.05;
        cfg.hra.t_high = 0.1;

        let data = prepare_data(&cfg).unwrap();
        let clients_data: Vec<ClientData>;
        // Run one round manually to inspect diagnostics.
        let (train, _) = data.for_run(cfg.seed, 0).unwrap();
        let pseed = sub_seed(cfg.seed, &[tag::PARTITION, 0]);
        let plan = partition_dirichlet(&train.y, cfg.clients, cfg.partition.alpha, pseed).unwrap();
        let rseed = sub_seed(cfg.seed, &[tag::ROSTER, 0]);
        let roster = assign_attacks(cfg.clients, 1.0, &cfg.attack.kinds, rseed).unwrap();
        clients_data = plan
            .assignments
            .iter()
            .map(|idx| {
                let s = train.subset(idx);
                ClientData { x: s.x, y: s.y }
            })
            .collect();
        let mut hra = cfg.hra;
        hra.geomed = cfg.geomed;
        let (_, _, diag) = run_round(
            &ModelParams::zeros(train.n_features()),
            &clients_data,
            &roster,
            &cfg.train,
            &cfg.attack.attack_config(),
            &AggregatorChoice::Hra(hra),
            &ReputationState::default(),
            cfg.seed,
            0,
            0,
        )
        .unwrap();
        let diag = diag.unwrap();
        assert!(diag.trust_weights.iter().all(|&p| p == 0.0));
        assert!(diag.fallback_used);
    }
}
