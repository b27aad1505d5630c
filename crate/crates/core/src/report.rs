//! Result serialization: per-round CSV, summary CSV, sweep/ablation
//! tables, and the run manifest.
//!
//! Files are written with fixed headers and shortest-round-trip float
//! formatting, so a re-run of the same experiment emits byte-identical
//! output.

use std::fs;
use std::path::{Path, PathBuf};

use crate::config::{ManifestMeta, ScenarioConfig};
use crate::error::{Error, Result};
use crate::simulation::{LabeledResult, SweepRow};
use crate::stats::TTestResult;

pub const ROUNDS_HEADER: &str =
    "run,round,aggregator,accuracy,precision,recall,f1,roc_auc,mean_anomaly_distance,mean_reputation,lr";
pub const SUMMARY_HEADER: &str =
    "aggregator,final_acc_mean,final_acc_std,final_acc_stderr,p_value_vs_reference";

/// Conventions note emitted above the rounds header.
const ROUNDS_COMMENT: &str = "# precision and recall are 0 when their denominators are 0 (F1 likewise); mean_anomaly_distance and mean_reputation are empty unless the aggregator maintains them";

/// One row of summary.csv.
#[derive(Debug, Clone)]
pub struct SummaryRow {
    pub label: String,
    pub mean: f64,
    pub std: f64,
    pub stderr: f64,
    pub p_value: Option<f64>,
}

/// Summary rows for plain experiments (no reference comparison).
pub fn summary_rows(entries: &[LabeledResult]) -> Vec<SummaryRow> {
    entries
        .iter()
        .map(|entry| {
            let (mean, std, stderr) = entry.result.final_accuracy_summary();
            SummaryRow {
                label: entry.label.clone(),
                mean,
                std,
                stderr,
                p_value: None,
            }
        })
        .collect()
}

/// Summary rows for a comparison: each non-reference row carries its
/// paired-t-test p-value against the first entry.
pub fn summary_rows_with_tests(
    entries: &[LabeledResult],
    t_tests: &[Option<TTestResult>],
) -> Vec<SummaryRow> {
    entries
        .iter()
        .zip(t_tests)
        .map(|(entry, test)| {
            let (mean, std, stderr) = entry.result.final_accuracy_summary();
            SummaryRow {
                label: entry.label.clone(),
                mean,
                std,
                stderr,
                p_value: test.map(|t| t.p_value),
            }
        })
        .collect()
}

fn fmt(v: f64) -> String {
    v.to_string()
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(fmt).unwrap_or_default()
}

/// Write the per-round CSV for one or more labeled experiments.
pub fn write_rounds_csv(path: &Path, entries: &[LabeledResult]) -> Result<()> {
    let mut out = String::new();
    out.push_str(ROUNDS_COMMENT);
    out.push('\n');
    out.push_str(ROUNDS_HEADER);
    out.push('\n');
    for entry in entries {
        for run in &entry.result.runs {
            for record in &run.rounds {
                let m = &record.metrics;
                out.push_str(&format!(
                    "{},{},{},{},{},{},{},{},{},{},{}\n",
                    run.run_index,
                    record.round,
                    entry.label,
                    fmt(m.accuracy),
                    fmt(m.precision),
                    fmt(m.recall),
                    fmt(m.f1),
                    fmt(m.roc_auc),
                    fmt_opt(record.mean_anomaly_distance),
                    fmt_opt(record.mean_reputation),
                    fmt(record.lr),
                ));
            }
        }
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

pub fn write_summary_csv(path: &Path, rows: &[SummaryRow]) -> Result<()> {
    let mut out = String::new();
    out.push_str(SUMMARY_HEADER);
    out.push('\n');
    for row in rows {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            row.label,
            fmt(row.mean),
            fmt(row.std),
            fmt(row.stderr),
            fmt_opt(row.p_value),
        ));
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

/// Write a sweep or ablation table; `change_column` names the final
/// column (e.g. `change_pp` or `drop_vs_full_pp`).
pub fn write_sweep_csv(path: &Path, rows: &[SweepRow], change_column: &str) -> Result<()> {
    let mut out = String::new();
    out.push_str(&format!(
        "configuration,final_acc_mean,final_acc_std,final_acc_stderr,{change_column}\n"
    ));
    for row in rows {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            row.label,
            fmt(row.mean),
            fmt(row.std),
            fmt(row.stderr),
            fmt(row.change_pp),
        ));
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

pub fn write_manifest(path: &Path, cfg: &ScenarioConfig, meta: ManifestMeta) -> Result<()> {
    let text = cfg.to_manifest_toml(meta)?;
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Extra table carried next to rounds/summary/manifest.
pub struct ExtraTable<'a> {
    pub filename: &'a str,
    pub change_column: &'a str,
    pub rows: &'a [SweepRow],
}

/// Assemble the full output directory for one experiment:
/// `<out>/<name>/{rounds.csv, summary.csv, manifest.toml}` plus an
/// optional sweep/ablation table. Returns the experiment directory.
pub fn write_experiment(
    out_root: &Path,
    name: &str,
    cfg: &ScenarioConfig,
    subcommand: &str,
    entries: &[LabeledResult],
    summary: &[SummaryRow],
    extra: Option<ExtraTable<'_>>,
) -> Result<PathBuf> {
    let dir = out_root.join(name);
    fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;

    write_rounds_csv(&dir.join("rounds.csv"), entries)?;
    write_summary_csv(&dir.join("summary.csv"), summary)?;
    if let Some(table) = extra {
        write_sweep_csv(&dir.join(table.filename), table.rows, table.change_column)?;
    }
    write_manifest(
        &dir.join("manifest.toml"),
        cfg,
        ManifestMeta {
            artifact_version: env!("CARGO_PKG_VERSION").to_string(),
            subcommand: subcommand.to_string(),
            experiment: name.to_string(),
        },
    )?;
    Ok(dir)
}
