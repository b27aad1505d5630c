//! Command-line entry point for the federated-learning simulator.

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Parser, Subcommand};

use fedsim_core::config::{DataSourceKind, ScenarioConfig};
use fedsim_core::data::{generate_synthetic, write_csv};
use fedsim_core::report::{self, summary_rows, summary_rows_with_tests, ExtraTable, SummaryRow};
use fedsim_core::rng::{sub_seed, tag};
use fedsim_core::simulation::{
    ablate_synergy, compare_aggregators, run_experiment, sweep_learning_rates, sweep_thresholds,
    LabeledResult,
};

#[derive(Parser)]
#[command(
    name = "fedsim",
    version,
    about = "Deterministic federated-learning simulator with robust aggregation"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Scenario config file (TOML).
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,

    /// Output directory root.
    #[arg(long, global = true, value_name = "DIR", default_value = "results")]
    out: PathBuf,

    /// Override a config key, e.g. --set hra.t_low=5.0 (repeatable).
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    set: Vec<String>,

    /// Override the master seed.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Override the number of independent runs.
    #[arg(long, global = true)]
    runs: Option<usize>,

    /// Suppress per-experiment summary lines.
    #[arg(long, global = true, conflicts_with = "verbose")]
    quiet: bool,

    /// Also print per-run final accuracies.
    #[arg(long, global = true)]
    verbose: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Run the configured scenario.
    Run,
    /// Run the scenario once per rule in [compare].rules and t-test each
    /// rule against the first.
    Compare,
    /// Re-run the scenario for every (t_low, t_high) pair in
    /// [sweep].thresholds.
    SweepThresholds,
    /// Re-run the scenario for every initial learning rate in
    /// [sweep].learning_rates.
    SweepLr,
    /// Run the full aggregator plus its anomaly-only and reputation-only
    /// variants.
    AblateSynergy,
    /// Write the configured synthetic dataset out as train/test CSVs.
    GenData,
    /// Parse and validate the config; write nothing.
    ValidateConfig,
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Run => "run",
            Command::Compare => "compare",
            Command::SweepThresholds => "sweep-thresholds",
            Command::SweepLr => "sweep-lr",
            Command::AblateSynergy => "ablate-synergy",
            Command::GenData => "gen-data",
            Command::ValidateConfig => "validate-config",
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::FAILURE
        }
    }
}

fn execute(cli: Cli) -> anyhow::Result<()> {
    let config_path = cli.config.clone().context("--config <path> is required")?;

    let mut overrides = Vec::new();
    for entry in &cli.set {
        let (key, value) = entry
            .split_once('=')
            .with_context(|| format!("--set expects KEY=VALUE, got '{entry}'"))?;
        overrides.push((key.to_string(), value.to_string()));
    }
    if let Some(seed) = cli.seed {
        overrides.push(("seed".to_string(), seed.to_string()));
    }
    if let Some(runs) = cli.runs {
        overrides.push(("runs".to_string(), runs.to_string()));
    }

    let cfg = ScenarioConfig::parse_file(&config_path, &overrides)?;
    let stem = config_path
        .file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or("experiment")
        .to_string();
    let name = format!("{stem}-{}", cli.command.name());

    match &cli.command {
        Command::ValidateConfig => {
            if !cli.quiet {
                println!("{}: config OK", config_path.display());
            }
            Ok(())
        }
        Command::Run => {
            let result = run_experiment(&cfg)?;
            let entries = vec![LabeledResult {
                label: cfg.aggregator.rule.clone(),
                result,
            }];
            let rows = summary_rows(&entries);
            let dir =
                report::write_experiment(&cli.out, &name, &cfg, "run", &entries, &rows, None)?;
            print_summaries(&cli, &entries, &rows, &dir);
            Ok(())
        }
        Command::Compare => {
            let rules = cfg
                .compare
                .as_ref()
                .map(|c| c.rules.clone())
                .unwrap_or_default();
            if rules.len() < 2 {
                bail!("compare requires [compare].rules with at least 2 entries");
            }
            let outcome = compare_aggregators(&cfg, &rules)?;
            let rows = summary_rows_with_tests(&outcome.entries, &outcome.t_tests);
            let dir = report::write_experiment(
                &cli.out,
                &name,
                &cfg,
                "compare",
                &outcome.entries,
                &rows,
                None,
            )?;
            print_summaries(&cli, &outcome.entries, &rows, &dir);
            Ok(())
        }
        Command::SweepThresholds => {
            let pairs = cfg
                .sweep
                .as_ref()
                .and_then(|s| s.thresholds.clone())
                .context("sweep-thresholds requires [sweep].thresholds")?;
            let outcome = sweep_thresholds(&cfg, &pairs)?;
            let rows = summary_rows(&outcome.entries);
            let dir = report::write_experiment(
                &cli.out,
                &name,
                &cfg,
                "sweep-thresholds",
                &outcome.entries,
                &rows,
                Some(ExtraTable {
                    filename: "sweep.csv",
                    change_column: "change_pp",
                    rows: &outcome.rows,
                }),
            )?;
            print_summaries(&cli, &outcome.entries, &rows, &dir);
            Ok(())
        }
        Command::SweepLr => {
            let rates = cfg
                .sweep
                .as_ref()
                .and_then(|s| s.learning_rates.clone())
                .context("sweep-lr requires [sweep].learning_rates")?;
            let outcome = sweep_learning_rates(&cfg, &rates)?;
            let rows = summary_rows(&outcome.entries);
            let dir = report::write_experiment(
                &cli.out,
                &name,
                &cfg,
                "sweep-lr",
                &outcome.entries,
                &rows,
                Some(ExtraTable {
                    filename: "sweep.csv",
                    change_column: "change_pp",
                    rows: &outcome.rows,
                }),
            )?;
            print_summaries(&cli, &outcome.entries, &rows, &dir);
            Ok(())
        }
        Command::AblateSynergy => {
            let outcome = ablate_synergy(&cfg)?;
            let rows = summary_rows(&outcome.entries);
            let dir = report::write_experiment(
                &cli.out,
                &name,
                &cfg,
                "ablate-synergy",
                &outcome.entries,
                &rows,
                Some(ExtraTable {
                    filename: "ablation.csv",
                    change_column: "drop_vs_full_pp",
                    rows: &outcome.rows,
                }),
            )?;
            print_summaries(&cli, &outcome.entries, &rows, &dir);
            Ok(())
        }
        Command::GenData => {
            if cfg.data.source != DataSourceKind::Synthetic {
                bail!("gen-data requires data.source = \"synthetic\"");
            }
            // Same derivation as a synthetic scenario's run 0, so the
            // emitted CSVs reproduce that run's data exactly.
            let seed = sub_seed(cfg.seed, &[tag::DATA, 0]);
            let (train, test) = generate_synthetic(&cfg.data.synthetic_spec(), seed)?;
            let dir = cli.out.join(&name);
            std::fs::create_dir_all(&dir)
                .with_context(|| format!("creating {}", dir.display()))?;
            write_csv(&train, &dir.join("train.csv"))?;
            write_csv(&test, &dir.join("test.csv"))?;
            report::write_manifest(
                &dir.join("manifest.toml"),
                &cfg,
                fedsim_core::config::ManifestMeta {
                    artifact_version: env!("CARGO_PKG_VERSION").to_string(),
                    subcommand: "gen-data".to_string(),
                    experiment: name.clone(),
                },
            )?;
            if !cli.quiet {
                println!(
                    "{name}: wrote {} train rows, {} test rows to {}",
                    train.n_samples(),
                    test.n_samples(),
                    dir.display()
                );
            }
            Ok(())
        }
    }
}

fn print_summaries(
    cli: &Cli,
    entries: &[LabeledResult],
    rows: &[SummaryRow],
    dir: &std::path::Path,
) {
    if cli.quiet {
        return;
    }
    for row in rows {
        match row.p_value {
            Some(p) => println!(
                "{}: final accuracy {:.4} \u{b1} {:.4} (p={:.3e} vs reference)",
                row.label, row.mean, row.std, p
            ),
            None => println!(
                "{}: final accuracy {:.4} \u{b1} {:.4}",
                row.label, row.mean, row.std
            ),
        }
    }
    if cli.verbose {
        for entry in entries {
            let accs: Vec<String> = entry
                .result
                .final_accuracies()
                .iter()
                .map(|a| format!("{a:.4}"))
                .collect();
            println!(
                "  {} per-run final accuracies: [{}]",
                entry.label,
                accs.join(", ")
            );
        }
    }
    println!("results in {}", dir.display());
}
