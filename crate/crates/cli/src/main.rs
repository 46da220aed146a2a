//! `metacog` command-line driver.
//!
//! Exit status: 0 on success, 2 for usage or configuration errors, 3 for I/O
//! failures, 4 for malformed data.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use metacog::benchgen::{self, write_jsonl};
use metacog::harness::{self, ConfigLayers, ExperimentConfig};
use metacog::{Error, ExperimentReport, ParamKey, Result};

#[derive(Parser)]
#[command(name = "metacog", version, about = "Confidence-gated multi-agent routing experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a synthetic benchmark as JSONL.
    Generate(Common),
    /// Run the configured policy for every seed.
    Run(Common),
    /// Run once per value of one parameter.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// theta, lambda or alpha.
        #[arg(long)]
        parameter: String,
        /// Comma-separated values; defaults to the built-in grid.
        #[arg(long, value_delimiter = ',')]
        values: Vec<f64>,
    },
    /// Run the full system and each single-component ablation.
    Ablate(Common),
    /// Recompute a report from a decision log.
    Report {
        /// decisions.jsonl written by `run`.
        #[arg(long)]
        log: PathBuf,
        /// Directory for report.json and the CSV tables.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// Settings shared by the experiment commands. Flags override `--param`,
/// which overrides the config file, which overrides built-in defaults.
#[derive(Args)]
struct Common {
    /// key = value configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Seed; repeat or comma-separate for several.
    #[arg(long, value_delimiter = ',')]
    seed: Vec<u64>,
    /// Output path (a directory, or the JSONL file for `generate`).
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    policy: Option<String>,
    /// KEY=VALUE configuration override; repeatable.
    #[arg(long = "param", value_name = "KEY=VALUE")]
    params: Vec<String>,
}

impl Common {
    fn layers(&self) -> Result<ConfigLayers> {
        let mut layers = ConfigLayers::new();
        if let Some(path) = &self.config {
            layers.merge_file(path)?;
        }
        for p in &self.params {
            layers.merge_override(p)?;
        }
        if !self.seed.is_empty() {
            let list: Vec<String> = self.seed.iter().map(u64::to_string).collect();
            layers.set("seed", list.join(","));
        }
        if let Some(policy) = &self.policy {
            layers.set("policy", policy.as_str());
        }
        if let Some(out) = &self.out {
            layers.set("out", out.display().to_string());
        }
        Ok(layers)
    }

    fn config(&self) -> Result<ExperimentConfig> {
        ExperimentConfig::from_layers(&self.layers()?)
    }
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(|| "-".to_string(), |x| format!("{x:.4}"))
}

fn summary_line(label: &str, r: &ExperimentReport) -> String {
    format!(
        "{label}: accuracy {:.4}  delegation {:.4}  precision {}  ece {}  api_calls {}",
        r.overall_accuracy,
        r.delegation_rate,
        opt(r.delegation_precision),
        opt(r.ece),
        r.total_api_calls
    )
}

fn generate(common: &Common) -> Result<()> {
    let cfg = common.config()?;
    let spec = cfg
        .benchmark
        .spec_for(cfg.seeds[0])
        .ok_or_else(|| Error::Config("generate needs generation settings, not benchmark.path".into()))?;
    let tasks = benchgen::generate(&spec);
    let mut buf = Vec::new();
    write_jsonl(&tasks, &mut buf)?;
    match &cfg.out_dir {
        Some(path) => {
            harness::write_atomic(path, &buf)?;
            eprintln!("wrote {} tasks to {}", tasks.len(), path.display());
            Ok(())
        }
        None => match std::io::stdout().write_all(&buf) {
            // a closed pipe (`| head`) is the reader's choice, not a failure
            Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => Ok(()),
            other => other.map_err(|source| Error::Write {
                path: "<stdout>".into(),
                source,
            }),
        },
    }
}

fn run(common: &Common) -> Result<()> {
    let cfg = common.config()?;
    for r in harness::run(&cfg)? {
        println!("{}", summary_line(&format!("seed {}", r.seed), &r.report));
    }
    Ok(())
}

fn sweep(common: &Common, parameter: &str, values: &[f64]) -> Result<()> {
    let cfg = common.config()?;
    let key: ParamKey = parameter.parse()?;
    let grid = if values.is_empty() {
        harness::default_grid(key).ok_or_else(|| Error::Config(format!("`{parameter}` cannot be swept")))?
    } else {
        values.to_vec()
    };
    println!("{:>10} {:>9} {:>11} {:>10} {:>8}", key.name(), "accuracy", "delegation", "precision", "ece");
    for row in harness::sweep(&cfg, key, &grid)? {
        println!(
            "{:>10} {:>9.4} {:>11.4} {:>10} {:>8}",
            row.value,
            row.accuracy,
            row.delegation_rate,
            opt(row.delegation_precision),
            opt(row.ece)
        );
    }
    Ok(())
}

fn ablate(common: &Common) -> Result<()> {
    let cfg = common.config()?;
    println!("{:<26} {:>9} {:>8} {:>10}", "variant", "accuracy", "delta", "precision");
    for row in harness::ablate(&cfg)? {
        println!(
            "{:<26} {:>9.4} {:>+8.2} {:>10}",
            row.variant,
            row.accuracy,
            row.delta_pct,
            opt(row.delegation_precision)
        );
    }
    Ok(())
}

fn report(log: &Path, out: Option<&Path>) -> Result<()> {
    let r = harness::replay(log)?;
    if let Some(dir) = out {
        harness::write_atomic(&dir.join("report.json"), r.to_json()?.as_bytes())?;
        r.write_csv_tables(dir)?;
    }
    println!("{}", summary_line("replay", &r));
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Generate(c) => generate(c),
        Command::Run(c) => run(c),
        Command::Sweep {
            common,
            parameter,
            values,
        } => sweep(common, parameter, values),
        Command::Ablate(c) => ablate(c),
        Command::Report { log, out } => report(log, out.as_deref()),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.category().exit_code() as u8)
        }
    }
}
