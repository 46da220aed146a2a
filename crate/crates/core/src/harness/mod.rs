//! Experiment driver: loads or generates a benchmark, runs the orchestrator
//! for every configured seed, persists the decision log and derived tables,
//! and supports parameter sweeps, ablations and offline replay.

mod config;

pub use config::{parse_seed_list, BenchmarkSource, ConfigLayers, ExperimentConfig};

use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::agents::AgentSpec;
use crate::benchgen::{self, read_jsonl};
use crate::error::{Error, Result};
use crate::mcu::ParamKey;
use crate::metrics::{build_report, ExperimentReport};
use crate::orchestrator::{Ablations, Orchestrator, Policy, TaskRecord};
use crate::profile::CapabilityProfile;
use crate::task::Task;

/// Writes `bytes` to a sibling temporary file and renames it into place, so
/// readers never observe a partial file. Parent directories are created.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let werr = |source| Error::Write {
        path: path.to_path_buf(),
        source,
    };
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(werr)?;
    }
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    let mut f = File::create(&tmp).map_err(werr)?;
    f.write_all(bytes).map_err(werr)?;
    f.sync_all().map_err(werr)?;
    fs::rename(&tmp, path).map_err(werr)
}

/// Agent id to learned profile, as persisted in `profiles.json`.
pub type ProfileSnapshot = BTreeMap<String, CapabilityProfile<f64>>;

pub fn load_benchmark(path: &Path) -> Result<Vec<Task>> {
    let f = File::open(path).map_err(|source| Error::Read {
        path: path.to_path_buf(),
        source,
    })?;
    let tasks = read_jsonl(BufReader::new(f), path)?;
    if tasks.is_empty() {
        return Err(Error::Config(format!("benchmark `{}` contains no tasks", path.display())));
    }
    Ok(tasks)
}

pub fn load_profiles(path: &Path, roster: &[AgentSpec]) -> Result<Vec<CapabilityProfile<f64>>> {
    let text = fs::read_to_string(path).map_err(|source| Error::Read {
        path: path.to_path_buf(),
        source,
    })?;
    let mut snapshot: ProfileSnapshot = serde_json::from_str(&text)?;
    roster
        .iter()
        .map(|a| {
            snapshot.remove(&a.id).ok_or_else(|| {
                Error::Config(format!("profile snapshot `{}` has no entry for agent `{}`", path.display(), a.id))
            })
        })
        .collect()
}

pub fn write_decision_log(records: &[TaskRecord<f64>], path: &Path) -> Result<()> {
    let mut buf = Vec::new();
    for r in records {
        serde_json::to_writer(&mut buf, r)?;
        buf.push(b'\n');
    }
    write_atomic(path, &buf)
}

pub fn read_decision_log(path: &Path) -> Result<Vec<TaskRecord<f64>>> {
    let f = File::open(path).map_err(|source| Error::Read {
        path: path.to_path_buf(),
        source,
    })?;
    let mut records = Vec::new();
    for (n, line) in BufReader::new(f).lines().enumerate() {
        let line = line.map_err(|source| Error::Read {
            path: path.to_path_buf(),
            source,
        })?;
        if line.trim().is_empty() {
            continue;
        }
        records.push(serde_json::from_str(&line).map_err(|source| Error::Parse {
            path: path.to_path_buf(),
            line: n + 1,
            source,
        })?);
    }
    Ok(records)
}

/// Recomputes the report from a persisted decision log.
pub fn replay(log: &Path) -> Result<ExperimentReport> {
    build_report(&read_decision_log(log)?)
}

/// Everything one seeded run produced.
#[derive(Debug, Clone)]
pub struct SeedRun {
    pub seed: u64,
    pub records: Vec<TaskRecord<f64>>,
    pub report: ExperimentReport,
    pub profiles: ProfileSnapshot,
}

impl SeedRun {
    /// Writes `decisions.jsonl`, `report.json`, `profiles.json` and the CSV
    /// tables into `dir`.
    pub fn persist(&self, dir: &Path) -> Result<()> {
        write_decision_log(&self.records, &dir.join("decisions.jsonl"))?;
        write_atomic(&dir.join("report.json"), self.report.to_json()?.as_bytes())?;
        let mut profiles = serde_json::to_string_pretty(&self.profiles)?;
        profiles.push('\n');
        write_atomic(&dir.join("profiles.json"), profiles.as_bytes())?;
        self.report.write_csv_tables(dir)
    }
}

impl ExperimentConfig {
    /// The benchmark a given run seed sees.
    pub fn tasks_for(&self, seed: u64) -> Result<Vec<Task>> {
        match &self.benchmark {
            BenchmarkSource::File(p) => load_benchmark(p),
            src => Ok(benchgen::generate(&src.spec_for(seed).expect("generated source"))),
        }
    }

    fn initial_profiles(&self) -> Result<Vec<CapabilityProfile<f64>>> {
        match &self.profile_snapshot {
            Some(p) => load_profiles(p, &self.roster),
            None => Ok(vec![CapabilityProfile::uniform(self.initial_profile)?; self.roster.len()]),
        }
    }

    /// Runs one seed in memory.
    pub fn run_seed(&self, seed: u64) -> Result<SeedRun> {
        self.validate()?;
        let tasks = self.tasks_for(seed)?;
        self.run_seed_on(seed, &tasks)
    }

    /// Runs one seed on an explicit task list.
    pub fn run_seed_on(&self, seed: u64, tasks: &[Task]) -> Result<SeedRun> {
        let mut orch = Orchestrator::new(self.roster.clone(), self.params, self.policy, seed)?
            .with_ablations(self.ablations)
            .with_profiles(self.initial_profiles()?)?;
        let records = orch.run(tasks)?;
        let report = build_report(&records)?;
        let profiles = self
            .roster
            .iter()
            .zip(orch.profiles())
            .map(|(a, p)| (a.id.clone(), p.clone()))
            .collect();
        Ok(SeedRun {
            seed,
            records,
            report,
            profiles,
        })
    }
}

/// Runs `f` over `items` on scoped threads; results keep input order.
fn par_map<I: Sync, O: Send>(items: &[I], f: impl Fn(&I) -> Result<O> + Sync) -> Result<Vec<O>> {
    std::thread::scope(|s| {
        let handles: Vec<_> = items.iter().map(|i| s.spawn(|| f(i))).collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("worker thread panicked"))
            .collect()
    })
}

/// Mean and sample standard deviation; `None` for an empty slice.
pub fn mean_std(xs: &[f64]) -> Option<(f64, f64)> {
    if xs.is_empty() {
        return None;
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = if xs.len() > 1 {
        xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    Some((mean, var.sqrt()))
}

const AGGREGATE_METRICS: [&str; 5] = ["accuracy", "delegation_rate", "delegation_precision", "ece", "api_calls"];

fn headline(r: &ExperimentReport) -> [Option<f64>; 5] {
    [
        Some(r.overall_accuracy),
        Some(r.delegation_rate),
        r.delegation_precision,
        r.ece,
        Some(r.total_api_calls as f64),
    ]
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn csv_bytes(rows: &[Vec<String>]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for row in rows {
        w.write_record(row)?;
    }
    w.into_inner().map_err(|e| Error::Write {
        path: "<csv>".into(),
        source: e.into_error(),
    })
}

/// Per-seed headline metrics followed by `mean` and `stddev` rows.
pub fn aggregate_table(runs: &[SeedRun]) -> Vec<Vec<String>> {
    let mut rows = vec![std::iter::once("seed".to_string())
        .chain(AGGREGATE_METRICS.iter().map(|m| m.to_string()))
        .collect::<Vec<_>>()];
    for run in runs {
        rows.push(
            std::iter::once(run.seed.to_string())
                .chain(headline(&run.report).iter().map(|v| opt(*v)))
                .collect(),
        );
    }
    let columns: Vec<Vec<f64>> = (0..AGGREGATE_METRICS.len())
        .map(|k| runs.iter().filter_map(|r| headline(&r.report)[k]).collect())
        .collect();
    let stats: Vec<_> = columns.iter().map(|c| mean_std(c)).collect();
    rows.push(
        std::iter::once("mean".to_string())
            .chain(stats.iter().map(|s| opt(s.map(|s| s.0))))
            .collect(),
    );
    rows.push(
        std::iter::once("stddev".to_string())
            .chain(stats.iter().map(|s| opt(s.map(|s| s.1))))
            .collect(),
    );
    rows
}

/// Runs every configured seed. With an output directory, a single seed
/// writes straight into it; several seeds write `seed-<n>/` subdirectories
/// plus `aggregate.csv`.
pub fn run(config: &ExperimentConfig) -> Result<Vec<SeedRun>> {
    config.validate()?;
    let runs = par_map(&config.seeds, |s| config.run_seed(*s))?;
    if let Some(out) = &config.out_dir {
        if let [only] = runs.as_slice() {
            only.persist(out)?;
        } else {
            for r in &runs {
                r.persist(&out.join(format!("seed-{}", r.seed)))?;
            }
            write_atomic(&out.join("aggregate.csv"), &csv_bytes(&aggregate_table(&runs))?)?;
        }
    }
    Ok(runs)
}

/// One sweep point, averaged over seeds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub parameter: String,
    pub value: f64,
    pub accuracy: f64,
    pub delegation_rate: f64,
    pub delegation_precision: Option<f64>,
    pub ece: Option<f64>,
    pub api_calls: f64,
}

pub const SWEEPABLE: [ParamKey; 3] = [ParamKey::Theta, ParamKey::Lambda, ParamKey::Alpha];

pub fn default_grid(key: ParamKey) -> Option<Vec<f64>> {
    match key {
        ParamKey::Theta => Some(vec![0.3, 0.4, 0.5, 0.6, 0.7]),
        ParamKey::Lambda => Some(vec![0.3, 0.5, 0.6, 0.7, 0.9]),
        ParamKey::Alpha => Some(vec![0.01, 0.05, 0.1, 0.2, 0.3]),
        _ => None,
    }
}

fn mean_of(reports: &[ExperimentReport], k: usize) -> Option<f64> {
    let xs: Vec<f64> = reports.iter().filter_map(|r| headline(r)[k]).collect();
    mean_std(&xs).map(|s| s.0)
}

/// Runs the configuration once per value of `key`. All values are checked
/// before anything runs.
pub fn sweep(config: &ExperimentConfig, key: ParamKey, values: &[f64]) -> Result<Vec<SweepRow>> {
    if !SWEEPABLE.contains(&key) {
        return Err(Error::Config(format!(
            "`{}` cannot be swept; choose theta, lambda or alpha",
            key.name()
        )));
    }
    if values.is_empty() {
        return Err(Error::Config("sweep has no values".into()));
    }
    let variants = values
        .iter()
        .map(|v| {
            let mut c = config.clone();
            c.params = c.params.with(key, *v)?;
            c.out_dir = None;
            Ok(c)
        })
        .collect::<Result<Vec<_>>>()?;
    config.validate()?;

    let rows = par_map(&variants, |c| {
        let reports = config
            .seeds
            .iter()
            .map(|s| Ok(c.run_seed(*s)?.report))
            .collect::<Result<Vec<_>>>()?;
        Ok(SweepRow {
            parameter: key.name().to_string(),
            value: c.params.get(key),
            accuracy: mean_of(&reports, 0).unwrap_or(0.0),
            delegation_rate: mean_of(&reports, 1).unwrap_or(0.0),
            delegation_precision: mean_of(&reports, 2),
            ece: mean_of(&reports, 3),
            api_calls: mean_of(&reports, 4).unwrap_or(0.0),
        })
    })?;

    if let Some(out) = &config.out_dir {
        let mut table = vec![["parameter", "value", "accuracy", "delegation_rate", "delegation_precision", "ece", "api_calls"]
            .map(String::from)
            .to_vec()];
        for r in &rows {
            table.push(vec![
                r.parameter.clone(),
                r.value.to_string(),
                r.accuracy.to_string(),
                r.delegation_rate.to_string(),
                opt(r.delegation_precision),
                opt(r.ece),
                r.api_calls.to_string(),
            ]);
        }
        write_atomic(&out.join("sweep.csv"), &csv_bytes(&table)?)?;
    }
    Ok(rows)
}

/// Named ablation variants: the full system, then each component removed.
pub fn ablation_variants() -> Vec<(&'static str, Ablations)> {
    let full = Ablations::FULL;
    vec![
        ("full", full),
        ("no_self_assessment", Ablations { self_assessment: false, ..full }),
        ("no_adaptive_delegation", Ablations { adaptive_delegation: false, ..full }),
        ("no_boundary_learning", Ablations { boundary_learning: false, ..full }),
        ("no_cross_agent_eval", Ablations { cross_agent_eval: false, ..full }),
        ("no_verbalized_confidence", Ablations { verbalized_confidence: false, ..full }),
    ]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationRow {
    pub variant: String,
    /// Mean over seeds.
    pub accuracy: f64,
    /// Accuracy change against the full system, percentage points.
    pub delta_pct: f64,
    pub delegation_precision: Option<f64>,
    /// Per-seed accuracies in seed order.
    pub seed_accuracy: Vec<f64>,
}

/// Runs the full system and the five single-component ablations under the
/// configured seeds. Requires the metacog policy.
pub fn ablate(config: &ExperimentConfig) -> Result<Vec<AblationRow>> {
    if config.policy != Policy::Metacog {
        return Err(Error::Config(format!(
            "ablations need the metacog policy, not `{}`",
            config.policy
        )));
    }
    config.validate()?;
    let variants = ablation_variants();
    let per_variant = par_map(&variants, |(_, ab)| {
        let mut c = config.clone();
        c.ablations = *ab;
        config
            .seeds
            .iter()
            .map(|s| Ok(c.run_seed(*s)?.report))
            .collect::<Result<Vec<_>>>()
    })?;
    let full_acc = mean_of(&per_variant[0], 0).unwrap_or(0.0);
    let rows: Vec<AblationRow> = variants
        .iter()
        .zip(&per_variant)
        .map(|((name, _), reports)| {
            let accuracy = mean_of(reports, 0).unwrap_or(0.0);
            AblationRow {
                variant: name.to_string(),
                accuracy,
                delta_pct: (accuracy - full_acc) * 100.0,
                delegation_precision: mean_of(reports, 2),
                seed_accuracy: reports.iter().map(|r| r.overall_accuracy).collect(),
            }
        })
        .collect();

    if let Some(out) = &config.out_dir {
        let mut table = vec![["variant", "accuracy", "delta_pct", "delegation_precision"]
            .map(String::from)
            .to_vec()];
        for r in &rows {
            table.push(vec![
                r.variant.clone(),
                r.accuracy.to_string(),
                r.delta_pct.to_string(),
                opt(r.delegation_precision),
            ]);
        }
        write_atomic(&out.join("ablation.csv"), &csv_bytes(&table)?)?;
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::benchgen::{BenchmarkSpec, Cell};
    use crate::task::{Difficulty, Dimension};

    fn small() -> ExperimentConfig {
        let mut spec = BenchmarkSpec::empty(0);
        for d in Dimension::ALL {
            for diff in Difficulty::SINGLE {
                spec.set_count(Cell::Single(d, diff), 4);
            }
        }
        spec.set_count(Cell::Cross, 10);
        ExperimentConfig {
            benchmark: BenchmarkSource::Generate { spec, seed_from_run: true },
            ..ExperimentConfig::default()
        }
    }

    #[test]
    fn atomic_write_creates_parents() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("a/b/c.txt");
        write_atomic(&p, b"x").unwrap();
        write_atomic(&p, b"yz").unwrap();
        assert_eq!(fs::read(&p).unwrap(), b"yz");
        assert!(!dir.path().join("a/b/c.txt.tmp").exists());
    }

    #[test]
    fn persisted_run_replays_to_the_same_report() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = ExperimentConfig {
            out_dir: Some(dir.path().to_path_buf()),
            ..small()
        };
        let runs = run(&cfg).unwrap();
        assert_eq!(runs.len(), 1);
        let replayed = replay(&dir.path().join("decisions.jsonl")).unwrap();
        assert_eq!(replayed, runs[0].report);
        let on_disk = fs::read_to_string(dir.path().join("report.json")).unwrap();
        assert_eq!(on_disk, replayed.to_json().unwrap());
        for f in ["summary.csv", "difficulty.csv", "dimension.csv", "reliability.csv", "delegation_flow.csv", "profiles.json"] {
            assert!(dir.path().join(f).exists(), "{f}");
        }
    }

    #[test]
    fn multi_seed_layout() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = ExperimentConfig {
            out_dir: Some(dir.path().to_path_buf()),
            seeds: vec![1, 2, 3],
            ..small()
        };
        run(&cfg).unwrap();
        for s in [1, 2, 3] {
            assert!(dir.path().join(format!("seed-{s}/report.json")).exists());
        }
        let agg = fs::read_to_string(dir.path().join("aggregate.csv")).unwrap();
        let lines: Vec<_> = agg.lines().collect();
        assert_eq!(lines.len(), 6);
        assert!(lines[4].starts_with("mean,"));
        assert!(lines[5].starts_with("stddev,"));
    }

    #[test]
    fn profile_snapshot_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = ExperimentConfig {
            out_dir: Some(dir.path().to_path_buf()),
            ..small()
        };
        let first = run(&cfg).unwrap().remove(0);
        let warm = ExperimentConfig {
            profile_snapshot: Some(dir.path().join("profiles.json")),
            out_dir: None,
            ..small()
        };
        let loaded = load_profiles(&dir.path().join("profiles.json"), &warm.roster).unwrap();
        let expected: Vec<_> = warm.roster.iter().map(|a| first.profiles[&a.id].clone()).collect();
        assert_eq!(loaded, expected);
        warm.run_seed(0).unwrap();
    }

    #[test]
    fn sweep_validates_before_running() {
        let cfg = small();
        let err = sweep(&cfg, ParamKey::Theta, &[0.4, 1.5]).unwrap_err();
        assert!(matches!(err, Error::ParamOutOfRange { name: "theta", .. }));
        assert!(sweep(&cfg, ParamKey::Gamma, &[0.1]).is_err());
        let rows = sweep(&cfg, ParamKey::Theta, &[0.3, 0.7]).unwrap();
        assert_eq!(rows.len(), 2);
        assert_eq!(rows[1].value, 0.7);
        assert!(rows[1].delegation_rate >= rows[0].delegation_rate);
    }

    #[test]
    fn ablate_lists_all_variants() {
        let rows = ablate(&small()).unwrap();
        assert_eq!(rows.len(), 6);
        assert_eq!(rows[0].variant, "full");
        assert_eq!(rows[0].delta_pct, 0.0);
        let rr = ExperimentConfig {
            policy: Policy::RoundRobin,
            ..small()
        };
        assert!(ablate(&rr).is_err());
    }

    #[test]
    fn benchmark_file_diagnostics() {
        let dir = tempfile::tempdir().unwrap();
        let missing = dir.path().join("nope.jsonl");
        assert!(matches!(load_benchmark(&missing), Err(Error::Read { .. })));
        let empty = dir.path().join("empty.jsonl");
        fs::write(&empty, "").unwrap();
        assert!(matches!(load_benchmark(&empty), Err(Error::Config(_))));
        let bad = dir.path().join("bad.jsonl");
        fs::write(&bad, "{}\n").unwrap();
        assert!(matches!(load_benchmark(&bad), Err(Error::Parse { line: 1, .. })));
    }

    #[test]
    fn mean_std_values() {
        assert_eq!(mean_std(&[]), None);
        assert_eq!(mean_std(&[2.0]), Some((2.0, 0.0)));
        let (m, s) = mean_std(&[1.0, 2.0, 3.0]).unwrap();
        assert_eq!(m, 2.0);
        assert!((s - 1.0).abs() < 1e-15);
    }
}
