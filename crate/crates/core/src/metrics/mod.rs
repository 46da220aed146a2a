//! Run-level metrics: accuracy, delegation statistics, calibration and call
//! counts, all recomputable from the decision log alone.

mod calibration;

pub use calibration::{bin_index, ece, reliability_bins, ReliabilityBin, NUM_BINS};

use std::collections::HashMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::orchestrator::{Mode, TaskRecord};
use crate::profile::Outcome;
use crate::scalar::Scalar;
use crate::task::{Difficulty, Dimension, Task};

/// Accuracy of one stratum. `accuracy` is `None` for an empty stratum.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupAccuracy {
    pub label: String,
    pub tasks: usize,
    pub correct: usize,
    pub accuracy: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupRate {
    pub label: String,
    pub tasks: usize,
    pub delegated: usize,
    pub rate: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupEce {
    pub label: String,
    pub ece: Option<f64>,
}

/// Accuracy by difficulty tier and by dimension. Cross-domain tasks form
/// their own stratum in both tables.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Stratified {
    pub by_difficulty: Vec<GroupAccuracy>,
    pub by_dimension: Vec<GroupAccuracy>,
    /// Hard minus Easy accuracy in percentage points.
    pub easy_to_hard_delta_pct: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModeCounts {
    pub direct: usize,
    pub delegated: usize,
    pub collaborative: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub total_tasks: usize,
    pub correct: usize,
    pub overall_accuracy: f64,
    pub per_difficulty_accuracy: Vec<GroupAccuracy>,
    pub per_dimension_accuracy: Vec<GroupAccuracy>,
    pub easy_to_hard_delta_pct: Option<f64>,
    pub mode_counts: ModeCounts,
    /// Tasks that left their assignee (delegated or collaborative) over all
    /// tasks.
    pub delegation_rate: f64,
    pub delegation_rate_by_difficulty: Vec<GroupRate>,
    /// Correct fraction of delegated tasks; collaborative tasks excluded.
    /// `None` when nothing was delegated.
    pub delegation_precision: Option<f64>,
    /// `None` when the policy records no confidences.
    pub ece: Option<f64>,
    pub ece_by_difficulty: Vec<GroupEce>,
    pub reliability_bins: Vec<ReliabilityBin<f64>>,
    /// `[from][to]` counts of delegated tasks.
    pub delegation_flow: Vec<Vec<usize>>,
    pub total_api_calls: u64,
}

fn dimension_stratum(dims: &[Dimension]) -> usize {
    match dims {
        [d] => d.index(),
        _ => Dimension::ALL.len(),
    }
}

fn dimension_labels() -> impl Iterator<Item = &'static str> {
    Dimension::ALL.iter().map(|d| d.label()).chain(std::iter::once("Cross"))
}

fn ratio(num: usize, den: usize) -> Option<f64> {
    (den > 0).then(|| num as f64 / den as f64)
}

fn stratify_rows<'a>(rows: impl Iterator<Item = (Difficulty, &'a [Dimension], bool)>) -> Stratified {
    let mut by_diff = [(0usize, 0usize); 4];
    let mut by_dim = [(0usize, 0usize); 6];
    for (diff, dims, correct) in rows {
        for cell in [&mut by_diff[diff.index()], &mut by_dim[dimension_stratum(dims)]] {
            cell.0 += 1;
            cell.1 += usize::from(correct);
        }
    }
    let group = |label: &str, (tasks, correct): (usize, usize)| GroupAccuracy {
        label: label.to_string(),
        tasks,
        correct,
        accuracy: ratio(correct, tasks),
    };
    let by_difficulty: Vec<_> = Difficulty::ALL
        .iter()
        .map(|d| group(d.label(), by_diff[d.index()]))
        .collect();
    let by_dimension = dimension_labels().zip(by_dim).map(|(l, c)| group(l, c)).collect();
    let easy = by_difficulty[Difficulty::Easy.index()].accuracy;
    let hard = by_difficulty[Difficulty::Hard.index()].accuracy;
    Stratified {
        by_difficulty,
        by_dimension,
        easy_to_hard_delta_pct: easy.zip(hard).map(|(e, h)| (h - e) * 100.0),
    }
}

/// Joins outcomes to tasks by id and tabulates accuracy per stratum.
pub fn stratify(outcomes: &[Outcome], tasks: &[Task]) -> Result<Stratified> {
    let index: HashMap<&str, &Task> = tasks.iter().map(|t| (t.id.as_str(), t)).collect();
    let joined = outcomes
        .iter()
        .map(|o| {
            index
                .get(o.task_id.as_str())
                .map(|t| (t.difficulty, t.dimensions.as_slice(), o.reward.is_correct()))
                .ok_or_else(|| Error::MissingJoin(o.task_id.clone()))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(stratify_rows(joined.into_iter()))
}

/// Fraction of delegated tasks answered correctly; `None` without delegations.
pub fn delegation_precision<T>(records: &[TaskRecord<T>]) -> Option<f64> {
    let delegated: Vec<_> = records.iter().filter(|r| r.decision.mode == Mode::Delegated).collect();
    let hits = delegated.iter().filter(|r| r.outcome.reward.is_correct()).count();
    ratio(hits, delegated.len())
}

/// `[from][to]` counts of delegated tasks over an `n`-agent roster.
pub fn delegation_flow<T>(records: &[TaskRecord<T>], roster_size: usize) -> Vec<Vec<usize>> {
    let mut flow = vec![vec![0; roster_size]; roster_size];
    for r in records.iter().filter(|r| r.decision.mode == Mode::Delegated) {
        if let (from, Some(&to)) = (r.decision.original_agent, r.decision.executing_agents.first()) {
            if from < roster_size && to < roster_size {
                flow[from][to] += 1;
            }
        }
    }
    flow
}

/// (confidence, correct) pairs for every record that carries a confidence
/// for its delivered answer.
pub fn calibration_records<T: Scalar>(records: &[&TaskRecord<T>]) -> Vec<(f64, bool)> {
    records
        .iter()
        .filter_map(|r| {
            r.decision
                .executing_confidence()
                .map(|c| (c.as_f64(), r.outcome.reward.is_correct()))
        })
        .collect()
}

pub fn build_report<T: Scalar>(records: &[TaskRecord<T>]) -> Result<ExperimentReport> {
    let first = records.first().ok_or(Error::EmptyRecords("report"))?;
    let roster_size = first.roster_size;
    if records.iter().any(|r| r.roster_size != roster_size) {
        return Err(Error::Config("decision log mixes roster sizes".into()));
    }
    let total = records.len();
    let correct = records.iter().filter(|r| r.outcome.reward.is_correct()).count();
    let strat = stratify_rows(
        records
            .iter()
            .map(|r| (r.difficulty, r.dimensions.as_slice(), r.outcome.reward.is_correct())),
    );

    let mut modes = ModeCounts {
        direct: 0,
        delegated: 0,
        collaborative: 0,
    };
    for r in records {
        match r.decision.mode {
            Mode::Direct => modes.direct += 1,
            Mode::Delegated => modes.delegated += 1,
            Mode::Collaborative => modes.collaborative += 1,
        }
    }
    let left_assignee = |r: &&&TaskRecord<T>| r.decision.mode != Mode::Direct;

    let by_difficulty = |d: Difficulty| records.iter().filter(move |r| r.difficulty == d).collect::<Vec<_>>();
    let delegation_rate_by_difficulty = Difficulty::ALL
        .iter()
        .map(|d| {
            let group = by_difficulty(*d);
            let delegated = group.iter().filter(left_assignee).count();
            GroupRate {
                label: d.label().to_string(),
                tasks: group.len(),
                delegated,
                rate: ratio(delegated, group.len()),
            }
        })
        .collect();

    let all: Vec<&TaskRecord<T>> = records.iter().collect();
    let calib = calibration_records(&all);
    let (ece_all, bins) = if calib.is_empty() {
        (None, Vec::new())
    } else {
        (Some(ece(&calib)?), reliability_bins(&calib)?)
    };
    let ece_by_difficulty = Difficulty::ALL
        .iter()
        .map(|d| {
            let recs = calibration_records(&by_difficulty(*d));
            Ok(GroupEce {
                label: d.label().to_string(),
                ece: if recs.is_empty() { None } else { Some(ece(&recs)?) },
            })
        })
        .collect::<Result<Vec<_>>>()?;

    Ok(ExperimentReport {
        total_tasks: total,
        correct,
        overall_accuracy: correct as f64 / total as f64,
        per_difficulty_accuracy: strat.by_difficulty,
        per_dimension_accuracy: strat.by_dimension,
        easy_to_hard_delta_pct: strat.easy_to_hard_delta_pct,
        mode_counts: modes,
        delegation_rate: all.iter().filter(left_assignee).count() as f64 / total as f64,
        delegation_rate_by_difficulty,
        delegation_precision: delegation_precision(records),
        ece: ece_all,
        ece_by_difficulty,
        reliability_bins: bins,
        delegation_flow: delegation_flow(records, roster_size),
        total_api_calls: records.iter().map(|r| r.decision.api_calls).sum(),
    })
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

impl ExperimentReport {
    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    /// Writes `summary.csv`, `difficulty.csv`, `dimension.csv`,
    /// `reliability.csv` and `delegation_flow.csv` into `dir`.
    pub fn write_csv_tables(&self, dir: &Path) -> Result<()> {
        let write = |name: &str, rows: Vec<Vec<String>>| -> Result<()> {
            let mut w = csv::Writer::from_writer(Vec::new());
            for row in rows {
                w.write_record(row)?;
            }
            let bytes = w.into_inner().map_err(|e| Error::Write {
                path: dir.join(name),
                source: e.into_error(),
            })?;
            crate::harness::write_atomic(&dir.join(name), &bytes)
        };
        let s = |v: &dyn ToString| v.to_string();

        write(
            "summary.csv",
            vec![
                vec!["metric".into(), "value".into()],
                vec!["total_tasks".into(), s(&self.total_tasks)],
                vec!["accuracy".into(), s(&self.overall_accuracy)],
                vec!["delegation_rate".into(), s(&self.delegation_rate)],
                vec!["delegation_precision".into(), fmt_opt(self.delegation_precision)],
                vec!["ece".into(), fmt_opt(self.ece)],
                vec!["api_calls".into(), s(&self.total_api_calls)],
                vec!["direct".into(), s(&self.mode_counts.direct)],
                vec!["delegated".into(), s(&self.mode_counts.delegated)],
                vec!["collaborative".into(), s(&self.mode_counts.collaborative)],
                vec!["easy_to_hard_delta_pct".into(), fmt_opt(self.easy_to_hard_delta_pct)],
            ],
        )?;

        let mut rows = vec![vec![
            "difficulty".into(),
            "tasks".into(),
            "correct".into(),
            "accuracy".into(),
            "delegation_rate".into(),
            "ece".into(),
        ]];
        for ((acc, rate), e) in self
            .per_difficulty_accuracy
            .iter()
            .zip(&self.delegation_rate_by_difficulty)
            .zip(&self.ece_by_difficulty)
        {
            rows.push(vec![
                acc.label.clone(),
                s(&acc.tasks),
                s(&acc.correct),
                fmt_opt(acc.accuracy),
                fmt_opt(rate.rate),
                fmt_opt(e.ece),
            ]);
        }
        write("difficulty.csv", rows)?;

        let mut rows = vec![vec!["dimension".into(), "tasks".into(), "correct".into(), "accuracy".into()]];
        for g in &self.per_dimension_accuracy {
            rows.push(vec![g.label.clone(), s(&g.tasks), s(&g.correct), fmt_opt(g.accuracy)]);
        }
        write("dimension.csv", rows)?;

        let mut rows = vec![vec![
            "lower".into(),
            "upper".into(),
            "count".into(),
            "mean_confidence".into(),
            "accuracy".into(),
        ]];
        for b in &self.reliability_bins {
            rows.push(vec![
                s(&b.lower),
                s(&b.upper),
                s(&b.count),
                s(&b.mean_confidence),
                s(&b.accuracy),
            ]);
        }
        write("reliability.csv", rows)?;

        let n = self.delegation_flow.len();
        let mut rows = vec![std::iter::once("from\\to".to_string())
            .chain((0..n).map(|j| j.to_string()))
            .collect()];
        for (i, row) in self.delegation_flow.iter().enumerate() {
            rows.push(std::iter::once(i.to_string()).chain(row.iter().map(|c| c.to_string())).collect());
        }
        write("delegation_flow.csv", rows)
    }

    /// Reads a persisted report back from disk.
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|source| Error::Read {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_json(&text)
    }
}
