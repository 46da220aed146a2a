//! Synthetic benchmark generation with fixed per-cell task counts.
//!
//! Task text is an opaque token; what matters to the routing engine is the
//! structure: dimension labels, difficulty, ground truth and distractors.
//! Each task has four candidate answers, one correct.

use std::collections::BTreeMap;
use std::fmt;
use std::io::{BufRead, Write};

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::substream;
use crate::task::{Difficulty, Dimension, Task};

const ANSWERS: [&str; 4] = ["A", "B", "C", "D"];

/// Default counts: rows LR, KR, CG, MC, CI; columns Easy, Medium, Hard.
const DEFAULT_COUNTS: [[usize; 3]; 5] = [
    [42, 38, 40],
    [38, 42, 40],
    [40, 38, 42],
    [41, 40, 39],
    [39, 42, 39],
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PairPolicy {
    /// Each cross-domain task draws one of the ten unordered dimension pairs
    /// uniformly.
    UniformPairs,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BenchmarkSpec {
    /// Rows in `Dimension::ALL` order, columns Easy/Medium/Hard.
    pub per_cell_counts: [[usize; 3]; 5],
    pub cross_domain_count: usize,
    pub seed: u64,
    pub dimension_pair_policy: PairPolicy,
}

impl Default for BenchmarkSpec {
    /// 700 tasks: 120 per dimension plus 100 cross-domain.
    fn default() -> Self {
        BenchmarkSpec {
            per_cell_counts: DEFAULT_COUNTS,
            cross_domain_count: 100,
            seed: 0,
            dimension_pair_policy: PairPolicy::UniformPairs,
        }
    }
}

impl BenchmarkSpec {
    pub fn empty(seed: u64) -> Self {
        BenchmarkSpec {
            per_cell_counts: [[0; 3]; 5],
            cross_domain_count: 0,
            seed,
            dimension_pair_policy: PairPolicy::UniformPairs,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn count(&self, cell: Cell) -> usize {
        match cell {
            Cell::Single(d, diff) => self.per_cell_counts[d.index()][diff.index()],
            Cell::Cross => self.cross_domain_count,
        }
    }

    pub fn set_count(&mut self, cell: Cell, n: usize) {
        match cell {
            Cell::Single(d, diff) => self.per_cell_counts[d.index()][diff.index()] = n,
            Cell::Cross => self.cross_domain_count = n,
        }
    }

    pub fn total(&self) -> usize {
        self.per_cell_counts.iter().flatten().sum::<usize>() + self.cross_domain_count
    }
}

/// A benchmark stratum: one (dimension, tier) pair or the cross-domain pool.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Cell {
    Single(Dimension, Difficulty),
    Cross,
}

impl Cell {
    pub fn all() -> impl Iterator<Item = Cell> {
        Dimension::ALL
            .into_iter()
            .flat_map(|d| Difficulty::SINGLE.into_iter().map(move |diff| Cell::Single(d, diff)))
            .chain(std::iter::once(Cell::Cross))
    }

    pub fn of(task: &Task) -> Cell {
        match task.dimensions[..] {
            [d] if task.difficulty != Difficulty::Cross => Cell::Single(d, task.difficulty),
            _ => Cell::Cross,
        }
    }
}

impl fmt::Display for Cell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Cell::Single(d, diff) => write!(f, "{d}/{diff}"),
            Cell::Cross => f.write_str("Cross"),
        }
    }
}

fn dimension_pairs() -> Vec<[Dimension; 2]> {
    let mut pairs = Vec::with_capacity(10);
    for (i, a) in Dimension::ALL.iter().enumerate() {
        for b in &Dimension::ALL[i + 1..] {
            pairs.push([*a, *b]);
        }
    }
    pairs
}

fn make_task(id: String, dims: &[Dimension], difficulty: Difficulty, rng: &mut impl Rng) -> Task {
    let truth = rng.random_range(0..ANSWERS.len());
    let distractors = ANSWERS
        .iter()
        .enumerate()
        .filter(|(i, _)| *i != truth)
        .map(|(_, a)| a.to_string())
        .collect::<Vec<_>>();
    let labels = dims.iter().map(|d| d.label()).collect::<Vec<_>>().join("+");
    let prompt = format!("[{labels}|{difficulty}] synthetic task {id}");
    Task::new(id, prompt, dims.iter().copied(), difficulty, ANSWERS[truth], distractors)
        .expect("generated tasks satisfy the task invariants")
}

/// Generates the benchmark, shuffled deterministically by the spec's seed.
pub fn generate(spec: &BenchmarkSpec) -> Vec<Task> {
    let mut rng = substream(spec.seed, &["benchgen"]);
    let mut tasks = Vec::with_capacity(spec.total());
    for d in Dimension::ALL {
        for diff in Difficulty::SINGLE {
            for k in 0..spec.count(Cell::Single(d, diff)) {
                let id = format!("{d}-{}-{:03}", &diff.label()[..1], k + 1);
                tasks.push(make_task(id, &[d], diff, &mut rng));
            }
        }
    }
    let pairs = dimension_pairs();
    for k in 0..spec.cross_domain_count {
        let PairPolicy::UniformPairs = spec.dimension_pair_policy;
        let pair = pairs[rng.random_range(0..pairs.len())];
        tasks.push(make_task(format!("X-{:03}", k + 1), &pair, Difficulty::Cross, &mut rng));
    }
    tasks.shuffle(&mut rng);
    tasks
}

/// One cell whose task count differs from the spec.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CellDiscrepancy {
    pub cell: Cell,
    pub expected: usize,
    pub actual: usize,
}

/// Recounts tasks per cell and lists every cell that disagrees with the spec.
pub fn validate(tasks: &[Task], spec: &BenchmarkSpec) -> Vec<CellDiscrepancy> {
    let mut counts: BTreeMap<Cell, usize> = BTreeMap::new();
    for t in tasks {
        *counts.entry(Cell::of(t)).or_default() += 1;
    }
    Cell::all()
        .filter_map(|cell| {
            let expected = spec.count(cell);
            let actual = counts.get(&cell).copied().unwrap_or(0);
            (expected != actual).then_some(CellDiscrepancy { cell, expected, actual })
        })
        .collect()
}

/// Writes one JSON task object per line.
pub fn write_jsonl(tasks: &[Task], mut out: impl Write) -> Result<()> {
    for t in tasks {
        serde_json::to_writer(&mut out, t)?;
        out.write_all(b"\n").map_err(|source| Error::Write {
            path: "<benchmark>".into(),
            source,
        })?;
    }
    Ok(())
}

/// Reads a JSONL benchmark, validating each task. `origin` names the source
/// in diagnostics.
pub fn read_jsonl(input: impl BufRead, origin: &std::path::Path) -> Result<Vec<Task>> {
    let mut tasks = Vec::new();
    for (n, line) in input.lines().enumerate() {
        let line = line.map_err(|source| Error::Read {
            path: origin.to_path_buf(),
            source,
        })?;
        if line.trim().is_empty() {
            continue;
        }
        let task: Task = serde_json::from_str(&line).map_err(|source| Error::Parse {
            path: origin.to_path_buf(),
            line: n + 1,
            source,
        })?;
        task.validate()?;
        tasks.push(task);
    }
    Ok(tasks)
}
