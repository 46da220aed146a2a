use std::collections::BTreeMap;

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::{Agent, ExecutionResult};
use crate::error::{Error, Result};
use crate::rng::SimRng;
use crate::scalar::Scalar;
use crate::task::{Difficulty, Dimension, Task};

/// Ground-truth success probability per (dimension, difficulty) cell.
///
/// Serialized as `{"LR": {"Easy": 0.85, ...}, ...}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(
    try_from = "BTreeMap<Dimension, BTreeMap<Difficulty, f64>>",
    into = "BTreeMap<Dimension, BTreeMap<Difficulty, f64>>"
)]
pub struct CompetenceTable {
    cells: [[f64; 4]; 5],
}

impl CompetenceTable {
    pub fn constant(p: f64) -> Result<Self> {
        check_probability(p)?;
        Ok(CompetenceTable { cells: [[p; 4]; 5] })
    }

    /// `base` on Easy tasks, dropping by `step` per tier. Cross-domain cells
    /// take the Hard level.
    pub fn graded(base: [f64; 5], step: f64) -> Result<Self> {
        let mut cells = [[0.0; 4]; 5];
        for (row, b) in cells.iter_mut().zip(base) {
            for diff in Difficulty::ALL {
                let tier = match diff {
                    Difficulty::Easy => 0.0,
                    Difficulty::Medium => 1.0,
                    Difficulty::Hard | Difficulty::Cross => 2.0,
                };
                let p = b - step * tier;
                check_probability(p)?;
                row[diff.index()] = p;
            }
        }
        Ok(CompetenceTable { cells })
    }

    pub fn get(&self, d: Dimension, diff: Difficulty) -> f64 {
        self.cells[d.index()][diff.index()]
    }

    pub fn set(&mut self, d: Dimension, diff: Difficulty, p: f64) -> Result<()> {
        check_probability(p)?;
        self.cells[d.index()][diff.index()] = p;
        Ok(())
    }

    /// True success probability on a task: the mean over its dimensions at
    /// its difficulty.
    pub fn for_task(&self, task: &Task) -> f64 {
        let n = task.dimensions.len().max(1) as f64;
        task.dimensions
            .iter()
            .map(|d| self.get(*d, task.difficulty))
            .sum::<f64>()
            / n
    }
}

fn check_probability(p: f64) -> Result<()> {
    if (0.0..=1.0).contains(&p) {
        Ok(())
    } else {
        Err(Error::NotUnitInterval {
            what: "true competence",
            value: p,
        })
    }
}

impl TryFrom<BTreeMap<Dimension, BTreeMap<Difficulty, f64>>> for CompetenceTable {
    type Error = Error;

    fn try_from(map: BTreeMap<Dimension, BTreeMap<Difficulty, f64>>) -> Result<Self> {
        let mut table = CompetenceTable::constant(0.0)?;
        for d in Dimension::ALL {
            for diff in Difficulty::ALL {
                let p = map
                    .get(&d)
                    .and_then(|row| row.get(&diff))
                    .ok_or_else(|| Error::Config(format!("competence table is missing {d}/{diff}")))?;
                table.set(d, diff, *p)?;
            }
        }
        Ok(table)
    }
}

impl From<CompetenceTable> for BTreeMap<Dimension, BTreeMap<Difficulty, f64>> {
    fn from(t: CompetenceTable) -> Self {
        Dimension::ALL
            .into_iter()
            .map(|d| (d, Difficulty::ALL.into_iter().map(|diff| (diff, t.get(d, diff))).collect()))
            .collect()
    }
}

/// A simulated agent: Bernoulli execution at its true competence and a
/// perturbed self-report of that competence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentSpec {
    pub id: String,
    pub name: String,
    pub specialization: Dimension,
    pub true_competence: CompetenceTable,
    /// Added to the true competence before clamping; positive values model
    /// overconfidence.
    pub verbalization_bias: f64,
    /// Standard deviation of the Gaussian noise on the self-report.
    pub verbalization_noise: f64,
}

impl AgentSpec {
    /// An agent that is `specialty` good at its own dimension and `general`
    /// good elsewhere on Easy tasks, losing `step` per difficulty tier.
    pub fn specialist(
        id: impl Into<String>,
        name: impl Into<String>,
        specialization: Dimension,
        specialty: f64,
        general: f64,
        step: f64,
    ) -> Result<Self> {
        let mut base = [general; 5];
        base[specialization.index()] = specialty;
        Ok(AgentSpec {
            id: id.into(),
            name: name.into(),
            specialization,
            true_competence: CompetenceTable::graded(base, step)?,
            verbalization_bias: 0.0,
            verbalization_noise: 0.0,
        })
    }

    pub fn with_verbalization(mut self, bias: f64, noise: f64) -> Self {
        self.verbalization_bias = bias;
        self.verbalization_noise = noise;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.verbalization_noise >= 0.0 && self.verbalization_noise.is_finite()) {
            return Err(Error::Config(format!(
                "agent `{}`: verbalization noise must be a finite value >= 0",
                self.id
            )));
        }
        if !self.verbalization_bias.is_finite() {
            return Err(Error::Config(format!("agent `{}`: verbalization bias must be finite", self.id)));
        }
        Ok(())
    }

    pub fn competence_on(&self, task: &Task) -> f64 {
        self.true_competence.for_task(task)
    }
}

impl<T: Scalar> Agent<T> for AgentSpec {
    fn id(&self) -> &str {
        &self.id
    }

    fn specialization(&self) -> Option<crate::task::Dimension> {
        Some(self.specialization)
    }

    fn verbalized_confidence(&self, task: &Task, rng: &mut SimRng) -> Result<T> {
        let q = self.competence_on(task);
        let noise = if self.verbalization_noise > 0.0 {
            Normal::new(0.0, self.verbalization_noise)
                .map_err(|e| Error::Config(e.to_string()))?
                .sample(rng)
        } else {
            0.0
        };
        Ok(T::of((q + self.verbalization_bias + noise).clamp(0.0, 1.0)))
    }

    fn execute(&self, task: &Task, rng: &mut SimRng) -> Result<ExecutionResult> {
        let q = self.competence_on(task);
        // Draw both values unconditionally so the stream position does not
        // depend on the outcome.
        let u: f64 = rng.random();
        let pick = rng.random_range(0..task.distractors.len());
        let correct = u < q;
        let answer = if correct {
            task.ground_truth.clone()
        } else {
            task.distractors[pick].clone()
        };
        Ok(ExecutionResult {
            answer,
            correct,
            calls_consumed: 1,
        })
    }
}

/// Three specialists (reasoning, retrieval, coding): 0.85 on their own
/// dimension and 0.6 elsewhere at Easy, minus 0.1 per difficulty tier.
pub fn default_roster() -> Vec<AgentSpec> {
    [
        ("alpha", "Agent-α", Dimension::LR),
        ("beta", "Agent-β", Dimension::KR),
        ("gamma", "Agent-γ", Dimension::CG),
    ]
    .into_iter()
    .map(|(id, name, dim)| {
        AgentSpec::specialist(id, name, dim, 0.85, 0.6, 0.1)
            .expect("default competences are probabilities")
            .with_verbalization(0.0, 0.05)
    })
    .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::substream;

    fn task(difficulty: Difficulty, dims: &[Dimension]) -> Task {
        Task::new(
            "t1",
            "synthetic",
            dims.iter().copied(),
            difficulty,
            "A",
            ["B".to_string(), "C".to_string(), "D".to_string()],
        )
        .unwrap()
    }

    fn flat(q: f64) -> AgentSpec {
        AgentSpec {
            id: "x".into(),
            name: "X".into(),
            specialization: Dimension::LR,
            true_competence: CompetenceTable::constant(q).unwrap(),
            verbalization_bias: 0.0,
            verbalization_noise: 0.0,
        }
    }

    fn verbal(agent: &AgentSpec, t: &Task, seed: u64) -> f64 {
        Agent::<f64>::verbalized_confidence(agent, t, &mut substream(seed, &["v"])).unwrap()
    }

    #[test]
    fn verbalized_examples() {
        let t = task(Difficulty::Easy, &[Dimension::LR]);
        assert_eq!(verbal(&flat(0.45), &t, 0), 0.45);
        assert_eq!(verbal(&flat(0.95).with_verbalization(0.2, 0.0), &t, 0), 1.0);
        assert!((verbal(&flat(0.5).with_verbalization(0.15, 0.0), &t, 0) - 0.65).abs() < 1e-15);
    }

    #[test]
    fn noisy_verbalization_is_deterministic_and_clamped() {
        let t = task(Difficulty::Hard, &[Dimension::CI]);
        let a = flat(0.5).with_verbalization(0.0, 0.8);
        for seed in 0..200 {
            let v = verbal(&a, &t, seed);
            assert_eq!(v, verbal(&a, &t, seed));
            assert!((0.0..=1.0).contains(&v));
        }
    }

    #[test]
    fn certain_competence_extremes() {
        let t = task(Difficulty::Medium, &[Dimension::KR]);
        for seed in 0..100 {
            let mut rng = substream(seed, &["x"]);
            assert_eq!(Agent::<f64>::execute(&flat(1.0), &t, &mut rng).unwrap().answer, "A");
            let r = Agent::<f64>::execute(&flat(0.0), &t, &mut rng).unwrap();
            assert!(!r.correct);
            assert!(t.distractors.contains(&r.answer));
            assert_eq!(r.calls_consumed, 1);
        }
    }

    #[test]
    fn execution_success_rate_matches_competence() {
        let t = task(Difficulty::Easy, &[Dimension::MC]);
        let agent = flat(0.7);
        let hits = (0..10_000u64)
            .filter(|s| {
                Agent::<f64>::execute(&agent, &t, &mut substream(*s, &["exec"]))
                    .unwrap()
                    .correct
            })
            .count();
        let rate = hits as f64 / 10_000.0;
        assert!((rate - 0.7).abs() <= 0.02, "rate {rate}");
    }

    #[test]
    fn graded_table_and_cross_average() {
        let a = AgentSpec::specialist("g", "G", Dimension::CG, 0.85, 0.6, 0.1).unwrap();
        let c = &a.true_competence;
        assert!((c.get(Dimension::CG, Difficulty::Easy) - 0.85).abs() < 1e-12);
        assert!((c.get(Dimension::CG, Difficulty::Hard) - 0.65).abs() < 1e-12);
        assert!((c.get(Dimension::LR, Difficulty::Medium) - 0.5).abs() < 1e-12);
        let cross = task(Difficulty::Cross, &[Dimension::CG, Dimension::MC]);
        assert!((a.competence_on(&cross) - (0.65 + 0.4) / 2.0).abs() < 1e-12);
        assert!(AgentSpec::specialist("g", "G", Dimension::CG, 0.85, 0.1, 0.1).is_err());
    }

    #[test]
    fn competence_table_json_round_trip() {
        let t = default_roster()[0].true_competence.clone();
        let json = serde_json::to_string(&t).unwrap();
        let back: CompetenceTable = serde_json::from_str(&json).unwrap();
        assert_eq!(back, t);
    }
}
