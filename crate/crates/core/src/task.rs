//! Tasks and their capability labels.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One of the five cognitive dimensions a capability profile tracks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Dimension {
    /// Logical reasoning.
    LR,
    /// Knowledge retrieval.
    KR,
    /// Code generation.
    CG,
    /// Mathematical computation.
    MC,
    /// Commonsense inference.
    CI,
}

impl Dimension {
    pub const ALL: [Dimension; 5] = [
        Dimension::LR,
        Dimension::KR,
        Dimension::CG,
        Dimension::MC,
        Dimension::CI,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn label(self) -> &'static str {
        match self {
            Dimension::LR => "LR",
            Dimension::KR => "KR",
            Dimension::CG => "CG",
            Dimension::MC => "MC",
            Dimension::CI => "CI",
        }
    }
}

impl fmt::Display for Dimension {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for Dimension {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Dimension::ALL
            .into_iter()
            .find(|d| d.label().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| Error::UnknownDimension(s.to_string()))
    }
}

/// Difficulty tier. Multi-dimension tasks form their own `Cross` stratum.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Difficulty {
    Easy,
    Medium,
    Hard,
    Cross,
}

impl Difficulty {
    pub const ALL: [Difficulty; 4] = [
        Difficulty::Easy,
        Difficulty::Medium,
        Difficulty::Hard,
        Difficulty::Cross,
    ];
    pub const SINGLE: [Difficulty; 3] = [Difficulty::Easy, Difficulty::Medium, Difficulty::Hard];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn label(self) -> &'static str {
        match self {
            Difficulty::Easy => "Easy",
            Difficulty::Medium => "Medium",
            Difficulty::Hard => "Hard",
            Difficulty::Cross => "Cross",
        }
    }
}

impl fmt::Display for Difficulty {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for Difficulty {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "easy" => Ok(Difficulty::Easy),
            "medium" | "med" => Ok(Difficulty::Medium),
            "hard" => Ok(Difficulty::Hard),
            "cross" => Ok(Difficulty::Cross),
            _ => Err(Error::UnknownDifficulty(s.to_string())),
        }
    }
}

/// A unit of work with its ground-truth labels.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Task {
    pub id: String,
    pub prompt: String,
    pub dimensions: Vec<Dimension>,
    pub difficulty: Difficulty,
    pub ground_truth: String,
    pub distractors: Vec<String>,
}

impl Task {
    /// Builds a task, normalizing the dimension list to sorted unique labels
    /// and checking the structural invariants.
    pub fn new(
        id: impl Into<String>,
        prompt: impl Into<String>,
        dimensions: impl IntoIterator<Item = Dimension>,
        difficulty: Difficulty,
        ground_truth: impl Into<String>,
        distractors: impl IntoIterator<Item = String>,
    ) -> Result<Self> {
        let mut dimensions: Vec<Dimension> = dimensions.into_iter().collect();
        dimensions.sort();
        dimensions.dedup();
        let task = Task {
            id: id.into(),
            prompt: prompt.into(),
            dimensions,
            difficulty,
            ground_truth: ground_truth.into(),
            distractors: distractors.into_iter().collect(),
        };
        task.validate()?;
        Ok(task)
    }

    pub fn validate(&self) -> Result<()> {
        let invalid = |reason: &str| Error::InvalidTask {
            id: self.id.clone(),
            reason: reason.to_string(),
        };
        if self.dimensions.is_empty() {
            return Err(invalid("no dimension labels"));
        }
        if self.dimensions.windows(2).any(|w| w[0] >= w[1]) {
            return Err(invalid("dimension labels must be sorted and unique"));
        }
        let cross = self.dimensions.len() >= 2;
        if cross != (self.difficulty == Difficulty::Cross) {
            return Err(invalid("difficulty is Cross exactly when there are two or more dimensions"));
        }
        if self.distractors.is_empty() {
            return Err(invalid("no distractors"));
        }
        if self.distractors.contains(&self.ground_truth) {
            return Err(invalid("ground truth appears among the distractors"));
        }
        Ok(())
    }

    pub fn is_cross_domain(&self) -> bool {
        self.dimensions.len() >= 2
    }
}
