//! Agents: the assess/execute abstraction, simulated stochastic agents and
//! the line-delimited JSON contract for remote backends.

mod remote;
mod simulated;

pub use remote::{AssessResponse, ExecuteResponse, RemoteAgent, RemoteMode, RemoteRequest, Transport};
pub use simulated::{default_roster, AgentSpec, CompetenceTable};

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::rng::SimRng;
use crate::scalar::Scalar;
use crate::task::{Dimension, Task};

/// What an agent produced for a task. `correct` is filled in by whoever
/// knows the ground truth; the agent itself does not use it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExecutionResult {
    pub answer: String,
    pub correct: bool,
    pub calls_consumed: u32,
}

/// An agent that can rate its own fitness for a task and then attempt it.
///
/// Both calls receive a random stream dedicated to this (agent, task,
/// purpose) triple, so implementations stay deterministic regardless of the
/// order in which the orchestrator queries agents.
pub trait Agent<T: Scalar> {
    fn id(&self) -> &str;

    /// The dimension this agent is built for, if any. Used by the
    /// skill-based baseline router.
    fn specialization(&self) -> Option<Dimension>;

    /// Self-reported confidence in [0, 1].
    fn verbalized_confidence(&self, task: &Task, rng: &mut SimRng) -> Result<T>;

    fn execute(&self, task: &Task, rng: &mut SimRng) -> Result<ExecutionResult>;
}
