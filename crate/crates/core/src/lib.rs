//! Confidence-gated task routing for a roster of agents.
//!
//! Each agent blends its own stated confidence with a learned per-dimension
//! capability profile. Tasks the assignee is unsure about are offered to its
//! peers, and when nobody is confident the whole roster answers and a
//! confidence-weighted vote decides. Outcomes feed back into the profiles.
//!
//! The numeric core (`mcu`, `profile`, `metrics::ece`, `weighted_vote`) is
//! generic over [`Scalar`] (`f32` or `f64`); the aliases below fix `f64`,
//! which is what the simulation harness uses.

pub mod agents;
pub mod benchgen;
pub mod error;
pub mod harness;
pub mod mcu;
pub mod metrics;
pub mod orchestrator;
pub mod profile;
pub mod rng;
pub mod scalar;
pub mod task;

pub use agents::{default_roster, Agent, AgentSpec, ExecutionResult};
pub use benchgen::{generate, BenchmarkSpec, Cell};
pub use error::{Error, ErrorCategory, Result};
pub use harness::{ConfigLayers, ExperimentConfig};
pub use mcu::{ConfidenceBreakdown, MetacogParams, ParamKey};
pub use metrics::ExperimentReport;
pub use orchestrator::{Ablations, Mode, Orchestrator, Policy, RoutingDecision, TaskRecord};
pub use profile::{CapabilityProfile, Outcome, Reward};
pub use scalar::Scalar;
pub use task::{Difficulty, Dimension, Task};

pub type Params = MetacogParams<f64>;
pub type Breakdown = ConfidenceBreakdown<f64>;
pub type Profile = CapabilityProfile<f64>;
pub type Decision = RoutingDecision<f64>;
pub type Record = TaskRecord<f64>;
