//! The routing loop: round-robin dispatch, self-assessment, conflict-aware
//! gating, delegation broadcast, collaborative voting, result merging and
//! profile feedback.
//!
//! Per task the metacognitive policy does the following:
//!
//! 1. The dispatcher assigns the task to `roster[index mod N]`.
//! 2. The assignee fuses its verbalized and profile confidence. If the fused
//!    value reaches the conflict-adjusted threshold it executes directly.
//! 3. Otherwise every peer assesses the task. The best peer (lowest index on
//!    ties) executes if its fused confidence reaches the base threshold.
//! 4. If no peer does, every agent executes and a confidence-weighted vote
//!    picks the answer.
//!
//! The delegated executor never re-assesses or re-delegates.

mod vote;

pub use vote::weighted_vote;

use std::collections::BTreeMap;
use std::fmt;
use std::marker::PhantomData;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::agents::Agent;
use crate::error::{Error, Result};
use crate::mcu::{self, ConfidenceBreakdown, MetacogParams, ParamKey};
use crate::profile::{CapabilityProfile, Outcome, Reward};
use crate::rng::substream;
use crate::scalar::Scalar;
use crate::task::{Difficulty, Dimension, Task};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Mode {
    Direct,
    Delegated,
    Collaborative,
}

/// How a task was resolved, with everything needed to audit the choice.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoutingDecision<T> {
    pub mode: Mode,
    pub original_agent: usize,
    pub executing_agents: Vec<usize>,
    /// Fused assessments keyed by roster index, in the order they were taken.
    pub assessments: BTreeMap<usize, ConfidenceBreakdown<T>>,
    /// Answer produced by each executing agent.
    pub answers: BTreeMap<usize, String>,
    pub final_answer: String,
    pub api_calls: u64,
}

impl<T: Scalar> RoutingDecision<T> {
    /// Confidence attached to the delivered answer: the executor's fused
    /// confidence, or the largest participant confidence under collaboration.
    pub fn executing_confidence(&self) -> Option<T> {
        match self.mode {
            Mode::Direct | Mode::Delegated => self
                .executing_agents
                .first()
                .and_then(|a| self.assessments.get(a))
                .map(|b| b.fused),
            Mode::Collaborative => self
                .executing_agents
                .iter()
                .filter_map(|a| self.assessments.get(a))
                .map(|b| b.fused)
                .reduce(T::max),
        }
    }

    /// Re-derives the routing invariants from the stored fields. `gated`
    /// says whether the confidence gate was allowed to trigger delegation
    /// (false for baselines and the no-delegation ablation).
    pub fn verify(&self, roster_size: usize, gated: bool) -> std::result::Result<(), String> {
        if self.executing_agents.is_empty() {
            return Err("no executing agent".into());
        }
        if self.executing_agents.iter().any(|a| *a >= roster_size) || self.original_agent >= roster_size {
            return Err("agent index outside the roster".into());
        }
        let executors: Vec<usize> = self.answers.keys().copied().collect();
        if executors != sorted(&self.executing_agents) {
            return Err("answers do not match the executing agents".into());
        }
        match self.mode {
            Mode::Direct => {
                if self.executing_agents != [self.original_agent] {
                    return Err("direct execution by someone other than the assignee".into());
                }
            }
            Mode::Delegated => {
                let [exec] = self.executing_agents[..] else {
                    return Err("delegation must have exactly one executor".into());
                };
                if exec == self.original_agent {
                    return Err("delegated back to the assignee".into());
                }
                if let Some(chosen) = self.assessments.get(&exec) {
                    let beaten = self
                        .assessments
                        .iter()
                        .any(|(j, b)| *j != self.original_agent && b.fused > chosen.fused);
                    if beaten {
                        return Err("a peer had strictly higher confidence than the executor".into());
                    }
                }
            }
            Mode::Collaborative => {
                if sorted(&self.executing_agents) != (0..roster_size).collect::<Vec<_>>() {
                    return Err("collaboration must involve the whole roster".into());
                }
            }
        }
        if gated && roster_size > 1 {
            if let Some(own) = self.assessments.get(&self.original_agent) {
                if own.should_delegate() != (self.mode != Mode::Direct) {
                    return Err("mode disagrees with the assignee's delegation gate".into());
                }
            }
        }
        if self.api_calls != api_call_cost(self) {
            return Err("recorded API calls disagree with the accounting model".into());
        }
        Ok(())
    }
}

fn sorted(v: &[usize]) -> Vec<usize> {
    let mut v = v.to_vec();
    v.sort_unstable();
    v
}

/// Backend invocations consumed by a decision: one per execution plus one per
/// standalone assessment. A directly executed task folds its self-assessment
/// into the execution call, so Direct costs 1, Delegated `N + 1` and
/// Collaborative `2N` on an N-agent roster.
pub fn api_call_cost<T>(decision: &RoutingDecision<T>) -> u64 {
    let executions = decision.executing_agents.len() as u64;
    let assessments = match decision.mode {
        Mode::Direct => 0,
        Mode::Delegated | Mode::Collaborative => decision.assessments.len() as u64,
    };
    executions + assessments
}

/// Round-robin assignment, blind to task content.
pub fn dispatch(task_index: u64, roster_size: usize) -> Result<usize> {
    if roster_size == 0 {
        return Err(Error::EmptyRoster);
    }
    Ok((task_index % roster_size as u64) as usize)
}

/// Routing strategy. `Metacog` is the confidence-gated protocol; the rest are
/// comparison baselines sharing the same decision format.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Policy {
    Metacog,
    SingleAgent,
    RoundRobin,
    Random,
    SkillFixed,
    MajorityVote,
}

impl Policy {
    pub const ALL: [Policy; 6] = [
        Policy::Metacog,
        Policy::SingleAgent,
        Policy::RoundRobin,
        Policy::Random,
        Policy::SkillFixed,
        Policy::MajorityVote,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Policy::Metacog => "metacog",
            Policy::SingleAgent => "single_agent",
            Policy::RoundRobin => "round_robin",
            Policy::Random => "random",
            Policy::SkillFixed => "skill_fixed",
            Policy::MajorityVote => "majority_vote",
        }
    }
}

impl fmt::Display for Policy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Policy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Policy::ALL
            .into_iter()
            .find(|p| p.name() == s.trim())
            .ok_or_else(|| Error::Config(format!("unknown policy `{s}`")))
    }
}

/// Component switches for ablation runs. All `true` is the full system.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Ablations {
    /// Off: the assignee's confidence is pinned to θ, so it never delegates.
    pub self_assessment: bool,
    /// Off: every task is executed by its assignee.
    pub adaptive_delegation: bool,
    /// Off: profiles are never updated.
    pub boundary_learning: bool,
    /// Off: no peer assessment; delegate to the peer with the best stored
    /// profile for the task's dimensions.
    pub cross_agent_eval: bool,
    /// Off: λ = 0 and no verbalized confidence is elicited.
    pub verbalized_confidence: bool,
}

impl Ablations {
    pub const FULL: Ablations = Ablations {
        self_assessment: true,
        adaptive_delegation: true,
        boundary_learning: true,
        cross_agent_eval: true,
        verbalized_confidence: true,
    };

    pub fn is_full(&self) -> bool {
        *self == Self::FULL
    }
}

impl Default for Ablations {
    fn default() -> Self {
        Self::FULL
    }
}

/// One processed task: the decision log line.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskRecord<T> {
    pub index: u64,
    pub task_id: String,
    pub difficulty: Difficulty,
    pub dimensions: Vec<Dimension>,
    pub roster_size: usize,
    pub decision: RoutingDecision<T>,
    pub outcome: Outcome,
}

/// Scores the merged answer and feeds the result back into the executors'
/// profiles. Collaborating agents are credited with the correctness of their
/// own answers; `alpha = None` leaves profiles untouched.
pub fn merge_and_feedback<T: Scalar>(
    decision: &RoutingDecision<T>,
    task: &Task,
    profiles: &mut [CapabilityProfile<T>],
    alpha: Option<T>,
) -> Result<Outcome> {
    let reward = Reward::from_correct(decision.final_answer == task.ground_truth);
    if let Some(alpha) = alpha {
        for agent in &decision.executing_agents {
            let own = match decision.mode {
                Mode::Collaborative => Reward::from_correct(
                    decision.answers.get(agent).is_some_and(|a| *a == task.ground_truth),
                ),
                Mode::Direct | Mode::Delegated => reward,
            };
            let profile = profiles.get_mut(*agent).ok_or(Error::EmptyRoster)?;
            profile.apply_feedback(&task.dimensions, own, alpha)?;
        }
    }
    Ok(Outcome {
        task_id: task.id.clone(),
        answer: decision.final_answer.clone(),
        reward,
        executing_agents: decision.executing_agents.clone(),
    })
}

/// Index of the largest value, lowest index on ties.
fn argmax<T: Scalar>(items: impl IntoIterator<Item = (usize, T)>) -> Option<(usize, T)> {
    items.into_iter().fold(None, |best, (i, v)| match best {
        Some((_, bv)) if v <= bv => best,
        _ => Some((i, v)),
    })
}

/// Drives a roster of agents through a benchmark, one task at a time.
pub struct Orchestrator<T: Scalar, A: Agent<T>> {
    roster: Vec<A>,
    profiles: Vec<CapabilityProfile<T>>,
    params: MetacogParams<T>,
    policy: Policy,
    ablations: Ablations,
    seed: u64,
    next_index: u64,
    total_api_calls: u64,
    _scalar: PhantomData<T>,
}

impl<T: Scalar, A: Agent<T>> Orchestrator<T, A> {
    pub fn new(roster: Vec<A>, params: MetacogParams<T>, policy: Policy, seed: u64) -> Result<Self> {
        if roster.is_empty() {
            return Err(Error::EmptyRoster);
        }
        for (i, a) in roster.iter().enumerate() {
            if roster[..i].iter().any(|b| b.id() == a.id()) {
                return Err(Error::DuplicateAgent(a.id().to_string()));
            }
        }
        let profiles = vec![CapabilityProfile::default(); roster.len()];
        Ok(Orchestrator {
            roster,
            profiles,
            params,
            policy,
            ablations: Ablations::FULL,
            seed,
            next_index: 0,
            total_api_calls: 0,
            _scalar: PhantomData,
        })
    }

    pub fn with_ablations(mut self, ablations: Ablations) -> Self {
        self.ablations = ablations;
        self
    }

    pub fn with_profiles(mut self, profiles: Vec<CapabilityProfile<T>>) -> Result<Self> {
        if profiles.len() != self.roster.len() {
            return Err(Error::Config(format!(
                "{} profiles supplied for a roster of {}",
                profiles.len(),
                self.roster.len()
            )));
        }
        self.profiles = profiles;
        Ok(self)
    }

    pub fn roster(&self) -> &[A] {
        &self.roster
    }

    pub fn profiles(&self) -> &[CapabilityProfile<T>] {
        &self.profiles
    }

    pub fn total_api_calls(&self) -> u64 {
        self.total_api_calls
    }

    fn effective_params(&self) -> MetacogParams<T> {
        if self.ablations.verbalized_confidence {
            self.params
        } else {
            self.params
                .with(ParamKey::Lambda, T::zero())
                .expect("zero is a legal lambda")
        }
    }

    fn assess(&self, agent: usize, task: &Task) -> Result<ConfidenceBreakdown<T>> {
        let params = self.effective_params();
        let profile_conf = mcu::profile_confidence(&self.profiles[agent], &task.dimensions)?;
        let verbalized = if self.ablations.verbalized_confidence {
            let mut rng = substream(self.seed, &["assess", self.roster[agent].id(), &task.id]);
            self.roster[agent].verbalized_confidence(task, &mut rng)?
        } else {
            profile_conf
        };
        mcu::fuse_confidence(verbalized, profile_conf, &params)
    }

    fn execute(&self, agent: usize, task: &Task) -> Result<String> {
        let mut rng = substream(self.seed, &["execute", self.roster[agent].id(), &task.id]);
        Ok(self.roster[agent].execute(task, &mut rng)?.answer)
    }

    fn single(
        &self,
        mode: Mode,
        original: usize,
        executor: usize,
        assessments: BTreeMap<usize, ConfidenceBreakdown<T>>,
        task: &Task,
    ) -> Result<RoutingDecision<T>> {
        let answer = self.execute(executor, task)?;
        Ok(self.finish(RoutingDecision {
            mode,
            original_agent: original,
            executing_agents: vec![executor],
            assessments,
            answers: BTreeMap::from([(executor, answer.clone())]),
            final_answer: answer,
            api_calls: 0,
        }))
    }

    fn everyone(
        &self,
        original: usize,
        assessments: BTreeMap<usize, ConfidenceBreakdown<T>>,
        weights: BTreeMap<usize, T>,
        task: &Task,
    ) -> Result<RoutingDecision<T>> {
        let answers = (0..self.roster.len())
            .map(|j| Ok((j, self.execute(j, task)?)))
            .collect::<Result<BTreeMap<_, _>>>()?;
        let final_answer = weighted_vote(&answers, &weights)?;
        Ok(self.finish(RoutingDecision {
            mode: Mode::Collaborative,
            original_agent: original,
            executing_agents: (0..self.roster.len()).collect(),
            assessments,
            answers,
            final_answer,
            api_calls: 0,
        }))
    }

    fn finish(&self, mut d: RoutingDecision<T>) -> RoutingDecision<T> {
        d.api_calls = api_call_cost(&d);
        d
    }

    /// Decides and executes one task without touching profiles.
    pub fn route(&self, task: &Task, task_index: u64) -> Result<RoutingDecision<T>> {
        let n = self.roster.len();
        let assignee = dispatch(task_index, n)?;
        match self.policy {
            Policy::Metacog => self.route_metacog(task, assignee),
            Policy::SingleAgent => self.single(Mode::Direct, 0, 0, BTreeMap::new(), task),
            Policy::RoundRobin => self.single(Mode::Direct, assignee, assignee, BTreeMap::new(), task),
            Policy::Random => {
                let pick = substream(self.seed, &["route", &task.id]).random_range(0..n);
                self.single(Mode::Direct, pick, pick, BTreeMap::new(), task)
            }
            Policy::SkillFixed => {
                let pick = task
                    .dimensions
                    .iter()
                    .find_map(|d| self.roster.iter().position(|a| a.specialization() == Some(*d)))
                    .unwrap_or(assignee);
                self.single(Mode::Direct, pick, pick, BTreeMap::new(), task)
            }
            Policy::MajorityVote => {
                let uniform = (0..n).map(|j| (j, T::one())).collect();
                self.everyone(assignee, BTreeMap::new(), uniform, task)
            }
        }
    }

    fn route_metacog(&self, task: &Task, assignee: usize) -> Result<RoutingDecision<T>> {
        let n = self.roster.len();
        let theta = self.params.theta();
        let own = if self.ablations.self_assessment {
            self.assess(assignee, task)?
        } else {
            ConfidenceBreakdown {
                verbalized: theta,
                profile: theta,
                fused: theta,
                conflict: T::zero(),
                effective_threshold: theta,
            }
        };
        let mut assessments = BTreeMap::from([(assignee, own)]);
        if n == 1 || !self.ablations.adaptive_delegation || !own.should_delegate() {
            return self.single(Mode::Direct, assignee, assignee, assessments, task);
        }
        let peers = (0..n).filter(|j| *j != assignee);

        if !self.ablations.cross_agent_eval {
            let scored = peers
                .map(|j| Ok((j, mcu::profile_confidence(&self.profiles[j], &task.dimensions)?)))
                .collect::<Result<Vec<_>>>()?;
            let (target, _) = argmax(scored).expect("roster has a peer");
            return self.single(Mode::Delegated, assignee, target, assessments, task);
        }

        for j in peers {
            assessments.insert(j, self.assess(j, task)?);
        }
        let best = argmax(
            assessments
                .iter()
                .filter(|(j, _)| **j != assignee)
                .map(|(j, b)| (*j, b.fused)),
        );
        match best {
            Some((target, c)) if !c.clearly_below(theta) => self.single(Mode::Delegated, assignee, target, assessments, task),
            _ => {
                let weights = assessments.iter().map(|(j, b)| (*j, b.fused)).collect();
                self.everyone(assignee, assessments, weights, task)
            }
        }
    }

    /// Routes the next task in sequence, applies feedback and returns the
    /// log record.
    pub fn process(&mut self, task: &Task) -> Result<TaskRecord<T>> {
        let index = self.next_index;
        let decision = self.route(task, index)?;
        let alpha = self.ablations.boundary_learning.then(|| self.params.alpha());
        let outcome = merge_and_feedback(&decision, task, &mut self.profiles, alpha)?;
        self.next_index += 1;
        self.total_api_calls += decision.api_calls;
        Ok(TaskRecord {
            index,
            task_id: task.id.clone(),
            difficulty: task.difficulty,
            dimensions: task.dimensions.clone(),
            roster_size: self.roster.len(),
            decision,
            outcome,
        })
    }

    pub fn run(&mut self, tasks: &[Task]) -> Result<Vec<TaskRecord<T>>> {
        tasks.iter().map(|t| self.process(t)).collect()
    }
}
