//! Experiment configuration.
//!
//! Configuration is a flat `key = value` file with dotted keys; `#` starts a
//! comment. Sources are layered: built-in defaults, then the file, then
//! command-line overrides, with later layers winning key by key.
//!
//! | key | meaning |
//! |-----|---------|
//! | `params.lambda`, `params.theta`, `params.theta_delta`, `params.gamma`, `params.alpha` | routing parameters |
//! | `policy` | `metacog`, `single_agent`, `round_robin`, `random`, `skill_fixed`, `majority_vote` |
//! | `seed` | one seed or a comma-separated list |
//! | `out` | output directory |
//! | `benchmark.path` | JSONL benchmark to load (excludes the generation keys) |
//! | `benchmark.seed` | generation seed (defaults to the run seed) |
//! | `benchmark.cross_count`, `benchmark.<DIM>.<Easy/Medium/Hard>` | generation counts |
//! | `profile.initial` | initial value of every profile entry |
//! | `profile.load` | profile snapshot to start from |
//! | `ablate.<component>` | `true` removes `self_assessment`, `adaptive_delegation`, `boundary_learning`, `cross_agent_eval` or `verbalized_confidence` |
//! | `roster.size` | number of agents (default 3) |
//! | `roster.bias`, `roster.noise` | verbalization bias / noise for every agent |
//! | `roster.<k>.id`, `.name`, `.specialization`, `.specialty`, `.general`, `.step`, `.bias`, `.noise` | per-agent settings |
//! | `roster.<k>.competence.<DIM>.<DIFF>` | one true-competence cell |

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::agents::{default_roster, AgentSpec};
use crate::benchgen::{BenchmarkSpec, Cell};
use crate::error::{Error, Result};
use crate::mcu::{MetacogParams, ParamKey};
use crate::orchestrator::{Ablations, Policy};
use crate::task::{Difficulty, Dimension};

#[derive(Debug, Clone, PartialEq)]
pub enum BenchmarkSource {
    File(PathBuf),
    /// `spec.seed` is ignored when `seed_from_run` is set; each run then
    /// generates its benchmark from its own seed.
    Generate { spec: BenchmarkSpec, seed_from_run: bool },
}

impl BenchmarkSource {
    pub fn spec_for(&self, run_seed: u64) -> Option<BenchmarkSpec> {
        match self {
            BenchmarkSource::File(_) => None,
            BenchmarkSource::Generate { spec, seed_from_run } => {
                Some(if *seed_from_run { spec.clone().with_seed(run_seed) } else { spec.clone() })
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub params: MetacogParams<f64>,
    pub roster: Vec<AgentSpec>,
    pub policy: Policy,
    pub benchmark: BenchmarkSource,
    pub seeds: Vec<u64>,
    pub out_dir: Option<PathBuf>,
    pub ablations: Ablations,
    pub initial_profile: f64,
    pub profile_snapshot: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            params: MetacogParams::default(),
            roster: default_roster(),
            policy: Policy::Metacog,
            benchmark: BenchmarkSource::Generate {
                spec: BenchmarkSpec::default(),
                seed_from_run: true,
            },
            seeds: vec![0],
            out_dir: None,
            ablations: Ablations::FULL,
            initial_profile: 0.5,
            profile_snapshot: None,
        }
    }
}

/// Ordered key/value layers. Later `set` calls replace earlier values.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ConfigLayers {
    values: BTreeMap<String, String>,
}

impl ConfigLayers {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn set(&mut self, key: impl Into<String>, value: impl Into<String>) {
        self.values.insert(key.into().trim().to_string(), value.into().trim().to_string());
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    /// Parses `key = value` lines; blank lines and `#` comments are skipped.
    pub fn merge_text(&mut self, text: &str, origin: &str) -> Result<()> {
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("{origin}:{}: expected `key = value`", n + 1)))?;
            if k.trim().is_empty() {
                return Err(Error::Config(format!("{origin}:{}: empty key", n + 1)));
            }
            self.set(k, v);
        }
        Ok(())
    }

    pub fn merge_file(&mut self, path: &Path) -> Result<()> {
        let text = fs::read_to_string(path).map_err(|source| Error::Read {
            path: path.to_path_buf(),
            source,
        })?;
        self.merge_text(&text, &path.display().to_string())
    }

    /// Applies one `KEY=VALUE` override as given on the command line.
    pub fn merge_override(&mut self, assignment: &str) -> Result<()> {
        let (k, v) = assignment
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("override `{assignment}` is not KEY=VALUE")))?;
        self.set(k, v);
        Ok(())
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &str)> {
        self.values.iter().map(|(k, v)| (k.as_str(), v.as_str()))
    }
}

fn parse<T: FromStr>(key: &str, v: &str) -> Result<T> {
    v.parse()
        .map_err(|_| Error::Config(format!("`{key}`: cannot parse `{v}`")))
}

fn parse_bool(key: &str, v: &str) -> Result<bool> {
    match v.to_ascii_lowercase().as_str() {
        "true" | "yes" | "on" | "1" => Ok(true),
        "false" | "no" | "off" | "0" => Ok(false),
        _ => Err(Error::Config(format!("`{key}`: expected true or false, got `{v}`"))),
    }
}

pub fn parse_seed_list(key: &str, v: &str) -> Result<Vec<u64>> {
    let seeds = v
        .split(',')
        .map(|s| parse::<u64>(key, s.trim()))
        .collect::<Result<Vec<_>>>()?;
    if seeds.is_empty() {
        return Err(Error::Config(format!("`{key}` lists no seeds")));
    }
    Ok(seeds)
}

#[derive(Default)]
struct AgentOverrides {
    fields: BTreeMap<String, String>,
    cells: Vec<(Dimension, Difficulty, f64)>,
}

impl ExperimentConfig {
    pub fn from_layers(layers: &ConfigLayers) -> Result<Self> {
        let mut cfg = ExperimentConfig::default();
        let mut gen_spec = BenchmarkSpec::default();
        let mut gen_seed: Option<u64> = None;
        let mut gen_keys = Vec::new();
        let mut bench_path = None;
        let mut ablated = Vec::new();
        let mut roster_size = None;
        let mut roster_bias = None;
        let mut roster_noise = None;
        let mut agents: BTreeMap<usize, AgentOverrides> = BTreeMap::new();

        for (key, v) in layers.iter() {
            let parts: Vec<&str> = key.split('.').collect();
            match parts.as_slice() {
                ["params", name] => {
                    let k: ParamKey = name.parse()?;
                    cfg.params = cfg.params.with(k, parse(key, v)?)?;
                }
                ["policy"] => cfg.policy = v.parse()?,
                ["seed"] => cfg.seeds = parse_seed_list(key, v)?,
                ["out"] => cfg.out_dir = Some(PathBuf::from(v)),
                ["benchmark", "path"] => bench_path = Some(PathBuf::from(v)),
                ["benchmark", "seed"] => {
                    gen_seed = Some(parse(key, v)?);
                    gen_keys.push(key.to_string());
                }
                ["benchmark", "cross_count"] => {
                    gen_spec.set_count(Cell::Cross, parse(key, v)?);
                    gen_keys.push(key.to_string());
                }
                ["benchmark", dim, diff] => {
                    let d: Dimension = dim.parse()?;
                    let f: Difficulty = diff.parse()?;
                    if f == Difficulty::Cross {
                        return Err(Error::Config(format!("`{key}`: use benchmark.cross_count")));
                    }
                    gen_spec.set_count(Cell::Single(d, f), parse(key, v)?);
                    gen_keys.push(key.to_string());
                }
                ["profile", "initial"] => cfg.initial_profile = parse(key, v)?,
                ["profile", "load"] => cfg.profile_snapshot = Some(PathBuf::from(v)),
                ["ablate", component] => {
                    if parse_bool(key, v)? {
                        ablated.push(component.to_string());
                    }
                }
                ["roster", "size"] => roster_size = Some(parse::<usize>(key, v)?),
                ["roster", "bias"] => roster_bias = Some(parse::<f64>(key, v)?),
                ["roster", "noise"] => roster_noise = Some(parse::<f64>(key, v)?),
                ["roster", k, "competence", dim, diff] => {
                    let idx: usize = parse(key, k)?;
                    let cell = (dim.parse()?, diff.parse()?, parse(key, v)?);
                    agents.entry(idx).or_default().cells.push(cell);
                }
                ["roster", k, field] => {
                    let idx: usize = parse(key, k)?;
                    agents.entry(idx).or_default().fields.insert(field.to_string(), v.to_string());
                }
                _ => return Err(Error::Config(format!("unknown key `{key}`"))),
            }
        }

        for component in &ablated {
            let a = &mut cfg.ablations;
            match component.as_str() {
                "self_assessment" => a.self_assessment = false,
                "adaptive_delegation" => a.adaptive_delegation = false,
                "boundary_learning" => a.boundary_learning = false,
                "cross_agent_eval" => a.cross_agent_eval = false,
                "verbalized_confidence" => a.verbalized_confidence = false,
                other => return Err(Error::Config(format!("unknown ablation component `{other}`"))),
            }
        }

        cfg.benchmark = match (bench_path, gen_keys.is_empty()) {
            (Some(_), false) => {
                return Err(Error::Config(format!(
                    "benchmark.path cannot be combined with generation keys ({})",
                    gen_keys.join(", ")
                )))
            }
            (Some(p), true) => BenchmarkSource::File(p),
            (None, _) => BenchmarkSource::Generate {
                spec: gen_spec.with_seed(gen_seed.unwrap_or(0)),
                seed_from_run: gen_seed.is_none(),
            },
        };

        let size = roster_size.unwrap_or(cfg.roster.len().max(agents.keys().max().map_or(0, |k| k + 1)));
        if let Some(k) = agents.keys().find(|k| **k >= size) {
            return Err(Error::Config(format!("roster.{k}.* given but roster.size is {size}")));
        }
        cfg.roster.truncate(size);
        while cfg.roster.len() < size {
            let i = cfg.roster.len();
            let dim = Dimension::ALL[i % Dimension::ALL.len()];
            cfg.roster.push(
                AgentSpec::specialist(format!("agent{i}"), format!("Agent-{i}"), dim, 0.85, 0.6, 0.1)?
                    .with_verbalization(0.0, 0.05),
            );
        }
        for agent in &mut cfg.roster {
            if let Some(b) = roster_bias {
                agent.verbalization_bias = b;
            }
            if let Some(n) = roster_noise {
                agent.verbalization_noise = n;
            }
        }
        for (idx, ov) in agents {
            apply_agent_overrides(&mut cfg.roster[idx], idx, ov)?;
        }

        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.roster.is_empty() {
            return Err(Error::EmptyRoster);
        }
        for (i, a) in self.roster.iter().enumerate() {
            a.validate()?;
            if self.roster[..i].iter().any(|b| b.id == a.id) {
                return Err(Error::DuplicateAgent(a.id.clone()));
            }
        }
        if self.policy != Policy::Metacog && !self.ablations.is_full() {
            return Err(Error::Config(format!(
                "ablation switches only apply to the metacog policy, not `{}`",
                self.policy
            )));
        }
        if self.seeds.is_empty() {
            return Err(Error::Config("no seeds".into()));
        }
        if !(0.0..=1.0).contains(&self.initial_profile) {
            return Err(Error::Config(format!(
                "profile.initial = {} is outside [0, 1]",
                self.initial_profile
            )));
        }
        Ok(())
    }
}

fn apply_agent_overrides(agent: &mut AgentSpec, idx: usize, ov: AgentOverrides) -> Result<()> {
    let f = &ov.fields;
    let key = |name: &str| format!("roster.{idx}.{name}");
    let num = |name: &str| -> Result<Option<f64>> { f.get(name).map(|v| parse(&key(name), v)).transpose() };
    if let Some(id) = f.get("id") {
        agent.id = id.clone();
    }
    if let Some(name) = f.get("name") {
        agent.name = name.clone();
    }
    let specialization = match f.get("specialization") {
        Some(v) => Some(v.parse::<Dimension>()?),
        None => None,
    };
    let (specialty, general, step) = (num("specialty")?, num("general")?, num("step")?);
    if specialization.is_some() || specialty.is_some() || general.is_some() || step.is_some() {
        let rebuilt = AgentSpec::specialist(
            agent.id.clone(),
            agent.name.clone(),
            specialization.unwrap_or(agent.specialization),
            specialty.unwrap_or(0.85),
            general.unwrap_or(0.6),
            step.unwrap_or(0.1),
        )?;
        agent.specialization = rebuilt.specialization;
        agent.true_competence = rebuilt.true_competence;
    }
    if let Some(b) = num("bias")? {
        agent.verbalization_bias = b;
    }
    if let Some(n) = num("noise")? {
        agent.verbalization_noise = n;
    }
    for (d, diff, p) in ov.cells {
        agent.true_competence.set(d, diff, p)?;
    }
    let known = ["id", "name", "specialization", "specialty", "general", "step", "bias", "noise"];
    if let Some(unknown) = f.keys().find(|k| !known.contains(&k.as_str())) {
        return Err(Error::Config(format!("unknown key `{}`", key(unknown))));
    }
    Ok(())
}
