//! Capability profiles and the exponential-moving-average feedback update.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::task::Dimension;

/// Binary correctness signal. Serialized as the integer 0 or 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub enum Reward {
    Incorrect,
    Correct,
}

impl Reward {
    pub fn from_correct(correct: bool) -> Self {
        if correct {
            Reward::Correct
        } else {
            Reward::Incorrect
        }
    }

    pub fn is_correct(self) -> bool {
        self == Reward::Correct
    }

    pub fn value<T: Scalar>(self) -> T {
        match self {
            Reward::Incorrect => T::zero(),
            Reward::Correct => T::one(),
        }
    }
}

impl From<Reward> for u8 {
    fn from(r: Reward) -> u8 {
        r as u8
    }
}

impl TryFrom<u8> for Reward {
    type Error = String;

    fn try_from(v: u8) -> std::result::Result<Self, String> {
        match v {
            0 => Ok(Reward::Incorrect),
            1 => Ok(Reward::Correct),
            other => Err(format!("reward must be 0 or 1, got {other}")),
        }
    }
}

/// The evaluated result of one task.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Outcome {
    pub task_id: String,
    pub answer: String,
    pub reward: Reward,
    pub executing_agents: Vec<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProfileEntry<T> {
    pub value: T,
    pub count: u64,
}

/// Per-dimension success-rate estimates of one agent.
///
/// Serialized as `{"LR": {"value": .., "count": ..}, ...}` with all five
/// dimensions present.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(
    try_from = "BTreeMap<Dimension, ProfileEntry<T>>",
    into = "BTreeMap<Dimension, ProfileEntry<T>>"
)]
#[serde(bound(serialize = "T: Scalar", deserialize = "T: Scalar"))]
pub struct CapabilityProfile<T> {
    entries: [ProfileEntry<T>; 5],
}

impl<T: Scalar> CapabilityProfile<T> {
    /// All five dimensions at `initial`, zero observations.
    pub fn uniform(initial: T) -> Result<Self> {
        if !initial.in_unit_interval() {
            return Err(Error::NotUnitInterval {
                what: "initial profile value",
                value: initial.as_f64(),
            });
        }
        Ok(CapabilityProfile {
            entries: [ProfileEntry {
                value: initial,
                count: 0,
            }; 5],
        })
    }

    pub fn value(&self, d: Dimension) -> T {
        self.entries[d.index()].value
    }

    pub fn count(&self, d: Dimension) -> u64 {
        self.entries[d.index()].count
    }

    pub fn set(&mut self, d: Dimension, value: T) -> Result<()> {
        if !value.in_unit_interval() {
            return Err(Error::NotUnitInterval {
                what: "profile value",
                value: value.as_f64(),
            });
        }
        self.entries[d.index()].value = value;
        Ok(())
    }

    pub fn iter(&self) -> impl Iterator<Item = (Dimension, ProfileEntry<T>)> + '_ {
        Dimension::ALL.into_iter().zip(self.entries.iter().copied())
    }

    /// `p ← p + α·(r − p)` on every listed dimension; each listed dimension
    /// receives the full update and one more observation.
    pub fn apply_feedback(&mut self, dimensions: &[Dimension], reward: Reward, alpha: T) -> Result<()> {
        if !(alpha > T::zero() && alpha <= T::one()) {
            return Err(Error::ParamOutOfRange {
                name: "alpha",
                value: alpha.as_f64(),
                range: "(0, 1]",
            });
        }
        if dimensions.is_empty() {
            return Err(Error::EmptyDimensions);
        }
        let r = reward.value::<T>();
        for d in dimensions {
            let e = &mut self.entries[d.index()];
            // Round-off can leave p a hair outside [0, 1] when α = 1.
            e.value = (e.value + alpha * (r - e.value)).clamp_unit();
            e.count += 1;
        }
        Ok(())
    }
}

impl<T: Scalar> Default for CapabilityProfile<T> {
    fn default() -> Self {
        Self::uniform(T::half()).expect("0.5 is a valid initial value")
    }
}

impl<T: Scalar> TryFrom<BTreeMap<Dimension, ProfileEntry<T>>> for CapabilityProfile<T> {
    type Error = Error;

    fn try_from(map: BTreeMap<Dimension, ProfileEntry<T>>) -> Result<Self> {
        let mut profile = CapabilityProfile::uniform(T::zero())?;
        for d in Dimension::ALL {
            let entry = map
                .get(&d)
                .ok_or_else(|| Error::Config(format!("profile is missing dimension {d}")))?;
            profile.set(d, entry.value)?;
            profile.entries[d.index()].count = entry.count;
        }
        Ok(profile)
    }
}

impl<T: Scalar> From<CapabilityProfile<T>> for BTreeMap<Dimension, ProfileEntry<T>> {
    fn from(p: CapabilityProfile<T>) -> Self {
        p.iter().collect()
    }
}

/// Approximate number of recent tasks that dominate the estimate, `1/α`.
pub fn effective_memory_horizon<T: Scalar>(alpha: T) -> Result<T> {
    if !(alpha > T::zero() && alpha <= T::one()) {
        return Err(Error::ParamOutOfRange {
            name: "alpha",
            value: alpha.as_f64(),
            range: "(0, 1]",
        });
    }
    Ok(T::one() / alpha)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn uniform_initialization() {
        for v in [0.5, 0.0, 1.0] {
            let p = CapabilityProfile::uniform(v).unwrap();
            assert!(p.iter().all(|(_, e)| e.value == v && e.count == 0));
            assert_eq!(p.iter().count(), 5);
        }
        assert!(CapabilityProfile::uniform(1.5f64).is_err());
        assert_eq!(CapabilityProfile::<f64>::default().value(Dimension::CI), 0.5);
    }

    #[test]
    fn ema_examples() {
        let mut p = CapabilityProfile::uniform(0.5f64).unwrap();
        p.apply_feedback(&[Dimension::LR], Reward::Correct, 0.1).unwrap();
        assert!((p.value(Dimension::LR) - 0.55).abs() < 1e-15);
        assert_eq!(p.count(Dimension::LR), 1);
        assert_eq!(p.count(Dimension::KR), 0);

        p.set(Dimension::KR, 0.8).unwrap();
        p.apply_feedback(&[Dimension::KR], Reward::Incorrect, 0.1).unwrap();
        assert!((p.value(Dimension::KR) - 0.72).abs() < 1e-15);

        p.set(Dimension::CG, 1.0).unwrap();
        p.apply_feedback(&[Dimension::CG], Reward::Correct, 0.1).unwrap();
        assert_eq!(p.value(Dimension::CG), 1.0);
    }

    #[test]
    fn cross_domain_update_hits_every_dimension() {
        let mut p = CapabilityProfile::uniform(0.5f64).unwrap();
        p.apply_feedback(&[Dimension::MC, Dimension::CG], Reward::Correct, 0.1).unwrap();
        assert!((p.value(Dimension::MC) - 0.55).abs() < 1e-15);
        assert!((p.value(Dimension::CG) - 0.55).abs() < 1e-15);
        assert_eq!(p.value(Dimension::LR), 0.5);
    }

    #[test]
    fn feedback_rejects_bad_alpha() {
        let mut p = CapabilityProfile::uniform(0.5f64).unwrap();
        assert!(p.apply_feedback(&[Dimension::LR], Reward::Correct, 0.0).is_err());
        assert!(p.apply_feedback(&[Dimension::LR], Reward::Correct, 1.1).is_err());
    }

    #[test]
    fn memory_horizon() {
        assert!((effective_memory_horizon(0.1f64).unwrap() - 10.0).abs() < 1e-12);
        assert_eq!(effective_memory_horizon(1.0f64).unwrap(), 1.0);
        assert!((effective_memory_horizon(0.05f64).unwrap() - 20.0).abs() < 1e-12);
        assert!(effective_memory_horizon(0.0f64).is_err());
    }

    #[test]
    fn reward_serializes_as_integer() {
        assert_eq!(serde_json::to_string(&Reward::Correct).unwrap(), "1");
        assert_eq!(serde_json::from_str::<Reward>("0").unwrap(), Reward::Incorrect);
        assert!(serde_json::from_str::<Reward>("2").is_err());
    }

    #[test]
    fn profile_json_requires_all_dimensions() {
        let p = CapabilityProfile::uniform(0.25f64).unwrap();
        let json = serde_json::to_string(&p).unwrap();
        assert!(json.starts_with(r#"{"LR":{"value":0.25,"count":0}"#));
        let back: CapabilityProfile<f64> = serde_json::from_str(&json).unwrap();
        assert_eq!(back, p);
        let partial = r#"{"LR":{"value":0.5,"count":0}}"#;
        assert!(serde_json::from_str::<CapabilityProfile<f64>>(partial).is_err());
    }

    proptest! {
        #[test]
        fn range_preserved(
            init in 0.0..=1.0f64,
            alpha in 0.001..=1.0f64,
            rewards in proptest::collection::vec(any::<bool>(), 0..200),
        ) {
            let mut p = CapabilityProfile::uniform(init).unwrap();
            for r in rewards {
                p.apply_feedback(&[Dimension::MC], Reward::from_correct(r), alpha).unwrap();
                prop_assert!(p.value(Dimension::MC).in_unit_interval());
            }
        }

        #[test]
        fn update_contracts_toward_reward(init in 0.0..=1.0f64, alpha in 0.001..=1.0f64, r in any::<bool>()) {
            let mut p = CapabilityProfile::uniform(init).unwrap();
            let reward = Reward::from_correct(r);
            p.apply_feedback(&[Dimension::LR], reward, alpha).unwrap();
            let target: f64 = reward.value();
            let after = (p.value(Dimension::LR) - target).abs();
            let before = (init - target).abs();
            prop_assert!((after - (1.0 - alpha) * before).abs() < 1e-12);
        }
    }
}
