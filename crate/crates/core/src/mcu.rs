//! Metacognitive self-assessment: confidence fusion, conflict detection and
//! the effective delegation threshold.
//!
//! An agent's fused confidence for a task is a convex mix of what it says
//! about itself (verbalized) and what its history says (profile):
//!
//! ```text
//! c  = λ·c_v + (1 − λ)·c_p
//! δ  = |c_v − c_p|
//! θ' = θ + γ·δ   if δ > θ_δ,   else θ
//! ```
//!
//! The agent keeps the task when `c ≥ θ'` and starts delegation otherwise.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::profile::CapabilityProfile;
use crate::scalar::Scalar;
use crate::task::Dimension;

/// Tunable knobs of the self-assessment and learning loop.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawParams<T>", into = "RawParams<T>")]
#[serde(bound(serialize = "T: Scalar", deserialize = "T: Scalar"))]
pub struct MetacogParams<T> {
    lambda: T,
    theta: T,
    theta_delta: T,
    gamma: T,
    alpha: T,
}

#[derive(Clone, Copy, Serialize, Deserialize)]
struct RawParams<T> {
    lambda: T,
    theta: T,
    theta_delta: T,
    gamma: T,
    alpha: T,
}

impl<T: Scalar> TryFrom<RawParams<T>> for MetacogParams<T> {
    type Error = Error;

    fn try_from(r: RawParams<T>) -> Result<Self> {
        MetacogParams::new(r.lambda, r.theta, r.theta_delta, r.gamma, r.alpha)
    }
}

impl<T: Scalar> From<MetacogParams<T>> for RawParams<T> {
    fn from(p: MetacogParams<T>) -> Self {
        RawParams {
            lambda: p.lambda,
            theta: p.theta,
            theta_delta: p.theta_delta,
            gamma: p.gamma,
            alpha: p.alpha,
        }
    }
}

/// Names of the individual parameters, as used in configuration keys and
/// sensitivity sweeps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ParamKey {
    Lambda,
    Theta,
    ThetaDelta,
    Gamma,
    Alpha,
}

impl ParamKey {
    pub const ALL: [ParamKey; 5] = [
        ParamKey::Lambda,
        ParamKey::Theta,
        ParamKey::ThetaDelta,
        ParamKey::Gamma,
        ParamKey::Alpha,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ParamKey::Lambda => "lambda",
            ParamKey::Theta => "theta",
            ParamKey::ThetaDelta => "theta_delta",
            ParamKey::Gamma => "gamma",
            ParamKey::Alpha => "alpha",
        }
    }

    fn range(self) -> &'static str {
        match self {
            ParamKey::Gamma => "[0, inf)",
            ParamKey::Alpha => "(0, 1]",
            _ => "[0, 1]",
        }
    }

    /// Checks a candidate value against this parameter's legal range.
    pub fn check<T: Scalar>(self, value: T) -> Result<()> {
        let ok = match self {
            ParamKey::Gamma => value >= T::zero() && value.is_finite(),
            ParamKey::Alpha => value > T::zero() && value <= T::one(),
            _ => value.in_unit_interval(),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::ParamOutOfRange {
                name: self.name(),
                value: value.as_f64(),
                range: self.range(),
            })
        }
    }
}

impl fmt::Display for ParamKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ParamKey {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ParamKey::ALL
            .into_iter()
            .find(|k| k.name() == s.trim())
            .ok_or_else(|| Error::Config(format!("unknown parameter `{s}`")))
    }
}

impl<T: Scalar> MetacogParams<T> {
    pub fn new(lambda: T, theta: T, theta_delta: T, gamma: T, alpha: T) -> Result<Self> {
        let p = MetacogParams {
            lambda,
            theta,
            theta_delta,
            gamma,
            alpha,
        };
        for key in ParamKey::ALL {
            key.check(p.get(key))?;
        }
        Ok(p)
    }

    pub fn get(&self, key: ParamKey) -> T {
        match key {
            ParamKey::Lambda => self.lambda,
            ParamKey::Theta => self.theta,
            ParamKey::ThetaDelta => self.theta_delta,
            ParamKey::Gamma => self.gamma,
            ParamKey::Alpha => self.alpha,
        }
    }

    /// Returns a copy with one parameter replaced, rejecting illegal values.
    pub fn with(mut self, key: ParamKey, value: T) -> Result<Self> {
        key.check(value)?;
        match key {
            ParamKey::Lambda => self.lambda = value,
            ParamKey::Theta => self.theta = value,
            ParamKey::ThetaDelta => self.theta_delta = value,
            ParamKey::Gamma => self.gamma = value,
            ParamKey::Alpha => self.alpha = value,
        }
        Ok(self)
    }

    pub fn lambda(&self) -> T {
        self.lambda
    }
    pub fn theta(&self) -> T {
        self.theta
    }
    pub fn theta_delta(&self) -> T {
        self.theta_delta
    }
    pub fn gamma(&self) -> T {
        self.gamma
    }
    pub fn alpha(&self) -> T {
        self.alpha
    }
}

impl<T: Scalar> Default for MetacogParams<T> {
    /// λ = 0.6, θ = 0.5, θ_δ = 0.3, γ = 0.2, α = 0.1.
    fn default() -> Self {
        MetacogParams {
            lambda: T::of(0.6),
            theta: T::of(0.5),
            theta_delta: T::of(0.3),
            gamma: T::of(0.2),
            alpha: T::of(0.1),
        }
    }
}

/// One agent's assessment of one task.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConfidenceBreakdown<T> {
    pub verbalized: T,
    pub profile: T,
    pub fused: T,
    pub conflict: T,
    pub effective_threshold: T,
}

impl<T: Scalar> ConfidenceBreakdown<T> {
    /// True when the assessing agent should hand the task off.
    pub fn should_delegate(&self) -> bool {
        self.fused.clearly_below(self.effective_threshold)
    }
}

/// Profile-based confidence: the stored success rate for a single-label
/// task, the arithmetic mean of the involved entries for a cross-domain one.
pub fn profile_confidence<T: Scalar>(profile: &CapabilityProfile<T>, dimensions: &[Dimension]) -> Result<T> {
    if dimensions.is_empty() {
        return Err(Error::EmptyDimensions);
    }
    let sum = dimensions
        .iter()
        .fold(T::zero(), |acc, d| acc + profile.value(*d));
    Ok(sum / T::of(dimensions.len() as f64))
}

/// θ + γ·δ when δ strictly exceeds θ_δ, otherwise θ. Not capped at 1.
/// Differences within rounding noise of θ_δ count as equal to it.
pub fn effective_threshold<T: Scalar>(conflict: T, params: &MetacogParams<T>) -> T {
    if conflict.clearly_above(params.theta_delta()) {
        params.theta() + params.gamma() * conflict
    } else {
        params.theta()
    }
}

pub fn fuse_confidence<T: Scalar>(verbalized: T, profile_conf: T, params: &MetacogParams<T>) -> Result<ConfidenceBreakdown<T>> {
    if !verbalized.in_unit_interval() {
        return Err(Error::NotUnitInterval {
            what: "verbalized confidence",
            value: verbalized.as_f64(),
        });
    }
    if !profile_conf.in_unit_interval() {
        return Err(Error::NotUnitInterval {
            what: "profile confidence",
            value: profile_conf.as_f64(),
        });
    }
    let lambda = params.lambda();
    let fused = (lambda * verbalized + (T::one() - lambda) * profile_conf).clamp_unit();
    let conflict = (verbalized - profile_conf).abs();
    Ok(ConfidenceBreakdown {
        verbalized,
        profile: profile_conf,
        fused,
        conflict,
        effective_threshold: effective_threshold(conflict, params),
    })
}

/// Full self-assessment of a task against a stored profile.
pub fn assess<T: Scalar>(
    verbalized: T,
    profile: &CapabilityProfile<T>,
    dimensions: &[Dimension],
    params: &MetacogParams<T>,
) -> Result<ConfidenceBreakdown<T>> {
    fuse_confidence(verbalized, profile_confidence(profile, dimensions)?, params)
}
