//! Floating-point abstraction shared by the confidence, profile, vote and
//! calibration math. Everything above the simulation layer is instantiated
//! with `f64`; `f32` is supported for embedding in lower-precision hosts.

use std::fmt::{Debug, Display};

use num_traits::{Float, FromPrimitive, ToPrimitive};
use serde::de::DeserializeOwned;
use serde::Serialize;

/// A real scalar usable for confidences, success rates and metrics.
pub trait Scalar:
    Float
    + FromPrimitive
    + ToPrimitive
    + Debug
    + Display
    + Default
    + Serialize
    + DeserializeOwned
    + Send
    + Sync
    + 'static
{
    /// Lossy conversion from `f64`, used for configuration values and
    /// simulated draws.
    fn of(v: f64) -> Self {
        Self::from_f64(v).expect("f64 converts to every Scalar")
    }

    fn as_f64(self) -> f64 {
        self.to_f64().expect("Scalar converts to f64")
    }

    fn half() -> Self {
        Self::of(0.5)
    }

    /// True when the value lies in the closed unit interval (NaN is rejected).
    fn in_unit_interval(self) -> bool {
        self >= Self::zero() && self <= Self::one()
    }

    fn clamp_unit(self) -> Self {
        self.max(Self::zero()).min(Self::one())
    }

    /// Gap below which two confidences in [0, 1] count as equal. Covers the
    /// few ulps of rounding picked up by fusing and differencing values.
    fn tie_tolerance() -> Self {
        Self::epsilon() * Self::of(16.0)
    }

    /// `self < other` with near-equal values treated as a tie.
    fn clearly_below(self, other: Self) -> bool {
        self < other - Self::tie_tolerance()
    }

    /// `self > other` with near-equal values treated as a tie.
    fn clearly_above(self, other: Self) -> bool {
        self > other + Self::tie_tolerance()
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}
