//! Expected calibration error over ten equal-width confidence bins.
//!
//! Bins are half-open `[k/10, (k+1)/10)` except the last, which is closed so
//! that a confidence of exactly 1 lands in it.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

pub const NUM_BINS: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReliabilityBin<T> {
    pub lower: T,
    pub upper: T,
    pub count: usize,
    /// Zero for empty bins.
    pub mean_confidence: T,
    /// Zero for empty bins.
    pub accuracy: T,
}

fn edge<T: Scalar>(k: usize) -> T {
    T::of(k as f64) / T::of(NUM_BINS as f64)
}

/// Bin holding confidence `c`, consistent with the edges returned by
/// [`reliability_bins`] even where `c·10` rounds across an integer.
pub fn bin_index<T: Scalar>(c: T) -> usize {
    let scaled = (c * T::of(NUM_BINS as f64)).floor().to_usize().unwrap_or(0);
    let mut k = scaled.min(NUM_BINS - 1);
    while k > 0 && c < edge(k) {
        k -= 1;
    }
    while k + 1 < NUM_BINS && c >= edge(k + 1) {
        k += 1;
    }
    k
}

fn check<T: Scalar>(records: &[(T, bool)]) -> Result<()> {
    match records.iter().find(|(c, _)| !c.in_unit_interval()) {
        Some((c, _)) => Err(Error::NotUnitInterval {
            what: "confidence",
            value: c.as_f64(),
        }),
        None => Ok(()),
    }
}

pub fn reliability_bins<T: Scalar>(records: &[(T, bool)]) -> Result<Vec<ReliabilityBin<T>>> {
    check(records)?;
    let mut sums = [(0usize, T::zero(), 0usize); NUM_BINS];
    for (c, correct) in records {
        let s = &mut sums[bin_index(*c)];
        s.0 += 1;
        s.1 = s.1 + *c;
        s.2 += usize::from(*correct);
    }
    Ok(sums
        .iter()
        .enumerate()
        .map(|(k, (count, conf_sum, hits))| {
            let (mean_confidence, accuracy) = if *count == 0 {
                (T::zero(), T::zero())
            } else {
                let n = T::of(*count as f64);
                (*conf_sum / n, T::of(*hits as f64) / n)
            };
            ReliabilityBin {
                lower: edge(k),
                upper: edge(k + 1),
                count: *count,
                mean_confidence,
                accuracy,
            }
        })
        .collect())
}

/// Σ_b (|B_b|/n)·|acc(B_b) − conf(B_b)|. Empty bins contribute nothing.
pub fn ece<T: Scalar>(records: &[(T, bool)]) -> Result<T> {
    if records.is_empty() {
        return Err(Error::EmptyRecords("ece"));
    }
    let n = T::of(records.len() as f64);
    Ok(reliability_bins(records)?
        .iter()
        .filter(|b| b.count > 0)
        .fold(T::zero(), |acc, b| {
            acc + T::of(b.count as f64) / n * (b.accuracy - b.mean_confidence).abs()
        }))
}
