use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Confidence-weighted plurality: the answer maximizing Σ c_i·1[y_i = y].
///
/// Agents are visited in index order. When several answers tie on weight,
/// the one first proposed by the lowest-indexed agent wins.
pub fn weighted_vote<T: Scalar>(answers: &BTreeMap<usize, String>, confidences: &BTreeMap<usize, T>) -> Result<String> {
    if answers.is_empty() || !answers.keys().eq(confidences.keys()) {
        return Err(Error::VoteMismatch);
    }
    // (answer, accumulated weight) in order of first appearance
    let mut tally: Vec<(&str, T)> = Vec::new();
    for (agent, answer) in answers {
        let w = confidences[agent];
        match tally.iter_mut().find(|(a, _)| *a == answer.as_str()) {
            Some((_, total)) => *total = *total + w,
            None => tally.push((answer, w)),
        }
    }
    let mut best = 0;
    for (i, (_, w)) in tally.iter().enumerate().skip(1) {
        if *w > tally[best].1 {
            best = i;
        }
    }
    Ok(tally[best].0.to_string())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn maps(conf: &[f64], ans: &[&str]) -> (BTreeMap<usize, String>, BTreeMap<usize, f64>) {
        (
            ans.iter().enumerate().map(|(i, a)| (i, a.to_string())).collect(),
            conf.iter().copied().enumerate().collect(),
        )
    }

    /// Enumerates every distinct answer, sums its support from scratch and
    /// picks the maximum; ties go to the answer whose earliest supporter has
    /// the lowest index.
    fn brute_force(answers: &BTreeMap<usize, String>, conf: &BTreeMap<usize, f64>) -> String {
        let mut candidates: Vec<&String> = answers.values().collect();
        candidates.sort();
        candidates.dedup();
        let score = |y: &String| -> f64 {
            answers
                .iter()
                .map(|(i, a)| if a == y { conf[i] } else { 0.0 })
                .sum()
        };
        let first_proposer = |y: &String| answers.iter().find(|(_, a)| *a == y).map(|(i, _)| *i).unwrap();
        let top = candidates.iter().map(|y| score(y)).fold(f64::NEG_INFINITY, f64::max);
        candidates
            .into_iter()
            .filter(|y| score(y) == top)
            .min_by_key(|y| first_proposer(y))
            .unwrap()
            .clone()
    }

    #[test]
    fn examples() {
        let (a, c) = maps(&[0.9, 0.3, 0.7], &["A", "B", "B"]);
        assert_eq!(weighted_vote(&a, &c).unwrap(), "B");
        let (a, c) = maps(&[0.1, 0.9, 0.4], &["Z", "Z", "Z"]);
        assert_eq!(weighted_vote(&a, &c).unwrap(), "Z");
        let (a, c) = maps(&[0.5, 0.5], &["A", "B"]);
        assert_eq!(weighted_vote(&a, &c).unwrap(), "A");
        assert_eq!(brute_force(&a, &c), "A");
    }

    #[test]
    fn mismatched_inputs_rejected() {
        let (a, mut c) = maps(&[0.5, 0.5], &["A", "B"]);
        c.remove(&1);
        assert!(weighted_vote(&a, &c).is_err());
        assert!(weighted_vote::<f64>(&BTreeMap::new(), &BTreeMap::new()).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(2_000))]
        #[test]
        fn agrees_with_enumeration(
            entries in proptest::collection::vec((0u8..4, 0u8..=4), 1..=6),
        ) {
            // Coarse confidences make exact ties common.
            let answers: BTreeMap<usize, String> =
                entries.iter().enumerate().map(|(i, (a, _))| (i, format!("ans{a}"))).collect();
            let conf: BTreeMap<usize, f64> =
                entries.iter().enumerate().map(|(i, (_, c))| (i, f64::from(*c) * 0.25)).collect();
            prop_assert_eq!(weighted_vote(&answers, &conf).unwrap(), brute_force(&answers, &conf));
        }
    }
}
