//! Evaluation-based voting rules and ranking extraction.
//!
//! Every rule breaks remaining ties by the lowest candidate index and
//! records each tie it resolved in the result's trace.

use crate::profile::Profile;
use crate::stats::lower_median;
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

#[cfg(feature = "serde")]
use serde::{Deserialize, Serialize};

/// Largest candidate count accepted by [`ranking_distribution`].
pub const MAX_RANKED_CANDIDATES: usize = 7;

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum RuleError {
    #[error("approval threshold {threshold} is outside the scale [0, {max}]")]
    ThresholdOutOfScale { threshold: f64, max: f64 },
    #[error("{} voter(s) have tied evaluations (first: voter {})", .0.len(), .0[0])]
    TiesPresent(Vec<usize>),
    #[error("ranking distribution needs at most {MAX_RANKED_CANDIDATES} candidates, got {0}")]
    TooManyCandidates(usize),
}

#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Rule {
    Range,
    Mj,
    Approval,
}

impl Rule {
    pub fn name(&self) -> &'static str {
        match self {
            Rule::Range => "range",
            Rule::Mj => "mj",
            Rule::Approval => "approval",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ElectionResult {
    pub rule: Rule,
    /// Means, lower medians or approval counts, one per candidate.
    pub scores: Vec<f64>,
    /// 0-based index of the winner.
    pub winner: usize,
    /// One line per tie-break step; empty when no tie occurred.
    pub tie_trace: Vec<String>,
}

fn names_of(profile: &Profile, idx: &[usize]) -> String {
    let names: Vec<&str> = idx.iter().map(|&c| profile.names()[c].as_str()).collect();
    names.join(", ")
}

/// Winner by maximum score with the index tie-break.
fn argmax(profile: &Profile, rule: Rule, scores: Vec<f64>) -> ElectionResult {
    let best = scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let tied: Vec<usize> = (0..scores.len()).filter(|&c| scores[c] == best).collect();
    let mut tie_trace = Vec::new();
    if tied.len() > 1 {
        tie_trace.push(format!(
            "tie at {best} between {}; lowest index wins: {}",
            names_of(profile, &tied),
            profile.names()[tied[0]]
        ));
    }
    ElectionResult { rule, scores, winner: tied[0], tie_trace }
}

/// Highest mean evaluation.
pub fn range_winner(profile: &Profile) -> ElectionResult {
    let n = profile.n_voters() as f64;
    let mut sums = vec![0.0; profile.n_candidates()];
    for row in profile.rows() {
        for (s, x) in sums.iter_mut().zip(row) {
            *s += x;
        }
    }
    argmax(profile, Rule::Range, sums.into_iter().map(|s| s / n).collect())
}

/// Highest lower median; ties are broken by removing one median grade from
/// each tied candidate and comparing again.
pub fn majority_judgment_winner(profile: &Profile) -> ElectionResult {
    let mut grades: Vec<Vec<f64>> = profile.columns();
    for g in grades.iter_mut() {
        g.sort_by(f64::total_cmp);
    }
    let scores: Vec<f64> = grades.iter().map(|g| lower_median(g).expect("non-empty column")).collect();
    let mut tie_trace = Vec::new();
    let best = scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut tied: Vec<usize> = (0..scores.len()).filter(|&c| scores[c] == best).collect();
    let mut current = best;
    while tied.len() > 1 {
        if grades[tied[0]].len() <= 1 {
            tie_trace.push(format!(
                "grades exhausted with {} still tied; lowest index wins: {}",
                names_of(profile, &tied),
                profile.names()[tied[0]]
            ));
            break;
        }
        for &c in &tied {
            // sorted multiset: the lower median sits at (len - 1) / 2
            let g = &mut grades[c];
            g.remove((g.len() - 1) / 2);
        }
        let medians: Vec<f64> = tied.iter().map(|&c| lower_median(&grades[c]).unwrap()).collect();
        let top = medians.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        tie_trace.push(format!(
            "tie at median {current} between {}; removed one median grade each, new medians [{}]",
            names_of(profile, &tied),
            medians.iter().map(|m| format!("{m}")).collect::<Vec<_>>().join(", ")
        ));
        tied = tied.iter().zip(&medians).filter(|(_, &m)| m == top).map(|(&c, _)| c).collect();
        current = top;
    }
    ElectionResult { rule: Rule::Mj, scores, winner: tied[0], tie_trace }
}

/// Most approvals, where `e ≥ threshold` counts as approval.
pub fn approval_winner(profile: &Profile, threshold: f64) -> Result<ElectionResult, RuleError> {
    let max = profile.scale().max_grade();
    if !(0.0..=max).contains(&threshold) {
        return Err(RuleError::ThresholdOutOfScale { threshold, max });
    }
    let mut counts = vec![0.0; profile.n_candidates()];
    for row in profile.rows() {
        for (k, &x) in counts.iter_mut().zip(row) {
            if x >= threshold {
                *k += 1.0;
            }
        }
    }
    Ok(argmax(profile, Rule::Approval, counts))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TieMode {
    /// Report voters with tied evaluations as an error.
    StrictOrFail,
    /// Order tied candidates by index.
    IndexBreak,
}

fn order(row: &[f64]) -> (Vec<usize>, bool) {
    let mut idx: Vec<usize> = (0..row.len()).collect();
    idx.sort_by(|&a, &b| row[b].total_cmp(&row[a]).then(a.cmp(&b)));
    let tied = idx.windows(2).any(|w| row[w[0]] == row[w[1]]);
    (idx, tied)
}

/// Candidates of each voter from best to worst (0-based indices).
pub fn rankings(profile: &Profile, mode: TieMode) -> Result<Vec<Vec<usize>>, RuleError> {
    let mut out = Vec::with_capacity(profile.n_voters());
    let mut tied_voters = Vec::new();
    for (v, row) in profile.rows().enumerate() {
        let (o, tied) = order(row);
        if tied && mode == TieMode::StrictOrFail {
            tied_voters.push(v + 1);
        }
        out.push(o);
    }
    if tied_voters.is_empty() {
        Ok(out)
    } else {
        Err(RuleError::TiesPresent(tied_voters))
    }
}

/// Position of a permutation in lexicographic order.
fn lex_index(perm: &[usize]) -> usize {
    let m = perm.len();
    let mut fact = vec![1usize; m + 1];
    for i in 1..=m {
        fact[i] = fact[i - 1] * i;
    }
    let mut index = 0;
    for i in 0..m {
        let smaller = perm[i + 1..].iter().filter(|&&x| x < perm[i]).count();
        index += smaller * fact[m - 1 - i];
    }
    index
}

/// All permutations of `0..m` in lexicographic order.
pub fn permutations(m: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut p: Vec<usize> = (0..m).collect();
    loop {
        out.push(p.clone());
        let Some(i) = (1..m).rev().find(|&i| p[i - 1] < p[i]) else {
            break;
        };
        let j = (i..m).rev().find(|&j| p[j] > p[i - 1]).unwrap();
        p.swap(i - 1, j);
        p[i..].reverse();
    }
    out
}

/// Counts of each of the `m!` strict orders, in lexicographic order of the
/// orderings.
pub fn ranking_distribution(profile: &Profile, mode: TieMode) -> Result<Vec<(Vec<usize>, u64)>, RuleError> {
    let m = profile.n_candidates();
    if m > MAX_RANKED_CANDIDATES {
        return Err(RuleError::TooManyCandidates(m));
    }
    let mut counts: Vec<(Vec<usize>, u64)> = permutations(m).into_iter().map(|p| (p, 0)).collect();
    for r in rankings(profile, mode)? {
        counts[lex_index(&r)].1 += 1;
    }
    Ok(counts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators::{generate, GeneratorModel};
    use crate::profile::{validate_profile, Scale};
    use crate::rng::derive_stream;
    use crate::univariate::Marginal;
    use proptest::prelude::*;

    fn cont(rows: &[&[f64]]) -> Profile {
        let rows: Vec<Vec<f64>> = rows.iter().map(|r| r.to_vec()).collect();
        validate_profile(&rows, Scale::Continuous, None).unwrap()
    }

    fn disc(cols: &[&[f64]], k: u32) -> Profile {
        let n = cols[0].len();
        let rows: Vec<Vec<f64>> = (0..n).map(|v| cols.iter().map(|c| c[v]).collect()).collect();
        validate_profile(&rows, Scale::Discrete { levels: k }, None).unwrap()
    }

    #[test]
    fn range_examples() {
        let r = range_winner(&cont(&[&[0.2, 0.8], &[0.4, 0.6]]));
        assert!((r.scores[0] - 0.3).abs() < 1e-15 && (r.scores[1] - 0.7).abs() < 1e-15);
        assert_eq!(r.winner, 1);
        assert!(r.tie_trace.is_empty());
        let flat = range_winner(&cont(&[&[0.5, 0.5, 0.5], &[0.5, 0.5, 0.5]]));
        assert_eq!(flat.winner, 0);
        assert!(!flat.tie_trace.is_empty());
        assert_eq!(range_winner(&cont(&[&[0.1, 0.9, 0.3]])).winner, 1);
    }

    #[test]
    fn mj_examples() {
        let r = majority_judgment_winner(&disc(&[&[1.0, 3.0, 5.0], &[2.0, 2.0, 6.0]], 6));
        assert_eq!(r.scores, vec![3.0, 2.0]);
        assert_eq!(r.winner, 0);
        assert!(r.tie_trace.is_empty());
        let r = majority_judgment_winner(&disc(&[&[1.0, 3.0, 5.0], &[3.0, 3.0, 3.0]], 6));
        assert_eq!(r.winner, 1);
        assert_eq!(r.tie_trace.len(), 1);
        let r = majority_judgment_winner(&disc(&[&[3.0, 3.0, 3.0], &[1.0, 3.0, 5.0]], 6));
        assert_eq!(r.winner, 0);
        let same = majority_judgment_winner(&disc(&[&[1.0, 2.0, 4.0], &[1.0, 2.0, 4.0]], 6));
        assert_eq!(same.winner, 0);
        assert_eq!(same.tie_trace.len(), 3);
        assert!(same.tie_trace.last().unwrap().contains("lowest index"));
    }

    #[test]
    fn mj_lower_median_even() {
        let r = majority_judgment_winner(&disc(&[&[1.0, 4.0], &[2.0, 2.0]], 6));
        assert_eq!(r.scores, vec![1.0, 2.0]);
        assert_eq!(r.winner, 1);
    }

    #[test]
    fn approval_examples() {
        let p = cont(&[&[0.4, 0.6, 0.5]]);
        assert_eq!(approval_winner(&p, 0.5).unwrap().scores, vec![0.0, 1.0, 1.0]);
        let all = approval_winner(&p, 0.0).unwrap();
        assert_eq!(all.scores, vec![1.0, 1.0, 1.0]);
        assert_eq!(all.winner, 0);
        let r = approval_winner(&cont(&[&[0.2, 0.8], &[0.4, 0.6]]), 0.5).unwrap();
        assert_eq!((r.scores.clone(), r.winner), (vec![0.0, 2.0], 1));
        assert!(matches!(approval_winner(&p, 1.5), Err(RuleError::ThresholdOutOfScale { .. })));
        let d = disc(&[&[1.0, 3.0], &[6.0, 0.0]], 6);
        assert!(approval_winner(&d, 6.0).is_ok());
        assert!(approval_winner(&d, 7.0).is_err());
    }

    #[test]
    fn ranking_examples() {
        assert_eq!(rankings(&cont(&[&[0.2, 0.8, 0.5]]), TieMode::StrictOrFail).unwrap(), vec![vec![1, 2, 0]]);
        let tie = cont(&[&[1.0, 1.0]]);
        assert_eq!(rankings(&tie, TieMode::IndexBreak).unwrap(), vec![vec![0, 1]]);
        assert_eq!(rankings(&tie, TieMode::StrictOrFail), Err(RuleError::TiesPresent(vec![1])));
    }

    #[test]
    fn continuous_profile_has_no_ties() {
        let p = generate(&GeneratorModel::Iid { marginal: Marginal::Uniform, m: 4 }, 10_000, &derive_stream(3, 0)).unwrap();
        assert!(rankings(&p, TieMode::StrictOrFail).is_ok());
    }

    #[test]
    fn distribution_examples() {
        let perms = permutations(3);
        assert_eq!(perms.len(), 6);
        let rows: Vec<Vec<f64>> = perms
            .iter()
            .map(|p| {
                let mut row = vec![0.0; 3];
                for (pos, &c) in p.iter().enumerate() {
                    row[c] = 1.0 - pos as f64 * 0.25;
                }
                row
            })
            .collect();
        let p = validate_profile(&rows, Scale::Continuous, None).unwrap();
        let dist = ranking_distribution(&p, TieMode::StrictOrFail).unwrap();
        assert!(dist.iter().all(|(_, c)| *c == 1));
        let big = cont(&[&[0.1; 8]]);
        assert_eq!(ranking_distribution(&big, TieMode::IndexBreak), Err(RuleError::TooManyCandidates(8)));
        for (i, p) in permutations(5).iter().enumerate() {
            assert_eq!(lex_index(p), i);
        }
    }

    fn profile_strategy() -> impl Strategy<Value = Vec<Vec<f64>>> {
        (1usize..5, 1usize..12).prop_flat_map(|(m, n)| {
            proptest::collection::vec(proptest::collection::vec(0u32..5, m), n)
                .prop_map(|rows| rows.into_iter().map(|r| r.into_iter().map(|x| x as f64 / 4.0).collect()).collect())
        })
    }

    proptest! {
        #[test]
        fn counts_sum_to_n(rows in profile_strategy()) {
            let p = validate_profile(&rows, Scale::Continuous, None).unwrap();
            let dist = ranking_distribution(&p, TieMode::IndexBreak).unwrap();
            prop_assert_eq!(dist.iter().map(|(_, c)| c).sum::<u64>(), rows.len() as u64);
        }

        #[test]
        fn range_argmax_shift_invariant(rows in profile_strategy(), k in 0u32..3) {
            // dyadic values keep every sum exact
            let shift = k as f64 / 8.0;
            let p = validate_profile(&rows, Scale::Continuous, None).unwrap();
            let shifted: Vec<Vec<f64>> = rows.iter().map(|r| r.iter().map(|x| x * 0.75 + shift).collect()).collect();
            let scaled: Vec<Vec<f64>> = rows.iter().map(|r| r.iter().map(|x| x * 0.75).collect()).collect();
            let a = range_winner(&validate_profile(&scaled, Scale::Continuous, None).unwrap());
            let b = range_winner(&validate_profile(&shifted, Scale::Continuous, None).unwrap());
            prop_assert_eq!(a.winner, b.winner);
            prop_assert!(range_winner(&p).scores.len() == rows[0].len());
        }

        #[test]
        fn mj_ignores_voter_order(rows in profile_strategy(), rot in 0usize..12) {
            let mut shuffled = rows.clone();
            let k = rot % rows.len();
            shuffled.rotate_left(k);
            shuffled.reverse();
            let a = majority_judgment_winner(&validate_profile(&rows, Scale::Continuous, None).unwrap());
            let b = majority_judgment_winner(&validate_profile(&shuffled, Scale::Continuous, None).unwrap());
            prop_assert_eq!(a, b);
        }

        #[test]
        fn index_break_matches_strict_without_ties(rows in profile_strategy()) {
            let p = validate_profile(&rows, Scale::Continuous, None).unwrap();
            if let Ok(strict) = rankings(&p, TieMode::StrictOrFail) {
                prop_assert_eq!(strict, rankings(&p, TieMode::IndexBreak).unwrap());
            }
        }

        #[test]
        fn winners_attain_optimum(rows in profile_strategy(), t in 0.0f64..1.0) {
            let p = validate_profile(&rows, Scale::Continuous, None).unwrap();
            for r in [range_winner(&p), majority_judgment_winner(&p), approval_winner(&p, t).unwrap()] {
                let best = r.scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                prop_assert_eq!(r.scores[r.winner], best);
                let ties = r.scores.iter().filter(|&&s| s == best).count();
                if ties == 1 { prop_assert!(r.tie_trace.is_empty()); } else { prop_assert!(!r.tie_trace.is_empty()); }
            }
        }
    }
}
