//! Evaluation scales and profiles.

use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

/// The set of admissible grades.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Scale {
    /// The closed unit interval `[0, 1]`.
    Continuous,
    /// The integer grades `{0, …, levels}`.
    Discrete { levels: u32 },
}

impl Scale {
    pub fn discrete(levels: u32) -> Result<Scale, ProfileError> {
        if levels == 0 {
            return Err(ProfileError::InvalidScale);
        }
        Ok(Scale::Discrete { levels })
    }

    pub fn is_continuous(&self) -> bool {
        matches!(self, Scale::Continuous)
    }

    /// `K` for a discrete scale.
    pub fn levels(&self) -> Option<u32> {
        match self {
            Scale::Continuous => None,
            Scale::Discrete { levels } => Some(*levels),
        }
    }

    /// Largest admissible grade (`1` or `K`).
    pub fn max_grade(&self) -> f64 {
        match self {
            Scale::Continuous => 1.0,
            Scale::Discrete { levels } => *levels as f64,
        }
    }

    pub fn contains(&self, x: f64) -> bool {
        match self {
            Scale::Continuous => (0.0..=1.0).contains(&x),
            Scale::Discrete { levels } => {
                (0.0..=*levels as f64).contains(&x) && libm::floor(x) == x
            }
        }
    }
}

impl fmt::Display for Scale {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Scale::Continuous => write!(f, "continuous"),
            Scale::Discrete { levels } => write!(f, "discrete:{levels}"),
        }
    }
}

/// One reason a raw matrix is not a valid profile. Coordinates are 1-based.
#[derive(Clone, Debug, PartialEq)]
pub enum Violation {
    OutOfRange { voter: usize, candidate: usize, value: f64 },
    NonInteger { voter: usize, candidate: usize },
    DuplicateName(String),
    EmptyName(usize),
    NotRectangular { voter: usize, len: usize, expected: usize },
    NameCount { names: usize, columns: usize },
    EmptyProfile,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::OutOfRange { voter, candidate, value } => {
                write!(f, "value {value} at voter {voter}, candidate {candidate} is out of range")
            }
            Violation::NonInteger { voter, candidate } => {
                write!(f, "non-integer grade at voter {voter}, candidate {candidate}")
            }
            Violation::DuplicateName(name) => write!(f, "duplicate candidate name {name:?}"),
            Violation::EmptyName(c) => write!(f, "candidate {c} has an empty name"),
            Violation::NotRectangular { voter, len, expected } => {
                write!(f, "voter {voter} has {len} values, expected {expected}")
            }
            Violation::NameCount { names, columns } => {
                write!(f, "{names} candidate names for {columns} columns")
            }
            Violation::EmptyProfile => write!(f, "profile has no voters or no candidates"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum ProfileError {
    #[error("discrete scale needs at least one level above 0")]
    InvalidScale,
    #[error("invalid profile: {}", join_violations(.0))]
    Invalid(Vec<Violation>),
    #[error("evaluation {0} is outside [0, 1]")]
    Domain(f64),
}

fn join_violations(v: &[Violation]) -> String {
    let mut out = String::new();
    for (i, x) in v.iter().enumerate() {
        if i > 0 {
            out.push_str("; ");
        }
        out.push_str(&format!("{x}"));
    }
    out
}

/// Default candidate names `cand_1..cand_m`.
pub fn default_names(m: usize) -> Vec<String> {
    (1..=m).map(|c| format!("cand_{c}")).collect()
}

/// A validated `n × m` matrix of evaluations, voters in rows.
///
/// Discrete grades are stored as integral `f64` values.
#[derive(Clone, Debug, PartialEq)]
pub struct Profile {
    scale: Scale,
    names: Vec<String>,
    n: usize,
    m: usize,
    values: Vec<f64>,
}

/// Checks a raw matrix against a scale and wraps it as a [`Profile`].
///
/// Every violation is collected, not just the first one. Missing names
/// default to `cand_1..cand_m`.
pub fn validate_profile(
    rows: &[Vec<f64>],
    scale: Scale,
    names: Option<Vec<String>>,
) -> Result<Profile, ProfileError> {
    let n = rows.len();
    let m = rows.first().map_or(0, |r| r.len());
    if n == 0 || m == 0 {
        return Err(ProfileError::Invalid(alloc::vec![Violation::EmptyProfile]));
    }
    let mut violations = Vec::new();
    let mut values = Vec::with_capacity(n * m);
    for (v, row) in rows.iter().enumerate() {
        if row.len() != m {
            violations.push(Violation::NotRectangular { voter: v + 1, len: row.len(), expected: m });
            continue;
        }
        values.extend_from_slice(row);
    }
    if !violations.is_empty() {
        return Err(ProfileError::Invalid(violations));
    }
    Profile::from_flat(n, m, values, scale, names)
}

impl Profile {
    /// Builds a profile from row-major values.
    pub fn from_flat(
        n: usize,
        m: usize,
        values: Vec<f64>,
        scale: Scale,
        names: Option<Vec<String>>,
    ) -> Result<Profile, ProfileError> {
        if n == 0 || m == 0 || values.len() != n * m {
            return Err(ProfileError::Invalid(alloc::vec![Violation::EmptyProfile]));
        }
        if let Scale::Discrete { levels: 0 } = scale {
            return Err(ProfileError::InvalidScale);
        }
        let mut violations = Vec::new();
        let names = names.unwrap_or_else(|| default_names(m));
        if names.len() != m {
            violations.push(Violation::NameCount { names: names.len(), columns: m });
        }
        let mut seen = BTreeSet::new();
        for (c, name) in names.iter().enumerate() {
            if name.is_empty() {
                violations.push(Violation::EmptyName(c + 1));
            } else if !seen.insert(name.as_str()) {
                violations.push(Violation::DuplicateName(name.clone()));
            }
        }
        for (i, &x) in values.iter().enumerate() {
            let (voter, candidate) = (i / m + 1, i % m + 1);
            if !(0.0..=scale.max_grade()).contains(&x) {
                violations.push(Violation::OutOfRange { voter, candidate, value: x });
            } else if !scale.is_continuous() && libm::floor(x) != x {
                violations.push(Violation::NonInteger { voter, candidate });
            }
        }
        if !violations.is_empty() {
            return Err(ProfileError::Invalid(violations));
        }
        Ok(Profile { scale, names, n, m, values })
    }

    pub fn scale(&self) -> Scale {
        self.scale
    }

    pub fn n_voters(&self) -> usize {
        self.n
    }

    pub fn n_candidates(&self) -> usize {
        self.m
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    /// Row-major values.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    #[inline]
    pub fn get(&self, voter: usize, candidate: usize) -> f64 {
        self.values[voter * self.m + candidate]
    }

    pub fn row(&self, voter: usize) -> &[f64] {
        &self.values[voter * self.m..(voter + 1) * self.m]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.values.chunks_exact(self.m)
    }

    pub fn column(&self, candidate: usize) -> Vec<f64> {
        self.rows().map(|r| r[candidate]).collect()
    }

    pub fn columns(&self) -> Vec<Vec<f64>> {
        (0..self.m).map(|c| self.column(c)).collect()
    }

    /// Same values under new names.
    pub fn with_names(self, names: Vec<String>) -> Result<Profile, ProfileError> {
        Profile::from_flat(self.n, self.m, self.values, self.scale, Some(names))
    }
}

/// Maps a continuous evaluation to a grade in `{0, …, K}`:
/// `min(⌊(K + 1)·e⌋, K)`.
pub fn discretize(e: f64, levels: u32) -> Result<u32, ProfileError> {
    if !(0.0..=1.0).contains(&e) {
        return Err(ProfileError::Domain(e));
    }
    let g = libm::floor((levels as f64 + 1.0) * e) as u32;
    Ok(g.min(levels))
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::string::ToString;
    use alloc::vec;
    use proptest::prelude::*;

    #[test]
    fn single_interior_cell() {
        let p = validate_profile(&[vec![0.5]], Scale::Continuous, None).unwrap();
        assert_eq!(p.get(0, 0), 0.5);
        assert_eq!(p.names(), &["cand_1".to_string()]);
    }

    #[test]
    fn out_of_range_reports_coordinates() {
        let err = validate_profile(&[vec![1.2]], Scale::Continuous, None).unwrap_err();
        assert_eq!(
            err,
            ProfileError::Invalid(vec![Violation::OutOfRange { voter: 1, candidate: 1, value: 1.2 }])
        );
    }

    #[test]
    fn non_integer_discrete_grade() {
        let err = validate_profile(&[vec![2.5]], Scale::Discrete { levels: 6 }, None).unwrap_err();
        assert_eq!(err, ProfileError::Invalid(vec![Violation::NonInteger { voter: 1, candidate: 1 }]));
    }

    #[test]
    fn collects_every_violation() {
        let names = vec!["a".to_string(), "a".to_string()];
        let err = validate_profile(&[vec![0.1, -0.5], vec![f64::NAN, 0.2]], Scale::Continuous, Some(names))
            .unwrap_err();
        match err {
            ProfileError::Invalid(v) => {
                assert_eq!(v.len(), 3);
                assert!(v.contains(&Violation::DuplicateName("a".into())));
            }
            e => panic!("{e:?}"),
        }
    }

    #[test]
    fn ragged_and_empty() {
        assert!(validate_profile(&[], Scale::Continuous, None).is_err());
        assert!(validate_profile(&[vec![0.1, 0.2], vec![0.3]], Scale::Continuous, None).is_err());
        assert_eq!(Scale::discrete(0), Err(ProfileError::InvalidScale));
    }

    #[test]
    fn discretize_boundaries() {
        assert_eq!(discretize(0.0, 6), Ok(0));
        assert_eq!(discretize(1.0, 6), Ok(6));
        assert_eq!(discretize(0.5, 6), Ok(3));
        assert!(discretize(1.0001, 6).is_err());
        assert!(discretize(-0.1, 6).is_err());
    }

    proptest! {
        #[test]
        fn discretize_is_monotone(a in 0.0f64..=1.0, b in 0.0f64..=1.0, k in 1u32..100) {
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            prop_assert!(discretize(lo, k).unwrap() <= discretize(hi, k).unwrap());
        }

        #[test]
        fn discretize_preimages(g in 0u32..20, t in 0.0f64..1.0, extra in 0u32..20) {
            let k = g + 1 + extra;
            let e = (g as f64 + t) / (k as f64 + 1.0);
            prop_assume!(e < (g as f64 + 1.0) / (k as f64 + 1.0));
            prop_assert_eq!(discretize(e, k).unwrap(), g);
        }
    }
}
