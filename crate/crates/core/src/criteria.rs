//! User preferences: criteria strings, measures and lexicographic comparison.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::model::{PackageName, Solution, Universe, Version};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Measure {
    Removed,
    New,
    Changed,
    NotUpToDate,
    UnsatRecommends,
}

impl Measure {
    pub const ALL: [Measure; 5] = [
        Measure::Removed,
        Measure::New,
        Measure::Changed,
        Measure::NotUpToDate,
        Measure::UnsatRecommends,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Measure::Removed => "removed",
            Measure::New => "new",
            Measure::Changed => "changed",
            Measure::NotUpToDate => "notuptodate",
            Measure::UnsatRecommends => "unsat_recommends",
        }
    }

    fn from_name(s: &str) -> Option<Measure> {
        Measure::ALL.into_iter().find(|m| m.name() == s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Sense {
    Minimize,
    Maximize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Criterion {
    pub sense: Sense,
    pub measure: Measure,
}

impl Criterion {
    pub fn minimize(measure: Measure) -> Self {
        Criterion {
            sense: Sense::Minimize,
            measure,
        }
    }

    pub fn maximize(measure: Measure) -> Self {
        Criterion {
            sense: Sense::Maximize,
            measure,
        }
    }
}

impl fmt::Display for Criterion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sign = match self.sense {
            Sense::Minimize => '-',
            Sense::Maximize => '+',
        };
        write!(f, "{sign}{}", self.measure.name())
    }
}

/// Ordered criteria; the first entry is the most significant.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct CriteriaList(Vec<Criterion>);

impl CriteriaList {
    pub fn new(criteria: Vec<Criterion>) -> Option<Self> {
        (!criteria.is_empty()).then_some(CriteriaList(criteria))
    }

    pub fn paranoid() -> Self {
        CriteriaList(vec![
            Criterion::minimize(Measure::Removed),
            Criterion::minimize(Measure::Changed),
        ])
    }

    pub fn trendy() -> Self {
        CriteriaList(vec![
            Criterion::minimize(Measure::Removed),
            Criterion::minimize(Measure::NotUpToDate),
            Criterion::minimize(Measure::UnsatRecommends),
            Criterion::minimize(Measure::New),
        ])
    }

    pub fn criteria(&self) -> &[Criterion] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl fmt::Display for CriteriaList {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, c) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{c}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("invalid criterion {token:?} at position {position}")]
pub struct CriteriaParseError {
    pub position: usize,
    pub token: String,
}

impl FromStr for CriteriaList {
    type Err = CriteriaParseError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_criteria(s)
    }
}

/// Parses `-m`/`+m` items separated by commas. The shortcuts `paranoid` and
/// `trendy` expand in place.
pub fn parse_criteria(text: &str) -> Result<CriteriaList, CriteriaParseError> {
    let mut out = vec![];
    let mut position = 0;
    for item in text.split(',') {
        let offset = item.len() - item.trim_start().len();
        let token = item.trim();
        let error = || CriteriaParseError {
            position: position + offset,
            token: token.to_string(),
        };
        match token {
            "paranoid" => out.extend(CriteriaList::paranoid().0),
            "trendy" => out.extend(CriteriaList::trendy().0),
            _ => {
                let sense = match token.chars().next() {
                    Some('-') => Sense::Minimize,
                    Some('+') => Sense::Maximize,
                    _ => return Err(error()),
                };
                let measure = Measure::from_name(&token[1..]).ok_or_else(error)?;
                out.push(Criterion { sense, measure });
            }
        }
        position += item.len() + 1;
    }
    Ok(CriteriaList(out))
}

fn versions_by_name<'a>(
    ids: impl Iterator<Item = &'a crate::model::PackageId>,
) -> BTreeMap<&'a PackageName, BTreeSet<Version>> {
    let mut map: BTreeMap<&PackageName, BTreeSet<Version>> = BTreeMap::new();
    for id in ids {
        map.entry(&id.name).or_default().insert(id.version);
    }
    map
}

/// Evaluates one measure of solution `s` against the universe's initial state.
pub fn evaluate(measure: Measure, u: &Universe, s: &Solution) -> u64 {
    let initial = u.initial_installation();
    let before = versions_by_name(initial.iter());
    let after = versions_by_name(s.iter());
    let empty = BTreeSet::new();
    let count = |pred: &dyn Fn(&BTreeSet<Version>, &BTreeSet<Version>) -> bool| {
        u.names()
            .filter(|n| {
                pred(
                    before.get(n).unwrap_or(&empty),
                    after.get(n).unwrap_or(&empty),
                )
            })
            .count() as u64
    };
    match measure {
        Measure::Removed => count(&|i, s| !i.is_empty() && s.is_empty()),
        Measure::New => count(&|i, s| i.is_empty() && !s.is_empty()),
        Measure::Changed => count(&|i, s| i != s),
        Measure::NotUpToDate => after
            .iter()
            .filter(|(name, versions)| {
                let newest = u.max_version(name);
                versions.last().copied() < newest
            })
            .count() as u64,
        Measure::UnsatRecommends => s
            .iter()
            .filter_map(|id| u.get(id))
            .map(|p| {
                p.recommends
                    .conjuncts()
                    .iter()
                    .filter(|disjunct| {
                        !disjunct
                            .iter()
                            .any(|atom| u.providers(atom).iter().any(|q| s.contains(q)))
                    })
                    .count() as u64
            })
            .sum(),
    }
}

/// Componentwise measure values for a criteria list.
pub fn objective_vector(c: &CriteriaList, u: &Universe, s: &Solution) -> Vec<u64> {
    c.criteria()
        .iter()
        .map(|criterion| evaluate(criterion.measure, u, s))
        .collect()
}

/// Compares two objective vectors under `c`; `Less` means `a` is preferred.
pub fn compare_vectors(c: &CriteriaList, a: &[u64], b: &[u64]) -> Ordering {
    for ((criterion, x), y) in c.criteria().iter().zip(a).zip(b) {
        let ord = match criterion.sense {
            Sense::Minimize => x.cmp(y),
            Sense::Maximize => y.cmp(x),
        };
        if ord != Ordering::Equal {
            return ord;
        }
    }
    Ordering::Equal
}

/// Lexicographic comparison of two solutions; `Less` means `s1` is better.
pub fn compare(c: &CriteriaList, u: &Universe, s1: &Solution, s2: &Solution) -> Ordering {
    compare_vectors(c, &objective_vector(c, u, s1), &objective_vector(c, u, s2))
}
