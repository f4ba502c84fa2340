//! Brute-force ground truth for small universes.
//!
//! Every subset of the universe is checked with [`crate::checker`] and the
//! valid ones are ranked lexicographically. Subsets are visited by increasing
//! size, then in lexicographic order of their stanza indices, so the first
//! optimal witness is stable.

use std::cmp::Ordering;

use itertools::Itertools;
use thiserror::Error;

use crate::checker::check_membership;
use crate::criteria::{compare_vectors, objective_vector, CriteriaList};
use crate::model::{Request, Solution, Universe};

pub const DEFAULT_CAP: usize = 20;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("universe has {size} package versions, the oracle enumerates at most {cap}")]
pub struct CapExceeded {
    pub size: usize,
    pub cap: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum OptimalResult {
    NoSolution,
    Optimal {
        vector: Vec<u64>,
        /// Every optimal solution, in enumeration order.
        solutions: Vec<Solution>,
    },
}

impl OptimalResult {
    pub fn vector(&self) -> Option<&[u64]> {
        match self {
            OptimalResult::NoSolution => None,
            OptimalResult::Optimal { vector, .. } => Some(vector),
        }
    }

    pub fn witness(&self) -> Option<&Solution> {
        match self {
            OptimalResult::NoSolution => None,
            OptimalResult::Optimal { solutions, .. } => solutions.first(),
        }
    }
}

/// Membership vectors of all subsets of `n` items, by size then lexicographically.
pub fn subsets(n: usize) -> impl Iterator<Item = Vec<bool>> {
    (0..=n).flat_map(move |k| {
        (0..n).combinations(k).map(move |chosen| {
            let mut member = vec![false; n];
            for i in chosen {
                member[i] = true;
            }
            member
        })
    })
}

fn to_solution(u: &Universe, member: &[bool]) -> Solution {
    member
        .iter()
        .enumerate()
        .filter(|(_, &m)| m)
        .map(|(i, _)| u.stanza(i).id.clone())
        .collect()
}

/// Every valid solution, in enumeration order.
pub fn feasible_solutions(u: &Universe, r: &Request, cap: usize) -> Result<Vec<Solution>, CapExceeded> {
    if u.len() > cap {
        return Err(CapExceeded { size: u.len(), cap });
    }
    Ok(subsets(u.len())
        .filter(|member| check_membership(u, r, member).is_valid())
        .map(|member| to_solution(u, &member))
        .collect())
}

/// Ranks already-enumerated feasible solutions.
pub fn rank(u: &Universe, c: &CriteriaList, feasible: &[Solution]) -> OptimalResult {
    let mut best: Option<Vec<u64>> = None;
    let mut solutions = vec![];
    for s in feasible {
        let vector = objective_vector(c, u, s);
        let ord = best
            .as_ref()
            .map_or(Ordering::Less, |b| compare_vectors(c, &vector, b));
        match ord {
            Ordering::Less => {
                best = Some(vector);
                solutions = vec![s.clone()];
            }
            Ordering::Equal => solutions.push(s.clone()),
            Ordering::Greater => {}
        }
    }
    match best {
        None => OptimalResult::NoSolution,
        Some(vector) => OptimalResult::Optimal { vector, solutions },
    }
}

/// Exhaustive lexicographic optimum of `(u, r)` under `c`.
pub fn brute_force(
    u: &Universe,
    r: &Request,
    c: &CriteriaList,
    cap: usize,
) -> Result<OptimalResult, CapExceeded> {
    Ok(rank(u, c, &feasible_solutions(u, r, cap)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::test_support::*;
    use crate::model::{build_universe, KeepLevel, VpkgAtom, VpkgFormula};

    #[test]
    fn subset_order() {
        let order: Vec<Vec<bool>> = subsets(3).collect();
        assert_eq!(order.len(), 8);
        assert_eq!(order[0], vec![false, false, false]);
        assert_eq!(order[1], vec![true, false, false]);
        assert_eq!(order[3], vec![false, false, true]);
        assert_eq!(order[4], vec![true, true, false]);
        assert_eq!(order[7], vec![true, true, true]);
    }

    #[test]
    fn empty_universe() {
        let u = build_universe(vec![]).unwrap();
        let r = brute_force(&u, &Request::default(), &CriteriaList::paranoid(), DEFAULT_CAP).unwrap();
        assert_eq!(
            r,
            OptimalResult::Optimal {
                vector: vec![0, 0],
                solutions: vec![Solution::default()]
            }
        );
    }

    #[test]
    fn two_optimal_dependency_choices() {
        let mut a = stanza("a", 1);
        a.depends = VpkgFormula::cnf(vec![vec![atom("b")]]);
        let u = build_universe(vec![a, stanza("b", 1), stanza("b", 2)]).unwrap();
        let r = Request {
            install: vec![atom("a")],
            ..Default::default()
        };
        let result = brute_force(&u, &r, &CriteriaList::paranoid(), DEFAULT_CAP).unwrap();
        assert_eq!(
            result,
            OptimalResult::Optimal {
                vector: vec![0, 2],
                solutions: vec![
                    Solution::new([pid("a", 1), pid("b", 1)]),
                    Solution::new([pid("a", 1), pid("b", 2)]),
                    // both versions together still change only two names
                    Solution::new([pid("a", 1), pid("b", 1), pid("b", 2)]),
                ]
            }
        );
    }

    #[test]
    fn kept_conflict_blocks_install() {
        let mut a = stanza("a", 1);
        a.conflicts = vec![atom("b")];
        let mut b = stanza("b", 1);
        b.installed = true;
        b.keep = KeepLevel::Version;
        let u = build_universe(vec![a, b]).unwrap();
        let r = Request {
            install: vec![VpkgAtom::any(name("a"))],
            ..Default::default()
        };
        assert_eq!(
            brute_force(&u, &r, &CriteriaList::paranoid(), DEFAULT_CAP).unwrap(),
            OptimalResult::NoSolution
        );
    }

    #[test]
    fn cap_is_enforced() {
        let u = build_universe((1..=5).map(|v| stanza("a", v)).collect()).unwrap();
        assert_eq!(
            brute_force(&u, &Request::default(), &CriteriaList::paranoid(), 4).unwrap_err(),
            CapExceeded { size: 5, cap: 4 }
        );
    }
}
