//! Cardinality and pseudo-Boolean gadgets: totalizer counters and at-most-one.

use super::{ClauseSet, VarMap};
use crate::sat::Lit;

/// Builds a weighted totalizer over `terms`, counting up to `cap`.
///
/// Returns unary outputs `o[0..m]` (`m = min(cap, Σ weights)`) such that the
/// clauses force `o[k-1]` true whenever the weighted sum of true term
/// literals is at least `k`. Outputs are only constrained upwards, which is
/// all an upper-bound assertion `¬o[b]` needs.
pub fn totalizer(terms: &[(u64, Lit)], cap: u64, vm: &mut VarMap, out: &mut ClauseSet) -> Vec<Lit> {
    if terms.is_empty() || cap == 0 {
        return vec![];
    }
    if terms.len() == 1 {
        let (w, l) = terms[0];
        return vec![l; w.min(cap) as usize];
    }
    let mid = terms.len() / 2;
    let left = totalizer(&terms[..mid], cap, vm, out);
    let right = totalizer(&terms[mid..], cap, vm, out);
    merge(&left, &right, cap, vm, out)
}

fn merge(a: &[Lit], b: &[Lit], cap: u64, vm: &mut VarMap, out: &mut ClauseSet) -> Vec<Lit> {
    let n = (a.len() + b.len()).min(cap as usize);
    let outputs: Vec<Lit> = (0..n).map(|_| vm.fresh().positive()).collect();
    for i in 0..=a.len() {
        for j in 0..=b.len() {
            if i + j == 0 {
                continue;
            }
            let k = (i + j).min(n);
            let mut clause = Vec::with_capacity(3);
            if i > 0 {
                clause.push(!a[i - 1]);
            }
            if j > 0 {
                clause.push(!b[j - 1]);
            }
            clause.push(outputs[k - 1]);
            out.push(clause);
        }
    }
    outputs
}

/// Clauses whose models (projected on the term literals) are exactly the
/// assignments with weighted sum at most `bound`.
pub fn cardinality_leq(terms: &[(u64, Lit)], bound: u64, vm: &mut VarMap) -> ClauseSet {
    let mut out = ClauseSet::default();
    let total: u64 = terms.iter().map(|&(w, _)| w).sum();
    if bound >= total {
        return out;
    }
    if bound == 0 {
        for &(_, l) in terms {
            out.push(vec![!l]);
        }
        return out;
    }
    let outputs = totalizer(terms, bound + 1, vm, &mut out);
    out.push(vec![!outputs[bound as usize]]);
    out
}

/// At most one of `lits` is true. Pairwise below eight literals, a sequential
/// counter from eight on.
pub fn at_most_one(lits: &[Lit], vm: &mut VarMap, out: &mut ClauseSet) {
    if lits.len() < 8 {
        for (i, &a) in lits.iter().enumerate() {
            for &b in &lits[i + 1..] {
                out.push(vec![!a, !b]);
            }
        }
        return;
    }
    let n = lits.len();
    let s: Vec<Lit> = (0..n - 1).map(|_| vm.fresh().positive()).collect();
    out.push(vec![!lits[0], s[0]]);
    for i in 1..n - 1 {
        out.push(vec![!lits[i], s[i]]);
        out.push(vec![!s[i - 1], s[i]]);
        out.push(vec![!lits[i], !s[i - 1]]);
    }
    out.push(vec![!lits[n - 1], !s[n - 2]]);
}
